#pragma once
//
// Low-order quasidiffusion equations.
//
// Finite-volume discretization on cells j = 0..J-1 with edges e = 0..J:
//
//   balance (cell j):
//     dx_j/dt (E_j - E_j^prev) + F_{j+1} - F_j + sigma_j dx_j E_j = S_j dx_j
//
//   momentum (interior edge e between cells e-1 and e, h_e = (dx_{e-1}+dx_e)/2):
//     h_e/(c dt) (F_e - F_e^prev) + c (f_e E_e - f_{e-1} E_{e-1})
//       + K_e F_e + H_e (E_{e-1} + E_e)/2 = 0,
//     K_e = (kappa_{e-1} dx_{e-1} + kappa_e dx_e)/2
//
//   momentum over the boundary half-cells, with E_b the boundary-edge density:
//     left : dx_0/(2c dt)(F_0 - F_0^prev) + c (f_0 E_0 - f_b E_b) + K_0 F_0 + H_0 E_b = 0
//     right: dx_J/(2c dt)(F_J - F_J^prev) + c (f_b E_b - f_{J-1} E_{J-1}) + K_J F_J + H_J E_b = 0
//
//   boundary closure: F_b = c C E_b + s.
//
// The multigroup system has sigma = c kappa_g, S = 2 kappa_g B_g, H = 0.
// The grey system takes spectrum-averaged sigma, f, K and the compensation
// term H, and a linearized emission source from the material energy balance.
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "mlqd/error.hpp"
#include "mlqd/linalg.hpp"
#include "mlqd/quadrature.hpp"
#include "mlqd/spectral.hpp"
#include "mlqd/transport.hpp"

namespace mlqd {

enum class BoundaryClosure {
    HalfRange, ///< F_b = c C_out (E_b - E_in) + F_in, C_out from outgoing directions
    Total      ///< F_b = c C E_b, C = F/(c E) over all directions
};

struct BoundaryData {
    double eddington = 1.0 / 3.0;
    double c_factor = 0.0;
    double shift = 0.0; ///< s in F_b = c C E_b + s
};

/// A linear low-order system in (E, F). Lengths: cells J, edges J+1.
struct LowOrderSystem {
    std::vector<double> dx;
    std::vector<double> sigma;     // absorption coefficient per unit length (c kappa)
    std::vector<double> source;    // volumetric source
    std::vector<double> eddington; // f at cells
    std::vector<double> E_prev;
    std::vector<double> F_prev;    // edges
    std::vector<double> kappa_len; // K_e, edges
    std::vector<double> eta_len;   // H_e, edges (zero for a single group)
    BoundaryData left, right;
    double c = PhysicalConstants{}.c;
    double dt = 0.0;
};

struct LowOrderSolution {
    std::vector<double> E;    // cells
    std::vector<double> F;    // edges
    double E_left = 0.0;      // boundary-edge densities
    double E_right = 0.0;
};

namespace detail {

// F_e = a + p E_{e-1} + q E_e
struct EdgeRelation {
    double a = 0.0, p = 0.0, q = 0.0;
    double u = 0.0, v = 0.0; // boundary only: E_b = u + v E_adjacent
};

inline std::vector<EdgeRelation> edge_relations(const LowOrderSystem& s)
{
    const std::size_t J = s.dx.size();
    const double c = s.c, cdt = s.c * s.dt;
    std::vector<EdgeRelation> rel(J + 1);
    for (std::size_t e = 1; e < J; ++e) {
        const double h = 0.5 * (s.dx[e - 1] + s.dx[e]);
        const double D = h / cdt + s.kappa_len[e];
        rel[e].a = h / cdt * s.F_prev[e] / D;
        rel[e].p = (c * s.eddington[e - 1] - 0.5 * s.eta_len[e]) / D;
        rel[e].q = (-c * s.eddington[e] - 0.5 * s.eta_len[e]) / D;
    }
    {
        const double h = 0.5 * s.dx[0];
        const double D = h / cdt + s.kappa_len[0];
        const double cC = c * s.left.c_factor;
        const double den = D * cC - c * s.left.eddington + s.eta_len[0];
        if (den == 0.0 || !std::isfinite(den))
            throw numerical_error("low-order solve: degenerate left boundary closure");
        auto& r = rel[0];
        r.u = (h / cdt * s.F_prev[0] - D * s.left.shift) / den;
        r.v = -c * s.eddington[0] / den;
        r.a = cC * r.u + s.left.shift;
        r.q = cC * r.v;
    }
    {
        const double h = 0.5 * s.dx[J - 1];
        const double D = h / cdt + s.kappa_len[J];
        const double cC = c * s.right.c_factor;
        const double den = D * cC + c * s.right.eddington + s.eta_len[J];
        if (den == 0.0 || !std::isfinite(den))
            throw numerical_error("low-order solve: degenerate right boundary closure");
        auto& r = rel[J];
        r.u = (h / cdt * s.F_prev[J] - D * s.right.shift) / den;
        r.v = c * s.eddington[J - 1] / den;
        r.a = cC * r.u + s.right.shift;
        r.p = cC * r.v;
    }
    return rel;
}

} // namespace detail

/// Eliminates F, solves the tridiagonal system in cell E, then recovers F and the boundary densities.
inline LowOrderSolution solve_low_order(const LowOrderSystem& s)
{
    const std::size_t J = s.dx.size();
    if (J == 0 || s.sigma.size() != J || s.source.size() != J || s.eddington.size() != J || s.E_prev.size() != J ||
        s.F_prev.size() != J + 1 || s.kappa_len.size() != J + 1 || s.eta_len.size() != J + 1)
        throw std::invalid_argument("solve_low_order: inconsistent sizes");
    if (!(s.dt > 0.0))
        throw std::invalid_argument("solve_low_order: dt must be positive");

    const auto rel = detail::edge_relations(s);
    std::vector<double> lower(J), diag(J), upper(J), rhs(J);
    for (std::size_t j = 0; j < J; ++j) {
        const double dx = s.dx[j];
        diag[j] = dx / s.dt + s.sigma[j] * dx + rel[j + 1].p - rel[j].q;
        upper[j] = rel[j + 1].q;
        lower[j] = -rel[j].p;
        rhs[j] = s.source[j] * dx + dx / s.dt * s.E_prev[j] - rel[j + 1].a + rel[j].a;
    }
    LowOrderSolution sol;
    try {
        sol.E = solve_tridiagonal(lower, diag, upper, rhs);
    } catch (const numerical_error& e) {
        throw numerical_error(std::string("low-order solve: ") + e.what());
    }
    sol.F.resize(J + 1);
    for (std::size_t e = 0; e <= J; ++e) {
        const double El = e > 0 ? sol.E[e - 1] : 0.0;
        const double Er = e < J ? sol.E[e] : 0.0;
        sol.F[e] = rel[e].a + rel[e].p * El + rel[e].q * Er;
    }
    sol.E_left = rel[0].u + rel[0].v * sol.E[0];
    sol.E_right = rel[J].u + rel[J].v * sol.E[J - 1];
    return sol;
}

/// Largest equation residual of a solution, each scaled by the largest term in that equation.
inline double low_order_residual(const LowOrderSystem& s, const LowOrderSolution& x)
{
    const std::size_t J = s.dx.size();
    const double c = s.c, cdt = s.c * s.dt;
    double worst = 0.0;
    auto account = [&](std::initializer_list<double> terms) {
        double sum = 0.0, scale = 1e-300;
        for (double t : terms) {
            sum += t;
            scale = std::max(scale, std::abs(t));
        }
        worst = std::max(worst, std::abs(sum) / scale);
    };
    for (std::size_t j = 0; j < J; ++j)
        account({s.dx[j] / s.dt * x.E[j], -s.dx[j] / s.dt * s.E_prev[j], x.F[j + 1], -x.F[j],
                 s.sigma[j] * s.dx[j] * x.E[j], -s.source[j] * s.dx[j]});
    for (std::size_t e = 1; e < J; ++e) {
        const double h = 0.5 * (s.dx[e - 1] + s.dx[e]);
        account({h / cdt * x.F[e], -h / cdt * s.F_prev[e], c * s.eddington[e] * x.E[e],
                 -c * s.eddington[e - 1] * x.E[e - 1], s.kappa_len[e] * x.F[e],
                 0.5 * s.eta_len[e] * (x.E[e - 1] + x.E[e])});
    }
    const double hl = 0.5 * s.dx[0], hr = 0.5 * s.dx[J - 1];
    account({hl / cdt * x.F[0], -hl / cdt * s.F_prev[0], c * s.eddington[0] * x.E[0],
             -c * s.left.eddington * x.E_left, s.kappa_len[0] * x.F[0], s.eta_len[0] * x.E_left});
    account({hr / cdt * x.F[J], -hr / cdt * s.F_prev[J], c * s.right.eddington * x.E_right,
             -c * s.eddington[J - 1] * x.E[J - 1], s.kappa_len[J] * x.F[J], s.eta_len[J] * x.E_right});
    account({x.F[0], -c * s.left.c_factor * x.E_left, -s.left.shift});
    account({x.F[J], -c * s.right.c_factor * x.E_right, -s.right.shift});
    return worst;
}

/// Edge opacity-length K_e for per-cell opacities: interior edges average the
/// two neighbouring cells, boundary edges take half of the boundary cell.
inline std::vector<double> edge_kappa_length(std::span<const double> kappa, std::span<const double> dx)
{
    const std::size_t J = dx.size();
    std::vector<double> K(J + 1);
    K[0] = 0.5 * kappa[0] * dx[0];
    K[J] = 0.5 * kappa[J - 1] * dx[J - 1];
    for (std::size_t e = 1; e < J; ++e)
        K[e] = 0.5 * (kappa[e - 1] * dx[e - 1] + kappa[e] * dx[e]);
    return K;
}

/// Boundary closure data for one group from the transport moments at that boundary.
inline BoundaryData closure_from_transport(const BoundaryMoments& b, BoundaryClosure kind)
{
    BoundaryData d;
    d.eddington = b.eddington;
    if (kind == BoundaryClosure::Total) {
        d.c_factor = b.c_total;
        d.shift = 0.0;
    } else {
        // F = c C (E - phi_in/c) + F_in
        d.c_factor = b.c_half;
        d.shift = b.cur_in - b.c_half * b.phi_in;
    }
    return d;
}

/// Group data needed by the multigroup low-order solve and by the grey averaging.
struct GroupLowOrderInput {
    std::span<const double> kappa;    // per cell
    std::span<const double> emission; // B_g per cell
    const TransportMoments* moments = nullptr;
    std::span<const double> E_prev;
    std::span<const double> F_prev;
};

/// Builds the multigroup system for one group.
inline LowOrderSystem make_group_system(const SpatialMesh& mesh, const GroupLowOrderInput& in, BoundaryClosure closure,
                                        double dt, const PhysicalConstants& pc)
{
    const std::size_t J = mesh.cells();
    LowOrderSystem s;
    s.dx = mesh.widths();
    s.sigma.resize(J);
    s.source.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        s.sigma[j] = pc.c * in.kappa[j];
        s.source[j] = 2.0 * in.kappa[j] * in.emission[j];
    }
    s.eddington = in.moments->eddington;
    s.E_prev.assign(in.E_prev.begin(), in.E_prev.end());
    s.F_prev.assign(in.F_prev.begin(), in.F_prev.end());
    s.kappa_len = edge_kappa_length(in.kappa, s.dx);
    s.eta_len.assign(J + 1, 0.0);
    s.left = closure_from_transport(in.moments->left, closure);
    s.right = closure_from_transport(in.moments->right, closure);
    s.c = pc.c;
    s.dt = dt;
    return s;
}

/// Multigroup LOQD solve for one group.
inline LowOrderSolution mloqd_solve(const SpatialMesh& mesh, const GroupLowOrderInput& in, BoundaryClosure closure,
                                    double dt, const PhysicalConstants& pc = {})
{
    return solve_low_order(make_group_system(mesh, in, closure, dt, pc));
}

/// Spectrum-averaged coefficients of the grey low-order system.
struct GreyCoefficients {
    std::vector<double> kappa_E;   // cells, E_g-weighted
    std::vector<double> kappa_B;   // cells, B_g-weighted
    std::vector<double> eddington; // cells, E_g-weighted f
    std::vector<double> kappa_F;   // edges, |F_g|-weighted K_e (opacity x length)
    std::vector<double> eta;       // edges, H_e (opacity x length)
    BoundaryData left, right;
    bool fallback = false;         // some weighted mean hit all-zero weights
};

/// Averages group coefficients. `systems[g]` is the assembled multigroup system
/// for group g (it carries K_e, f and the boundary closures) and `solutions[g]`
/// its converged solution.
inline GreyCoefficients grey_average(const std::vector<LowOrderSystem>& systems,
                                     const std::vector<LowOrderSolution>& solutions,
                                     const std::vector<std::vector<double>>& kappa,
                                     const std::vector<std::vector<double>>& emission)
{
    const std::size_t G = systems.size();
    if (G == 0 || solutions.size() != G || kappa.size() != G || emission.size() != G)
        throw std::invalid_argument("grey_average: inconsistent group counts");
    const std::size_t J = systems[0].dx.size();
    GreyCoefficients gc;
    gc.kappa_E.assign(J, 0.0);
    gc.kappa_B.assign(J, 0.0);
    gc.eddington.assign(J, 0.0);
    gc.kappa_F.assign(J + 1, 0.0);
    gc.eta.assign(J + 1, 0.0);

    auto mean = [&](double num, double den, double unweighted) {
        if (den != 0.0)
            return num / den;
        gc.fallback = true;
        return unweighted;
    };

    for (std::size_t j = 0; j < J; ++j) {
        double sE = 0, sB = 0, nE = 0, nB = 0, nf = 0, plain = 0, plain_f = 0;
        for (std::size_t g = 0; g < G; ++g) {
            const double E = solutions[g].E[j], B = emission[g][j], k = kappa[g][j];
            sE += E;
            sB += B;
            nE += k * E;
            nB += k * B;
            nf += systems[g].eddington[j] * E;
            plain += k;
            plain_f += systems[g].eddington[j];
        }
        gc.kappa_E[j] = mean(nE, sE, plain / double(G));
        gc.kappa_B[j] = mean(nB, sB, plain / double(G));
        gc.eddington[j] = mean(nf, sE, plain_f / double(G));
    }

    auto edge_density = [&](std::size_t g, std::size_t e) {
        if (e == 0)
            return solutions[g].E_left;
        if (e == J)
            return solutions[g].E_right;
        return 0.5 * (solutions[g].E[e - 1] + solutions[g].E[e]);
    };

    for (std::size_t e = 0; e <= J; ++e) {
        double sF = 0, nF = 0, plain = 0, sE = 0;
        for (std::size_t g = 0; g < G; ++g) {
            const double F = solutions[g].F[e], K = systems[g].kappa_len[e];
            sF += std::abs(F);
            nF += K * std::abs(F);
            plain += K;
            sE += edge_density(g, e);
        }
        gc.kappa_F[e] = mean(nF, sF, plain / double(G));
        double neta = 0.0;
        for (std::size_t g = 0; g < G; ++g)
            neta += (systems[g].kappa_len[e] - gc.kappa_F[e]) * solutions[g].F[e];
        gc.eta[e] = sE != 0.0 ? neta / sE : 0.0;
    }

    auto boundary = [&](bool left) {
        BoundaryData d;
        double sE = 0, nf = 0, nC = 0, shift = 0, plain_f = 0, plain_C = 0;
        for (std::size_t g = 0; g < G; ++g) {
            const auto& b = left ? systems[g].left : systems[g].right;
            const double E = left ? solutions[g].E_left : solutions[g].E_right;
            sE += E;
            nf += b.eddington * E;
            nC += b.c_factor * E;
            shift += b.shift;
            plain_f += b.eddington;
            plain_C += b.c_factor;
        }
        d.eddington = mean(nf, sE, plain_f / double(G));
        d.c_factor = mean(nC, sE, plain_C / double(G));
        d.shift = shift;
        return d;
    };
    gc.left = boundary(true);
    gc.right = boundary(false);
    return gc;
}

/// Material description for the energy balance eps = c_v T.
struct Material {
    double c_v = 0.0;
};

struct GreyMebResult {
    LowOrderSolution grey;
    std::vector<double> T;
    std::size_t newton_iterations = 0;
    std::vector<double> history; // max relative T change per Newton iteration
    LowOrderSystem last_system;  // linear system of the final Newton iteration
};

struct NewtonControls {
    double tolerance = 1e-13;
    std::size_t max_iterations = 100;
};

/// Solves the grey low-order equations coupled to the material energy balance.
///
/// Each Newton iteration asks `coefficients_at` for the grey coefficients at the
/// current temperature iterate, linearizes a_R T^4 about that iterate,
/// eliminates T cell by cell from the energy balance, and solves the resulting
/// grey system for E. The emission source is identical in both equations, so
/// the discrete total energy is conserved at every iterate.
template <class CoefficientsAt>
GreyMebResult grey_meb_solve(const SpatialMesh& mesh, CoefficientsAt&& coefficients_at, std::span<const double> E_prev,
                             std::span<const double> F_prev, std::span<const double> T_prev,
                             std::span<const double> T_guess, const Material& mat, double dt,
                             const PhysicalConstants& pc = {}, const NewtonControls& ctl = {})
    requires std::is_invocable_r_v<GreyCoefficients, CoefficientsAt, const std::vector<double>&>
{
    const std::size_t J = mesh.cells();
    GreyMebResult res;
    res.T.assign(T_guess.begin(), T_guess.end());

    LowOrderSystem s;
    s.dx = mesh.widths();
    s.sigma.resize(J);
    s.source.resize(J);
    s.E_prev.assign(E_prev.begin(), E_prev.end());
    s.F_prev.assign(F_prev.begin(), F_prev.end());
    s.c = pc.c;
    s.dt = dt;

    const double c = pc.c, a = pc.a_R;
    std::vector<double> offset(J), slope(J);
    for (std::size_t it = 0; it < ctl.max_iterations; ++it) {
        const GreyCoefficients gc = coefficients_at(res.T);
        s.eddington = gc.eddington;
        s.kappa_len = gc.kappa_F;
        s.eta_len = gc.eta;
        s.left = gc.left;
        s.right = gc.right;
        for (std::size_t j = 0; j < J; ++j) {
            const double Tk = res.T[j];
            const double T3 = Tk * Tk * Tk;
            const double den = mat.c_v / dt + 4.0 * c * gc.kappa_B[j] * a * T3;
            // T = offset + slope * E
            offset[j] = (mat.c_v / dt * T_prev[j] + 3.0 * c * gc.kappa_B[j] * a * T3 * Tk) / den;
            slope[j] = c * gc.kappa_E[j] / den;
            // emission c kB a (Tk^4 + 4 Tk^3 (T - Tk)) with T substituted
            const double em_slope = c * gc.kappa_B[j] * 4.0 * a * T3;
            s.sigma[j] = c * gc.kappa_E[j] - em_slope * slope[j];
            s.source[j] = c * gc.kappa_B[j] * a * T3 * Tk + em_slope * (offset[j] - Tk);
        }
        res.grey = solve_low_order(s);
        double change = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double Tk = res.T[j];
            const double Tn = offset[j] + slope[j] * res.grey.E[j];
            double step = Tn - Tk;
            for (int halve = 0; !(Tk + step > 0.0) && halve < 60; ++halve)
                step *= 0.5;
            if (!(Tk + step > 0.0) || !std::isfinite(Tn))
                throw numerical_error("grey MEB: non-positive temperature in cell " + std::to_string(j));
            res.T[j] = Tk + step;
            change = std::max(change, std::abs(step) / std::abs(res.T[j]));
        }
        res.history.push_back(change);
        res.newton_iterations = it + 1;
        if (change < ctl.tolerance) {
            res.last_system = s;
            return res;
        }
    }
    std::string trace;
    for (double h : res.history)
        trace += " " + std::to_string(h);
    throw numerical_error("grey MEB: Newton did not converge; history:" + trace);
}

/// Grey/MEB solve with coefficients frozen for the whole Newton iteration.
inline GreyMebResult grey_meb_solve(const SpatialMesh& mesh, const GreyCoefficients& gc, std::span<const double> E_prev,
                                    std::span<const double> F_prev, std::span<const double> T_prev,
                                    std::span<const double> T_guess, const Material& mat, double dt,
                                    const PhysicalConstants& pc = {}, const NewtonControls& ctl = {})
{
    return grey_meb_solve(
        mesh, [&](const std::vector<double>&) { return gc; }, E_prev, F_prev, T_prev, T_guess, mat, dt, pc, ctl);
}

} // namespace mlqd
