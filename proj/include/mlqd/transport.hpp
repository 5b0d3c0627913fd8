#pragma once
//
// High-order solver: step-characteristic sweep of the backward-Euler RTE
// and extraction of the angular moments that feed the low-order equations.
//

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlqd/linalg.hpp"
#include "mlqd/quadrature.hpp"
#include "mlqd/spectral.hpp"

namespace mlqd {

/// SC weight gamma(tau) = 1/tau - 1/(e^tau - 1), in (0, 1/2].
inline double gamma_weight(double tau)
{
    if (!(tau > 0.0))
        throw std::invalid_argument("gamma_weight: tau must be positive");
    if (tau < 1.0) {
        // 1/2 - sum_k B_2k tau^(2k-1) / (2k)!
        const auto& b = detail::bernoulli_over_factorial();
        const double t2 = tau * tau;
        double sum = 0.5, tp = tau;
        for (int k = 1; 2 * k < detail::kBernoulliTerms; ++k, tp *= t2) {
            double term = b[2 * k] * tp;
            sum -= term;
            if (std::abs(term) < 1e-18)
                break;
        }
        return sum;
    }
    return 1.0 / tau - 1.0 / std::expm1(tau);
}

/// Intensity of one group: cell averages (J x M) and cell edges ((J+1) x M).
struct GroupField {
    Matrix avg;
    Matrix edge;
};

/// Incoming intensities per group and direction. Only entries with mu > 0
/// (left) or mu < 0 (right) are read.
struct BoundaryCondition {
    Matrix left_in;  // G x M
    Matrix right_in; // G x M

    /// Isotropic black-body inflow; a non-positive temperature means vacuum.
    static BoundaryCondition blackbody(const GroupStructure& groups, std::size_t directions, double T_left,
                                       double T_right, const PhysicalConstants& pc = {})
    {
        BoundaryCondition bc{Matrix(groups.size(), directions), Matrix(groups.size(), directions)};
        auto fill = [&](Matrix& m, double T) {
            if (!(T > 0.0))
                return;
            auto B = group_emission(T, groups, pc);
            for (std::size_t g = 0; g < groups.size(); ++g)
                for (std::size_t d = 0; d < directions; ++d)
                    m(g, d) = B[g];
        };
        fill(bc.left_in, T_left);
        fill(bc.right_in, T_right);
        return bc;
    }
};

/// Inputs of a single-group sweep. All per-cell spans have length J.
struct SweepInput {
    std::span<const double> kappa;  // group opacity per cell
    std::span<const double> source; // Q = kappa B per cell
    const Matrix* previous;         // J x M previous-level cell-average intensity
    std::span<const double> left_in;
    std::span<const double> right_in;
    double dt = 0.0;
    double c = PhysicalConstants{}.c;
};

/// Sweeps one group with the SC scheme. The time derivative enters as an
/// extra absorption 1/(c dt) and a source previous/(c dt); each cell solves
/// the balance equation together with the gamma-weighted auxiliary relation.
/// No negativity fix-up is applied.
inline GroupField sweep_group(const AngularQuadrature& quad, const SpatialMesh& mesh, const SweepInput& in)
{
    const std::size_t J = mesh.cells(), M = quad.size();
    if (in.kappa.size() != J || in.source.size() != J || in.previous == nullptr ||
        in.previous->rows() != J || in.previous->cols() != M || in.left_in.size() != M || in.right_in.size() != M)
        throw std::invalid_argument("sweep_group: inconsistent input sizes");
    if (!(in.dt > 0.0))
        throw std::invalid_argument("sweep_group: dt must be positive");

    const double inv_cdt = 1.0 / (in.c * in.dt);
    GroupField out{Matrix(J, M), Matrix(J + 1, M)};
    const Matrix& prev = *in.previous;

    auto cell = [&](std::size_t j, std::size_t m, double mu_abs, double I_in, double& I_avg) {
        const double sigma = in.kappa[j] + inv_cdt;
        const double S = in.source[j] + prev(j, m) * inv_cdt;
        const double tau = sigma * mesh.dx(j) / mu_abs;
        if (!std::isfinite(tau) || !std::isfinite(S) || !std::isfinite(I_in))
            throw std::invalid_argument("sweep_group: non-finite data in cell " + std::to_string(j));
        const double g = gamma_weight(tau);
        // 1 - tau*gamma = tau/(e^tau - 1)
        const double transmit = tau < 700.0 ? tau / std::expm1(tau) : 0.0;
        const double I_out = (tau * S / sigma + I_in * transmit) / (1.0 + tau * (1.0 - g));
        I_avg = g * I_in + (1.0 - g) * I_out;
        return I_out;
    };

    for (std::size_t m = 0; m < M; ++m) {
        const double mu = quad.mu[m];
        if (mu > 0.0) {
            double I = in.left_in[m];
            out.edge(0, m) = I;
            for (std::size_t j = 0; j < J; ++j) {
                I = cell(j, m, mu, I, out.avg(j, m));
                out.edge(j + 1, m) = I;
            }
        } else {
            double I = in.right_in[m];
            out.edge(J, m) = I;
            for (std::size_t j = J; j-- > 0;) {
                I = cell(j, m, -mu, I, out.avg(j, m));
                out.edge(j, m) = I;
            }
        }
    }
    return out;
}

/// Residual of the per-cell balance equation, scaled by the largest term in it.
inline double sweep_balance_residual(const AngularQuadrature& quad, const SpatialMesh& mesh, const SweepInput& in,
                                     const GroupField& f)
{
    const double inv_cdt = 1.0 / (in.c * in.dt);
    double worst = 0.0;
    for (std::size_t m = 0; m < quad.size(); ++m)
        for (std::size_t j = 0; j < mesh.cells(); ++j) {
            const double dx = mesh.dx(j);
            const double t1 = dx * inv_cdt * (f.avg(j, m) - (*in.previous)(j, m));
            const double t2 = quad.mu[m] * (f.edge(j + 1, m) - f.edge(j, m));
            const double t3 = in.kappa[j] * f.avg(j, m) * dx;
            const double t4 = in.source[j] * dx;
            const double scale = std::max({std::abs(dx * inv_cdt * f.avg(j, m)), std::abs(dx * inv_cdt * (*in.previous)(j, m)),
                                           std::abs(quad.mu[m] * f.edge(j + 1, m)), std::abs(quad.mu[m] * f.edge(j, m)),
                                           std::abs(t3), std::abs(t4), 1e-300});
            worst = std::max(worst, std::abs(t1 + t2 + t3 - t4) / scale);
        }
    return worst;
}

/// Closure data at one boundary edge.
struct BoundaryMoments {
    double eddington = 1.0 / 3.0; // f at the edge
    double c_half = 0.0;          // outgoing-half-range ratio sum w mu I / sum w I
    double c_total = 0.0;         // F / phi over the full range
    double phi_in = 0.0;          // sum over incoming directions of w I
    double cur_in = 0.0;          // sum over incoming directions of w mu I
    bool flagged = false;
};

/// Angular moments of one group's intensity.
struct TransportMoments {
    std::vector<double> phi, cur, eddington;                // cells
    std::vector<double> edge_phi, edge_cur, edge_eddington; // edges
    BoundaryMoments left, right;
    bool flagged = false; // some f was set to 1/3 by the zero-density guard
};

namespace detail {

struct MomentTriple {
    double phi = 0.0, cur = 0.0, eddington = 1.0 / 3.0;
    bool flagged = false;
};

inline MomentTriple moments_of(const AngularQuadrature& q, std::span<const double> I)
{
    MomentTriple t;
    double second = 0.0;
    for (std::size_t m = 0; m < q.size(); ++m) {
        t.phi += q.w[m] * I[m];
        t.cur += q.w[m] * q.mu[m] * I[m];
        second += q.w[m] * q.mu[m] * q.mu[m] * I[m];
    }
    if (std::abs(t.phi) <= 1e-300)
        t.flagged = true;
    else
        t.eddington = second / t.phi;
    return t;
}

// outgoing_sign = -1 at the left boundary, +1 at the right.
inline BoundaryMoments boundary_moments(const AngularQuadrature& q, std::span<const double> I, double outgoing_sign)
{
    BoundaryMoments b;
    auto all = moments_of(q, I);
    b.eddington = all.eddington;
    b.flagged = all.flagged;
    b.c_total = all.flagged ? 0.0 : all.cur / all.phi;
    double out_w = 0.0, out_wmu = 0.0, out_wI = 0.0, out_wmuI = 0.0;
    double mu_lo = 1.0, mu_hi = 0.0; // range of |mu| over outgoing directions
    for (std::size_t m = 0; m < q.size(); ++m) {
        if (q.mu[m] * outgoing_sign > 0.0) {
            mu_lo = std::min(mu_lo, std::abs(q.mu[m]));
            mu_hi = std::max(mu_hi, std::abs(q.mu[m]));
            out_w += q.w[m];
            out_wmu += q.w[m] * q.mu[m];
            out_wI += q.w[m] * I[m];
            out_wmuI += q.w[m] * q.mu[m] * I[m];
        } else {
            b.phi_in += q.w[m] * I[m];
            b.cur_in += q.w[m] * q.mu[m] * I[m];
        }
    }
    // Vacuum-like outflow falls back to the isotropic half-range ratio, as does
    // an outgoing distribution whose ratio leaves the range of |mu|. Roundoff
    // in a reconstructed intensity can produce the latter.
    const double ratio = out_wI > 1e-300 ? out_wmuI / out_wI : 0.0;
    const double mag = std::abs(ratio);
    b.c_half = (mag >= mu_lo * (1 - 1e-12) && mag <= mu_hi * (1 + 1e-12)) ? ratio : out_wmu / out_w;
    return b;
}

} // namespace detail

/// phi = sum w I, F = sum w mu I and f = sum w mu^2 I / phi at cell averages and edges,
/// plus the boundary closure factors. A zero density sets f = 1/3 and flags the result.
inline TransportMoments compute_moments(const GroupField& field, const AngularQuadrature& quad)
{
    const std::size_t J = field.avg.rows();
    TransportMoments tm;
    tm.phi.resize(J);
    tm.cur.resize(J);
    tm.eddington.resize(J);
    tm.edge_phi.resize(J + 1);
    tm.edge_cur.resize(J + 1);
    tm.edge_eddington.resize(J + 1);
    for (std::size_t j = 0; j < J; ++j) {
        auto t = detail::moments_of(quad, field.avg.row(j));
        tm.phi[j] = t.phi;
        tm.cur[j] = t.cur;
        tm.eddington[j] = t.eddington;
        tm.flagged |= t.flagged;
    }
    for (std::size_t j = 0; j <= J; ++j) {
        auto t = detail::moments_of(quad, field.edge.row(j));
        tm.edge_phi[j] = t.phi;
        tm.edge_cur[j] = t.cur;
        tm.edge_eddington[j] = t.eddington;
        tm.flagged |= t.flagged;
    }
    tm.left = detail::boundary_moments(quad, field.edge.row(0), -1.0);
    tm.right = detail::boundary_moments(quad, field.edge.row(J), +1.0);
    return tm;
}

} // namespace mlqd
