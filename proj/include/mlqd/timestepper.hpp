#pragma once
//
// Multilevel time stepping.
//
// Each time step runs an outer fixed-point iteration: transport sweep in every
// group, multigroup low-order solves, grey averaging, and the coupled grey
// low-order / material-energy Newton solve. On convergence the cell-average
// intensity is handed to the storage scheme and everything else transient is
// dropped.
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mlqd/compression.hpp"
#include "mlqd/error.hpp"
#include "mlqd/loqd.hpp"
#include "mlqd/parallel.hpp"
#include "mlqd/quadrature.hpp"
#include "mlqd/record.hpp"
#include "mlqd/spectral.hpp"
#include "mlqd/transport.hpp"

namespace mlqd {

struct SchemeConfig {
    StorageScheme scheme = StorageScheme::Full;
    std::size_t rank = 0;
    double eps_T = 1e-12;
    double eps_E = 1e-12;
    std::size_t max_outer = 100;
    std::size_t max_inner = 10; ///< multigroup/grey cycles per transport sweep
    double eps_inner = 1e-13;
    std::size_t threads = 1; ///< workers for the per-group loops
    NewtonControls newton{};
    BoundaryClosure closure = BoundaryClosure::HalfRange;
    /// Clamp negative values of a reconstructed (compressed) previous-step
    /// intensity to zero before it enters the sweep. Low-rank reconstructions
    /// can dip below zero next to steep fronts, and the resulting negative
    /// sources drive the group Eddington factors out of range.
    bool clip_negative = true;
};

/// Problem definition. `Opacity` maps (T, groups) to per-group opacities.
template <class Opacity = FleckCummingsOpacity>
struct Problem {
    GroupStructure groups;
    AngularQuadrature quad;
    SpatialMesh mesh;
    PhysicalConstants pc{};
    Material material{};
    Opacity opacity{};
    BoundaryCondition bc;
    std::vector<double> T_initial; // per cell
};

/// Data persisted between time steps.
struct SimulationState {
    std::size_t step = 0;
    double time = 0.0;
    std::vector<double> T;                      // J
    std::vector<std::vector<double>> E_g;       // G x J
    std::vector<std::vector<double>> F_g;       // G x (J+1)
    std::vector<double> F_grey;                 // J+1
    std::vector<CompressedIntensity> intensity; // G

    /// Grey energy density of the stored level, sum over groups in fixed order.
    std::vector<double> grey_energy() const
    {
        std::vector<double> E(T.size(), 0.0);
        for (const auto& Eg : E_g)
            for (std::size_t j = 0; j < E.size(); ++j)
                E[j] += Eg[j];
        return E;
    }

    /// Doubles held between steps, counted from the containers themselves.
    std::size_t persisted_elements() const
    {
        std::size_t n = T.size() + F_grey.size();
        for (const auto& v : E_g)
            n += v.size();
        for (const auto& v : F_g)
            n += v.size();
        for (const auto& c : intensity)
            n += c.element_count();
        return n;
    }
};

struct StepDiagnostics {
    std::size_t outer_iterations = 0;
    std::size_t newton_iterations = 0;
    std::vector<double> dT_history, dE_history;
    std::vector<double> E_grey, E_grey_prev, F_grey; // converged grey solution and its previous level
};

/// Per-cell group opacities and emission at a temperature field, [g][j].
template <class Opacity>
void evaluate_coefficients(const Problem<Opacity>& p, const std::vector<double>& T,
                           std::vector<std::vector<double>>& kappa, std::vector<std::vector<double>>& emission,
                           std::size_t threads = 1)
{
    const std::size_t G = p.groups.size(), J = T.size();
    kappa.assign(G, std::vector<double>(J));
    emission.assign(G, std::vector<double>(J));
    parallel_for(J, threads, [&](std::size_t j) {
        std::vector<double> k, B;
        if constexpr (requires { p.opacity.with_emission(T[j], p.groups, p.pc, k, B); }) {
            p.opacity.with_emission(T[j], p.groups, p.pc, k, B);
        } else {
            k = p.opacity(T[j], p.groups);
            B = group_emission(T[j], p.groups, p.pc);
        }
        for (std::size_t g = 0; g < G; ++g) {
            kappa[g][j] = k[g];
            emission[g][j] = B[g];
        }
    });
}

inline void check_rank(const SchemeConfig& cfg, std::size_t J, std::size_t M)
{
    const std::size_t d = full_rank(J, M);
    if (cfg.scheme == StorageScheme::PodI && (cfg.rank < 1 || cfg.rank > d))
        throw std::invalid_argument("pod-i rank must be in [1, " + std::to_string(d) + "]");
    if (cfg.scheme == StorageScheme::PodRT && cfg.rank > d)
        throw std::invalid_argument("pod-rt rank must be in [0, " + std::to_string(d) + "]");
}

/// Initial state: equilibrium intensity B_g(T0) in every direction, E_g = 2 B_g / c, no flux.
template <class Opacity>
SimulationState initial_state(const Problem<Opacity>& p, const SchemeConfig& cfg)
{
    const std::size_t J = p.mesh.cells(), M = p.quad.size(), G = p.groups.size();
    if (p.T_initial.size() != J)
        throw std::invalid_argument("initial temperature has wrong length");
    check_rank(cfg, J, M);
    SimulationState s;
    s.time = 0.0;
    s.T = p.T_initial;
    s.E_g.assign(G, std::vector<double>(J));
    s.F_g.assign(G, std::vector<double>(J + 1, 0.0));
    s.F_grey.assign(J + 1, 0.0);
    std::vector<Matrix> I(G, Matrix(J, M));
    for (std::size_t j = 0; j < J; ++j) {
        auto B = group_emission(p.T_initial[j], p.groups, p.pc);
        for (std::size_t g = 0; g < G; ++g) {
            s.E_g[g][j] = 2.0 * B[g] / p.pc.c;
            for (std::size_t m = 0; m < M; ++m)
                I[g](j, m) = B[g];
        }
    }
    s.intensity.reserve(G);
    for (std::size_t g = 0; g < G; ++g)
        s.intensity.push_back(compress(I[g], p.quad, cfg.scheme, cfg.rank));
    return s;
}

namespace detail {

inline double relative_change(const std::vector<double>& a, const std::vector<double>& b)
{
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        norm = std::max(norm, std::abs(a[i]));
    }
    return norm > 0.0 ? diff / norm : diff;
}

} // namespace detail

/// Advances the state by one time step of size dt.
template <class Opacity>
SimulationState advance_step(const Problem<Opacity>& p, const SimulationState& prev, double dt, const SchemeConfig& cfg,
                             StepDiagnostics* diag = nullptr)
{
    const std::size_t J = p.mesh.cells(), G = p.groups.size();
    if (!(dt > 0.0))
        throw std::invalid_argument("advance_step: dt must be positive");

    std::vector<Matrix> previous(G);
    for (std::size_t g = 0; g < G; ++g)
        previous[g] = prev.intensity[g].reconstruct(p.quad);
    if (cfg.clip_negative && cfg.scheme != StorageScheme::Full)
        for (auto& A : previous)
            for (std::size_t i = 0; i < A.size(); ++i)
                A.data()[i] = std::max(A.data()[i], 0.0);

    const std::vector<double> E_grey_prev = prev.grey_energy();
    std::vector<double> T_it = prev.T, E_it = E_grey_prev;

    StepDiagnostics local;
    std::vector<std::vector<double>> kappa, emission;
    std::vector<GroupField> fields(G);
    std::vector<TransportMoments> moments(G);
    std::vector<LowOrderSystem> systems(G);
    std::vector<LowOrderSolution> solutions(G);

    auto solve_groups = [&] {
        parallel_for(G, cfg.threads, [&](std::size_t g) {
            GroupLowOrderInput lo{kappa[g], emission[g], &moments[g], prev.E_g[g], prev.F_g[g]};
            systems[g] = make_group_system(p.mesh, lo, cfg.closure, dt, p.pc);
            solutions[g] = solve_low_order(systems[g]);
        });
    };
    auto grey_meb = [&](const std::vector<double>& T_lin) {
        const GreyCoefficients gc = grey_average(systems, solutions, kappa, emission);
        return grey_meb_solve(p.mesh, gc, E_grey_prev, prev.F_grey, prev.T, T_lin, p.material, dt, p.pc, cfg.newton);
    };

    for (std::size_t it = 1; it <= cfg.max_outer; ++it) {
        evaluate_coefficients(p, T_it, kappa, emission, cfg.threads);
        parallel_for(G, cfg.threads, [&](std::size_t g) {
            std::vector<double> Q(J);
            for (std::size_t j = 0; j < J; ++j)
                Q[j] = kappa[g][j] * emission[g][j];
            SweepInput in{kappa[g], Q, &previous[g], p.bc.left_in.row(g), p.bc.right_in.row(g), dt, p.pc.c};
            fields[g] = sweep_group(p.quad, p.mesh, in);
            moments[g] = compute_moments(fields[g], p.quad);
        });
        // Inner cycles: transport moments held fixed, multigroup and grey
        // low-order levels iterated to a common temperature.
        std::vector<double> T_inner = T_it;
        GreyMebResult meb;
        for (std::size_t k = 1; k <= std::max<std::size_t>(cfg.max_inner, 1); ++k) {
            if (k > 1)
                evaluate_coefficients(p, T_inner, kappa, emission, cfg.threads);
            solve_groups();
            meb = grey_meb(T_inner);
            local.newton_iterations += meb.newton_iterations;
            const double d = detail::relative_change(meb.T, T_inner);
            T_inner = meb.T;
            if (d < cfg.eps_inner)
                break;
        }
        const double dT = detail::relative_change(meb.T, T_it);
        const double dE = detail::relative_change(meb.grey.E, E_it);
        local.dT_history.push_back(dT);
        local.dE_history.push_back(dE);
        T_it = meb.T;
        E_it = meb.grey.E;
        if (dT < cfg.eps_T && dE < cfg.eps_E) {
            SimulationState next;
            next.step = prev.step + 1;
            next.time = prev.time + dt;
            next.T = std::move(T_it);
            next.E_g.resize(G);
            next.F_g.resize(G);
            next.intensity.reserve(G);
            for (std::size_t g = 0; g < G; ++g) {
                next.E_g[g] = std::move(solutions[g].E);
                next.F_g[g] = std::move(solutions[g].F);
                next.intensity.push_back(compress(fields[g].avg, p.quad, cfg.scheme, cfg.rank));
            }
            next.F_grey = meb.grey.F;
            local.outer_iterations = it;
            local.E_grey = std::move(meb.grey.E);
            local.E_grey_prev = E_grey_prev;
            local.F_grey = std::move(meb.grey.F);
            if (diag)
                *diag = std::move(local);
            return next;
        }
    }
    std::string trace;
    for (std::size_t i = 0; i < local.dT_history.size(); ++i)
        trace += " (" + format_real(local.dT_history[i]) + ", " + format_real(local.dE_history[i]) + ")";
    throw numerical_error("outer iteration did not converge in " + std::to_string(cfg.max_outer) +
                          " iterations at step " + std::to_string(prev.step + 1) + "; (dT, dE):" + trace);
}

struct StepLog {
    std::size_t step = 0;
    double time = 0.0;
    std::size_t outer_iterations = 0;
    std::size_t newton_iterations = 0;
    std::size_t persisted_elements = 0;
};

struct RunResult {
    SolutionRecord record;
    std::vector<StepLog> log;
    SimulationState final_state;
};

struct RunOptions {
    double t_end = 0.0;
    double dt = 0.0;
    std::vector<double> output_times; ///< empty: every step, including t = 0
};

/// Runs the time loop and records T and E at the requested output times.
template <class Opacity>
RunResult run(const Problem<Opacity>& p, const SchemeConfig& cfg, const RunOptions& opt)
{
    if (!(opt.dt > 0.0))
        throw std::invalid_argument("run: dt must be positive");
    const TimeGrid grid(0.0, opt.t_end, opt.dt);
    const std::size_t steps = grid.steps();
    const std::size_t J = p.mesh.cells();

    std::vector<char> wanted(steps + 1, opt.output_times.empty() ? 1 : 0);
    for (double t : opt.output_times) {
        const double n = std::round(t / opt.dt);
        if (n < 0.0 || n > double(steps) || std::abs(n * opt.dt - t) > 1e-9 * opt.dt + 1e-12 * std::abs(t))
            throw std::invalid_argument("output time " + format_real(t) + " is not on the time grid");
        wanted[std::size_t(n)] = 1;
    }

    RunResult out;
    auto& rec = out.record;
    rec.J = J;
    rec.M = p.quad.size();
    rec.G = p.groups.size();
    rec.dt = opt.dt;
    rec.scheme = scheme_tag(cfg.scheme);
    rec.rank = cfg.scheme == StorageScheme::Full ? full_rank(J, rec.M) : cfg.rank;
    rec.x.resize(J);
    for (std::size_t j = 0; j < J; ++j)
        rec.x[j] = p.mesh.center(j);

    SimulationState state = initial_state(p, cfg);
    if (wanted[0]) {
        rec.times.push_back(0.0);
        rec.T.push_back(state.T);
        rec.E.push_back(state.grey_energy());
    }
    for (std::size_t n = 1; n <= steps; ++n) {
        StepDiagnostics d;
        state = advance_step(p, state, opt.dt, cfg, &d);
        state.time = grid.time(n);
        out.log.push_back({n, state.time, d.outer_iterations, d.newton_iterations, state.persisted_elements()});
        if (wanted[n]) {
            rec.times.push_back(state.time);
            rec.T.push_back(state.T);
            rec.E.push_back(d.E_grey);
        }
    }
    out.final_state = std::move(state);
    return out;
}

/// The Fleck-Cummings slab: black-body inflow at T_in on the left, vacuum on the right,
/// material initially at T0 with c_v = cv_coefficient a_R T_in^3.
struct FleckCummingsSetup {
    double length = 6.0;
    double T_in = 1.0;
    double T0 = 0.001;
    double cv_coefficient = 0.5917;
    std::size_t cells = 100;
    std::size_t order_per_half = 4;
    GroupStructure groups = GroupStructure::fleck_cummings_default();
    bool left_blackbody = true;
    bool right_blackbody = false;
};

inline Problem<FleckCummingsOpacity> make_fleck_cummings(const FleckCummingsSetup& s, const PhysicalConstants& pc = {})
{
    Problem<FleckCummingsOpacity> p;
    p.groups = s.groups;
    p.quad = build_double_gauss(s.order_per_half);
    p.mesh = SpatialMesh::uniform(s.length, s.cells);
    p.pc = pc;
    p.material.c_v = s.cv_coefficient * pc.a_R * s.T_in * s.T_in * s.T_in;
    p.bc = BoundaryCondition::blackbody(p.groups, p.quad.size(), s.left_blackbody ? s.T_in : 0.0,
                                        s.right_blackbody ? s.T_in : 0.0, pc);
    p.T_initial.assign(s.cells, s.T0);
    return p;
}

} // namespace mlqd
