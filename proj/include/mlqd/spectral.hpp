#pragma once
//
// Planck integrals, group emission and the Fleck-Cummings opacity.
//
// Units: cm, ns, keV; energy in GJ (1 Jerk = 1e9 J).
//

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlqd {

struct PhysicalConstants {
    double c = 29.9792458; // cm/ns
    double a_R = 0.01372;  // GJ / (cm^3 keV^4)
};

/// Photon-energy group boundaries (keV). The last edge may be +infinity.
class GroupStructure {
public:
    GroupStructure() = default;

    explicit GroupStructure(std::vector<double> edges) : edges_(std::move(edges))
    {
        if (edges_.size() < 2)
            throw std::invalid_argument("GroupStructure: need at least two edges");
        if (edges_.front() < 0.0)
            throw std::invalid_argument("GroupStructure: negative lower edge");
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (!(edges_[i] > edges_[i - 1]))
                throw std::invalid_argument("GroupStructure: edges must be strictly increasing");
    }

    /// 0, then `n_log` log-spaced edges on [lo, hi], then an open top group.
    static GroupStructure log_spaced(std::size_t n_log, double lo, double hi)
    {
        std::vector<double> e{0.0};
        for (std::size_t i = 0; i < n_log; ++i) {
            double s = n_log == 1 ? 0.0 : double(i) / double(n_log - 1);
            e.push_back(lo * std::pow(hi / lo, s));
        }
        e.push_back(std::numeric_limits<double>::infinity());
        return GroupStructure(std::move(e));
    }

    /// Default 17-group structure: 0, 16 log-spaced edges 0.7075..20 keV, open top.
    static GroupStructure fleck_cummings_default() { return log_spaced(16, 0.7075, 20.0); }

    std::size_t size() const { return edges_.size() - 1; }
    double lower(std::size_t g) const { return edges_[g]; }
    double upper(std::size_t g) const { return edges_[g + 1]; }
    const std::vector<double>& edges() const { return edges_; }
    bool open_top() const { return std::isinf(edges_.back()); }

private:
    std::vector<double> edges_;
};

namespace detail {

inline constexpr double pi4_over_15 = std::numbers::pi * std::numbers::pi * std::numbers::pi *
                                      std::numbers::pi / 15.0;

// B_n / n! for the series x/(e^x - 1) = sum B_n x^n / n!, n = 0..kBernoulliTerms-1.
inline constexpr int kBernoulliTerms = 40;

inline const std::array<double, kBernoulliTerms>& bernoulli_over_factorial()
{
    static const std::array<double, kBernoulliTerms> table = [] {
        std::array<double, kBernoulliTerms> b{};
        constexpr double pi = std::numbers::pi;
        b[0] = 1.0;
        b[1] = -0.5;
        for (int k = 1; 2 * k < kBernoulliTerms; ++k) {
            double zeta = 0.0;
            switch (k) {
            case 1: zeta = pi * pi / 6.0; break;
            case 2: zeta = std::pow(pi, 4) / 90.0; break;
            case 3: zeta = std::pow(pi, 6) / 945.0; break;
            case 4: zeta = std::pow(pi, 8) / 9450.0; break;
            default:
                for (int n = 200; n >= 1; --n)
                    zeta += std::pow(double(n), -2.0 * k);
            }
            double sign = (k % 2 == 1) ? 1.0 : -1.0;
            b[2 * k] = sign * 2.0 * zeta / std::pow(2.0 * pi, 2.0 * k);
        }
        return b;
    }();
    return table;
}

// Integral of t^3/(e^t-1) over [0, x] for 0 <= x <= 2 (Bernoulli series).
inline double planck_head(double x)
{
    const auto& b = bernoulli_over_factorial();
    double sum = 0.0;
    double xp = x * x * x; // x^(n+3) with n = 0
    for (int n = 0; n < kBernoulliTerms; ++n, xp *= x) {
        if (b[n] == 0.0)
            continue;
        double term = b[n] * xp / double(n + 3);
        sum += term;
        if (n > 4 && std::abs(term) < 1e-18 * std::abs(sum))
            break;
    }
    return sum;
}

// e^{shift} * integral of t^3/(e^t-1) over [x, inf), for x > 0.
// The shift keeps cold-temperature tails representable.
inline double planck_tail_scaled(double x, double shift = 0.0)
{
    if (std::isinf(x))
        return 0.0;
    double sum = 0.0;
    const double x2 = x * x, x3 = x2 * x;
    const double q = std::exp(-x);
    double e = std::exp(shift - x); // e^{shift - n x}
    for (int n = 1; n < 2000; ++n, e *= q) {
        double dn = n;
        double term = e * (x3 / dn + 3.0 * x2 / (dn * dn) + 6.0 * x / (dn * dn * dn) + 6.0 / (dn * dn * dn * dn));
        sum += term;
        if (term <= 1e-17 * sum || e == 0.0)
            break;
    }
    return sum;
}

// Integral of t^3/(e^t-1) over [0, x].
inline double planck_cumulative(double x)
{
    if (std::isinf(x))
        return pi4_over_15;
    if (x <= 2.0)
        return planck_head(x);
    return pi4_over_15 - planck_tail_scaled(x);
}

// Integral of t^3/(e^t-1) over [a, b], a < b, times e^{shift}.
inline double planck_interval_scaled(double a, double b, double shift)
{
    if (a > 2.0)
        return planck_tail_scaled(a, shift) - planck_tail_scaled(b, shift);
    return std::exp(shift) * (planck_cumulative(b) - planck_cumulative(a));
}

inline void check_temperature(double T, const char* who)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument(std::string(who) + ": temperature must be positive and finite");
}

} // namespace detail

/// Fraction of the normalized Planck spectrum at temperature T (keV) lying in [lo, hi] (keV).
inline double planck_fraction(double T, double lo, double hi)
{
    detail::check_temperature(T, "planck_fraction");
    if (!(lo >= 0.0) || !(hi > lo))
        throw std::invalid_argument("planck_fraction: require 0 <= lo < hi");
    const double a = lo / T, b = hi / T;
    double integral = detail::planck_interval_scaled(a, b, 0.0);
    double frac = integral / detail::pi4_over_15;
    return std::clamp(frac, 0.0, 1.0);
}

/// Group emission B_g(T), normalized so that sum_g 2 B_g = c a_R T^4 for an open top group.
inline std::vector<double> group_emission(double T, const GroupStructure& groups,
                                          const PhysicalConstants& pc = {})
{
    detail::check_temperature(T, "group_emission");
    const double scale = 0.5 * pc.c * pc.a_R * T * T * T * T;
    std::vector<double> B(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g)
        B[g] = scale * planck_fraction(T, groups.lower(g), groups.upper(g));
    return B;
}

/// Fleck-Cummings spectral opacity 27/(h nu)^3 (1 - exp(-h nu / kT)), cm^-1.
inline double spectral_opacity(double hnu, double T)
{
    detail::check_temperature(T, "spectral_opacity");
    if (!(hnu > 0.0))
        throw std::invalid_argument("spectral_opacity: photon energy must be positive");
    return 27.0 / (hnu * hnu * hnu) * -std::expm1(-hnu / T);
}

/// Planck-weighted group mean of the Fleck-Cummings opacity.
///
/// With x = h nu / kT the numerator integral of kappa_nu B_nu reduces to
/// (27 / (kT)^3) (e^{-x_lo} - e^{-x_hi}); the denominator is the Planck
/// integral. Both are evaluated scaled by e^{x_lo} so cold groups stay finite.
inline double fc_group_opacity(double T, double lo, double hi)
{
    detail::check_temperature(T, "group_opacity");
    const double a = lo / T, b = hi / T;
    const double shift = a > 2.0 ? a : 0.0;
    // e^{shift} (e^{-a} - e^{-b})
    double num = std::isinf(b) ? std::exp(shift - a) : std::exp(shift - a) * -std::expm1(-(b - a));
    double den = detail::planck_interval_scaled(a, b, shift);
    if (!(den > 1e-300) || !std::isfinite(den)) {
        double mid = std::isinf(hi) ? 2.0 * lo : (lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi);
        return spectral_opacity(mid, T);
    }
    return 27.0 / (T * T * T) * num / den;
}

/// Group opacities kappa_g(T) for the Fleck-Cummings material.
struct FleckCummingsOpacity {
    std::vector<double> operator()(double T, const GroupStructure& groups) const
    {
        std::vector<double> k(groups.size());
        for (std::size_t g = 0; g < groups.size(); ++g)
            k[g] = fc_group_opacity(T, groups.lower(g), groups.upper(g));
        return k;
    }

    void with_emission(double T, const GroupStructure& groups, const PhysicalConstants& pc,
                       std::vector<double>& kappa, std::vector<double>& emission) const;
};

/// Temperature-independent opacities, one value per group.
struct ConstantOpacity {
    std::vector<double> values;

    std::vector<double> operator()(double, const GroupStructure& groups) const
    {
        if (values.size() != groups.size())
            throw std::invalid_argument("ConstantOpacity: size does not match group count");
        return values;
    }
};

/// Group opacities and emission of the Fleck-Cummings material in one pass.
/// Each group edge's Planck integral is evaluated once and shared by both
/// neighbouring groups and by both quantities; agrees with fc_group_opacity
/// and group_emission to rounding.
inline void fleck_cummings_group_data(double T, const GroupStructure& groups, const PhysicalConstants& pc,
                                      std::vector<double>& kappa, std::vector<double>& emission)
{
    detail::check_temperature(T, "fleck_cummings_group_data");
    const std::size_t G = groups.size();
    // Per edge: x = E/kT and either the head cumulative (x <= 2) or e^x times the tail.
    std::vector<double> x(G + 1), head(G + 1, 0.0), tail(G + 1, 0.0);
    for (std::size_t k = 0; k <= G; ++k) {
        const double e = k < G ? groups.lower(k) : groups.upper(G - 1);
        x[k] = e / T;
        if (std::isinf(x[k]))
            continue;
        if (x[k] <= 2.0)
            head[k] = detail::planck_head(x[k]);
        else
            tail[k] = detail::planck_tail_scaled(x[k], x[k]);
    }
    // Integral over [x_k, inf) scaled by e^{shift}.
    auto tail_from = [&](std::size_t k, double shift) {
        if (std::isinf(x[k]))
            return 0.0;
        if (x[k] <= 2.0)
            return std::exp(shift) * (detail::pi4_over_15 - head[k]);
        return std::exp(shift - x[k]) * tail[k];
    };
    const double scale = 0.5 * pc.c * pc.a_R * T * T * T * T;
    kappa.resize(G);
    emission.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        const double a = x[g], b = x[g + 1];
        const double shift = a > 2.0 ? a : 0.0;
        double den; // e^{shift} times the Planck integral over [a, b]
        if (a > 2.0)
            den = tail[g] - tail_from(g + 1, a);
        else if (std::isinf(b))
            den = detail::pi4_over_15 - head[g];
        else
            den = (b <= 2.0 ? head[g + 1] : detail::pi4_over_15 - tail_from(g + 1, 0.0)) - head[g];
        const double frac = a > 2.0 ? std::exp(-a) * den / detail::pi4_over_15 : den / detail::pi4_over_15;
        emission[g] = scale * std::clamp(frac, 0.0, 1.0);
        const double num = std::isinf(b) ? std::exp(shift - a) : std::exp(shift - a) * -std::expm1(-(b - a));
        if (!(den > 1e-300) || !std::isfinite(den)) {
            const double lo = groups.lower(g), hi = groups.upper(g);
            kappa[g] = spectral_opacity(std::isinf(hi) ? 2.0 * lo : (lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi), T);
        } else {
            kappa[g] = 27.0 / (T * T * T) * num / den;
        }
    }
}

inline void FleckCummingsOpacity::with_emission(double T, const GroupStructure& groups, const PhysicalConstants& pc,
                                                std::vector<double>& kappa, std::vector<double>& emission) const
{
    fleck_cummings_group_data(T, groups, pc, kappa, emission);
}

/// Group opacity with the Fleck-Cummings law (free-function form).
inline std::vector<double> group_opacity(double T, const GroupStructure& groups)
{
    return FleckCummingsOpacity{}(T, groups);
}

} // namespace mlqd
