#pragma once
//
// Angular quadrature, spatial mesh and time schedule.
//

#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mlqd {

/// Discrete ordinates. Ordering: negative mu first (descending |mu|), then positive
/// mu ascending, so mu is increasing over the whole set.
struct AngularQuadrature {
    std::vector<double> mu;
    std::vector<double> w;

    std::size_t size() const { return mu.size(); }
};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending, via Newton on P_n.
inline void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 1; i <= half; ++i) {
        double z = std::cos(std::numbers::pi * (double(i) - 0.25) / (double(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p0 = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                double p2 = p0;
                p0 = p1;
                p1 = ((2.0 * double(k) - 1.0) * z * p0 - (double(k) - 1.0) * p2) / double(k);
            }
            dp = double(n) * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) <= 1e-15)
                break;
        }
        // final derivative at the converged root
        {
            double p1 = 1.0, p0 = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                double p2 = p0;
                p0 = p1;
                p1 = ((2.0 * double(k) - 1.0) * z * p0 - (double(k) - 1.0) * p2) / double(k);
            }
            dp = double(n) * (z * p1 - p0) / (z * z - 1.0);
        }
        double wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i - 1] = -z;
        x[n - i] = z;
        w[i - 1] = wi;
        w[n - i] = wi;
    }
    if (n % 2 == 1)
        x[n / 2] = 0.0;
}

/// Double Gauss-Legendre set: GL(order) mapped onto (0,1) and mirrored onto (-1,0).
inline AngularQuadrature build_double_gauss(std::size_t order_per_half)
{
    if (order_per_half < 1)
        throw std::invalid_argument("build_double_gauss: order must be >= 1");
    std::vector<double> x, w;
    gauss_legendre(order_per_half, x, w);
    const std::size_t n = order_per_half;
    AngularQuadrature q;
    q.mu.resize(2 * n);
    q.w.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.5 * (x[i] + 1.0); // ascending on (0,1)
        double wt = 0.5 * w[i];
        q.mu[n + i] = mu;
        q.w[n + i] = wt;
        q.mu[n - 1 - i] = -mu;
        q.w[n - 1 - i] = wt;
    }
    return q;
}

class SpatialMesh {
public:
    SpatialMesh() = default;

    explicit SpatialMesh(std::vector<double> dx) : dx_(std::move(dx))
    {
        if (dx_.empty())
            throw std::invalid_argument("SpatialMesh: no cells");
        for (double d : dx_)
            if (!(d > 0.0) || !std::isfinite(d))
                throw std::invalid_argument("SpatialMesh: cell widths must be positive");
        edges_.assign(dx_.size() + 1, 0.0);
        std::partial_sum(dx_.begin(), dx_.end(), edges_.begin() + 1);
    }

    static SpatialMesh uniform(double length, std::size_t cells)
    {
        if (!(length > 0.0) || cells == 0)
            throw std::invalid_argument("SpatialMesh::uniform: bad length or cell count");
        return SpatialMesh(std::vector<double>(cells, length / double(cells)));
    }

    std::size_t cells() const { return dx_.size(); }
    double dx(std::size_t j) const { return dx_[j]; }
    const std::vector<double>& widths() const { return dx_; }
    /// Edge position x_{j-1/2} for j = 0..J.
    double edge(std::size_t j) const { return edges_[j]; }
    double center(std::size_t j) const { return 0.5 * (edges_[j] + edges_[j + 1]); }
    double length() const { return edges_.back(); }

private:
    std::vector<double> dx_;
    std::vector<double> edges_;
};

/// Uniform time schedule t^n = t0 + n dt, n = 0..steps.
struct TimeGrid {
    double t0 = 0.0;
    double t_end = 0.0;
    double dt = 0.0;

    TimeGrid() = default;
    TimeGrid(double start, double end, double step) : t0(start), t_end(end), dt(step)
    {
        if (!(dt > 0.0))
            throw std::invalid_argument("TimeGrid: dt must be positive");
        if (!(t_end >= t0))
            throw std::invalid_argument("TimeGrid: t_end before t0");
        const double n = std::round((t_end - t0) / dt);
        if (std::abs(t0 + n * dt - t_end) > 1e-9 * dt)
            throw std::invalid_argument("TimeGrid: dt does not divide t_end - t0");
    }

    std::size_t steps() const { return std::size_t(std::llround((t_end - t0) / dt)); }
    double time(std::size_t n) const { return t0 + double(n) * dt; }
};

} // namespace mlqd
