#pragma once
//
// Small dense linear algebra used by the solvers: a row-major matrix,
// a tridiagonal solver, a cyclic Jacobi eigensolver and a Gram-based
// reduced SVD for tall-skinny matrices.
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlqd/error.hpp"

namespace mlqd {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value)
    {
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::vector<double> column(std::size_t j) const
    {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            c[i] = (*this)(i, j);
        return c;
    }

    double frobenius_norm() const
    {
        double s = 0.0;
        for (double v : data_)
            s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : data_)
            m = std::max(m, std::abs(v));
        return m;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Solves a tridiagonal system by the Thomas algorithm.
/// lower[0] and upper[n-1] are ignored.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                             std::span<const double> upper, std::span<const double> rhs)
{
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw std::invalid_argument("solve_tridiagonal: size mismatch");
    std::vector<double> c(n), d(n), x(n);
    double beta = diag[0];
    if (beta == 0.0 || !std::isfinite(beta))
        throw numerical_error("solve_tridiagonal: zero pivot in row 0");
    c[0] = n > 1 ? upper[0] / beta : 0.0;
    d[0] = rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
        beta = diag[i] - lower[i] * c[i - 1];
        if (beta == 0.0 || !std::isfinite(beta))
            throw numerical_error("solve_tridiagonal: zero pivot in row " + std::to_string(i));
        c[i] = i + 1 < n ? upper[i] / beta : 0.0;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

struct SymmetricEigen {
    std::vector<double> values; // descending
    Matrix vectors;             // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
inline SymmetricEigen jacobi_eigen(Matrix a)
{
    const std::size_t n = a.rows();
    if (a.cols() != n)
        throw std::invalid_argument("jacobi_eigen: matrix must be square");
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i)
        v(i, i) = 1.0;

    const double scale = a.frobenius_norm();
    for (int sweep = 0; sweep < 100 && scale > 0.0; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-17 * scale)
            break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = cs * akp - sn * akq;
                    a(k, q) = sn * akp + cs * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = cs * apk - sn * aqk;
                    a(q, k) = sn * apk + cs * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = cs * vkp - sn * vkq;
                    v(k, q) = sn * vkp + cs * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i)
            out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// Reduced SVD A = U diag(s) V^T with d = min(rows, cols) triples.
struct SvdResult {
    Matrix U;              // rows x d
    std::vector<double> s; // d, descending, nonnegative
    Matrix V;              // cols x d

    std::size_t rank_capacity() const { return s.size(); }
};

namespace detail {

inline double dot_col(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j)
{
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        s += a(r, i) * b(r, j);
    return s;
}

inline SvdResult transpose_result(SvdResult r)
{
    std::swap(r.U, r.V);
    return r;
}

inline Matrix transpose(const Matrix& a)
{
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            t(j, i) = a(i, j);
    return t;
}

// Orthogonalizes column k of u against columns 0..k-1 (two passes of Gram-Schmidt).
inline void orthogonalize_column(Matrix& u, std::size_t k)
{
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < k; ++p) {
            const double proj = dot_col(u, p, u, k);
            for (std::size_t r = 0; r < u.rows(); ++r)
                u(r, k) -= proj * u(r, p);
        }
    }
}

} // namespace detail

/// Reduced SVD through the eigendecomposition of the Gram matrix A^T A.
///
/// Suited to tall-skinny A (rows >> cols); wide input is handled through the
/// transpose. Exactly null directions get U columns completed to an
/// orthonormal set. Signs are fixed so that the first nonzero entry of each v
/// is positive.
inline SvdResult svd_reduced(const Matrix& a)
{
    if (a.rows() < a.cols())
        return detail::transpose_result(svd_reduced(detail::transpose(a)));

    const std::size_t m = a.rows(), n = a.cols();
    for (double x : a.data())
        if (!std::isfinite(x))
            throw std::invalid_argument("svd_reduced: non-finite entry");

    // One-sided Jacobi: rotate column pairs of W = A V until they are mutually
    // orthogonal. Working on A itself keeps small singular triples accurate,
    // which a Gram-matrix eigensolve does not.
    Matrix w = a;
    SvdResult out;
    out.V = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        out.V(i, i) = 1.0;
    const double tol = 4.0 * std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = detail::dot_col(w, p, w, p), beta = detail::dot_col(w, q, w, q);
                const double gamma = detail::dot_col(w, p, w, q);
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t), sn = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double x = w(r, p), y = w(r, q);
                    w(r, p) = c * x - sn * y;
                    w(r, q) = sn * x + c * y;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double x = out.V(r, p), y = out.V(r, q);
                    out.V(r, p) = c * x - sn * y;
                    out.V(r, q) = sn * x + c * y;
                }
            }
        if (!rotated)
            break;
    }

    out.U = Matrix(m, n);
    out.s.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        out.s[k] = std::sqrt(detail::dot_col(w, k, w, k));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return out.s[i] > out.s[j]; });
    {
        Matrix ws(m, n), vs(n, n);
        std::vector<double> ss(n);
        for (std::size_t k = 0; k < n; ++k) {
            ss[k] = out.s[order[k]];
            for (std::size_t r = 0; r < m; ++r)
                ws(r, k) = w(r, order[k]);
            for (std::size_t i = 0; i < n; ++i)
                vs(i, k) = out.V(i, order[k]);
        }
        w = std::move(ws);
        out.V = std::move(vs);
        out.s = std::move(ss);
    }
    for (std::size_t k = 0; k < n; ++k) {
        // first nonzero component of v positive
        double sign = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            if (out.V(i, k) != 0.0) {
                sign = out.V(i, k) > 0.0 ? 1.0 : -1.0;
                break;
            }
        for (std::size_t i = 0; i < n; ++i)
            out.V(i, k) *= sign;
        const double norm = out.s[k];
        if (norm > 1e-150) {
            for (std::size_t r = 0; r < m; ++r)
                out.U(r, k) = sign * w(r, k) / norm;
            continue;
        }
        // Null direction: complete U with a unit vector orthogonal to the leading columns.
        out.s[k] = norm;
        for (std::size_t e = 0; e < m; ++e) {
            for (std::size_t r = 0; r < m; ++r)
                out.U(r, k) = r == e ? 1.0 : 0.0;
            detail::orthogonalize_column(out.U, k);
            double nn = std::sqrt(detail::dot_col(out.U, k, out.U, k));
            if (nn > 0.5) {
                for (std::size_t r = 0; r < m; ++r)
                    out.U(r, k) /= nn;
                break;
            }
        }
    }

    return out;
}

} // namespace mlqd
