#pragma once
//
// Storage of the previous-time-level intensity.
//
// Each group's cell-average intensity is a J x M matrix A (column m holds
// direction m). It is kept either in full, as a rank-r truncated SVD of A
// (POD-I), or as the P2 angular expansion plus a rank-r truncated SVD of the
// remainder A - P2 (POD-RT).
//

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlqd/linalg.hpp"
#include "mlqd/quadrature.hpp"

namespace mlqd {

enum class StorageScheme : std::uint8_t { Full = 0, PodI = 1, PodRT = 2 };

inline const char* scheme_tag(StorageScheme s)
{
    switch (s) {
    case StorageScheme::Full: return "be";
    case StorageScheme::PodI: return "pod-i";
    case StorageScheme::PodRT: return "pod-rt";
    }
    return "?";
}

inline StorageScheme parse_scheme(const std::string& tag)
{
    if (tag == "be" || tag == "be-sc" || tag == "full")
        return StorageScheme::Full;
    if (tag == "pod-i")
        return StorageScheme::PodI;
    if (tag == "pod-rt")
        return StorageScheme::PodRT;
    throw std::invalid_argument("unknown scheme '" + tag + "' (expected be, pod-i or pod-rt)");
}

/// First r singular triples of a J x M matrix.
struct TruncatedSvd {
    std::vector<double> s; // r
    Matrix U;              // J x r
    Matrix V;              // M x r

    std::size_t rank() const { return s.size(); }
    std::size_t element_count() const { return s.size() + U.size() + V.size(); }

    Matrix reconstruct() const
    {
        Matrix A(U.rows(), V.rows());
        for (std::size_t l = 0; l < s.size(); ++l)
            for (std::size_t j = 0; j < U.rows(); ++j) {
                const double su = s[l] * U(j, l);
                for (std::size_t m = 0; m < V.rows(); ++m)
                    A(j, m) += su * V(m, l);
            }
        return A;
    }
};

inline TruncatedSvd truncate(const SvdResult& full, std::size_t r)
{
    TruncatedSvd t;
    t.s.assign(full.s.begin(), full.s.begin() + std::ptrdiff_t(r));
    t.U = Matrix(full.U.rows(), r);
    t.V = Matrix(full.V.rows(), r);
    for (std::size_t l = 0; l < r; ++l) {
        for (std::size_t j = 0; j < full.U.rows(); ++j)
            t.U(j, l) = full.U(j, l);
        for (std::size_t m = 0; m < full.V.rows(); ++m)
            t.V(m, l) = full.V(m, l);
    }
    return t;
}

/// P2 angular form 1/2 (phi + 3 mu F + 5/4 (3 mu^2 - 1)(3 f - 1) phi) at every node, J x M.
inline Matrix p2_expansion(std::span<const double> phi, std::span<const double> cur, std::span<const double> eddington,
                           const AngularQuadrature& quad)
{
    const std::size_t J = phi.size();
    if (cur.size() != J || eddington.size() != J)
        throw std::invalid_argument("p2_expansion: inconsistent lengths");
    Matrix A(J, quad.size());
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t m = 0; m < quad.size(); ++m) {
            const double mu = quad.mu[m];
            A(j, m) = 0.5 * (phi[j] + 3.0 * mu * cur[j] + 1.25 * (3.0 * mu * mu - 1.0) * (3.0 * eddington[j] - 1.0) * phi[j]);
        }
    return A;
}

/// Previous-level intensity of one group in one of the storage schemes.
struct CompressedIntensity {
    StorageScheme scheme = StorageScheme::Full;
    std::size_t rows = 0, cols = 0;
    Matrix full;                    // Full
    TruncatedSvd svd;               // PodI: of A; PodRT: of the remainder
    std::vector<double> phi, cur;   // PodRT: zeroth and first angular moments
    std::vector<double> eddington;  // PodRT: f used by the P2 term

    std::size_t rank() const { return svd.rank(); }

    /// Number of doubles held.
    std::size_t element_count() const
    {
        return full.size() + svd.element_count() + phi.size() + cur.size() + eddington.size();
    }

    Matrix reconstruct(const AngularQuadrature& quad) const
    {
        switch (scheme) {
        case StorageScheme::Full: return full;
        case StorageScheme::PodI: return svd.reconstruct();
        case StorageScheme::PodRT: {
            Matrix A = p2_expansion(phi, cur, eddington, quad);
            if (svd.rank() > 0) {
                Matrix d = svd.reconstruct();
                for (std::size_t i = 0; i < A.size(); ++i)
                    A.data()[i] += d.data()[i];
            }
            return A;
        }
        }
        throw std::logic_error("CompressedIntensity: bad scheme");
    }
};

inline CompressedIntensity store_full(const Matrix& A)
{
    CompressedIntensity c;
    c.scheme = StorageScheme::Full;
    c.rows = A.rows();
    c.cols = A.cols();
    c.full = A;
    c.svd = TruncatedSvd{{}, Matrix(A.rows(), 0), Matrix(A.cols(), 0)};
    return c;
}

inline std::size_t full_rank(std::size_t J, std::size_t M) { return std::min(J, M); }

/// Rank-r POD of the intensity matrix.
inline CompressedIntensity compress_full_intensity(const Matrix& A, std::size_t r)
{
    const std::size_t d = full_rank(A.rows(), A.cols());
    if (r < 1 || r > d)
        throw std::invalid_argument("compress_full_intensity: rank " + std::to_string(r) + " outside [1, " +
                                    std::to_string(d) + "]");
    CompressedIntensity c;
    c.scheme = StorageScheme::PodI;
    c.rows = A.rows();
    c.cols = A.cols();
    c.svd = truncate(svd_reduced(A), r);
    return c;
}

/// Discrete moments phi, F and f of each row of A under the quadrature.
inline void angular_moments(const Matrix& A, const AngularQuadrature& quad, std::vector<double>& phi,
                            std::vector<double>& cur, std::vector<double>& eddington)
{
    const std::size_t J = A.rows();
    phi.assign(J, 0.0);
    cur.assign(J, 0.0);
    eddington.assign(J, 1.0 / 3.0);
    for (std::size_t j = 0; j < J; ++j) {
        double second = 0.0;
        for (std::size_t m = 0; m < quad.size(); ++m) {
            phi[j] += quad.w[m] * A(j, m);
            cur[j] += quad.w[m] * quad.mu[m] * A(j, m);
            second += quad.w[m] * quad.mu[m] * quad.mu[m] * A(j, m);
        }
        if (std::abs(phi[j]) > 1e-300)
            eddington[j] = second / phi[j];
    }
}

/// The remainder A - P2(A).
inline Matrix p2_remainder(const Matrix& A, const AngularQuadrature& quad)
{
    std::vector<double> phi, cur, f;
    angular_moments(A, quad, phi, cur, f);
    Matrix d = p2_expansion(phi, cur, f, quad);
    for (std::size_t i = 0; i < d.size(); ++i)
        d.data()[i] = A.data()[i] - d.data()[i];
    return d;
}

/// P2 expansion plus a rank-r POD of the remainder. r = 0 keeps the P2 part only.
inline CompressedIntensity compress_remainder(const Matrix& A, const AngularQuadrature& quad, std::size_t r)
{
    const std::size_t d = full_rank(A.rows(), A.cols());
    if (r > d)
        throw std::invalid_argument("compress_remainder: rank " + std::to_string(r) + " outside [0, " +
                                    std::to_string(d) + "]");
    if (A.cols() != quad.size())
        throw std::invalid_argument("compress_remainder: matrix does not match quadrature");
    CompressedIntensity c;
    c.scheme = StorageScheme::PodRT;
    c.rows = A.rows();
    c.cols = A.cols();
    angular_moments(A, quad, c.phi, c.cur, c.eddington);
    Matrix rem = p2_expansion(c.phi, c.cur, c.eddington, quad);
    for (std::size_t i = 0; i < rem.size(); ++i)
        rem.data()[i] = A.data()[i] - rem.data()[i];
    if (r > 0)
        c.svd = truncate(svd_reduced(rem), r);
    else
        c.svd = TruncatedSvd{{}, Matrix(A.rows(), 0), Matrix(A.cols(), 0)};
    return c;
}

inline CompressedIntensity compress(const Matrix& A, const AngularQuadrature& quad, StorageScheme scheme, std::size_t r)
{
    switch (scheme) {
    case StorageScheme::Full: return store_full(A);
    case StorageScheme::PodI: return compress_full_intensity(A, r);
    case StorageScheme::PodRT: return compress_remainder(A, quad, r);
    }
    throw std::logic_error("compress: bad scheme");
}

/// Elements stored between time steps by the whole method (intensity store,
/// multigroup moments, grey and material data) following the published count:
///   BE-SC : G (J M + 2J + 1) + 2J + 1
///   POD-I : G (r (J+M+1) + 2J + 1) + 2J + 1
///   POD-RT: G (r (J+M+1) + 2J + 2J + 1) + 2J + 1
inline std::size_t storage_count(StorageScheme scheme, std::size_t r, std::size_t J, std::size_t M, std::size_t G)
{
    if (J == 0 || M == 0 || G == 0)
        throw std::invalid_argument("storage_count: dimensions must be positive");
    std::size_t per_group = 0;
    switch (scheme) {
    case StorageScheme::Full: per_group = J * M; break;
    case StorageScheme::PodI: per_group = r * (J + M + 1); break;
    case StorageScheme::PodRT: per_group = r * (J + M + 1) + 2 * J; break;
    }
    return G * (per_group + 2 * J + 1) + 2 * J + 1;
}

/// Percentage reduction of stored data relative to BE-SC (negative means growth).
inline double reduction_percent(StorageScheme scheme, std::size_t r, std::size_t J, std::size_t M, std::size_t G)
{
    const double base = double(storage_count(StorageScheme::Full, 0, J, M, G));
    return 100.0 * (1.0 - double(storage_count(scheme, r, J, M, G)) / base);
}

// Snapshot format, little-endian:
//   "MLQDSNAP" | u32 version=1 | u32 G | u32 J | u32 M
//   per group: u8 scheme | u32 r | f64 s[r] | f64 U[J*r] (column-major)
//              | f64 V[M*r] (column-major)
//              | PodRT: f64 phi[J] | f64 F[J] | f64 f[J]
//              | Full : f64 A[J*M] (column-major)
namespace detail {

template <class T>
void put_le(std::ostream& os, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
        throw std::runtime_error("snapshot: unexpected end of data");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

inline void put_columns(std::ostream& os, const Matrix& a)
{
    for (std::size_t c = 0; c < a.cols(); ++c)
        for (std::size_t r = 0; r < a.rows(); ++r)
            put_le<double>(os, a(r, c));
}

inline Matrix get_columns(std::istream& is, std::size_t rows, std::size_t cols)
{
    Matrix a(rows, cols);
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows; ++r)
            a(r, c) = get_le<double>(is);
    return a;
}

} // namespace detail

inline void write_snapshot(std::ostream& os, const std::vector<CompressedIntensity>& groups)
{
    if (groups.empty())
        throw std::invalid_argument("write_snapshot: no groups");
    const auto J = std::uint32_t(groups[0].rows), M = std::uint32_t(groups[0].cols);
    os.write("MLQDSNAP", 8);
    detail::put_le<std::uint32_t>(os, 1);
    detail::put_le<std::uint32_t>(os, std::uint32_t(groups.size()));
    detail::put_le<std::uint32_t>(os, J);
    detail::put_le<std::uint32_t>(os, M);
    for (const auto& g : groups) {
        detail::put_le<std::uint8_t>(os, std::uint8_t(g.scheme));
        detail::put_le<std::uint32_t>(os, std::uint32_t(g.rank()));
        for (double v : g.svd.s)
            detail::put_le<double>(os, v);
        detail::put_columns(os, g.svd.U);
        detail::put_columns(os, g.svd.V);
        if (g.scheme == StorageScheme::PodRT)
            for (const auto* vec : {&g.phi, &g.cur, &g.eddington})
                for (double v : *vec)
                    detail::put_le<double>(os, v);
        if (g.scheme == StorageScheme::Full)
            detail::put_columns(os, g.full);
    }
}

inline std::vector<CompressedIntensity> read_snapshot(std::istream& is)
{
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, "MLQDSNAP", 8) != 0)
        throw std::runtime_error("snapshot: bad magic");
    if (detail::get_le<std::uint32_t>(is) != 1)
        throw std::runtime_error("snapshot: unsupported version");
    const std::size_t G = detail::get_le<std::uint32_t>(is);
    const std::size_t J = detail::get_le<std::uint32_t>(is);
    const std::size_t M = detail::get_le<std::uint32_t>(is);
    std::vector<CompressedIntensity> out(G);
    for (auto& g : out) {
        const auto tag = detail::get_le<std::uint8_t>(is);
        if (tag > 2)
            throw std::runtime_error("snapshot: bad scheme tag");
        g.scheme = StorageScheme(tag);
        g.rows = J;
        g.cols = M;
        const std::size_t r = detail::get_le<std::uint32_t>(is);
        g.svd.s.resize(r);
        for (auto& v : g.svd.s)
            v = detail::get_le<double>(is);
        g.svd.U = detail::get_columns(is, J, r);
        g.svd.V = detail::get_columns(is, M, r);
        if (g.scheme == StorageScheme::PodRT)
            for (auto* vec : {&g.phi, &g.cur, &g.eddington}) {
                vec->resize(J);
                for (auto& v : *vec)
                    v = detail::get_le<double>(is);
            }
        if (g.scheme == StorageScheme::Full)
            g.full = detail::get_columns(is, J, M);
    }
    return out;
}

} // namespace mlqd
