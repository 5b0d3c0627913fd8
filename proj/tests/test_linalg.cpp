#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "mlqd/compression.hpp"
#include "mlqd/linalg.hpp"

using namespace mlqd;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed, double decay = 1.0)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    Matrix a(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            a(i, j) = nd(gen) * std::pow(decay, double(j));
    return a;
}

Eigen::MatrixXd to_eigen(const Matrix& a)
{
    Eigen::MatrixXd e(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            e(Eigen::Index(i), Eigen::Index(j)) = a(i, j);
    return e;
}

double frob_diff(const Matrix& a, const Matrix& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
    return std::sqrt(s);
}

} // namespace

TEST(Tridiagonal, MatchesDenseSolve)
{
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 40;
    std::vector<double> lo(n), di(n), up(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = u(gen);
        up[i] = u(gen);
        di[i] = 3.0 + u(gen);
        rhs[i] = u(gen);
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b(n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = di[i];
        if (i > 0)
            A(i, i - 1) = lo[i];
        if (i + 1 < n)
            A(i, i + 1) = up[i];
        b(i) = rhs[i];
    }
    const Eigen::VectorXd ref = A.partialPivLu().solve(b);
    const auto x = solve_tridiagonal(lo, di, up, rhs);
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(x[i], ref(i), 1e-13);
}

TEST(Tridiagonal, ZeroPivotIsNumericalError)
{
    std::vector<double> lo{0.0, 1.0}, di{0.0, 1.0}, up{1.0, 0.0}, rhs{1.0, 1.0};
    EXPECT_THROW(solve_tridiagonal(lo, di, up, rhs), numerical_error);
}

TEST(JacobiEigen, DiagonalizesSymmetricMatrix)
{
    Matrix a = random_matrix(6, 6, 3);
    Matrix s(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            s(i, j) = a(i, j) + a(j, i);
    const auto eig = jacobi_eigen(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(to_eigen(s));
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_NEAR(eig.values[k], ref.eigenvalues()(5 - Eigen::Index(k)), 1e-12);
        if (k > 0) {
            EXPECT_GE(eig.values[k - 1], eig.values[k]);
        }
    }
}

TEST(Svd, MatchesEigenSingularValues)
{
    for (auto [r, c, seed] : {std::tuple{100, 8, 1u}, std::tuple{8, 100, 2u}, std::tuple{12, 12, 3u},
                              std::tuple{30, 5, 4u}}) {
        Matrix a = random_matrix(std::size_t(r), std::size_t(c), seed, 0.3);
        const auto svd = svd_reduced(a);
        Eigen::JacobiSVD<Eigen::MatrixXd> ref(to_eigen(a));
        const double s1 = ref.singularValues()(0);
        ASSERT_EQ(svd.s.size(), std::size_t(std::min(r, c)));
        for (std::size_t k = 0; k < svd.s.size(); ++k)
            EXPECT_NEAR(svd.s[k], ref.singularValues()(Eigen::Index(k)), 1e-10 * s1) << "k=" << k;
    }
}

TEST(Svd, FactorsAreOrthonormalAndReconstruct)
{
    Matrix a = random_matrix(50, 8, 11, 0.5);
    const auto svd = svd_reduced(a);
    const std::size_t n = svd.s.size();
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) {
            double uu = 0, vv = 0;
            for (std::size_t i = 0; i < a.rows(); ++i)
                uu += svd.U(i, p) * svd.U(i, q);
            for (std::size_t i = 0; i < a.cols(); ++i)
                vv += svd.V(i, p) * svd.V(i, q);
            EXPECT_NEAR(uu, p == q ? 1.0 : 0.0, 1e-12);
            EXPECT_NEAR(vv, p == q ? 1.0 : 0.0, 1e-12);
        }
    const auto full = truncate(svd, n).reconstruct();
    EXPECT_LE(frob_diff(full, a), 1e-12 * a.frobenius_norm());
}

TEST(Svd, SignConventionFirstNonzeroOfVPositive)
{
    Matrix a = random_matrix(20, 6, 5);
    const auto svd = svd_reduced(a);
    for (std::size_t k = 0; k < svd.s.size(); ++k) {
        for (std::size_t i = 0; i < svd.V.rows(); ++i)
            if (svd.V(i, k) != 0.0) {
                EXPECT_GT(svd.V(i, k), 0.0);
                break;
            }
    }
}

TEST(Svd, RankOneOuterProduct)
{
    std::vector<double> u{0.6, 0.0, -0.8}, v{0.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0};
    Matrix a(3, 4);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            a(i, j) = u[i] * v[j];
    const auto svd = svd_reduced(a);
    EXPECT_NEAR(svd.s[0], 1.0, 1e-14);
    for (std::size_t k = 1; k < svd.s.size(); ++k)
        EXPECT_NEAR(svd.s[k], 0.0, 1e-14);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_NEAR(std::abs(svd.U(i, 0)), std::abs(u[i]), 1e-14);
    for (std::size_t j = 0; j < 4; ++j)
        EXPECT_NEAR(std::abs(svd.V(j, 0)), std::abs(v[j]), 1e-14);
}

TEST(Svd, ZeroMatrixHasOrthonormalFactors)
{
    Matrix a(10, 4);
    const auto svd = svd_reduced(a);
    for (double s : svd.s)
        EXPECT_EQ(s, 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
        double n = 0;
        for (std::size_t i = 0; i < 10; ++i)
            n += svd.U(i, k) * svd.U(i, k);
        EXPECT_NEAR(n, 1.0, 1e-14);
    }
}

TEST(Svd, RejectsNonFinite)
{
    Matrix a(3, 2);
    a(1, 1) = std::nan("");
    EXPECT_THROW(svd_reduced(a), std::invalid_argument);
}

// Eckart-Young: the leading-r truncation has error sqrt(sum of discarded s^2)
// and no other choice of r singular triples, and no random rank-r projection,
// does better.
TEST(EckartYoung, TruncationIsOptimalOverAllSubsets)
{
    const Matrix a = random_matrix(40, 7, 21, 0.6);
    const auto svd = svd_reduced(a);
    const std::size_t n = svd.s.size();
    std::mt19937 gen(99);
    std::normal_distribution<double> nd;
    for (std::size_t r = 1; r < n; ++r) {
        const Matrix best = truncate(svd, r).reconstruct();
        double tail = 0.0;
        for (std::size_t k = r; k < n; ++k)
            tail += svd.s[k] * svd.s[k];
        const double best_err = frob_diff(best, a);
        EXPECT_NEAR(best_err, std::sqrt(tail), 1e-10 * svd.s[0]);

        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (std::size_t(__builtin_popcount(mask)) != r)
                continue;
            Matrix approx(a.rows(), a.cols());
            for (std::size_t k = 0; k < n; ++k)
                if (mask & (1u << k))
                    for (std::size_t i = 0; i < a.rows(); ++i)
                        for (std::size_t j = 0; j < a.cols(); ++j)
                            approx(i, j) += svd.s[k] * svd.U(i, k) * svd.V(j, k);
            EXPECT_GE(frob_diff(approx, a), best_err - 1e-10 * svd.s[0]) << "r=" << r << " mask=" << mask;
        }

        // random rank-r right subspaces: project A onto them
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::MatrixXd Q = Eigen::MatrixXd::NullaryExpr(Eigen::Index(n), Eigen::Index(r), [&] { return nd(gen); });
            Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ() * Eigen::MatrixXd::Identity(n, r);
            const Eigen::MatrixXd A = to_eigen(a);
            const double err = (A - A * Q * Q.transpose()).norm();
            EXPECT_GE(err, best_err - 1e-10 * svd.s[0]);
        }
    }
}

TEST(EckartYoung, MatchesEigenTruncation)
{
    const Matrix a = random_matrix(100, 8, 42, 0.4);
    const auto svd = svd_reduced(a);
    Eigen::JacobiSVD<Eigen::MatrixXd> ref(to_eigen(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (Eigen::Index r = 1; r <= 8; ++r) {
        const Eigen::MatrixXd er = ref.matrixU().leftCols(r) * ref.singularValues().head(r).asDiagonal() *
                                   ref.matrixV().leftCols(r).transpose();
        const Matrix mine = truncate(svd, std::size_t(r)).reconstruct();
        EXPECT_LE((to_eigen(mine) - er).cwiseAbs().maxCoeff(), 1e-10 * ref.singularValues()(0)) << "r=" << r;
    }
}
