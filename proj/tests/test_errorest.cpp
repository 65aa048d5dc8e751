#include <gtest/gtest.h>

#include <cmath>

#include "randnla/errorest.hpp"

using namespace randnla;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t key) {
    const auto v = gaussian_stream({key, 0}, static_cast<std::size_t>(r * c));
    return Eigen::Map<const Matrix>(v.data(), r, c);
}

}  // namespace

TEST(Quantile, SmallestOrderStatisticReachingLevel) {
    const std::vector<double> v{5, 1, 4, 2, 3, 10, 9, 8, 7, 6};
    EXPECT_EQ(empirical_quantile(v, 0.9), 9);
    EXPECT_EQ(empirical_quantile(v, 0.5), 5);
    EXPECT_EQ(empirical_quantile(v, 0.91), 10);
    EXPECT_EQ(empirical_quantile(v, 0.05), 1);
    EXPECT_THROW(empirical_quantile({}, 0.5), std::invalid_argument);
}

TEST(Quantile, MonotoneInLevel) {
    const BootstrapResult r = bootstrap_ls(random_matrix(60, 4, 1), random_matrix(60, 1, 2).col(0),
                                           Vector::Zero(4), 50, 0.1, ErrorNorm::l2, {3, 0});
    double prev = -1;
    for (double level = 0.05; level < 1.0; level += 0.05) {
        const double q = empirical_quantile(r.replicate_errors, level);
        EXPECT_GE(q, prev);
        prev = q;
    }
}

TEST(BootstrapLs, ConsistentScaledRowsGiveZero) {
    const Index d = 30, n = 3;
    const Vector row = random_matrix(1, n, 4).row(0);
    const Vector scales = random_matrix(d, 1, 5).col(0).cwiseAbs().array() + 0.5;
    // Rows identical up to scale: rank one, so the pseudoinverse gives the same minimum-norm solution.
    const Matrix A = scales * row.transpose();
    const Vector x_hat = pinv(A) * (A * random_matrix(n, 1, 6).col(0));
    const Vector b = A * x_hat;
    const BootstrapResult r = bootstrap_ls(A, b, x_hat, 40, 0.1, ErrorNorm::l2, {7, 0});
    for (double e : r.replicate_errors) EXPECT_LE(e, 1e-12 * x_hat.norm());
    EXPECT_LE(r.quantile_estimate, 1e-12 * x_hat.norm());
}

TEST(BootstrapLs, ConsistentFullRank) {
    const Matrix A = random_matrix(40, 5, 8);
    const Vector x = random_matrix(5, 1, 9).col(0);
    const BootstrapResult r = bootstrap_ls(A, A * x, x, 30, 0.1, ErrorNorm::linf, {10, 0});
    EXPECT_LE(r.quantile_estimate, 1e-12 * x.norm());
}

TEST(BootstrapLs, SingleReplicate) {
    const Matrix A = random_matrix(50, 4, 11);
    const Vector b = random_matrix(50, 1, 12).col(0);
    const Vector x = A.colPivHouseholderQr().solve(b);
    const BootstrapResult r = bootstrap_ls(A, b, x, 1, 0.1, ErrorNorm::l2, {13, 0});
    ASSERT_EQ(r.replicate_errors.size(), 1u);
    EXPECT_EQ(r.quantile_estimate, r.replicate_errors[0]);
    const IndexVector idx = bootstrap_indices(50, RngKey{13, 0}.substream(0));
    const Matrix As = select_rows(A, idx);
    Vector bs(50);
    for (Index i = 0; i < 50; ++i) bs(i) = b(idx[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(r.replicate_errors[0], (pinv_solve(As, bs) - x).norm(), 1e-12);
}

TEST(BootstrapLs, DeterministicAndThreadIndependent) {
    const Matrix A = random_matrix(80, 6, 14);
    const Vector b = random_matrix(80, 1, 15).col(0);
    const Vector x = A.colPivHouseholderQr().solve(b);
    const BootstrapResult r1 = bootstrap_ls(A, b, x, 64, 0.1, ErrorNorm::l2, {16, 0}, 1);
    const BootstrapResult r4 = bootstrap_ls(A, b, x, 64, 0.1, ErrorNorm::l2, {16, 0}, 4);
    EXPECT_EQ(r1.replicate_errors, r4.replicate_errors);
}

TEST(BootstrapLs, RejectsBadArguments) {
    const Matrix A = random_matrix(10, 3, 17);
    const Vector b = Vector::Zero(10), x = Vector::Zero(3);
    EXPECT_THROW(bootstrap_ls(A, b, x, 0, 0.1, ErrorNorm::l2, {1, 0}), std::invalid_argument);
    EXPECT_THROW(bootstrap_ls(A, b, x, 5, 1.0, ErrorNorm::l2, {1, 0}), std::invalid_argument);
    EXPECT_THROW(bootstrap_ls(A.topRows(2), b.head(2), x, 5, 0.1, ErrorNorm::l2, {1, 0}), std::invalid_argument);
}

TEST(BootstrapSvd, IdenticalRowsGiveZero) {
    const Matrix A = Matrix::Ones(20, 1) * random_matrix(1, 6, 18);
    const BootstrapSvdResult r = bootstrap_svd(A, 1, 25, 0.1, {19, 0});
    EXPECT_EQ(r.sigma.quantile_estimate, 0.0);
    EXPECT_EQ(r.V.quantile_estimate, 0.0);
}

TEST(BootstrapSvd, WeylBoundOnDiagonalDominant) {
    Matrix A = 0.01 * random_matrix(50, 8, 20);
    for (Index i = 0; i < 50; ++i) A(i, 0) += 1.0;
    const double s1 = singular_values(A)(0);
    const BootstrapSvdResult r = bootstrap_svd(A, 1, 100, 0.1, {21, 0});
    for (double e : r.sigma.replicate_errors) EXPECT_LE(e, 2 * s1);
}

TEST(BootstrapSvd, SignInvariance) {
    const Vector v = random_matrix(7, 1, 22).col(0);
    EXPECT_EQ(sign_invariant_distance(v, -v), 0.0);
    EXPECT_EQ(sign_invariant_distance(v, v), 0.0);
}

TEST(BootstrapSvd, Deterministic) {
    const Matrix A = random_matrix(60, 10, 23);
    const BootstrapSvdResult a = bootstrap_svd(A, 3, 20, 0.1, {24, 0});
    const BootstrapSvdResult b = bootstrap_svd(A, 3, 20, 0.1, {24, 0}, 3);
    EXPECT_EQ(a.sigma.replicate_errors, b.sigma.replicate_errors);
    EXPECT_EQ(a.V.replicate_errors, b.V.replicate_errors);
}
