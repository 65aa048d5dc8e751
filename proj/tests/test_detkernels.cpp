#include <gtest/gtest.h>

#include <cmath>

#include "randnla/errors.hpp"
#include "randnla/iterative.hpp"
#include "randnla/linalg.hpp"
#include "randnla/rng.hpp"

using namespace randnla;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t key) {
    const auto v = gaussian_stream({key, 0}, static_cast<std::size_t>(r * c));
    return Eigen::Map<const Matrix>(v.data(), r, c);
}

// U diag(sigma) V^T with Haar-ish factors.
Matrix with_singular_values(Index m, const Vector& sigma, std::uint64_t key) {
    const Index n = sigma.size();
    const Matrix U = qr_econ(random_matrix(m, n, key)).Q;
    const Matrix V = qr_econ(random_matrix(n, n, key + 1)).Q;
    return U * sigma.asDiagonal() * V.transpose();
}

Vector geometric(Index n, double cond) {
    Vector s(n);
    for (Index i = 0; i < n; ++i) s(i) = std::pow(cond, -static_cast<double>(i) / static_cast<double>(n - 1));
    return s;
}

}  // namespace

TEST(Factorizations, QrcpHandExample) {
    Matrix A(3, 2);
    A << 0, 2, 0, 1, 0, 0;
    const QRCPFactors f = qrcp(A);
    EXPECT_EQ(f.J[0], 1);
    EXPECT_EQ(f.J[1], 0);
    EXPECT_NEAR(std::abs(f.R(0, 0)), std::sqrt(5.0), 1e-14);
    EXPECT_LE((select_columns(A, f.J) - f.Q * f.R).norm(), 1e-12 * A.norm());
}

TEST(Factorizations, QrcpReconstructionAndMonotonePivots) {
    const Matrix A = random_matrix(40, 15, 3);
    const QRCPFactors f = qrcp(A);
    EXPECT_LE((select_columns(A, f.J) - f.Q * f.R).norm(), 1e-12 * A.norm());
    for (Index i = 1; i < 15; ++i) EXPECT_LE(std::abs(f.R(i, i)), std::abs(f.R(i - 1, i - 1)) * (1 + 1e-14));
}

TEST(Factorizations, QrEconReconstruction) {
    const Matrix A = random_matrix(30, 8, 4);
    const QRFactors f = qr_econ(A);
    EXPECT_LE((A - f.Q * f.R).norm(), 1e-12 * A.norm());
    for (Index i = 0; i < 8; ++i) EXPECT_GE(f.R(i, i), 0.0);
}

TEST(Factorizations, CholIdentity) { EXPECT_EQ(chol(Matrix::Identity(3, 3)), Matrix::Identity(3, 3)); }

TEST(Factorizations, CholReportsPivot) {
    Matrix A = Matrix::Identity(4, 4);
    A(2, 2) = -1.0;
    try {
        (void)chol(A);
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2);
    }
}

TEST(Factorizations, CholReconstruction) {
    const Matrix B = random_matrix(20, 10, 5);
    const Matrix G = B.transpose() * B;
    const Matrix R = chol(G);
    EXPECT_LE((R.transpose() * R - G).norm(), 1e-12 * G.norm());
}

TEST(Factorizations, SvdDiagonal) {
    Vector d(3);
    d << 3, 2, 1;
    Matrix A = Matrix::Zero(3, 3);
    A.diagonal() << 1, 3, 2;
    const SVDFactors f = svd(A);
    EXPECT_LE((f.sigma - d).norm(), 1e-14);
    EXPECT_LE((A - f.U * f.sigma.asDiagonal() * f.V.transpose()).norm(), 1e-12 * A.norm());
}

TEST(Factorizations, EighReconstruction) {
    const Matrix B = random_matrix(12, 12, 6);
    const Matrix S = B + B.transpose();
    const EighFactors e = eigh(S);
    EXPECT_LE((S - e.V * e.lambda.asDiagonal() * e.V.transpose()).norm(), 1e-12 * S.norm());
}

TEST(Lsqr, OrthonormalConvergesInOneIteration) {
    const Matrix F = qr_econ(random_matrix(50, 6, 7)).Q;
    const Vector g = random_matrix(50, 1, 8).col(0);
    const LsqrResult r = lsqr(LinearOperator::from_matrix(F), g, {});
    EXPECT_EQ(r.report.iterations, 1);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE((r.z - F.transpose() * g).norm(), 1e-13 * g.norm());
}

TEST(Lsqr, ConsistentDiagonal) {
    Matrix F = Matrix::Zero(2, 2);
    F.diagonal() << 1, 10;
    Vector g(2);
    g << 1, 10;
    const LsqrResult r = lsqr(LinearOperator::from_matrix(F), g, {});
    EXPECT_LE((r.z - Vector::Ones(2)).norm(), 1e-12);
}

TEST(Lsqr, ContractionRate) {
    const double kappa = 3.0;
    const Matrix F = with_singular_values(500, geometric(40, kappa), 9);
    const Vector g = random_matrix(500, 1, 10).col(0);
    const Vector zs = F.colPivHouseholderQr().solve(g);
    std::vector<double> errs;
    LsqrOptions o;
    o.tol = 0.0;
    o.maxit = 60;
    o.observer = [&](int, const Vector& z) { errs.push_back((F * (z - zs)).norm()); };
    const double e0 = (F * zs).norm();
    (void)lsqr(LinearOperator::from_matrix(F), g, o);
    std::size_t k = 0;
    while (k < errs.size() && errs[k] > 1e-11 * e0) ++k;
    ASSERT_GE(k, 5u);
    const double rate = std::pow(errs[k - 1] / e0, 1.0 / static_cast<double>(k));
    EXPECT_LE(rate, (kappa - 1) / (kappa + 1) + 0.05);
}

TEST(Lsqr, IllConditionedReachesTolerance) {
    const Matrix F = with_singular_values(500, geometric(40, 1e3), 11);
    const Vector g = random_matrix(500, 1, 12).col(0);
    LsqrOptions o;
    o.maxit = 1000;
    const LsqrResult r = lsqr(LinearOperator::from_matrix(F), g, o);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(normal_equation_residual(F, g, r.z), 1e-10);
    EXPECT_EQ(r.report.residual_history.size(), static_cast<std::size_t>(r.report.iterations));
}

TEST(Lsqr, WarmStartAtSolution) {
    const Matrix F = random_matrix(30, 5, 13);
    const Vector zs = random_matrix(5, 1, 14).col(0);
    const Vector g = F * zs;
    const LsqrResult r = lsqr(LinearOperator::from_matrix(F), g, {}, zs);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE((r.z - zs).norm(), 1e-12 * zs.norm());
}

TEST(Pcg, ZeroOperator) {
    const Vector h = random_matrix(6, 1, 15).col(0);
    const PcgResult r = pcg(LinearOperator::zero(6, 6), 1.0, h, LinearOperator::identity(6), {});
    EXPECT_EQ(r.report.iterations, 1);
    EXPECT_LE((r.x - h).norm(), 1e-14);
}

TEST(Pcg, ExactPreconditioner) {
    Matrix G = Matrix::Zero(2, 2);
    G(0, 0) = 9.0;
    Vector h(2);
    h << 10, 1;
    Matrix Pinv = Matrix::Zero(2, 2);
    Pinv.diagonal() << 0.1, 1.0;
    const PcgResult r = pcg(LinearOperator::from_matrix(G), 1.0, h, LinearOperator::from_matrix(Pinv), {});
    EXPECT_EQ(r.report.iterations, 1);
    EXPECT_LE((r.x - Vector::Ones(2)).norm(), 1e-14);
}

TEST(Pcg, NegativeCurvatureDetected) {
    const Matrix G = -Matrix::Identity(3, 3);
    EXPECT_THROW(pcg(LinearOperator::from_matrix(G), 0.5, Vector::Ones(3), LinearOperator::identity(3), {}),
                 NegativeCurvature);
}

TEST(Pcg, MatchesDirectSolve) {
    const Matrix B = random_matrix(60, 40, 16);
    const Matrix G = B.transpose() * B;
    const Vector h = random_matrix(40, 1, 17).col(0);
    const PcgResult r = pcg(LinearOperator::from_matrix(G), 0.1, h, LinearOperator::identity(40), {});
    const Vector xs = (G + 0.1 * Matrix::Identity(40, 40)).ldlt().solve(h);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE((r.x - xs).norm() / xs.norm(), 1e-10 * 10);
    EXPECT_LE(((G * r.x + 0.1 * r.x) - h).norm() / h.norm(), 1e-10 * 10);
}

TEST(Pcg, ZeroRhs) {
    const PcgResult r = pcg(LinearOperator::identity(4), 1.0, Vector::Zero(4), LinearOperator::identity(4), {},
                            Vector::Ones(4));
    EXPECT_EQ(r.x, Vector::Zero(4));
}

TEST(Lanczos, ScaledIdentity) {
    const Matrix B = 3.5 * Matrix::Identity(5, 5);
    Vector v = Vector::Ones(5).normalized();
    const LanczosResult L = lanczos_tridiag(LinearOperator::from_matrix(B), v, 4);
    ASSERT_EQ(L.alpha.size(), 1);
    EXPECT_DOUBLE_EQ(L.alpha(0), 3.5);
    EXPECT_EQ(L.beta.size(), 0);
}

TEST(Lanczos, HandRecurrence) {
    Matrix B = Matrix::Zero(2, 2);
    B.diagonal() << 1, 2;
    const Vector v = Vector::Ones(2) / std::sqrt(2.0);
    const LanczosResult L = lanczos_tridiag(LinearOperator::from_matrix(B), v, 2);
    ASSERT_EQ(L.alpha.size(), 2);
    EXPECT_NEAR(L.alpha(0), 1.5, 1e-15);
    EXPECT_NEAR(L.beta(0), 0.5, 1e-15);
    EXPECT_NEAR(L.alpha(1), 1.5, 1e-15);
}

TEST(Lanczos, InterlacingAndOrthogonality) {
    const Matrix C = random_matrix(80, 80, 18);
    const Matrix B = C + C.transpose();
    const Vector v = random_matrix(80, 1, 19).col(0).normalized();
    const int s = 50;
    const LanczosResult L = lanczos_tridiag(LinearOperator::from_matrix(B), v, s, Reorth::full);
    ASSERT_EQ(L.alpha.size(), s);
    EXPECT_LE((L.basis.transpose() * L.basis - Matrix::Identity(s, s)).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(L.alpha, L.beta, Eigen::EigenvaluesOnly);
    const Vector ritz = es.eigenvalues();
    const Vector lam = eigh(B).lambda;  // ascending
    const double tol = 1e-9 * lam.cwiseAbs().maxCoeff();
    EXPECT_GE(ritz(0), lam(0) - tol);
    EXPECT_LE(ritz(s - 1), lam(79) + tol);
    // Cauchy interlacing: lam_i <= theta_i <= lam_{i + n - s}.
    for (Index i = 0; i < s; ++i) {
        EXPECT_GE(ritz(i), lam(i) - tol);
        EXPECT_LE(ritz(i), lam(i + 80 - s) + tol);
    }
}

TEST(Lanczos, RejectsNonUnitStart) {
    EXPECT_THROW(lanczos_tridiag(LinearOperator::identity(3), Vector::Ones(3), 2), std::invalid_argument);
}

TEST(Operators, AdjointAndDense) {
    const Matrix A = random_matrix(7, 4, 20);
    const LinearOperator op = LinearOperator::owning(A);
    EXPECT_EQ(to_dense(op), A);
    EXPECT_EQ(to_dense(op.adjoint()), Matrix(A.transpose()));
}

TEST(Helpers, PinvAndOrth) {
    Matrix A = random_matrix(10, 3, 21);
    A.col(2) = A.col(0) + A.col(1);
    EXPECT_EQ(orth(A).cols(), 2);
    const Matrix P = pinv(A);
    EXPECT_LE((A * P * A - A).norm(), 1e-12 * A.norm());
    EXPECT_NEAR(max_principal_angle(orth(A), orth(A.leftCols(2))), 0.0, 1e-12);
}
