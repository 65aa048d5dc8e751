#include <gtest/gtest.h>

#include <cmath>

#include "randnla/errors.hpp"
#include "randnla/fullrank.hpp"

using namespace randnla;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t key) {
    const auto v = gaussian_stream({key, 0}, static_cast<std::size_t>(r * c));
    return Eigen::Map<const Matrix>(v.data(), r, c);
}

Matrix with_cond(Index m, Index n, double cond, std::uint64_t key) {
    Vector s(n);
    for (Index i = 0; i < n; ++i) s(i) = std::pow(cond, -static_cast<double>(i) / static_cast<double>(n - 1));
    return qr_econ(random_matrix(m, n, key)).Q * s.asDiagonal() * qr_econ(random_matrix(n, n, key + 1)).Q.transpose();
}

double orth_err(const Matrix& Q) {
    return (Q.transpose() * Q - Matrix::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff();
}

SketchConfig gaussian_cfg() {
    SketchConfig c;
    c.family = SketchFamily::gaussian;
    return c;
}

// R_sk from the same sketch sap_chol_qrcp draws.
QRCPFactors sketch_qrcp(const Matrix& A, Index d, RngKey seed, const SketchConfig& cfg) {
    return qrcp(make_sketch(cfg, d, A.rows(), seed).apply(A, Side::left));
}

}  // namespace

TEST(CholQr, OrthonormalInput) {
    const Matrix A = qr_econ(random_matrix(50, 6, 1)).Q;
    const QRFactors f = chol_qr(A);
    EXPECT_LE((f.Q - A).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((f.R - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CholQr, HandGram) {
    Matrix A(3, 2);
    A << 2, 0, 0, 0, 0, 3;
    const QRFactors f = chol_qr(A);
    EXPECT_NEAR(f.R(0, 0), 2, 1e-15);
    EXPECT_NEAR(f.R(1, 1), 3, 1e-15);
    EXPECT_NEAR(f.R(0, 1), 0, 1e-15);
    Matrix Q(3, 2);
    Q << 1, 0, 0, 0, 0, 1;
    EXPECT_LE((f.Q - Q).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CholQr, IllConditionedFailureMode) {
    const Matrix A = with_cond(500, 20, 1e10, 2);
    bool failed = false;
    try {
        failed = orth_err(chol_qr(A).Q) > 1e-4;
    } catch (const NotPositiveDefinite& e) {
        failed = true;
        EXPECT_NE(std::string(e.what()).find("chol_qr"), std::string::npos);
    }
    EXPECT_TRUE(failed);
}

TEST(RandCholQr, IllConditioned) {
    const Matrix A = with_cond(4000, 50, 1e10, 3);
    const QRFactors f = rand_chol_qr(A, 200, {1, 0});
    EXPECT_LE(orth_err(f.Q), 1e-12);
    EXPECT_LE((A - f.Q * f.R).norm(), 1e-10 * A.norm());
}

TEST(RandCholQr, OrthonormalInput) {
    const Matrix A = qr_econ(random_matrix(300, 8, 4)).Q;
    const QRFactors f = rand_chol_qr(A, 40, {2, 0});
    EXPECT_LE((A - f.Q * f.R).norm(), 1e-12);
    EXPECT_LE(max_principal_angle(f.Q, A), 1e-10);
}

TEST(RandCholQr, RankDeficientSketchRejected) {
    const Matrix A = random_matrix(300, 3, 5) * random_matrix(3, 8, 6);
    try {
        rand_chol_qr(A, 40, {3, 0});
        FAIL() << "expected RankDeficient";
    } catch (const RankDeficient& e) {
        EXPECT_NE(std::string(e.what()).find("sap_chol_qrcp"), std::string::npos);
    }
}

TEST(SapCholQrcp, FullRankReconstruction) {
    const Matrix A = with_cond(1000, 30, 1e8, 7);
    const PivotedQR f = sap_chol_qrcp(A, 120, {4, 0});
    EXPECT_EQ(f.rank, 30);
    EXPECT_LE((select_columns(A, f.J) - f.Q * f.R).norm(), 1e-10 * A.norm());
    EXPECT_LE(orth_err(f.Q), 1e-10);
}

TEST(SapCholQrcp, RankDeficientReconstruction) {
    const Index n = 25;
    for (std::uint64_t t = 0; t < 5; ++t) {
        const Matrix A = random_matrix(800, n - 3, 10 + t) * random_matrix(n - 3, n, 20 + t);
        const PivotedQR f = sap_chol_qrcp(A, 100, {t, 0});
        EXPECT_EQ(f.rank, n - 3);
        EXPECT_LE((select_columns(A, f.J) - f.Q * f.R).norm(), 1e-10 * A.norm());
        EXPECT_LE(orth_err(f.Q), 1e-10);
    }
}

TEST(SapCholQrcp, PreconditionedSpectrumReciprocal) {
    const SketchConfig cfg = gaussian_cfg();
    for (std::uint64_t t = 0; t < 4; ++t) {
        const Matrix A = with_cond(600, 12, 1e6, 30 + t);
        const QRCPFactors sk = sketch_qrcp(A, 48, {t, 0}, cfg);
        const Matrix Apre = right_solve_upper(select_columns(A, sk.J), sk.R.topLeftCorner(12, 12));
        const Vector sp = singular_values(Apre);
        const Vector su = singular_values(make_sketch(cfg, 48, 600, {t, 0}).apply(orth(A), Side::left));
        for (Index i = 0; i < 12; ++i) EXPECT_NEAR(sp(i) * su(11 - i), 1.0, 1e-8);
        const PivotedQR f = sap_chol_qrcp(A, 48, {t, 0}, cfg);
        EXPECT_EQ(f.J, sk.J);
    }
}

TEST(SapCholQrcp, RankOneSelectsLargestEntry) {
    Vector v = random_matrix(10, 1, 40).col(0);
    v(6) = 9.0;
    Matrix A = Matrix::Zero(200, 10);
    A.row(0) = v.transpose();
    const PivotedQR f = sap_chol_qrcp(A, 40, {5, 0});
    EXPECT_EQ(f.rank, 1);
    EXPECT_EQ(f.J[0], 6);
}

TEST(SapCholQrcp, ZeroMatrix) {
    const PivotedQR f = sap_chol_qrcp(Matrix::Zero(50, 5), 20, {6, 0});
    EXPECT_EQ(f.rank, 0);
    EXPECT_EQ(f.Q.cols(), 0);
}

TEST(SapCholQrcp, SketchPivotsMonotone) {
    const Matrix A = with_cond(500, 20, 1e6, 41);
    const QRCPFactors sk = sketch_qrcp(A, 80, {7, 0}, {});
    for (Index i = 1; i < 20; ++i) EXPECT_LE(std::abs(sk.R(i, i)), std::abs(sk.R(i - 1, i - 1)) * (1 + 1e-14));
}

TEST(SapCholQrcp, ConditioningIndependentOfA) {
    const SketchConfig cfg = gaussian_cfg();
    const Index n = 20, d = 4 * n;
    for (double cond : {1e2, 1e6, 1e10}) {
        for (std::uint64_t t = 0; t < 20; ++t) {
            const Matrix A = with_cond(1000, n, cond, 50 + t);
            const QRCPFactors sk = sketch_qrcp(A, d, {t, 0}, cfg);
            const Matrix Apre = right_solve_upper(select_columns(A, sk.J), sk.R.topLeftCorner(n, n));
            EXPECT_LE(condition_number(Apre), 10.0) << "cond " << cond << " seed " << t;
        }
    }
}
