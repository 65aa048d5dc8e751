#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "randnla/lowrank.hpp"

using namespace randnla;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t key) {
    const auto v = gaussian_stream({key, 0}, static_cast<std::size_t>(r * c));
    return Eigen::Map<const Matrix>(v.data(), r, c);
}

struct Built {
    Matrix A, U, V;
    Vector sigma;
};

Built with_spectrum(Index m, Index n, const Vector& sigma, std::uint64_t key) {
    const Index r = sigma.size();
    Built b;
    b.U = qr_econ(random_matrix(m, r, key)).Q;
    b.V = qr_econ(random_matrix(n, r, key + 1)).Q;
    b.sigma = sigma;
    b.A = b.U * sigma.asDiagonal() * b.V.transpose();
    return b;
}

// Step spectrum: k values at 1, the rest at `low`.
Vector step(Index r, Index k, double low) {
    Vector s = Vector::Constant(r, low);
    s.head(k).setOnes();
    return s;
}

Vector decay(Index r, double base) {
    Vector s(r);
    for (Index i = 0; i < r; ++i) s(i) = std::pow(base, -static_cast<double>(i));
    return s;
}

double tail(const Vector& s, Index r) { return r >= s.size() ? 0.0 : s.tail(s.size() - r).norm(); }

Matrix psd_from(const Vector& lam, std::uint64_t key) {
    const Matrix V = qr_econ(random_matrix(lam.size(), lam.size(), key)).Q;
    return V * lam.asDiagonal() * V.transpose();
}

struct Counting {
    LinearOperator op;
    std::shared_ptr<std::vector<char>> log = std::make_shared<std::vector<char>>();
};

Counting counting(const Matrix& A) {
    Counting c;
    auto log = c.log;
    const Matrix* p = &A;
    c.op = {A.rows(), A.cols(),
            [p, log](const Matrix& X) -> Matrix { log->push_back('A'); return (*p) * X; },
            [p, log](const Matrix& Y) -> Matrix { log->push_back('T'); return p->transpose() * Y; }};
    return c;
}

double orth_err(const Matrix& Q) {
    return (Q.transpose() * Q - Matrix::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Tsog, ZeroPassesNeverTouchesA) {
    const Matrix A = random_matrix(30, 20, 1);
    Counting c = counting(A);
    TsogOptions o;
    o.passes = 0;
    const Matrix S = tsog1(c.op, 5, {2, 0}, o);
    EXPECT_EQ(S.rows(), 20);
    EXPECT_EQ(S.cols(), 5);
    EXPECT_TRUE(c.log->empty());
}

TEST(Tsog, OddPassesStartWithAdjoint) {
    const Matrix A = random_matrix(30, 20, 3);
    for (int p : {1, 3}) {
        Counting c = counting(A);
        TsogOptions o;
        o.passes = p;
        tsog1(c.op, 4, {4, 0}, o);
        ASSERT_EQ(static_cast<int>(c.log->size()), p);
        EXPECT_EQ(c.log->front(), 'T');
    }
    Counting c = counting(A);
    TsogOptions o;
    o.passes = 2;
    tsog1(c.op, 4, {4, 0}, o);
    EXPECT_EQ(std::string(c.log->begin(), c.log->end()), "AT");
}

TEST(Tsog, PowerPassesImproveAlignment) {
    Matrix A = Matrix::Zero(40, 40);
    A(0, 0) = 10;
    for (Index i = 1; i < 40; ++i) A(i, i) = 1;
    Matrix e1 = Matrix::Zero(40, 1);
    e1(0, 0) = 1;
    int better = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        TsogOptions p0, p2;
        p0.passes = 0;
        p2.passes = 2;
        const double a0 = max_principal_angle(orth(A * tsog1(A, 1, {s, 0}, p0)), e1);
        const double a2 = max_principal_angle(orth(A * tsog1(A, 1, {s, 0}, p2)), e1);
        better += a2 < a0;
    }
    EXPECT_GT(better, 10);
}

TEST(Tsog, LuStabilizerSpansSameRange) {
    const Matrix A = random_matrix(50, 30, 5);
    TsogOptions q, l;
    q.passes = l.passes = 2;
    l.stabilizer = Stabilizer::lu;
    EXPECT_LE(max_principal_angle(tsog1(A, 6, {6, 0}, q), tsog1(A, 6, {6, 0}, l)), 1e-8);
}

TEST(Rangefinder, RankDropsColumns) {
    const Matrix A = random_matrix(40, 3, 7) * random_matrix(3, 30, 8);
    EXPECT_EQ(rf1(A, 5, {1, 0}).cols(), 3);
}

TEST(Rangefinder, OrthonormalInputRangeRecovered) {
    const Matrix A = qr_econ(random_matrix(60, 6, 9)).Q;
    const Matrix Q = rf1(A, 6, {2, 0});
    EXPECT_LE(max_principal_angle(Q, A), 1e-10);
    EXPECT_LE(orth_err(Q), 1e-12);
}

TEST(Rangefinder, StepSpectrumErrorBound) {
    const Index k = 5;
    int ok = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Built b = with_spectrum(200, 100, step(100, k, 1e-3), 10 + s);
        const Matrix Q = rf1(b.A, k, {s, 0});
        ok += spectral_norm(b.A - Q * (Q.transpose() * b.A)) <= 3 * 1e-3;
    }
    EXPECT_GE(ok, 18);
}

TEST(QB, Qb1Identities) {
    const Matrix A = random_matrix(50, 4, 11) * random_matrix(4, 40, 12);
    const QBFactors f = qb1(A, 6, {3, 0});
    EXPECT_LE((f.B - f.Q.transpose() * A).norm(), 0.0);
    EXPECT_LE((A - f.Q * f.B).norm(), 1e-8 * A.norm());
    const Matrix Q = rf1(A, 6, {3, 0});
    EXPECT_EQ((A - f.Q * f.B).norm(), (A - Q * (Q.transpose() * A)).norm());
}

TEST(QB, Qb2StopsEarlyOnTolerance) {
    Vector s = Vector::Constant(60, std::sqrt(0.1 / 58));
    s(0) = std::sqrt(0.6);
    s(1) = std::sqrt(0.3);
    const Built b = with_spectrum(120, 60, s, 13);
    QbOptions o;
    o.block_size = 2;
    const QBFactors f = qb2(b.A, 60, 0.5, {4, 0}, o);
    EXPECT_LE(f.Q.cols(), 4);
    const double direct = (b.A - f.Q * f.B).norm();
    EXPECT_LE(direct, 0.5 * b.A.norm());
    EXPECT_NEAR(f.error_estimate, direct, 1e-6 * direct);
}

TEST(QB, Qb2TrackerMatchesDirect) {
    const Built b = with_spectrum(150, 80, decay(80, 1.1), 14);
    QbOptions o;
    o.block_size = 3;
    o.recompute_every = 1000;  // force the downdated tracker
    const QBFactors f = qb2(b.A, 30, 0.0, {5, 0}, o);
    const double direct = (b.A - f.Q * f.B).norm();
    EXPECT_NEAR(f.error_estimate, direct, 1e-6 * direct);
    EXPECT_LE(orth_err(f.Q), 1e-8);
    EXPECT_LE((f.B - f.Q.transpose() * b.A).norm(), 1e-10 * b.A.norm());
}

TEST(QB, Qb2FullRankExact) {
    const Matrix A = random_matrix(30, 20, 15);
    const QBFactors f = qb2(A, 20, 0.0, {6, 0});
    EXPECT_LE((A - f.Q * f.B).norm(), 1e-8 * A.norm());
}

TEST(QB, Qb3MatchesQb2AtEqualRank) {
    const Built b = with_spectrum(200, 100, decay(100, 1.05), 16);
    QbOptions o;
    o.block_size = 10;
    const QBFactors f2 = qb2(b.A, 10, 0.0, {7, 0}, o);
    const QBFactors f3 = qb3(b.A, 10, 0.0, {7, 0}, o);
    const double e2 = (b.A - f2.Q * f2.B).norm(), e3 = (b.A - f3.Q * f3.B).norm();
    EXPECT_NEAR(e3, e2, 1e-4 * e2);
}

TEST(QB, Qb3RankDeficientTrackerHitsFloor) {
    const Matrix A = random_matrix(80, 6, 17) * random_matrix(6, 60, 18);
    QbOptions o;
    o.block_size = 4;
    const QBFactors f = qb3(A, 12, 0.0, {8, 0}, o);
    EXPECT_LE(f.error_estimate * f.error_estimate, 1e-6 * A.squaredNorm());
    EXPECT_LE((A - f.Q * f.B).norm(), 1e-6 * A.norm());
}

TEST(QB, Qb3TouchesAOnceEachWay) {
    const Matrix A = random_matrix(60, 40, 19);
    Counting c = counting(A);
    QbOptions o;
    o.block_size = 3;
    o.tsog.passes = 0;
    qb3(c.op, 12, 0.0, A.squaredNorm(), {9, 0}, o);
    EXPECT_EQ(std::string(c.log->begin(), c.log->end()), "AT");
}

TEST(Svd1, LeadingValuesAccurate) {
    Vector s = Vector::Constant(50, 0.1);
    s.head(3) << 10, 5, 1;
    const Built b = with_spectrum(100, 50, s, 20);
    const SVDFactors f = svd1(b.A, 2, 0.0, 2, {10, 0});
    ASSERT_EQ(f.sigma.size(), 2);
    EXPECT_LE(std::abs(f.sigma(0) - 10) / 10, 0.05);
    EXPECT_LE(std::abs(f.sigma(1) - 5) / 5, 0.05);
}

TEST(Svd1, ExactOnRankK) {
    const Built b = with_spectrum(80, 60, decay(4, 2), 21);
    const SVDFactors f = svd1(b.A, 4, 0.0, 3, {11, 0});
    EXPECT_LE(f.sigma.size(), 4);
    EXPECT_LE((b.A - f.U * f.sigma.asDiagonal() * f.V.transpose()).norm(), 1e-8 * b.A.norm());
}

TEST(Evd1, IndefiniteDiagonal) {
    Vector d = Vector::Constant(40, 0.1);
    d(0) = 5;
    d(1) = -4;
    const Matrix A = d.asDiagonal();
    const EVDFactors f = evd1(A, 2, 0.0, 3, {12, 0});
    ASSERT_EQ(f.lambda.size(), 2);
    EXPECT_LE(std::abs(f.lambda(0) - 5) / 5, 0.05);
    EXPECT_LE(std::abs(f.lambda(1) + 4) / 4, 0.05);
    EXPECT_GE(std::abs(f.lambda(0)), std::abs(f.lambda(1)));
}

TEST(Evd1, PsdRankKExact) {
    Vector lam = Vector::Zero(50);
    lam.head(3) << 3, 2, 1;
    const Matrix A = psd_from(lam, 22);
    const EVDFactors f = evd1(A, 3, 0.0, 2, {13, 0});
    EXPECT_LE((A - f.V * f.lambda.asDiagonal() * f.V.transpose()).norm(), 1e-8 * A.norm());
}

TEST(Evd2, ConstructedSpectrum) {
    Vector lam = Vector::Constant(60, 1e-12);
    lam(0) = 1;
    lam(1) = 0.5;
    const Matrix A = psd_from(lam, 23);
    const EVDFactors f = evd2(A, 2, 5, {14, 0});
    ASSERT_EQ(f.lambda.size(), 2);
    EXPECT_LE(std::abs(f.lambda(0) - 1), 0.01);
    EXPECT_LE(std::abs(f.lambda(1) - 0.5) / 0.5, 0.01);
}

TEST(Evd2, ZeroMatrix) {
    const EVDFactors f = evd2(Matrix(Matrix::Zero(20, 20)), 3, 2, {15, 0});
    EXPECT_EQ(f.lambda.size(), 0);
}

TEST(Evd2, NystromDominance) {
    for (std::uint64_t t = 0; t < 10; ++t) {
        const Matrix G = random_matrix(50, 50, 30 + t);
        const Matrix A = G * decay(50, 1.2).asDiagonal() * G.transpose();
        const EVDFactors f = evd2(A, 8, 4, {t, 0});
        EXPECT_GE(f.lambda.minCoeff(), 0.0);
        const Matrix D = A - f.V * f.lambda.asDiagonal() * f.V.transpose();
        EXPECT_GE(eigh(0.5 * (D + D.transpose())).lambda.minCoeff(), -1e-8 * spectral_norm(A));
    }
}

TEST(Id, PrePivotedIdentityBlock) {
    Matrix Y(3, 6);
    Y << 1, 0, 0, 0.5, 0.2, 0.1,
         0, 1, 0, 0.3, 0.4, 0.2,
         0, 0, 1, 0.1, 0.3, 0.6;
    const OneSidedID id = osid_qrcp(Y, 3, Axis::column);
    EXPECT_EQ(id.skeleton, (IndexVector{0, 1, 2}));
    EXPECT_LE((id.M - Y).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Id, ExactOnRankK) {
    const Matrix Y = random_matrix(20, 4, 40) * random_matrix(4, 30, 41);
    for (Axis ax : {Axis::column, Axis::row}) {
        const OneSidedID id = osid_qrcp(Y, 4, ax);
        const Matrix rec = ax == Axis::column ? Matrix(select_columns(Y, id.skeleton) * id.M)
                                              : Matrix(id.M * select_rows(Y, id.skeleton));
        EXPECT_LE((Y - rec).norm(), 1e-8 * Y.norm());
    }
}

TEST(Id, ErrorEqualsQrcpTrailingBlock) {
    const Matrix Y = random_matrix(4, 8, 42);
    const OneSidedID id = osid_qrcp(Y, 3, Axis::column);
    const QRCPFactors f = qrcp(Y);
    const double trailing = f.R.bottomRightCorner(f.R.rows() - 3, 8 - 3).norm();
    EXPECT_NEAR((Y - select_columns(Y, id.skeleton) * id.M).norm(), trailing, 1e-12 * Y.norm());
}

TEST(Id, RankReducedFlag) {
    const Matrix Y = random_matrix(10, 2, 43) * random_matrix(2, 12, 44);
    const OneSidedID id = osid_qrcp(Y, 5, Axis::column);
    EXPECT_TRUE(id.rank_reduced);
    EXPECT_EQ(id.skeleton.size(), 2u);
}

TEST(Osid1, ExactOnRankK) {
    const Matrix A = random_matrix(60, 5, 45) * random_matrix(5, 50, 46);
    TsogOptions o;
    o.passes = 1;
    for (Axis ax : {Axis::column, Axis::row}) {
        const OneSidedID id = osid1(A, 5, 5, ax, {16, 0}, o);
        const Matrix rec = ax == Axis::column ? Matrix(select_columns(A, id.skeleton) * id.M)
                                              : Matrix(id.M * select_rows(A, id.skeleton));
        EXPECT_LE((A - rec).norm(), 1e-8 * A.norm());
        for (std::size_t j = 0; j < id.skeleton.size(); ++j) {
            const Index sj = id.skeleton[j];
            for (std::size_t i = 0; i < id.skeleton.size(); ++i) {
                const double v = ax == Axis::column ? id.M(static_cast<Index>(i), sj) : id.M(sj, static_cast<Index>(i));
                EXPECT_EQ(v, i == j ? 1.0 : 0.0);
            }
        }
    }
}

TEST(Osid1, ChainInequality) {
    const Index k = 6;
    for (std::uint64_t t = 0; t < 10; ++t) {
        const Built b = with_spectrum(80, 60, decay(60, 1.3), 50 + t);
        const TsogOptions o;
        const Matrix Y = detail::id_sketch(b.A, k, Axis::column, {t, 0}, o);
        const OneSidedID id = osid1(b.A, k, 0, Axis::column, {t, 0}, o);
        const Matrix At = b.A * pinv(Y) * Y;
        const double eps = spectral_norm(b.A - At);
        const double lhs = spectral_norm(b.A - select_columns(b.A, id.skeleton) * id.M);
        EXPECT_LE(lhs, (1 + spectral_norm(id.M)) * eps * (1 + 1e-10));
    }
}

TEST(Rocs1, DominantColumnFirst) {
    for (std::uint64_t t = 0; t < 20; ++t) {
        Matrix A = random_matrix(50, 30, 60 + t);
        A.col(17) *= 1e3;
        EXPECT_EQ(rocs1(A, 3, 5, Axis::column, {t, 0})[0], 17);
    }
}

TEST(Rocs1, FullSelectionDistinctAndDeterministic) {
    const Matrix A = random_matrix(40, 20, 61);
    const IndexVector J = rocs1(A, 20, 0, Axis::column, {3, 0});
    EXPECT_EQ(std::set<Index>(J.begin(), J.end()).size(), 20u);
    EXPECT_EQ(J, rocs1(A, 20, 0, Axis::column, {3, 0}));
    const IndexVector I = rocs1(A, 7, 3, Axis::row, {3, 0});
    EXPECT_EQ(I, rocs1(A, 7, 3, Axis::row, {3, 0}));
}

TEST(Cur, ExactOnRankK) {
    const Matrix tall = random_matrix(60, 4, 62) * random_matrix(4, 40, 63);
    const Matrix wide = tall.transpose();
    for (const Matrix* A : {&tall, &wide}) {
        const CURFactors f = curd1(*A, 4, 3, {17, 0});
        EXPECT_LE((*A - cur_reconstruct(*A, f)).norm(), 1e-6 * A->norm());
    }
}

TEST(Cur, StepSpectrumNearOptimal) {
    const Index k = 5;
    int ok = 0;
    for (std::uint64_t t = 0; t < 20; ++t) {
        const Built b = with_spectrum(100, 80, step(80, k, 1e-3), 70 + t);
        const CURFactors f = curd1(b.A, k, 5, {t, 0});
        ok += (b.A - cur_reconstruct(b.A, f)).norm() <= 10 * tail(b.sigma, k);
    }
    EXPECT_GE(ok, 18);
}

TEST(EckartYoung, NoDriverBeatsOptimum) {
    const Built b = with_spectrum(120, 70, decay(70, 1.15), 80);
    const Index k = 8;
    auto floor = [&](Index r) { return (1 - 1e-8) * tail(b.sigma, r); };
    const SVDFactors s = svd1(b.A, k, 0.0, 5, {1, 0});
    EXPECT_GE((b.A - s.U * s.sigma.asDiagonal() * s.V.transpose()).norm(), floor(s.sigma.size()));
    const QBFactors q = qb2(b.A, k, 0.0, {1, 0});
    EXPECT_GE((b.A - q.Q * q.B).norm(), floor(q.Q.cols()));
    const QBFactors q3 = qb3(b.A, k, 0.0, {1, 0});
    EXPECT_GE((b.A - q3.Q * q3.B).norm(), floor(q3.Q.cols()));
    const OneSidedID id = osid1(b.A, k, 4, Axis::column, {1, 0});
    EXPECT_GE((b.A - select_columns(b.A, id.skeleton) * id.M).norm(), floor(k));
    const CURFactors c = curd1(b.A, k, 4, {1, 0});
    EXPECT_GE((b.A - cur_reconstruct(b.A, c)).norm(), floor(k));
}

TEST(Drivers, DeterministicGivenSeed) {
    const Matrix A = random_matrix(50, 40, 81);
    EXPECT_EQ(svd1(A, 5, 0.0, 3, {9, 0}).U, svd1(A, 5, 0.0, 3, {9, 0}).U);
    EXPECT_EQ(qb3(A, 8, 0.0, {9, 0}).B, qb3(A, 8, 0.0, {9, 0}).B);
    EXPECT_EQ(curd1(A, 5, 3, {9, 0}).U, curd1(A, 5, 3, {9, 0}).U);
}

TEST(NormEstimates, SpectralZero) {
    EXPECT_EQ(spectral_bound(LinearOperator::owning(Matrix::Zero(10, 10)), 5, 2.0, {1, 0}), 0.0);
}

TEST(NormEstimates, SpectralBoundFailureRate) {
    const LinearOperator I = LinearOperator::identity(30);
    int ok = 0;
    for (std::uint64_t t = 0; t < 1000; ++t) ok += spectral_bound(I, 10, 2.0, {t, 0}) >= 1.0;
    EXPECT_GE(ok, 995);
}

TEST(NormEstimates, SpectralHomogeneous) {
    const Matrix A = random_matrix(20, 15, 82);
    const double a = spectral_bound(LinearOperator::from_matrix(A), 4, 3.0, {5, 0});
    const Matrix A2 = 2 * A;
    EXPECT_NEAR(spectral_bound(LinearOperator::from_matrix(A2), 4, 3.0, {5, 0}), 2 * a, 1e-12 * a);
}

TEST(NormEstimates, FrobIdentityIsProbeNorm) {
    const Index n = 25, r = 6;
    const Matrix Z = gaussian_matrix(n, r, {7, 0});
    EXPECT_NEAR(frob_estimate(LinearOperator::identity(n), r, {7, 0}), Z.squaredNorm() / r, 1e-12);
}

TEST(NormEstimates, FrobMeanWithinVarianceBound) {
    const Built b = with_spectrum(40, 30, decay(30, 1.1), 83);
    const LinearOperator op = LinearOperator::from_matrix(b.A);
    const Index r = 5, trials = 2000;
    double sum = 0;
    for (Index t = 0; t < trials; ++t) sum += frob_estimate(op, r, {static_cast<std::uint64_t>(t), 1});
    const double f2 = b.A.squaredNorm();
    const double var = 2.0 / r * std::pow(spectral_norm(b.A), 2) * f2;
    EXPECT_LE(std::abs(sum / trials - f2), 3 * std::sqrt(var / trials));
}

TEST(NormEstimates, FrobRankOneHandExpansion) {
    const Vector u = random_matrix(12, 1, 84).col(0), v = random_matrix(9, 1, 85).col(0);
    const Matrix A = u * v.transpose();
    const Index r = 4;
    const Matrix Z = gaussian_matrix(9, r, {3, 0});
    double expect = 0;
    for (Index i = 0; i < r; ++i) expect += std::pow(v.dot(Z.col(i)), 2);
    expect /= r;
    EXPECT_NEAR(frob_estimate(LinearOperator::from_matrix(A), r, {3, 0}) / u.squaredNorm(), expect, 1e-12 * expect);
}
