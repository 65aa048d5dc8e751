#pragma once

// Low-rank approximation: power-method sketch generation, rangefinders, QB
// decompositions, SVD/EVD drivers, interpolative decompositions, CUR, and
// randomized norm estimation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "randnla/errors.hpp"
#include "randnla/linalg.hpp"
#include "randnla/rng.hpp"
#include "randnla/sketching.hpp"

namespace randnla {

enum class Stabilizer { qr, lu };
enum class Axis { row, column };

struct TsogOptions {
    int passes = 2;        // p, total products with A or A^T
    int stab_period = 1;   // q
    Stabilizer stabilizer = Stabilizer::qr;
    SketchFamily family = SketchFamily::gaussian;
};

namespace detail {

// Tall rows x cols oblivious operator, materialized.
inline Matrix tall_oblivious(Index rows, Index cols, RngKey seed, SketchFamily family) {
    SketchConfig cfg;
    cfg.family = family;
    cfg.saso_k = std::min<Index>(8, cols);
    return make_sketch(cfg, cols, rows, seed).transposed().materialize();
}

inline Matrix stabilize(const Matrix& S, Stabilizer how) {
    if (how == Stabilizer::qr) return qr_econ(S).Q;
    // P S Q = L U; keep the permuted unit-lower factor.
    Eigen::FullPivLU<Matrix> lu(S);
    const Index r = std::min(S.rows(), S.cols());
    Matrix L = Matrix::Identity(S.rows(), r);
    L.triangularView<Eigen::StrictlyLower>() = lu.matrixLU().leftCols(r).triangularView<Eigen::StrictlyLower>();
    return lu.permutationP().inverse() * L;
}

}  // namespace detail

/// n x k sketching operator for Y = A S, refined by p passes of the power method.
///
/// Even p starts from an oblivious n x k operator; odd p starts from A^T times
/// an oblivious m x k operator. The stabilizer runs after every q-th product.
inline Matrix tsog1(const LinearOperator& A, Index k, RngKey seed, const TsogOptions& opt = {}) {
    const Index m = A.rows, n = A.cols;
    if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("tsog1: need 1 <= k <= min(m, n)");
    if (opt.passes < 0 || opt.stab_period < 1) throw std::invalid_argument("tsog1: need p >= 0 and q >= 1");
    int done = 0;
    Matrix S;
    auto step = [&](Matrix next) {
        ++done;
        S = done % opt.stab_period == 0 ? detail::stabilize(next, opt.stabilizer) : std::move(next);
    };
    if (opt.passes % 2 == 0) {
        S = detail::tall_oblivious(n, k, seed, opt.family);
    } else {
        step(A.apply_adjoint(detail::tall_oblivious(m, k, seed, opt.family)));
    }
    while (opt.passes - done >= 2) {
        step(A.apply(S));
        step(A.apply_adjoint(S));
    }
    return S;
}

inline Matrix tsog1(const Matrix& A, Index k, RngKey seed, const TsogOptions& opt = {}) {
    return tsog1(LinearOperator::from_matrix(A), k, seed, opt);
}

/// Orthonormal basis for range(A S), S from tsog1. Has min(k, rank) columns.
inline Matrix rf1(const LinearOperator& A, Index k, RngKey seed, const TsogOptions& opt = {}) {
    return orth(A.apply(tsog1(A, k, seed, opt)));
}

inline Matrix rf1(const Matrix& A, Index k, RngKey seed, const TsogOptions& opt = {}) {
    return rf1(LinearOperator::from_matrix(A), k, seed, opt);
}

struct QBFactors {
    Matrix Q;  // m x d
    Matrix B;  // d x n
    double error_estimate = 0.0;  // tracked ||A - QB||_F where available
};

inline QBFactors qb1(const Matrix& A, Index k, RngKey seed, const TsogOptions& opt = {}) {
    QBFactors f;
    f.Q = rf1(A, k, seed, opt);
    f.B = f.Q.transpose() * A;
    f.error_estimate = std::sqrt(std::max(0.0, A.squaredNorm() - f.B.squaredNorm()));
    return f;
}

struct QbOptions {
    Index block_size = 8;
    TsogOptions tsog{};
    int recompute_every = 8;  // exact residual norm refresh period, in blocks
};

/// Fully adaptive blocked QB: stops once ||A - QB||_F <= tol ||A||_F or when
/// Q has k columns. Block i draws its sketch from sub-stream 2i of `seed`.
///
/// The downdated squared error is refreshed from the explicit residual every
/// `recompute_every` blocks and before any tolerance-based exit, so the exit
/// test never relies on a cancelled difference.
inline QBFactors qb2(const Matrix& A, Index k, double tol, RngKey seed, const QbOptions& opt = {}) {
    const Index m = A.rows(), n = A.cols();
    if (opt.block_size < 1) throw std::invalid_argument("qb2: block_size must be positive");
    if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("qb2: need 1 <= k <= min(m, n)");
    const double norm2 = A.squaredNorm();
    const double target = tol > 0.0 ? tol * tol * norm2 : 0.0;
    Matrix R = A;
    Matrix Q(m, 0), B(0, n);
    double sq_err = norm2;
    Index d = 0;
    for (int i = 0; d < k && sq_err > target; ++i) {
        const Index bs = std::min(opt.block_size, k - d);
        // Two sub-streams per block: an SRFT sketch consumes both.
        Matrix Qi = rf1(R, bs, seed.substream(2 * static_cast<std::uint64_t>(i)), opt.tsog);
        if (d > 0) Qi = orth(Qi - Q * (Q.transpose() * Qi));
        if (Qi.cols() == 0) break;  // residual is numerically zero
        const Matrix Bi = Qi.transpose() * A;
        Q.conservativeResize(Eigen::NoChange, d + Qi.cols());
        Q.rightCols(Qi.cols()) = Qi;
        B.conservativeResize(d + Qi.cols(), Eigen::NoChange);
        B.bottomRows(Qi.cols()) = Bi;
        d += Qi.cols();
        R -= Qi * Bi;
        sq_err -= Bi.squaredNorm();
        if ((i + 1) % opt.recompute_every == 0 || sq_err <= target) sq_err = R.squaredNorm();
    }
    return {Q, B, std::sqrt(std::max(0.0, sq_err))};
}

/// Pass-efficient QB: A is touched only through G = A S and H = A^T G.
///
/// The block update uses B_i = R_i^{-T} (H_i^T - (Y_i^T Q) B - (B S_i)^T B).
/// `frob_norm_sq` is ||A||_F^2 for the tolerance test; pass a non-positive
/// value to run all blocks. A numerically rank deficient block keeps its
/// nonzero directions and ends the loop.
inline QBFactors qb3(const LinearOperator& A, Index k, double tol, double frob_norm_sq, RngKey seed,
                     const QbOptions& opt = {}) {
    const Index m = A.rows, n = A.cols;
    if (opt.block_size < 1) throw std::invalid_argument("qb3: block_size must be positive");
    if (k < 1 || k >= std::min(m, n)) throw std::invalid_argument("qb3: need 1 <= k < min(m, n)");
    const Matrix S = tsog1(A, k, seed, opt.tsog);
    const Matrix G = A.apply(S);
    const Matrix H = A.apply_adjoint(G);
    const bool track = frob_norm_sq > 0.0;
    const double target = tol > 0.0 ? tol * tol * frob_norm_sq : 0.0;
    double sq_err = track ? frob_norm_sq : 0.0;
    Matrix Q(m, 0), B(0, n);
    const Index max_blocks = (k + opt.block_size - 1) / opt.block_size;
    for (Index i = 0; i < max_blocks; ++i) {
        const Index start = i * opt.block_size;
        const Index w = std::min((i + 1) * opt.block_size, k) - start;
        const Matrix Si = S.middleCols(start, w);
        const Matrix Yi = G.middleCols(start, w) - Q * (B * Si);
        QRFactors f1 = qr_econ(Yi);
        Matrix Qi = f1.Q - Q * (Q.transpose() * f1.Q);
        QRFactors f2 = qr_econ(Qi);
        const Matrix Ri = f2.R * f1.R;
        const double rmax = Ri.diagonal().cwiseAbs().maxCoeff();
        if (!(rmax > 0.0)) break;
        // Y_i^T (I - QQ^T) A without touching A again.
        const Matrix ZtA = H.middleCols(start, w).transpose() - (Yi.transpose() * Q) * B - (B * Si).transpose() * B;
        Matrix Qi_keep, Bi;
        const bool deficient = Ri.diagonal().cwiseAbs().minCoeff() <= rank_tolerance(m, w, rmax);
        if (!deficient) {
            Qi_keep = f2.Q;
            Bi = Ri.transpose().triangularView<Eigen::Lower>().solve(ZtA);
        } else {
            // Keep the numerically nonzero part of (I - QQ^T) Y_i = U S W^T,
            // then Q_i^T A = S^{-1} W^T Z^T A. This is the last block.
            const SVDFactors z = svd(Yi - Q * (Q.transpose() * Yi));
            const Index rho = numerical_rank(z.sigma, m, w);
            if (rho == 0) break;
            Qi_keep = z.U.leftCols(rho);
            Bi = z.sigma.head(rho).cwiseInverse().asDiagonal() * (z.V.leftCols(rho).transpose() * ZtA);
        }
        const Index wk = Qi_keep.cols();
        Q.conservativeResize(Eigen::NoChange, Q.cols() + wk);
        Q.rightCols(wk) = Qi_keep;
        B.conservativeResize(B.rows() + wk, Eigen::NoChange);
        B.bottomRows(wk) = Bi;
        if (track) {
            sq_err -= Bi.squaredNorm();
            if (sq_err <= target) break;
        }
        if (deficient) break;
    }
    return {Q, B, std::sqrt(std::max(0.0, sq_err))};
}

inline QBFactors qb3(const Matrix& A, Index k, double tol, RngKey seed, const QbOptions& opt = {}) {
    return qb3(LinearOperator::from_matrix(A), k, tol, A.squaredNorm(), seed, opt);
}

/// Rank-<=k SVD from a rank-(k + s) QB at relative tolerance tol.
inline SVDFactors svd1(const Matrix& A, Index k, double tol, Index s, RngKey seed, const TsogOptions& tsog = {}) {
    if (k < 1 || s < 0 || k + s > std::min(A.rows(), A.cols())) throw std::invalid_argument("svd1: need k + s <= min(m, n)");
    QbOptions qopt;
    qopt.block_size = k + s;
    qopt.tsog = tsog;
    const QBFactors qb = qb2(A, k + s, tol, seed, qopt);
    SVDFactors f = svd(qb.B);
    const Index r = std::min(k, f.sigma.size());
    SVDFactors out;
    out.U = qb.Q * f.U.leftCols(r);
    out.sigma = f.sigma.head(r);
    out.V = f.V.leftCols(r);
    return out;
}

struct EVDFactors {
    Matrix V;       // n x r
    Vector lambda;  // r, sorted by |lambda| descending
    Index clamped = 0;  // eigenvalues raised to 0 after removing the shift (evd2)
};

inline bool is_hermitian(const Matrix& A, double rel_tol = 1e-10) {
    if (A.rows() != A.cols()) return false;
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    return (A - A.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Rank-<=k eigendecomposition of a Hermitian matrix from a QB at tol/2.
inline EVDFactors evd1(const Matrix& A, Index k, double tol, Index s, RngKey seed, const TsogOptions& tsog = {}) {
    if (!is_hermitian(A)) throw std::invalid_argument("evd1: matrix is not Hermitian");
    if (k < 1 || s < 0 || k + s > A.rows()) throw std::invalid_argument("evd1: need k + s <= n");
    QbOptions qopt;
    qopt.block_size = k + s;
    qopt.tsog = tsog;
    const QBFactors qb = qb2(A, k + s, tol / 2.0, seed, qopt);
    const Matrix C = qb.B * qb.Q;
    const EighFactors e = eigh(0.5 * (C + C.transpose()));
    std::vector<Index> order(static_cast<std::size_t>(e.lambda.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(e.lambda(a)) > std::abs(e.lambda(b)); });
    const Index r = std::min<Index>(k, static_cast<Index>(order.size()));
    EVDFactors out;
    out.V.resize(A.rows(), r);
    out.lambda.resize(r);
    for (Index j = 0; j < r; ++j) {
        out.V.col(j) = qb.Q * e.V.col(order[static_cast<std::size_t>(j)]);
        out.lambda(j) = e.lambda(order[static_cast<std::size_t>(j)]);
    }
    return out;
}

/// Nystrom eigendecomposition of a psd operator with a rank-(k + s) sketch.
///
/// The shift nu = sqrt(n) eps ||Y||_2 is multiplied by 10 (up to 3 times) if
/// the Cholesky factorization of S^T (Y + nu S) still fails. A zero sketch
/// Y = 0 yields an empty result.
inline EVDFactors evd2(const LinearOperator& A, Index k, Index s, RngKey seed, const TsogOptions& tsog = {}) {
    const Index n = A.rows;
    if (A.cols != n) throw std::invalid_argument("evd2: operator must be square");
    if (k < 1 || s < 0 || k + s > n) throw std::invalid_argument("evd2: need k + s <= n");
    const Matrix S = tsog1(A, k + s, seed, tsog);
    const Matrix Y = A.apply(S);
    double nu = std::sqrt(static_cast<double>(n)) * kEps * spectral_norm(Y);
    EVDFactors out;
    if (nu == 0.0) {
        out.V = Matrix::Zero(n, 0);
        out.lambda = Vector::Zero(0);
        return out;
    }
    Matrix Ynu, R;
    for (int attempt = 0;; ++attempt) {
        Ynu = Y + nu * S;
        const Matrix C = S.transpose() * Ynu;
        try {
            R = chol(0.5 * (C + C.transpose()));
            break;
        } catch (const NotPositiveDefinite& e) {
            if (attempt == 3) throw NotPositiveDefinite(e.pivot(), "evd2");
            nu *= 10.0;
        }
    }
    const Matrix Bf = right_solve_upper(Ynu, R);
    const SVDFactors f = svd(Bf);
    Index r = 0;
    while (r < f.sigma.size() && r < k && f.sigma(r) * f.sigma(r) > nu) ++r;
    out.V = f.U.leftCols(r);
    out.lambda.resize(r);
    for (Index j = 0; j < r; ++j) {
        double l = f.sigma(j) * f.sigma(j) - nu;
        if (l < 0.0) {
            l = 0.0;
            ++out.clamped;
        }
        out.lambda(j) = l;
    }
    return out;
}

inline EVDFactors evd2(const Matrix& A, Index k, Index s, RngKey seed, const TsogOptions& tsog = {}) {
    return evd2(LinearOperator::from_matrix(A), k, s, seed, tsog);
}

// ---------------------------------------------------------------------------
// Interpolative decompositions and subset selection

struct OneSidedID {
    Matrix M;                // k x n (column ID) or m x k (row ID)
    IndexVector skeleton;    // length k
    Axis axis = Axis::column;
    bool rank_reduced = false;  // k was lowered to the numerical rank
};

/// Deterministic ID via QRCP. Column ID: Y ~= Y[:, J] X with X[:, J] = I.
/// Row ID: Y ~= Z Y[I, :] with Z[I, :] = I.
inline OneSidedID osid_qrcp(const Matrix& Y, Index k, Axis axis) {
    if (axis == Axis::row) {
        OneSidedID t = osid_qrcp(Y.transpose(), k, Axis::column);
        t.M.transposeInPlace();
        t.axis = Axis::row;
        return t;
    }
    const Index w = Y.cols();
    if (k < 0 || k > std::min(Y.rows(), w)) throw std::invalid_argument("osid_qrcp: need k <= min(rows, cols)");
    const QRCPFactors f = qrcp(Y);
    OneSidedID out;
    out.axis = Axis::column;
    Index kk = k;
    if (kk > 0) {
        const double r11 = std::abs(f.R(0, 0));
        const double tol = rank_tolerance(Y.rows(), w, r11);
        Index rank = 0;
        while (rank < kk && std::abs(f.R(rank, rank)) > tol) ++rank;
        if (rank < kk) {
            kk = rank;
            out.rank_reduced = true;
        }
    }
    const Matrix T = f.R.topLeftCorner(kk, kk).triangularView<Eigen::Upper>().solve(f.R.block(0, kk, kk, w - kk));
    out.M = Matrix::Zero(kk, w);
    for (Index j = 0; j < kk; ++j) out.M(j, f.J[static_cast<std::size_t>(j)]) = 1.0;
    for (Index j = kk; j < w; ++j) out.M.col(f.J[static_cast<std::size_t>(j)]) = T.col(j - kk);
    out.skeleton.assign(f.J.begin(), f.J.begin() + kk);
    return out;
}

namespace detail {

// Sketch for ID/CSS: column axis gives Y = S A ((k+s) x n), row axis Y = A S.
inline Matrix id_sketch(const Matrix& A, Index l, Axis axis, RngKey seed, const TsogOptions& tsog) {
    if (axis == Axis::row) return A * tsog1(A, l, seed, tsog);
    const Matrix At = A.transpose();
    return tsog1(At, l, seed, tsog).transpose() * A;
}

}  // namespace detail

/// Low-rank ID of A from a full-rank ID of a sketch.
inline OneSidedID osid1(const Matrix& A, Index k, Index s, Axis axis, RngKey seed, const TsogOptions& tsog = {}) {
    if (k < 1 || s < 0 || k + s > std::min(A.rows(), A.cols())) throw std::invalid_argument("osid1: need k + s <= min(m, n)");
    return osid_qrcp(detail::id_sketch(A, k + s, axis, seed, tsog), k, axis);
}

/// Row or column subset selection: the first k pivots of QRCP on a sketch.
inline IndexVector rocs1(const Matrix& A, Index k, Index s, Axis axis, RngKey seed, const TsogOptions& tsog = {}) {
    const Index l = std::min(k + s, std::min(A.rows(), A.cols()));
    if (k < 1 || s < 0 || k > (axis == Axis::column ? A.cols() : A.rows()))
        throw std::invalid_argument("rocs1: k out of range");
    const Matrix Y = detail::id_sketch(A, l, axis, seed, tsog);
    const QRCPFactors f = qrcp(axis == Axis::column ? Y : Matrix(Y.transpose()));
    return {f.J.begin(), f.J.begin() + k};
}

struct CURFactors {
    IndexVector J;  // columns
    Matrix U;       // k x k linking matrix
    IndexVector I;  // rows
};

inline Matrix cur_reconstruct(const Matrix& A, const CURFactors& f) {
    return select_columns(A, f.J) * f.U * select_rows(A, f.I);
}

/// CUR from a randomized one-sided ID plus QRCP on the selected submatrix.
inline CURFactors curd1(const Matrix& A, Index k, Index s, RngKey seed, const TsogOptions& tsog = {}) {
    CURFactors out;
    if (A.rows() >= A.cols()) {
        const OneSidedID id = osid1(A, k, s, Axis::column, seed, tsog);
        out.J = id.skeleton;
        const QRCPFactors f = qrcp(select_columns(A, out.J).transpose());
        out.I.assign(f.J.begin(), f.J.begin() + static_cast<Index>(out.J.size()));
        out.U = id.M * pinv(select_rows(A, out.I));
    } else {
        const OneSidedID id = osid1(A, k, s, Axis::row, seed, tsog);
        out.I = id.skeleton;
        const QRCPFactors f = qrcp(select_rows(A, out.I));
        out.J.assign(f.J.begin(), f.J.begin() + static_cast<Index>(out.I.size()));
        out.U = pinv(select_columns(A, out.J)) * id.M;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Norm estimation

inline Matrix gaussian_matrix(Index rows, Index cols, RngKey seed) {
    const std::vector<double> v = gaussian_stream(seed, static_cast<std::size_t>(rows * cols));
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// beta sqrt(2/pi) max_j ||A z_j|| over r Gaussian probes; an upper bound on
/// ||A||_2 with probability at least 1 - beta^{-r}.
inline double spectral_bound(const LinearOperator& A, Index r, double beta, RngKey seed) {
    if (r < 1 || !(beta > 1.0)) throw std::invalid_argument("spectral_bound: need r >= 1 and beta > 1");
    const Matrix AZ = A.apply(gaussian_matrix(A.cols, r, seed));
    return beta * std::sqrt(2.0 / std::numbers::pi) * AZ.colwise().norm().maxCoeff();
}

/// (1/r) ||A Z||_F^2, unbiased for ||A||_F^2.
inline double frob_estimate(const LinearOperator& A, Index r, RngKey seed) {
    if (r < 1) throw std::invalid_argument("frob_estimate: need r >= 1");
    return A.apply(gaussian_matrix(A.cols, r, seed)).squaredNorm() / static_cast<double>(r);
}

}  // namespace randnla
