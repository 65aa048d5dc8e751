#pragma once

// Sketch-and-solve and sketch-and-precondition drivers for the saddle point
// problems
//   min_x ||A x - b||^2 + mu ||x||^2 + 2 c^T x            (primal)
//   min_y ||A^T y - c||^2 + mu ||y - b||^2                (dual)
// whose solutions satisfy y = b - A x and (A^T A + mu I) x = A^T b - c.

#include <cmath>
#include <optional>
#include <stdexcept>

#include "randnla/errors.hpp"
#include "randnla/iterative.hpp"
#include "randnla/linalg.hpp"
#include "randnla/lowrank.hpp"
#include "randnla/rng.hpp"
#include "randnla/sketching.hpp"

namespace randnla {

struct SaddleProblem {
    Matrix A;
    Vector b;
    Vector c;  // empty means zero
    double mu = 0.0;

    void validate() const {
        if (A.rows() < A.cols()) throw std::invalid_argument("saddle problem: need m >= n");
        if (b.size() != A.rows()) throw std::invalid_argument("saddle problem: b has wrong length");
        if (c.size() != 0 && c.size() != A.cols()) throw std::invalid_argument("saddle problem: c has wrong length");
        if (mu < 0.0) throw std::invalid_argument("saddle problem: mu must be nonnegative");
    }
    [[nodiscard]] Vector c_or_zero() const { return c.size() ? c : Vector::Zero(A.cols()); }
};

struct SaddleSolution {
    Vector x;
    Vector y;
    IterativeReport report;
    Index d = 0;  // embedding dimension used
    bool used_fallback = false;
};

struct LsOptions {
    double tol = 1e-12;
    int maxit = 100;
    double sampling_factor = 4.0;
    SketchConfig sketch{};
};

inline Index embedding_dim(Index m, Index n, double sampling_factor) {
    if (sampling_factor < 1.0) throw std::invalid_argument("sampling_factor must be >= 1");
    return std::min(static_cast<Index>(std::ceil(static_cast<double>(n) * sampling_factor)), m);
}

// ---------------------------------------------------------------------------
// Preconditioners

struct Preconditioner {
    Matrix M;            // n x k
    double mu_used = 0.0;
    // SVD data of the sketch, present for make_precond_svd.
    std::optional<Matrix> U_sk;   // d x k
    std::optional<Vector> sigma;  // k singular values of A_sk
    std::optional<Matrix> V;      // n x k
    /// Left singular vectors [U D1; V D2] of the augmented sketch [A_sk; sqrt(mu) I].
    std::optional<Matrix> U_aug;
};

/// M = R^{-1} with R from QR of A_sk (mu = 0) or Cholesky of A_sk^T A_sk + mu I.
///
/// Throws RankDeficient if mu = 0 and A_sk is numerically rank deficient, and
/// NotPositiveDefinite if the regularized Cholesky fails; callers should then
/// fall back to make_precond_svd.
inline Preconditioner make_precond_qr(const Matrix& A_sk, double mu) {
    if (mu < 0.0) throw std::invalid_argument("make_precond_qr: mu must be nonnegative");
    const Index n = A_sk.cols();
    Matrix R;
    if (mu == 0.0) {
        if (A_sk.rows() < n) throw RankDeficient("make_precond_qr: sketch has fewer rows than columns");
        R = qr_econ(A_sk).R;
        const Vector diag = R.diagonal().cwiseAbs();
        if (n > 0 && diag.minCoeff() <= rank_tolerance(A_sk.rows(), n, diag.maxCoeff()))
            throw RankDeficient("make_precond_qr: sketch is numerically rank deficient");
    } else {
        R = chol(A_sk.transpose() * A_sk + mu * Matrix::Identity(n, n));
    }
    Preconditioner p;
    p.M = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
    p.mu_used = mu;
    return p;
}

/// SVD-based preconditioner. mu = 0: M = V diag(1/sigma) over the numerical
/// rank. mu > 0: M = V diag(1/sigma_hat), sigma_hat = sqrt(sigma^2 + mu), using
/// all n right singular vectors (zero sigma for directions A_sk misses).
inline Preconditioner make_precond_svd(const Matrix& A_sk, double mu) {
    if (mu < 0.0) throw std::invalid_argument("make_precond_svd: mu must be nonnegative");
    const Index d = A_sk.rows(), n = A_sk.cols();
    Preconditioner p;
    p.mu_used = mu;
    if (mu == 0.0) {
        const SVDFactors f = truncated_svd(A_sk);
        p.M = f.V * f.sigma.cwiseInverse().asDiagonal();
        p.U_sk = f.U;
        p.sigma = f.sigma;
        p.V = f.V;
        return p;
    }
    // Full right basis: complete V when d < n.
    SVDFactors f = svd(A_sk);
    Matrix V = f.V;
    Vector sig = f.sigma;
    Matrix U = f.U;
    if (V.cols() < n) {
        const Index r = V.cols();
        const Matrix P = Matrix::Identity(n, n) - V * V.transpose();
        const Matrix comp = orth(P);
        V.conservativeResize(Eigen::NoChange, r + comp.cols());
        V.rightCols(comp.cols()) = comp;
        sig.conservativeResize(V.cols());
        sig.tail(comp.cols()).setZero();
        U.conservativeResize(Eigen::NoChange, V.cols());
        U.rightCols(comp.cols()).setZero();
    }
    const Vector sig_hat = (sig.array().square() + mu).sqrt();
    p.M = V * sig_hat.cwiseInverse().asDiagonal();
    p.U_sk = U;
    p.sigma = sig;
    p.V = V;
    Matrix Uaug(d + n, V.cols());
    Uaug.topRows(d) = U * (sig.array() / sig_hat.array()).matrix().asDiagonal();
    Uaug.bottomRows(n) = V * (std::sqrt(mu) / sig_hat.array()).matrix().asDiagonal();
    p.U_aug = Uaug;
    return p;
}

// ---------------------------------------------------------------------------
// Direct solutions

/// x = (S A)^+ (S b) for the given sketching operator.
inline Vector sketch_and_solve_ols(const Matrix& A, const Vector& b, const SketchOp& S) {
    if (S.cols() != A.rows() || b.size() != A.rows()) throw std::invalid_argument("sketch_and_solve: dimension mismatch");
    Matrix Ab(A.rows(), A.cols() + 1);
    Ab << A, b;
    const Matrix sk = S.apply(Ab, Side::left);
    return pinv_solve(sk.leftCols(A.cols()), sk.col(A.cols()));
}

inline Vector sketch_and_solve_ols(const Matrix& A, const Vector& b, Index d, RngKey seed,
                                   SketchConfig cfg = {SketchFamily::gaussian, 8, 1.0}) {
    if (d < A.cols() || d > A.rows()) throw std::invalid_argument("sketch_and_solve: need n <= d <= m");
    return sketch_and_solve_ols(A, b, make_sketch(cfg, d, A.rows(), seed));
}

/// Canonical solutions of the mu -> 0 limit:
/// x0 = (A^T A)^+ (A^T b - c), y0 = (A^T)^+ c + (I - A A^+) b.
inline std::pair<Vector, Vector> limiting_solution(const Matrix& A, const Vector& b, const Vector& c) {
    const SVDFactors f = truncated_svd(A);
    const Vector inv = f.sigma.cwiseInverse();
    const Vector rhs = A.transpose() * b - c;
    Vector x0 = f.V * (inv.cwiseAbs2().asDiagonal() * (f.V.transpose() * rhs));
    Vector y0 = f.U * (inv.asDiagonal() * (f.V.transpose() * c)) + b - f.U * (f.U.transpose() * b);
    return {x0, y0};
}

// ---------------------------------------------------------------------------
// Sketch-and-precondition

/// Saddle point solver: sketch, SVD-precondition, shift b so that c = 0, and
/// run LSQR on the preconditioned (augmented if mu > 0) least squares problem.
///
/// With mu = 0 and c outside range(A^T) the preconditioner's truncated V
/// projects c onto range(A^T), which yields the canonical limiting solution.
inline SaddleSolution sps2(const SaddleProblem& P, RngKey seed, const LsOptions& opt = {}) {
    P.validate();
    const Matrix& A = P.A;
    const Index m = A.rows(), n = A.cols();
    const double mu = P.mu;
    const double smu = std::sqrt(mu);
    const Vector c = P.c_or_zero();
    const bool aug = mu > 0.0;
    const Index ma = aug ? m + n : m;

    SaddleSolution out;
    out.d = embedding_dim(m, n, opt.sampling_factor);
    const SketchOp S = make_sketch(opt.sketch, out.d, m, seed);
    const Index d = out.d;

    // Augmented sketch [S A; sqrt(mu) I] and operator [A; sqrt(mu) I].
    Matrix A_sk = S.apply(A, Side::left);
    if (aug) {
        A_sk.conservativeResize(d + n, Eigen::NoChange);
        A_sk.bottomRows(n) = smu * Matrix::Identity(n, n);
    }
    const SVDFactors f = truncated_svd(A_sk);
    const Matrix M = f.V * f.sigma.cwiseInverse().asDiagonal();

    auto sketch_aug = [&](const Vector& v) {  // S_aug v
        Vector out_v(aug ? d + n : d);
        out_v.head(d) = S.apply(v.head(m), Side::left);
        if (aug) out_v.tail(n) = v.tail(n);
        return out_v;
    };

    Vector b_mod = Vector::Zero(ma);
    b_mod.head(m) = P.b;
    if (c.norm() > 0.0) {
        const Vector v_hat = f.U * (f.sigma.cwiseInverse().asDiagonal() * (f.V.transpose() * c));
        Vector b_shift(ma);
        b_shift.head(m) = S.transposed().apply(Matrix(v_hat.head(d)), Side::left);
        if (aug) b_shift.tail(n) = v_hat.tail(n);
        b_mod -= b_shift;
    }
    const Vector z0 = f.U.transpose() * sketch_aug(b_mod);

    const auto Mp = std::make_shared<const Matrix>(M);
    const Matrix* Ap = &A;
    LinearOperator Apre{ma, M.cols(),
                        [Ap, Mp, m, n, aug, smu](const Matrix& X) -> Matrix {
                            const Matrix W = (*Mp) * X;
                            Matrix Y(aug ? m + n : m, X.cols());
                            Y.topRows(m) = (*Ap) * W;
                            if (aug) Y.bottomRows(n) = smu * W;
                            return Y;
                        },
                        [Ap, Mp, m, n, aug, smu](const Matrix& Y) -> Matrix {
                            Matrix W = Ap->transpose() * Y.topRows(m);
                            if (aug) W += smu * Y.bottomRows(n);
                            return Mp->transpose() * W;
                        }};
    LsqrOptions lo;
    lo.tol = opt.tol;
    lo.maxit = opt.maxit;
    const LsqrResult r = lsqr(Apre, b_mod, lo, z0);
    out.x = M * r.z;
    out.y = P.b - A * out.x;
    out.report = r.report;
    return out;
}

struct LsResult {
    Vector x;
    IterativeReport report;
    Index d = 0;
    bool used_fallback = false;
    Matrix R;  // preconditioner A R^{-1}; empty after the fallback
};

/// Blendenpik-style overdetermined least squares: QR of the sketch, presolve,
/// LSQR on A R^{-1}. Falls back to sps2 (SVD preconditioner) if R is singular.
inline LsResult spo1(const Matrix& A, const Vector& b, RngKey seed, const LsOptions& opt = {}) {
    const Index m = A.rows(), n = A.cols();
    if (m < n) throw std::invalid_argument("spo1: need m >= n");
    if (b.size() != m) throw std::invalid_argument("spo1: b has wrong length");
    LsResult out;
    out.d = embedding_dim(m, n, opt.sampling_factor);
    if (b.norm() == 0.0) {
        out.x = Vector::Zero(n);
        out.report.converged = true;
        return out;
    }
    const SketchOp S = make_sketch(opt.sketch, out.d, m, seed);
    Matrix Ab(m, n + 1);
    Ab << A, b;
    const Matrix sk = S.apply(Ab, Side::left);
    const QRFactors f = qr_econ(sk.leftCols(n));
    const Vector diag = f.R.diagonal().cwiseAbs();
    if (diag.minCoeff() <= rank_tolerance(out.d, n, diag.maxCoeff())) {
        const SaddleSolution s = sps2({A, b, Vector(), 0.0}, seed, opt);
        out.x = s.x;
        out.report = s.report;
        out.used_fallback = true;
        return out;
    }
    const Vector z0 = f.Q.transpose() * sk.col(n);
    const auto R = std::make_shared<const Matrix>(f.R);
    const Matrix* Ap = &A;
    LinearOperator Apre{m, n,
                        [Ap, R](const Matrix& X) -> Matrix {
                            return (*Ap) * R->triangularView<Eigen::Upper>().solve(X);
                        },
                        [Ap, R](const Matrix& Y) -> Matrix {
                            return R->transpose().triangularView<Eigen::Lower>().solve(Ap->transpose() * Y);
                        }};
    LsqrOptions lo;
    lo.tol = opt.tol;
    lo.maxit = opt.maxit;
    const LsqrResult r = lsqr(Apre, b, lo, z0);
    out.x = f.R.triangularView<Eigen::Upper>().solve(r.z);
    out.report = r.report;
    out.R = f.R;
    return out;
}

// ---------------------------------------------------------------------------
// Nystrom PCG

struct NystromPcgResult {
    Vector x;
    IterativeReport report;
    EVDFactors nystrom;
};

/// Inverse Nystrom preconditioner P^{-1} = V (Lambda + mu)^{-1} V^T + (mu + lambda_l)^{-1} (I - V V^T).
/// lambda_l is the l-th eigenvalue when all l were kept, otherwise 0.
inline LinearOperator nystrom_preconditioner(const EVDFactors& f, Index ell, double mu, Index n) {
    const double lam_l = f.lambda.size() == ell && ell > 0 ? f.lambda(ell - 1) : 0.0;
    auto V = std::make_shared<const Matrix>(f.V);
    auto w = std::make_shared<const Vector>((f.lambda.array() + mu).inverse().matrix());
    const double tail = 1.0 / (mu + lam_l);
    auto apply = [V, w, tail](const Matrix& X) -> Matrix {
        const Matrix C = V->transpose() * X;
        return (*V) * (w->asDiagonal() * C) + tail * (X - (*V) * C);
    };
    return {n, n, apply, apply};
}

/// Solves (G + mu I) x = h by PCG with a rank-l Nystrom preconditioner built
/// from an (l + s)-column sketch.
inline NystromPcgResult nystrom_pcg(const LinearOperator& G, double mu, const Vector& h, Index ell, Index s,
                                    RngKey seed, const PcgOptions& opt = {}) {
    if (!(mu > 0.0)) throw std::invalid_argument("nystrom_pcg: mu must be positive");
    const Index n = G.rows;
    if (ell < 1 || s < 0 || ell + s > n) throw std::invalid_argument("nystrom_pcg: need l + s <= n");
    NystromPcgResult out;
    TsogOptions tsog;
    tsog.passes = 0;
    out.nystrom = evd2(G, ell, s, seed, tsog);
    const LinearOperator Pinv = nystrom_preconditioner(out.nystrom, ell, mu, n);
    PcgResult r = pcg(G, mu, h, Pinv, opt);
    out.x = std::move(r.x);
    out.report = std::move(r.report);
    return out;
}

inline NystromPcgResult nystrom_pcg(const Matrix& G, double mu, const Vector& h, Index ell, Index s, RngKey seed,
                                    const PcgOptions& opt = {}) {
    return nystrom_pcg(LinearOperator::from_matrix(G), mu, h, ell, s, seed, opt);
}

}  // namespace randnla
