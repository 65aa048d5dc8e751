#pragma once

// QR factorizations of tall matrices via Cholesky QR, optionally
// preconditioned by a sketch, and pivoted Cholesky QR for rank-deficient input.

#include <stdexcept>

#include "randnla/errors.hpp"
#include "randnla/linalg.hpp"
#include "randnla/rng.hpp"
#include "randnla/sketching.hpp"

namespace randnla {

/// R = chol(A^T A), Q = A R^{-1}. Fails (NotPositiveDefinite, with the pivot)
/// once cond(A) approaches eps^{-1/2}.
inline QRFactors chol_qr(const Matrix& A) {
    Matrix R;
    try {
        R = chol(A.transpose() * A);
    } catch (const NotPositiveDefinite& e) {
        throw NotPositiveDefinite(e.pivot(), "chol_qr");
    }
    return {right_solve_upper(A, R), R};
}

/// Cholesky QR of A R_sk^{-1}, with R_sk from a QR of the sketch S A.
inline QRFactors rand_chol_qr(const Matrix& A, Index d, RngKey seed, SketchConfig cfg = {}) {
    const Index m = A.rows(), n = A.cols();
    if (d < n || d > m) throw std::invalid_argument("rand_chol_qr: need n <= d <= m");
    const Matrix Ask = make_sketch(cfg, d, m, seed).apply(A, Side::left);
    const Matrix Rsk = qr_econ(Ask).R;
    const Vector diag = Rsk.diagonal().cwiseAbs();
    if (n > 0 && diag.minCoeff() <= rank_tolerance(d, n, diag.maxCoeff()))
        throw RankDeficient("rand_chol_qr: sketch is rank deficient; use sap_chol_qrcp");
    QRFactors pre = chol_qr(right_solve_upper(A, Rsk));
    return {pre.Q, pre.R * Rsk};
}

struct PivotedQR {
    Matrix Q;       // m x k
    Matrix R;       // k x n
    IndexVector J;  // length n, A[:, J] ~= Q R
    Index rank = 0;
    int retries = 0;  // rank reductions after Cholesky failures
};

/// QRCP via sketch-and-precondition and Cholesky QR.
///
/// The rank k is the number of |R_sk[i,i]| above max(d, n) eps |R_sk[0,0]|.
/// If Cholesky QR of the preconditioned block fails at pivot p, k is lowered
/// to p and the step repeated.
inline PivotedQR sap_chol_qrcp(const Matrix& A, Index d, RngKey seed, SketchConfig cfg = {}) {
    const Index m = A.rows(), n = A.cols();
    if (d < n || d > m) throw std::invalid_argument("sap_chol_qrcp: need n <= d <= m");
    const Matrix Ask = make_sketch(cfg, d, m, seed).apply(A, Side::left);
    const QRCPFactors f = qrcp(Ask);
    PivotedQR out;
    out.J = f.J;
    Index k = 0;
    if (n > 0 && std::abs(f.R(0, 0)) > 0.0) {
        const double tol = rank_tolerance(d, n, std::abs(f.R(0, 0)));
        while (k < std::min(d, n) && std::abs(f.R(k, k)) > tol) ++k;
    }
    const IndexVector lead(f.J.begin(), f.J.end());
    for (;;) {
        if (k == 0) {
            out.Q = Matrix::Zero(m, 0);
            out.R = Matrix::Zero(0, n);
            out.rank = 0;
            return out;
        }
        const IndexVector Jk(lead.begin(), lead.begin() + k);
        const Matrix Apre = right_solve_upper(select_columns(A, Jk), f.R.topLeftCorner(k, k));
        try {
            QRFactors pre = chol_qr(Apre);
            out.Q = std::move(pre.Q);
            out.R = pre.R * f.R.topRows(k);
            out.rank = k;
            return out;
        } catch (const NotPositiveDefinite& e) {
            k = static_cast<Index>(e.pivot());
            ++out.retries;
        }
    }
}

inline Index default_qrcp_sketch_dim(Index m, Index n) { return std::min(m, 4 * n); }

}  // namespace randnla
