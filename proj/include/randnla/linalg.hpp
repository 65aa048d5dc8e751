#pragma once

// Dense deterministic kernels. Everything that needs a dense factorization goes
// through this header so the backing library (Eigen) sits behind one seam.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "randnla/errors.hpp"

namespace randnla {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexVector = std::vector<Index>;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Numerical-rank threshold max(rows, cols) * eps * sigma_max.
inline double rank_tolerance(Index rows, Index cols, double sigma_max) noexcept {
    return static_cast<double>(std::max(rows, cols)) * kEps * sigma_max;
}

struct QRFactors {
    Matrix Q;  // m x min(m,n), orthonormal columns
    Matrix R;  // min(m,n) x n, upper trapezoidal, nonnegative diagonal
};

struct QRCPFactors {
    Matrix Q;     // m x r
    Matrix R;     // r x n, upper trapezoidal; |R_ii| nonincreasing
    IndexVector J;  // length n, zero-based; A[:, J] = Q R
};

struct SVDFactors {
    Matrix U;      // m x r
    Vector sigma;  // r, nonincreasing
    Matrix V;      // n x r
};

struct EighFactors {
    Vector lambda;  // ascending
    Matrix V;       // columns are eigenvectors
};

namespace detail {

// Flip signs so that diag(R) >= 0, compensating in Q.
inline void normalize_qr_signs(Matrix& Q, Matrix& R) {
    const Index r = std::min(R.rows(), R.cols());
    for (Index i = 0; i < r; ++i) {
        if (R(i, i) < 0.0) {
            R.row(i) *= -1.0;
            Q.col(i) *= -1.0;
        }
    }
}

}  // namespace detail

/// Economic Householder QR.
inline QRFactors qr_econ(const Matrix& A) {
    const Index m = A.rows(), n = A.cols(), r = std::min(m, n);
    Eigen::HouseholderQR<Matrix> qr(A);
    QRFactors out;
    out.Q = qr.householderQ() * Matrix::Identity(m, r);
    out.R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    detail::normalize_qr_signs(out.Q, out.R);
    return out;
}

/// Householder QR with column pivoting, A[:, J] = Q R.
///
/// With `k >= 0` the returned factors are truncated to the leading k pivots
/// (Q is m x k, R is k x n); J always has length n.
inline QRCPFactors qrcp(const Matrix& A, Index k = -1) {
    const Index m = A.rows(), n = A.cols(), r = std::min(m, n);
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    QRCPFactors out;
    out.Q = qr.householderQ() * Matrix::Identity(m, r);
    out.R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    detail::normalize_qr_signs(out.Q, out.R);
    const auto& perm = qr.colsPermutation().indices();
    out.J.assign(perm.data(), perm.data() + perm.size());
    if (k >= 0 && k < r) {
        out.Q.conservativeResize(Eigen::NoChange, k);
        out.R.conservativeResize(k, Eigen::NoChange);
    }
    return out;
}

/// Upper-triangular R with R^T R = A. Only the upper triangle of A is read.
///
/// Throws NotPositiveDefinite naming the first pivot that is not strictly
/// positive (or not finite).
inline Matrix chol(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("chol: matrix must be square");
    const Index n = A.rows();
    Matrix R = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        const double d = A(j, j) - R.col(j).head(j).squaredNorm();
        if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(j);
        const double rjj = std::sqrt(d);
        R(j, j) = rjj;
        if (j + 1 < n) {
            const Index t = n - j - 1;
            R.row(j).tail(t) =
                (A.row(j).tail(t) - R.col(j).head(j).transpose() * R.block(0, j + 1, j, t)) / rjj;
        }
    }
    return R;
}

/// Thin SVD, singular values nonincreasing.
inline SVDFactors svd(const Matrix& A) {
    SVDFactors out;
    if (A.size() == 0) {
        out.U = Matrix::Zero(A.rows(), 0);
        out.V = Matrix::Zero(A.cols(), 0);
        out.sigma = Vector::Zero(0);
        return out;
    }
    Eigen::BDCSVD<Matrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = dec.matrixU();
    out.sigma = dec.singularValues();
    out.V = dec.matrixV();
    return out;
}

inline Vector singular_values(const Matrix& A) {
    if (A.size() == 0) return Vector::Zero(0);
    return Eigen::BDCSVD<Matrix>(A).singularValues();
}

/// Symmetric eigendecomposition; only the lower triangle of A is read.
inline EighFactors eigh(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("eigh: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigh: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

inline double spectral_norm(const Matrix& A) {
    if (A.size() == 0) return 0.0;
    return singular_values(A)(0);
}

inline double condition_number(const Matrix& A) {
    const Vector s = singular_values(A);
    if (s.size() == 0) return 1.0;
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

/// Truncate an SVD to its numerical rank.
inline Index numerical_rank(const Vector& sigma, Index rows, Index cols) {
    if (sigma.size() == 0) return 0;
    const double tol = rank_tolerance(rows, cols, sigma(0));
    Index r = 0;
    while (r < sigma.size() && sigma(r) > tol) ++r;
    return r;
}

inline SVDFactors truncated_svd(const Matrix& A) {
    SVDFactors f = svd(A);
    const Index r = numerical_rank(f.sigma, A.rows(), A.cols());
    f.U.conservativeResize(Eigen::NoChange, r);
    f.V.conservativeResize(Eigen::NoChange, r);
    f.sigma.conservativeResize(r);
    return f;
}

/// Moore-Penrose pseudoinverse via the SVD, numerical-rank truncated.
inline Matrix pinv(const Matrix& A) {
    const SVDFactors f = truncated_svd(A);
    return f.V * f.sigma.cwiseInverse().asDiagonal() * f.U.transpose();
}

/// Minimum-norm least-squares solution of min ||A X - B||.
inline Matrix pinv_solve(const Matrix& A, const Matrix& B) {
    const SVDFactors f = truncated_svd(A);
    return f.V * (f.sigma.cwiseInverse().asDiagonal() * (f.U.transpose() * B));
}

/// Orthonormal basis for range(Y), dropping numerically dependent columns.
inline Matrix orth(const Matrix& Y) {
    if (Y.cols() == 0) return Matrix::Zero(Y.rows(), 0);
    const QRCPFactors f = qrcp(Y);
    const Index r = std::min(Y.rows(), Y.cols());
    Index rank = 0;
    if (r > 0 && f.R(0, 0) > 0.0) {
        const double tol = rank_tolerance(Y.rows(), Y.cols(), std::abs(f.R(0, 0)));
        while (rank < r && std::abs(f.R(rank, rank)) > tol) ++rank;
    }
    return f.Q.leftCols(rank);
}

/// Solve X R = B for X with R upper triangular (X = B R^{-1}).
inline Matrix right_solve_upper(const Matrix& B, const Matrix& R) {
    return R.transpose().triangularView<Eigen::Lower>().solve(B.transpose()).transpose();
}

inline Matrix select_columns(const Matrix& A, const IndexVector& idx) {
    Matrix out(A.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = A.col(idx[j]);
    return out;
}

inline Matrix select_rows(const Matrix& A, const IndexVector& idx) {
    Matrix out(static_cast<Index>(idx.size()), A.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = A.row(idx[i]);
    return out;
}

/// Largest principal angle (radians) between range(Q2) and range(Q1), both
/// orthonormal, with cols(Q2) <= cols(Q1). Computed from the sine, which stays
/// accurate for tiny angles.
inline double max_principal_angle(const Matrix& Q1, const Matrix& Q2) {
    if (Q2.cols() == 0) return 0.0;
    const Matrix resid = Q2 - Q1 * (Q1.transpose() * Q2);
    return std::asin(std::min(1.0, spectral_norm(resid)));
}

// ---------------------------------------------------------------------------
// Implicit operators

/// A linear map accessed only through block products A X and A^T Y.
///
/// Implementations must be safe to call concurrently.
struct LinearOperator {
    Index rows = 0;
    Index cols = 0;
    std::function<Matrix(const Matrix&)> apply;
    std::function<Matrix(const Matrix&)> apply_adjoint;

    [[nodiscard]] Matrix operator*(const Matrix& X) const { return apply(X); }
    [[nodiscard]] Vector matvec(const Vector& x) const { return apply(x); }
    [[nodiscard]] Vector rmatvec(const Vector& y) const { return apply_adjoint(y); }

    [[nodiscard]] LinearOperator adjoint() const { return {cols, rows, apply_adjoint, apply}; }

    /// Non-owning view of a dense matrix; `A` must outlive the operator.
    static LinearOperator from_matrix(const Matrix& A) {
        const Matrix* p = &A;
        return {A.rows(), A.cols(), [p](const Matrix& X) -> Matrix { return (*p) * X; },
                [p](const Matrix& Y) -> Matrix { return p->transpose() * Y; }};
    }

    static LinearOperator owning(Matrix A) {
        auto p = std::make_shared<const Matrix>(std::move(A));
        return {p->rows(), p->cols(), [p](const Matrix& X) -> Matrix { return (*p) * X; },
                [p](const Matrix& Y) -> Matrix { return p->transpose() * Y; }};
    }

    static LinearOperator identity(Index n) {
        auto id = [](const Matrix& X) -> Matrix { return X; };
        return {n, n, id, id};
    }

    static LinearOperator zero(Index rows, Index cols) {
        return {rows, cols, [rows](const Matrix& X) -> Matrix { return Matrix::Zero(rows, X.cols()); },
                [cols](const Matrix& Y) -> Matrix { return Matrix::Zero(cols, Y.cols()); }};
    }
};

/// Materialize an operator densely with `cols` products against identity columns.
inline Matrix to_dense(const LinearOperator& op) { return op.apply(Matrix::Identity(op.cols, op.cols)); }

}  // namespace randnla
