#pragma once

// Krylov methods: LSQR for least squares, preconditioned CG for regularized
// psd systems, and Lanczos tridiagonalization.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "randnla/errors.hpp"
#include "randnla/linalg.hpp"

namespace randnla {

struct IterativeReport {
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;  // one entry per iteration
};

struct LsqrOptions {
    double tol = 1e-12;
    int maxit = 100;
    /// Called after every iteration with (iteration, current iterate).
    std::function<void(int, const Vector&)> observer;
};

struct LsqrResult {
    Vector z;
    IterativeReport report;
};

/// LSQR for min ||F z - g||, warm-started at z0.
///
/// Stopping rule. With ||F||_est the running Frobenius norm of the Golub-Kahan
/// bidiagonal and r = g - F z, the iteration stops when either
///   ||F^T r|| <= tol * ||F||_est * ||r||                  (normal equations), or
///   ||r||     <= tol * (||F||_est * ||z|| + ||g||)         (consistent system).
/// residual_history records ||F^T r|| / (||F||_est ||r||) each iteration (0 once
/// the residual vanishes). A zero bidiagonalization vector ends the iteration
/// with converged = true.
inline LsqrResult lsqr(const LinearOperator& F, const Vector& g, const LsqrOptions& opts, const Vector& z0) {
    if (g.size() != F.rows || z0.size() != F.cols) throw std::invalid_argument("lsqr: dimension mismatch");
    if (opts.tol < 0.0 || opts.maxit < 1) throw std::invalid_argument("lsqr: need tol >= 0 and maxit >= 1");

    LsqrResult out{z0, {}};
    const double gnorm = g.norm();

    Vector u = g - F.matvec(z0);
    double beta = u.norm();
    if (beta == 0.0) {
        out.report.converged = true;
        return out;
    }
    u /= beta;
    Vector v = F.rmatvec(u);
    double alpha = v.norm();
    if (alpha == 0.0) {
        out.report.converged = true;
        return out;
    }
    v /= alpha;

    Vector w = v;
    Vector dz = Vector::Zero(F.cols);
    double phibar = beta;
    double rhobar = alpha;
    double anorm2 = 0.0;

    for (int it = 1; it <= opts.maxit; ++it) {
        u = F.matvec(v) - alpha * u;
        beta = u.norm();
        anorm2 += alpha * alpha + beta * beta;
        if (beta > 0.0) u /= beta;

        v = F.rmatvec(u) - beta * v;
        alpha = v.norm();
        if (alpha > 0.0) v /= alpha;

        const double rho = std::hypot(rhobar, beta);
        const double c = rhobar / rho;
        const double s = beta / rho;
        const double theta = s * alpha;
        rhobar = -c * alpha;
        const double phi = c * phibar;
        phibar = s * phibar;

        dz += (phi / rho) * w;
        w = v - (theta / rho) * w;

        const Vector z = z0 + dz;
        const double anorm = std::sqrt(anorm2);
        const double rnorm = std::abs(phibar);
        const double arnorm = rnorm * alpha * std::abs(c);
        const double ratio = rnorm > 0.0 && anorm > 0.0 ? arnorm / (anorm * rnorm) : 0.0;

        out.report.iterations = it;
        out.report.residual_history.push_back(ratio);
        if (opts.observer) opts.observer(it, z);

        const bool consistent = rnorm <= opts.tol * (anorm * z.norm() + gnorm);
        const bool normal_eq = ratio <= opts.tol;
        const bool breakdown = alpha == 0.0 || beta == 0.0;
        if (consistent || normal_eq || breakdown) {
            out.z = z;
            out.report.converged = true;
            return out;
        }
        if (it == opts.maxit) out.z = z;
    }
    return out;
}

inline LsqrResult lsqr(const LinearOperator& F, const Vector& g, const LsqrOptions& opts) {
    return lsqr(F, g, opts, Vector::Zero(F.cols));
}

/// Optional backward-error diagnostic for an approximate least-squares solution:
/// ||F^T r|| / (||F||_F ||r||) using dense F. Zero when r = 0.
inline double normal_equation_residual(const Matrix& F, const Vector& g, const Vector& z) {
    const Vector r = g - F * z;
    const double rn = r.norm();
    if (rn == 0.0) return 0.0;
    return (F.transpose() * r).norm() / (F.norm() * rn);
}

struct PcgOptions {
    double tol = 1e-10;
    int maxit = 500;
};

struct PcgResult {
    Vector x;
    IterativeReport report;
};

/// Preconditioned conjugate gradients for (G + mu I) x = h.
///
/// `apply_Pinv` applies the inverse preconditioner. Stops when
/// ||(G + mu I) x - h|| / ||h|| <= tol (recursively updated residual).
inline PcgResult pcg(const LinearOperator& G, double mu, const Vector& h, const LinearOperator& apply_Pinv,
                     const PcgOptions& opts, const Vector& x0) {
    if (G.rows != G.cols || h.size() != G.rows || x0.size() != G.rows || apply_Pinv.rows != G.rows)
        throw std::invalid_argument("pcg: dimension mismatch");
    if (mu < 0.0) throw std::invalid_argument("pcg: mu must be nonnegative");

    PcgResult out{x0, {}};
    const double hnorm = h.norm();
    Vector r = h - (G.matvec(x0) + mu * x0);
    if (hnorm == 0.0) {
        if (r.norm() == 0.0) {
            out.report.converged = true;
            return out;
        }
        // h = 0 has the unique solution x = 0 for a definite system.
        out.x.setZero();
        out.report.converged = true;
        return out;
    }
    if (r.norm() / hnorm <= opts.tol) {
        out.report.converged = true;
        return out;
    }

    Vector z = apply_Pinv.matvec(r);
    Vector p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= opts.maxit; ++it) {
        const Vector q = G.matvec(p) + mu * p;
        const double curv = p.dot(q);
        if (!(curv > 0.0)) throw NegativeCurvature(it, curv);
        const double a = rz / curv;
        out.x += a * p;
        r -= a * q;
        const double rel = r.norm() / hnorm;
        out.report.iterations = it;
        out.report.residual_history.push_back(rel);
        if (rel <= opts.tol) {
            out.report.converged = true;
            return out;
        }
        z = apply_Pinv.matvec(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    return out;
}

inline PcgResult pcg(const LinearOperator& G, double mu, const Vector& h, const LinearOperator& apply_Pinv,
                     const PcgOptions& opts) {
    return pcg(G, mu, h, apply_Pinv, opts, Vector::Zero(h.size()));
}

enum class Reorth { none, full };

struct LanczosResult {
    Vector alpha;  // diagonal of the Jacobi matrix, length s' <= s
    Vector beta;   // off-diagonal, length s' - 1
    Matrix basis;  // n x s' Lanczos vectors
};

/// s steps of Lanczos on a symmetric operator, starting from unit vector v0.
///
/// Terminates early when beta_j <= 1e-12 * ||B||_est, where ||B||_est is the
/// running max of |alpha_j| + beta_{j-1} + beta_j; the invariant subspace has
/// been found and the output is shorter than s.
inline LanczosResult lanczos_tridiag(const LinearOperator& B, const Vector& v0, int s, Reorth reorth = Reorth::full) {
    if (B.rows != B.cols || v0.size() != B.rows) throw std::invalid_argument("lanczos: dimension mismatch");
    if (s < 1) throw std::invalid_argument("lanczos: need at least one step");
    if (std::abs(v0.norm() - 1.0) > 1e-12) throw std::invalid_argument("lanczos: start vector must have unit norm");

    const Index n = B.rows;
    const Index smax = std::min<Index>(s, n);
    Matrix V(n, smax);
    std::vector<double> alpha, beta;
    V.col(0) = v0;
    double normest = 0.0;
    for (Index j = 0; j < smax; ++j) {
        Vector w = B.matvec(V.col(j));
        const double a = V.col(j).dot(w);
        alpha.push_back(a);
        w -= a * V.col(j);
        const double bprev = j > 0 ? beta[static_cast<std::size_t>(j - 1)] : 0.0;
        if (j > 0) w -= bprev * V.col(j - 1);
        if (reorth == Reorth::full) {
            for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
        }
        if (j + 1 == smax) break;
        const double b = w.norm();
        normest = std::max(normest, std::abs(a) + bprev + b);
        if (b <= 1e-12 * normest) break;
        beta.push_back(b);
        V.col(j + 1) = w / b;
    }
    LanczosResult out;
    out.alpha = Eigen::Map<const Vector>(alpha.data(), static_cast<Index>(alpha.size()));
    out.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
    out.basis = V.leftCols(out.alpha.size());
    return out;
}

}  // namespace randnla
