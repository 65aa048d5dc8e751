#pragma once

// Bootstrap a-posteriori error estimates for sketch-and-solve least squares
// and sketch-and-solve SVD. Replicate r resamples rows with sub-stream r of the
// seed, so results do not depend on how replicates are scheduled.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "randnla/linalg.hpp"
#include "randnla/parallel.hpp"
#include "randnla/rng.hpp"

namespace randnla {

enum class ErrorNorm { l2, linf };

struct BootstrapResult {
    double quantile_estimate = 0.0;
    double alpha = 0.1;
    Index B = 0;
    std::vector<double> replicate_errors;
};

/// Smallest order statistic t with #{e <= t} >= (1 - alpha) B.
inline double empirical_quantile(std::vector<double> values, double level) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile: no values");
    std::sort(values.begin(), values.end());
    const auto B = static_cast<double>(values.size());
    auto idx = static_cast<long long>(std::ceil(level * B - 1e-12)) - 1;
    idx = std::clamp<long long>(idx, 0, static_cast<long long>(values.size()) - 1);
    return values[static_cast<std::size_t>(idx)];
}

inline IndexVector bootstrap_indices(Index d, RngKey key) {
    IndexVector idx(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i)
        idx[static_cast<std::size_t>(i)] =
            static_cast<Index>(uniform_index_at(key, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(d)));
    return idx;
}

namespace detail {

inline void check_bootstrap_args(Index B, double alpha) {
    if (B < 1) throw std::invalid_argument("bootstrap: need B >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bootstrap: alpha must lie in (0, 1)");
}

inline BootstrapResult finish(std::vector<double> errs, double alpha) {
    BootstrapResult r;
    r.alpha = alpha;
    r.B = static_cast<Index>(errs.size());
    r.quantile_estimate = empirical_quantile(errs, 1.0 - alpha);
    r.replicate_errors = std::move(errs);
    return r;
}

}  // namespace detail

/// Bootstrap (1 - alpha)-quantile of ||x_tilde - x_hat|| where x_tilde solves
/// the least squares problem on d rows resampled with replacement.
inline BootstrapResult bootstrap_ls(const Matrix& A_hat, const Vector& b_hat, const Vector& x_hat, Index B,
                                    double alpha, ErrorNorm norm, RngKey seed, unsigned threads = 1) {
    const Index d = A_hat.rows(), n = A_hat.cols();
    if (d < n) throw std::invalid_argument("bootstrap_ls: need d >= n");
    if (b_hat.size() != d || x_hat.size() != n) throw std::invalid_argument("bootstrap_ls: dimension mismatch");
    detail::check_bootstrap_args(B, alpha);
    std::vector<double> errs(static_cast<std::size_t>(B));
    parallel_for(errs.size(), threads, [&](std::size_t r) {
        const IndexVector idx = bootstrap_indices(d, seed.substream(r));
        Vector bs(d);
        for (Index i = 0; i < d; ++i) bs(i) = b_hat(idx[static_cast<std::size_t>(i)]);
        const Vector xt = pinv_solve(select_rows(A_hat, idx), bs);
        const Vector diff = xt - x_hat;
        errs[r] = norm == ErrorNorm::l2 ? diff.norm() : diff.cwiseAbs().maxCoeff();
    });
    return detail::finish(std::move(errs), alpha);
}

/// Sign-invariant distance min(||u - v||, ||u + v||).
inline double sign_invariant_distance(const Vector& u, const Vector& v) {
    return std::min((u - v).norm(), (u + v).norm());
}

struct BootstrapSvdResult {
    BootstrapResult sigma;  // max_j |sigma_tilde_j - sigma_hat_j|
    BootstrapResult V;      // max_j rho(v_tilde_j, v_hat_j)
};

/// Bootstrap quantiles for the top-k singular values and right singular
/// vectors of A_hat. A singular value missing from a resample's spectrum
/// counts as 0 (and its vector as 0).
inline BootstrapSvdResult bootstrap_svd(const Matrix& A_hat, Index k, Index B, double alpha, RngKey seed,
                                        unsigned threads = 1) {
    const Index d = A_hat.rows(), n = A_hat.cols();
    if (k < 1 || d < k || n < k) throw std::invalid_argument("bootstrap_svd: need 1 <= k <= min(d, n)");
    detail::check_bootstrap_args(B, alpha);
    const SVDFactors ref = svd(A_hat);
    std::vector<double> es(static_cast<std::size_t>(B)), ev(static_cast<std::size_t>(B));
    parallel_for(es.size(), threads, [&](std::size_t r) {
        const IndexVector idx = bootstrap_indices(d, seed.substream(r));
        const SVDFactors f = svd(select_rows(A_hat, idx));
        double ms = 0.0, mv = 0.0;
        for (Index j = 0; j < k; ++j) {
            const bool have = j < f.sigma.size();
            const double st = have ? f.sigma(j) : 0.0;
            ms = std::max(ms, std::abs(st - ref.sigma(j)));
            const Vector vt = have ? Vector(f.V.col(j)) : Vector::Zero(n);
            mv = std::max(mv, sign_invariant_distance(vt, ref.V.col(j)));
        }
        es[r] = ms;
        ev[r] = mv;
    });
    return {detail::finish(std::move(es), alpha), detail::finish(std::move(ev), alpha)};
}

}  // namespace randnla
