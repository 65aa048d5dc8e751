#pragma once

// Leverage scores: exact, sketched approximations, rank-k subspace scores,
// and the induced sampling distributions.

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "randnla/linalg.hpp"
#include "randnla/lowrank.hpp"
#include "randnla/rng.hpp"
#include "randnla/sketching.hpp"

namespace randnla {

enum class LeverageKind { standard, rank_k };

struct LeverageScores {
    Vector scores;
    LeverageKind kind = LeverageKind::standard;
    std::optional<Index> k;
    bool truncated = false;  // a sketch was rank deficient and a pseudoinverse was used
};

/// Squared row norms of an orthonormal basis for range(A) (numerical rank).
inline LeverageScores exact_leverage(const Matrix& A) {
    if (A.rows() < A.cols()) throw std::invalid_argument("exact_leverage: need m >= n");
    const SVDFactors f = truncated_svd(A);
    return {f.U.rowwise().squaredNorm(), LeverageKind::standard, std::nullopt, false};
}

/// Two-sketch approximation. `sketch_A` must return S1 A and `mul_A(X)` must
/// return A X; each is called exactly once, so A is accessed twice.
/// S2 is r x d2 where r is the number of retained singular values of S1 A;
/// `make_S2(r)` builds it.
inline LeverageScores approx_leverage(Index m, const std::function<Matrix()>& sketch_A,
                                      const std::function<Matrix(const Matrix&)>& mul_A,
                                      const std::function<Matrix(Index)>& make_S2) {
    const Matrix SA = sketch_A();
    const SVDFactors f = truncated_svd(SA);
    LeverageScores out;
    out.truncated = f.sigma.size() < SA.cols();
    const Matrix S2 = make_S2(f.sigma.size());
    const Matrix Omega = f.V * (f.sigma.cwiseInverse().asDiagonal() * S2);
    const Matrix AO = mul_A(Omega);
    if (AO.rows() != m) throw std::invalid_argument("approx_leverage: multiply returned wrong row count");
    out.scores = AO.rowwise().squaredNorm();
    return out;
}

/// SRFT S1 (d1 x m, sub-streams 0 and 1) and Gaussian S2 scaled by 1/sqrt(d2) (sub-stream 2).
inline LeverageScores approx_leverage(const Matrix& A, Index d1, Index d2, RngKey seed) {
    const Index m = A.rows(), n = A.cols();
    if (d1 < n || d1 > m) throw std::invalid_argument("approx_leverage: need n <= d1 <= m");
    if (d2 < 1) throw std::invalid_argument("approx_leverage: need d2 >= 1");
    const SrftOp S1 = sample_srft(d1, m, seed.substream(0));
    return approx_leverage(
        m, [&] { return S1.apply_left(A); }, [&](const Matrix& X) -> Matrix { return A * X; },
        [&](Index r) -> Matrix {
            return gaussian_matrix(r, d2, seed.substream(2)) / std::sqrt(static_cast<double>(d2));
        });
}

inline Index default_leverage_d2(Index m) {
    return static_cast<Index>(std::ceil(8.0 * std::log(static_cast<double>(m))));
}

/// Rank-k leverage scores from the top-k left singular vectors of a rank-(k+s) QB.
inline LeverageScores subspace_leverage(const Matrix& A, Index k, Index s, RngKey seed, const TsogOptions& tsog = {}) {
    if (k < 1 || s < 0 || k + s > std::min(A.rows(), A.cols()))
        throw std::invalid_argument("subspace_leverage: need k + s <= min(m, n)");
    const QBFactors qb = qb1(A, k + s, seed, tsog);
    const SVDFactors f = svd(qb.B);
    const Index r = std::min(k, f.sigma.size());
    const Matrix Uk = qb.Q * f.U.leftCols(r);
    return {Uk.rowwise().squaredNorm(), LeverageKind::rank_k, k, r < k};
}

/// p_i = l_i / sum_j l_j.
inline Vector leverage_distribution(const Vector& scores) {
    if (scores.size() == 0 || (scores.array() < 0.0).any() || !scores.allFinite())
        throw std::invalid_argument("leverage_distribution: scores must be finite and nonnegative");
    const double total = scores.sum();
    if (!(total > 0.0)) throw std::invalid_argument("leverage_distribution: all scores are zero");
    return scores / total;
}

inline double coherence(const LeverageScores& l) {
    return static_cast<double>(l.scores.size()) * l.scores.maxCoeff();
}

inline void write_leverage_csv(std::ostream& os, const Vector& scores) {
    os << "row,score\n";
    os.precision(17);
    for (Index i = 0; i < scores.size(); ++i) os << i << ',' << scores(i) << '\n';
}

}  // namespace randnla
