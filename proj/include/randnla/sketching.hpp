#pragma once

// Data-oblivious sketching operators.
//
// Every operator is an immutable value determined by its shape, parameters and
// RngKey. Operators are stored in their natural orientation (wide for SASOs,
// row samplers and SRFTs) and the other orientation is obtained with
// SketchOp::transposed(), which reuses the same kernels through the identities
//   S^T X = (X^T S)^T   and   X S^T = (S X^T)^T.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "randnla/linalg.hpp"
#include "randnla/rng.hpp"

namespace randnla {

enum class Side { left, right };
enum class Orientation { wide, tall };
enum class DenseFamily { gaussian, rademacher, uniform, haar };
enum class SasoMethod { replacement_free, blocked };

inline std::string to_string(DenseFamily f) {
    switch (f) {
        case DenseFamily::gaussian: return "gaussian";
        case DenseFamily::rademacher: return "rademacher";
        case DenseFamily::uniform: return "uniform";
        case DenseFamily::haar: return "haar";
    }
    return "?";
}

inline std::string to_string(SasoMethod m) {
    return m == SasoMethod::replacement_free ? "replacement_free" : "blocked";
}

// ---------------------------------------------------------------------------
// Dense operators

/// Dense operator with iid entries (gaussian: N(0,1), rademacher: +-1,
/// uniform: U[-1,1)) or a Haar-distributed operator with orthonormal rows
/// (wide) or columns (tall). Entry (i, j) of a d x m operator is drawn at
/// counter offset i + d * j.
class DenseSketchOp {
  public:
    DenseSketchOp(DenseFamily family, Index d, Index m, RngKey seed, Orientation orientation)
        : family_(family), d_(d), m_(m), seed_(seed), orientation_(orientation) {
        if (d < 1 || m < 1) throw std::invalid_argument("dense sketch: dimensions must be positive");
        if (orientation == Orientation::wide && d > m)
            throw std::invalid_argument("dense sketch: wide orientation requires d <= m");
        if (orientation == Orientation::tall && d < m)
            throw std::invalid_argument("dense sketch: tall orientation requires d >= m");
        data_ = std::make_shared<const Matrix>(generate());
    }

    [[nodiscard]] Index rows() const noexcept { return d_; }
    [[nodiscard]] Index cols() const noexcept { return m_; }
    [[nodiscard]] DenseFamily family() const noexcept { return family_; }
    [[nodiscard]] Orientation orientation() const noexcept { return orientation_; }
    [[nodiscard]] const RngKey& seed() const noexcept { return seed_; }
    [[nodiscard]] const Matrix& dense() const noexcept { return *data_; }

    [[nodiscard]] Matrix apply_left(const Matrix& A) const { return dense() * A; }
    [[nodiscard]] Matrix apply_right(const Matrix& A) const { return A * dense(); }
    [[nodiscard]] Matrix materialize() const { return dense(); }

    /// The iid entry at (i, j) before any Haar orthonormalization.
    [[nodiscard]] double raw_entry(Index i, Index j) const noexcept {
        const auto c = static_cast<std::uint64_t>(i + d_ * j);
        switch (family_) {
            case DenseFamily::rademacher: return rademacher_at(seed_, c);
            case DenseFamily::uniform: return 2.0 * uniform_at(seed_, c) - 1.0;
            case DenseFamily::gaussian:
            case DenseFamily::haar: return gaussian_at(seed_, c);
        }
        return 0.0;
    }

  private:
    Matrix generate() const {
        // Column-major storage walks counters i + d j in order, so bulk
        // streams give the same values as raw_entry.
        const auto count = static_cast<std::size_t>(d_ * m_);
        std::vector<double> v;
        switch (family_) {
            case DenseFamily::rademacher: v = rademacher_stream(seed_, count); break;
            case DenseFamily::uniform:
                v = uniform_stream(seed_, count);
                for (double& x : v) x = 2.0 * x - 1.0;
                break;
            case DenseFamily::gaussian:
            case DenseFamily::haar: v = gaussian_stream(seed_, count); break;
        }
        Matrix S = Eigen::Map<const Matrix>(v.data(), d_, m_);
        if (family_ != DenseFamily::haar) return S;
        // QR of a Gaussian matrix with diag(R) > 0 gives a Haar-distributed Q.
        if (orientation_ == Orientation::wide) return qr_econ(S.transpose()).Q.transpose();
        return qr_econ(S).Q;
    }

    DenseFamily family_;
    Index d_, m_;
    RngKey seed_;
    Orientation orientation_;
    std::shared_ptr<const Matrix> data_;
};

// ---------------------------------------------------------------------------
// Short-axis-sparse operators

/// Wide d x m operator with exactly k nonzeros of value +-1/sqrt(k) in every
/// column, stored column-compressed (k row indices per column).
///
/// Column j consumes counters [2kj, 2kj + 2k) of its key: the first k drive
/// row selection, the last k the signs. replacement_free draws the k rows by a
/// partial Fisher-Yates shuffle of 0..d-1 (draw t swaps position t with
/// t + floor(u_t (d - t))). blocked splits the rows into k contiguous blocks
/// [floor(b d / k), floor((b + 1) d / k)) and picks one row uniformly per block.
class Saso {
  public:
    Saso(Index d, Index m, Index k, RngKey seed, SasoMethod method)
        : d_(d), m_(m), k_(k), seed_(seed), method_(method) {
        if (d < 1 || m < 1) throw std::invalid_argument("saso: dimensions must be positive");
        if (k < 1 || k > d) throw std::invalid_argument("saso: need 1 <= k <= d");
        auto rows = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(m * k));
        auto vals = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m * k));
        const double v = 1.0 / std::sqrt(static_cast<double>(k));
        const auto kk = static_cast<std::uint64_t>(k);
        std::vector<Index> perm(static_cast<std::size_t>(method == SasoMethod::replacement_free ? d : 0));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::vector<std::pair<Index, Index>> swaps;
        for (Index j = 0; j < m; ++j) {
            const RngKey col = seed.advanced(2 * kk * static_cast<std::uint64_t>(j));
            Index* r = rows->data() + j * k;
            if (method == SasoMethod::replacement_free) {
                swaps.clear();
                for (Index t = 0; t < k; ++t) {
                    const auto span = static_cast<std::uint64_t>(d - t);
                    const Index pick = t + static_cast<Index>(uniform_index_at(col, static_cast<std::uint64_t>(t), span));
                    std::swap(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(pick)]);
                    swaps.emplace_back(t, pick);
                    r[t] = perm[static_cast<std::size_t>(t)];
                }
                for (auto it = swaps.rbegin(); it != swaps.rend(); ++it)
                    std::swap(perm[static_cast<std::size_t>(it->first)], perm[static_cast<std::size_t>(it->second)]);
            } else {
                for (Index b = 0; b < k; ++b) {
                    const Index lo = b * d / k, hi = (b + 1) * d / k;
                    r[b] = lo + static_cast<Index>(uniform_index_at(col, static_cast<std::uint64_t>(b),
                                                                    static_cast<std::uint64_t>(hi - lo)));
                }
            }
            for (Index t = 0; t < k; ++t)
                (*vals)[static_cast<std::size_t>(j * k + t)] = rademacher_at(col, kk + static_cast<std::uint64_t>(t)) * v;
        }
        rows_ = std::move(rows);
        vals_ = std::move(vals);
    }

    [[nodiscard]] Index rows() const noexcept { return d_; }
    [[nodiscard]] Index cols() const noexcept { return m_; }
    [[nodiscard]] Index nnz_per_column() const noexcept { return k_; }
    [[nodiscard]] SasoMethod method() const noexcept { return method_; }
    [[nodiscard]] const RngKey& seed() const noexcept { return seed_; }
    [[nodiscard]] const std::vector<Index>& row_indices() const noexcept { return *rows_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return *vals_; }

    /// S A, accumulating outer products of the columns of S with rows of A.
    [[nodiscard]] Matrix apply_left(const Matrix& A) const {
        if (A.rows() != m_) throw std::invalid_argument("saso: left application dimension mismatch");
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        const RowMajor Ar = A;
        RowMajor out = RowMajor::Zero(d_, A.cols());
        const auto& r = *rows_;
        const auto& v = *vals_;
        for (Index j = 0; j < m_; ++j)
            for (Index t = 0; t < k_; ++t) {
                const auto p = static_cast<std::size_t>(j * k_ + t);
                out.row(r[p]) += v[p] * Ar.row(j);
            }
        return out;
    }

    /// A S, one sparse gather of columns of A per output column.
    [[nodiscard]] Matrix apply_right(const Matrix& A) const {
        if (A.cols() != d_) throw std::invalid_argument("saso: right application dimension mismatch");
        Matrix out = Matrix::Zero(A.rows(), m_);
        const auto& r = *rows_;
        const auto& v = *vals_;
        for (Index j = 0; j < m_; ++j)
            for (Index t = 0; t < k_; ++t) {
                const auto p = static_cast<std::size_t>(j * k_ + t);
                out.col(j) += v[p] * A.col(r[p]);
            }
        return out;
    }

    [[nodiscard]] Matrix materialize() const {
        Matrix S = Matrix::Zero(d_, m_);
        for (Index j = 0; j < m_; ++j)
            for (Index t = 0; t < k_; ++t) {
                const auto p = static_cast<std::size_t>(j * k_ + t);
                S((*rows_)[p], j) += (*vals_)[p];
            }
        return S;
    }

  private:
    Index d_, m_, k_;
    RngKey seed_;
    SasoMethod method_;
    std::shared_ptr<const std::vector<Index>> rows_;
    std::shared_ptr<const std::vector<double>> vals_;
};

// ---------------------------------------------------------------------------
// Row sampling

/// d x m operator whose row i is e_{t_i}^T / sqrt(d q_{t_i}), with t_1..t_d
/// drawn iid from q by inverse-CDF sampling on uniform element i of the key.
class RowSampleOp {
  public:
    RowSampleOp(Index d, Vector q, RngKey seed) : d_(d), seed_(seed) {
        if (d < 1 || q.size() < 1) throw std::invalid_argument("row sampler: dimensions must be positive");
        if ((q.array() < 0.0).any() || !q.allFinite())
            throw std::invalid_argument("row sampler: probabilities must be finite and nonnegative");
        const double total = q.sum();
        if (!(total > 0.0) || std::abs(total - 1.0) > 1e-8)
            throw std::invalid_argument("row sampler: probabilities must sum to 1");
        q /= total;
        m_ = q.size();
        std::vector<double> cdf(static_cast<std::size_t>(m_));
        std::partial_sum(q.data(), q.data() + m_, cdf.begin());
        Index last_positive = m_ - 1;
        while (last_positive > 0 && q(last_positive) == 0.0) --last_positive;
        indices_.resize(static_cast<std::size_t>(d));
        scales_.resize(static_cast<std::size_t>(d));
        for (Index i = 0; i < d; ++i) {
            const double u = uniform_at(seed, static_cast<std::uint64_t>(i)) * cdf.back();
            auto t = static_cast<Index>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            t = std::min(t, last_positive);
            indices_[static_cast<std::size_t>(i)] = t;
            scales_[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(d) * q(t));
        }
        q_ = std::make_shared<const Vector>(std::move(q));
    }

    [[nodiscard]] Index rows() const noexcept { return d_; }
    [[nodiscard]] Index cols() const noexcept { return m_; }
    [[nodiscard]] const RngKey& seed() const noexcept { return seed_; }
    [[nodiscard]] const Vector& probabilities() const noexcept { return *q_; }
    [[nodiscard]] const std::vector<Index>& indices() const noexcept { return indices_; }
    [[nodiscard]] const std::vector<double>& scales() const noexcept { return scales_; }

    [[nodiscard]] Matrix apply_left(const Matrix& A) const {
        if (A.rows() != m_) throw std::invalid_argument("row sampler: left application dimension mismatch");
        Matrix out(d_, A.cols());
        for (Index i = 0; i < d_; ++i)
            out.row(i) = scales_[static_cast<std::size_t>(i)] * A.row(indices_[static_cast<std::size_t>(i)]);
        return out;
    }

    [[nodiscard]] Matrix apply_right(const Matrix& A) const {
        if (A.cols() != d_) throw std::invalid_argument("row sampler: right application dimension mismatch");
        Matrix out = Matrix::Zero(A.rows(), m_);
        for (Index i = 0; i < d_; ++i)
            out.col(indices_[static_cast<std::size_t>(i)]) += scales_[static_cast<std::size_t>(i)] * A.col(i);
        return out;
    }

    [[nodiscard]] Matrix materialize() const { return apply_left(Matrix::Identity(m_, m_)); }

  private:
    Index d_ = 0, m_ = 0;
    RngKey seed_;
    std::shared_ptr<const Vector> q_;
    std::vector<Index> indices_;
    std::vector<double> scales_;
};

// ---------------------------------------------------------------------------
// Subsampled randomized Hadamard transform

/// In-place unnormalized fast Walsh-Hadamard transform; x.size() must be a power of two.
inline void fwht(double* x, Index n) noexcept {
    for (Index h = 1; h < n; h <<= 1)
        for (Index i = 0; i < n; i += h << 1)
            for (Index j = i; j < i + h; ++j) {
                const double a = x[j], b = x[j + h];
                x[j] = a + b;
                x[j + h] = a - b;
            }
}

inline Index next_pow2(Index m) {
    Index p = 1;
    while (p < m) p <<= 1;
    return p;
}

/// d x m SRFT  S = sqrt(mp / d) R H D P, where P zero-pads to mp = next power
/// of two >= m, D holds m random signs, H is the orthonormal Walsh-Hadamard
/// matrix of order mp, and R keeps d distinct coordinates. Signs use substream
/// 0 of the key, coordinates a partial Fisher-Yates shuffle on substream 1.
class SrftOp {
  public:
    SrftOp(Index d, Index m, RngKey seed) : d_(d), m_(m), mp_(next_pow2(m)), seed_(seed) {
        if (d < 1 || m < 1) throw std::invalid_argument("srft: dimensions must be positive");
        if (d > m) throw std::invalid_argument("srft: need d <= m");
        signs_ = rademacher_stream(seed.substream(0), static_cast<std::size_t>(m));
        const RngKey pick = seed.substream(1);
        std::vector<Index> perm(static_cast<std::size_t>(mp_));
        std::iota(perm.begin(), perm.end(), Index{0});
        coords_.resize(static_cast<std::size_t>(d));
        for (Index t = 0; t < d; ++t) {
            const Index r =
                t + static_cast<Index>(uniform_index_at(pick, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(mp_ - t)));
            std::swap(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(r)]);
            coords_[static_cast<std::size_t>(t)] = perm[static_cast<std::size_t>(t)];
        }
    }

    [[nodiscard]] Index rows() const noexcept { return d_; }
    [[nodiscard]] Index cols() const noexcept { return m_; }
    [[nodiscard]] Index padded_length() const noexcept { return mp_; }
    [[nodiscard]] const RngKey& seed() const noexcept { return seed_; }
    [[nodiscard]] const std::vector<double>& signs() const noexcept { return signs_; }
    [[nodiscard]] const std::vector<Index>& coordinates() const noexcept { return coords_; }

    /// sqrt(mp/d) * (1/sqrt(mp)) collapses to 1/sqrt(d) with an unnormalized transform.
    [[nodiscard]] double scale() const noexcept { return 1.0 / std::sqrt(static_cast<double>(d_)); }

    [[nodiscard]] Matrix apply_left(const Matrix& A) const {
        if (A.rows() != m_) throw std::invalid_argument("srft: left application dimension mismatch");
        Matrix out(d_, A.cols());
        std::vector<double> buf(static_cast<std::size_t>(mp_));
        for (Index c = 0; c < A.cols(); ++c) {
            std::fill(buf.begin(), buf.end(), 0.0);
            for (Index i = 0; i < m_; ++i) buf[static_cast<std::size_t>(i)] = signs_[static_cast<std::size_t>(i)] * A(i, c);
            fwht(buf.data(), mp_);
            for (Index t = 0; t < d_; ++t) out(t, c) = scale() * buf[static_cast<std::size_t>(coords_[static_cast<std::size_t>(t)])];
        }
        return out;
    }

    [[nodiscard]] Matrix apply_right(const Matrix& A) const {
        if (A.cols() != d_) throw std::invalid_argument("srft: right application dimension mismatch");
        Matrix out(A.rows(), m_);
        std::vector<double> buf(static_cast<std::size_t>(mp_));
        for (Index r = 0; r < A.rows(); ++r) {
            std::fill(buf.begin(), buf.end(), 0.0);
            for (Index t = 0; t < d_; ++t) buf[static_cast<std::size_t>(coords_[static_cast<std::size_t>(t)])] = A(r, t);
            fwht(buf.data(), mp_);
            for (Index j = 0; j < m_; ++j) out(r, j) = scale() * signs_[static_cast<std::size_t>(j)] * buf[static_cast<std::size_t>(j)];
        }
        return out;
    }

    [[nodiscard]] Matrix materialize() const { return apply_left(Matrix::Identity(m_, m_)); }

  private:
    Index d_, m_, mp_;
    RngKey seed_;
    std::vector<double> signs_;
    std::vector<Index> coords_;
};

// ---------------------------------------------------------------------------
// Type-erased operator

/// Any sketching operator, optionally viewed transposed and scaled.
class SketchOp {
  public:
    using Impl = std::variant<DenseSketchOp, Saso, RowSampleOp, SrftOp>;

    SketchOp(DenseSketchOp op) : impl_(std::move(op)) {}  // NOLINT(google-explicit-constructor)
    SketchOp(Saso op) : impl_(std::move(op)) {}           // NOLINT(google-explicit-constructor)
    SketchOp(RowSampleOp op) : impl_(std::move(op)) {}    // NOLINT(google-explicit-constructor)
    SketchOp(SrftOp op) : impl_(std::move(op)) {}         // NOLINT(google-explicit-constructor)

    [[nodiscard]] const Impl& impl() const noexcept { return impl_; }
    [[nodiscard]] bool is_transposed() const noexcept { return transposed_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }

    [[nodiscard]] Index base_rows() const {
        return std::visit([](const auto& s) { return s.rows(); }, impl_);
    }
    [[nodiscard]] Index base_cols() const {
        return std::visit([](const auto& s) { return s.cols(); }, impl_);
    }
    [[nodiscard]] Index rows() const { return transposed_ ? base_cols() : base_rows(); }
    [[nodiscard]] Index cols() const { return transposed_ ? base_rows() : base_cols(); }

    [[nodiscard]] SketchOp transposed() const {
        SketchOp t = *this;
        t.transposed_ = !transposed_;
        return t;
    }

    [[nodiscard]] SketchOp scaled(double t) const {
        SketchOp s = *this;
        s.scale_ *= t;
        return s;
    }

    /// S A for side = left, A S for side = right.
    [[nodiscard]] Matrix apply(const Matrix& A, Side side = Side::left) const {
        Matrix out;
        if (!transposed_) {
            out = side == Side::left ? std::visit([&](const auto& s) { return s.apply_left(A); }, impl_)
                                     : std::visit([&](const auto& s) { return s.apply_right(A); }, impl_);
        } else if (side == Side::left) {
            const Matrix At = A.transpose();
            out = std::visit([&](const auto& s) { return s.apply_right(At); }, impl_).transpose();
        } else {
            const Matrix At = A.transpose();
            out = std::visit([&](const auto& s) { return s.apply_left(At); }, impl_).transpose();
        }
        if (scale_ != 1.0) out *= scale_;
        return out;
    }

    [[nodiscard]] Matrix materialize() const {
        Matrix S = std::visit([](const auto& s) { return s.materialize(); }, impl_);
        if (transposed_) S.transposeInPlace();
        if (scale_ != 1.0) S *= scale_;
        return S;
    }

  private:
    Impl impl_;
    bool transposed_ = false;
    double scale_ = 1.0;
};

// ---------------------------------------------------------------------------
// Constructors

inline DenseSketchOp sample_dense(DenseFamily family, Index d, Index m, RngKey seed) {
    return {family, d, m, seed, d <= m ? Orientation::wide : Orientation::tall};
}

inline DenseSketchOp sample_dense(DenseFamily family, Index d, Index m, RngKey seed, Orientation orientation) {
    return {family, d, m, seed, orientation};
}

inline Saso sample_saso(Index d, Index m, Index k, RngKey seed, SasoMethod method = SasoMethod::replacement_free) {
    return {d, m, k, seed, method};
}

inline RowSampleOp sample_row_sampler(Index d, const Vector& q, RngKey seed) { return {d, q, seed}; }

inline SrftOp sample_srft(Index d, Index m, RngKey seed) { return {d, m, seed}; }

inline Matrix apply_saso(const Saso& S, const Matrix& A, Side side) {
    return side == Side::left ? S.apply_left(A) : S.apply_right(A);
}

inline Matrix apply_srft(const SrftOp& S, const Matrix& A, Side side) {
    return side == Side::left ? S.apply_left(A) : S.apply_right(A);
}

/// Sketching family selectable by drivers.
enum class SketchFamily { gaussian, rademacher, uniform, haar, saso, srft, uniform_rows };

struct SketchConfig {
    SketchFamily family = SketchFamily::saso;
    Index saso_k = 8;
    double scale = 1.0;
};

inline std::string to_string(SketchFamily f) {
    switch (f) {
        case SketchFamily::gaussian: return "gaussian";
        case SketchFamily::rademacher: return "rademacher";
        case SketchFamily::uniform: return "uniform";
        case SketchFamily::haar: return "haar";
        case SketchFamily::saso: return "saso";
        case SketchFamily::srft: return "srft";
        case SketchFamily::uniform_rows: return "uniform_rows";
    }
    return "?";
}

inline SketchFamily parse_sketch_family(const std::string& s) {
    for (auto f : {SketchFamily::gaussian, SketchFamily::rademacher, SketchFamily::uniform, SketchFamily::haar,
                   SketchFamily::saso, SketchFamily::srft, SketchFamily::uniform_rows})
        if (to_string(f) == s) return f;
    throw std::invalid_argument("unknown sketch family '" + s + "'");
}

/// A wide d x m operator of the configured family.
inline SketchOp make_sketch(const SketchConfig& cfg, Index d, Index m, RngKey seed) {
    SketchOp op = [&]() -> SketchOp {
        switch (cfg.family) {
            case SketchFamily::gaussian: return sample_dense(DenseFamily::gaussian, d, m, seed, Orientation::wide);
            case SketchFamily::rademacher: return sample_dense(DenseFamily::rademacher, d, m, seed, Orientation::wide);
            case SketchFamily::uniform: return sample_dense(DenseFamily::uniform, d, m, seed, Orientation::wide);
            case SketchFamily::haar: return sample_dense(DenseFamily::haar, d, m, seed, Orientation::wide);
            case SketchFamily::saso: return sample_saso(d, m, std::min(cfg.saso_k, d), seed);
            case SketchFamily::srft: return sample_srft(d, m, seed);
            case SketchFamily::uniform_rows:
                return sample_row_sampler(d, Vector::Constant(m, 1.0 / static_cast<double>(m)), seed);
        }
        throw std::invalid_argument("make_sketch: unknown family");
    }();
    return cfg.scale == 1.0 ? op : op.scaled(cfg.scale);
}

// ---------------------------------------------------------------------------
// Sketch quality

struct DistortionReport {
    double sigma_max = 0.0;
    double sigma_min = 0.0;
    double cond = 1.0;            // restricted condition number, +inf when sigma_min = 0
    double eff_distortion = 0.0;  // (cond - 1) / (cond + 1)
};

/// Distortion summary from the sketched basis S U (d x n).
///
/// sigma_min is reported as 0 when S U has fewer than n numerically nonzero
/// singular values, in which case eff_distortion = 1.
inline DistortionReport distortion_from_sketched_basis(const Matrix& SU) {
    DistortionReport rep;
    const Index n = SU.cols();
    const Vector s = singular_values(SU);
    rep.sigma_max = s.size() > 0 ? s(0) : 0.0;
    const Index rank = numerical_rank(s, SU.rows(), SU.cols());
    rep.sigma_min = (s.size() == n && rank == n) ? s(n - 1) : 0.0;
    if (rep.sigma_min > 0.0) {
        rep.cond = rep.sigma_max / rep.sigma_min;
        rep.eff_distortion = (rep.sigma_max - rep.sigma_min) / (rep.sigma_max + rep.sigma_min);
    } else {
        rep.cond = std::numeric_limits<double>::infinity();
        rep.eff_distortion = 1.0;
    }
    return rep;
}

inline void require_orthonormal_columns(const Matrix& U, double tol, const char* who) {
    const double err = (U.transpose() * U - Matrix::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
    if (!(err <= tol)) throw std::invalid_argument(std::string(who) + ": basis is not column-orthonormal");
}

/// Extreme singular values of S restricted to range(U), U column-orthonormal.
inline DistortionReport distortion_diagnostics(const SketchOp& S, const Matrix& U) {
    require_orthonormal_columns(U, 1e-8, "distortion_diagnostics");
    return distortion_from_sketched_basis(S.apply(U, Side::left));
}

inline DistortionReport distortion_diagnostics(const Matrix& S, const Matrix& U) {
    require_orthonormal_columns(U, 1e-8, "distortion_diagnostics");
    return distortion_from_sketched_basis(S * U);
}

}  // namespace randnla
