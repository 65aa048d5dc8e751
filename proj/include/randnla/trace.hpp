#pragma once

// Stochastic trace estimation for implicit operators.

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "randnla/errors.hpp"
#include "randnla/iterative.hpp"
#include "randnla/linalg.hpp"
#include "randnla/rng.hpp"

namespace randnla {

enum class ProbeDist { rademacher, gaussian, sphere };

inline ProbeDist parse_probe_dist(const std::string& s) {
    if (s == "rademacher") return ProbeDist::rademacher;
    if (s == "gaussian") return ProbeDist::gaussian;
    if (s == "sphere") return ProbeDist::sphere;
    throw std::invalid_argument("unknown probe distribution '" + s + "'");
}

struct TraceEstimate {
    double value = 0.0;
    std::vector<double> samples;
    double sample_variance = 0.0;  // unbiased; 0 for a single sample
    Index probes_used = 0;
};

namespace detail {

inline TraceEstimate summarize(std::vector<double> samples, Index probes) {
    TraceEstimate t;
    const auto m = static_cast<double>(samples.size());
    t.value = std::accumulate(samples.begin(), samples.end(), 0.0) / m;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double s : samples) ss += (s - t.value) * (s - t.value);
        t.sample_variance = ss / (m - 1.0);
    }
    t.samples = std::move(samples);
    t.probes_used = probes;
    return t;
}

}  // namespace detail

/// Isotropic probe vector (E[w w^T] = I). Sphere probes have norm sqrt(n).
inline Vector probe_vector(Index n, ProbeDist dist, RngKey key) {
    const auto nn = static_cast<std::size_t>(n);
    std::vector<double> v;
    switch (dist) {
        case ProbeDist::rademacher: v = rademacher_stream(key, nn); break;
        case ProbeDist::gaussian:
        case ProbeDist::sphere: v = gaussian_stream(key, nn); break;
    }
    Vector w = Eigen::Map<const Vector>(v.data(), n);
    if (dist == ProbeDist::sphere) w *= std::sqrt(static_cast<double>(n)) / w.norm();
    return w;
}

/// n x count block of probes; column i comes from sub-stream `first + i`.
inline Matrix probe_block(Index n, Index count, ProbeDist dist, RngKey seed, Index first = 0) {
    Matrix W(n, count);
    for (Index i = 0; i < count; ++i) W.col(i) = probe_vector(n, dist, seed.substream(static_cast<std::uint64_t>(first + i)));
    return W;
}

/// (1/m) sum_i w_i^T A w_i over m probes.
inline TraceEstimate girard_hutchinson(const LinearOperator& A, Index m, ProbeDist dist, RngKey seed) {
    if (A.rows != A.cols) throw std::invalid_argument("girard_hutchinson: operator must be square");
    if (m < 1) throw std::invalid_argument("girard_hutchinson: need at least one probe");
    const Matrix W = probe_block(A.rows, m, dist, seed);
    const Matrix AW = A.apply(W);
    std::vector<double> s(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) s[static_cast<std::size_t>(i)] = W.col(i).dot(AW.col(i));
    return detail::summarize(std::move(s), m);
}

/// Hutch++ with a budget of m products: k = floor(m * sketch_fraction) columns
/// for the sketch A S, k for A Q, and the remaining m - 2k Rademacher probes
/// for Girard-Hutchinson on the deflated operator (I - QQ^T) A (I - QQ^T).
///
/// Each sample is tr(Q^T A Q) plus one deflated quadratic form, so value is
/// their mean.
inline TraceEstimate hutch_pp(const LinearOperator& A, Index m, RngKey seed, double sketch_fraction = 1.0 / 3.0) {
    if (A.rows != A.cols) throw std::invalid_argument("hutch_pp: operator must be square");
    if (m < 3) throw std::invalid_argument("hutch_pp: need a budget of at least 3 products");
    const Index n = A.rows;
    const Index k = std::max<Index>(1, static_cast<Index>(std::floor(static_cast<double>(m) * sketch_fraction)));
    const Index g = m - 2 * k;
    if (g < 1) throw std::invalid_argument("hutch_pp: sketch fraction leaves no probes");
    // Sketch columns use probe streams 0..k-1, GH probes k..k+g-1.
    const Matrix S = probe_block(n, k, ProbeDist::rademacher, seed);
    const Matrix Q = orth(A.apply(S));
    const double head = Q.cols() > 0 ? (Q.transpose() * A.apply(Q)).trace() : 0.0;
    Matrix W = probe_block(n, g, ProbeDist::rademacher, seed, k);
    W -= Q * (Q.transpose() * W);
    const Matrix AW = A.apply(W);
    std::vector<double> s(static_cast<std::size_t>(g));
    for (Index i = 0; i < g; ++i) s[static_cast<std::size_t>(i)] = head + W.col(i).dot(AW.col(i));
    return detail::summarize(std::move(s), m);
}

// ---------------------------------------------------------------------------
// Stochastic Lanczos quadrature

/// A scalar function of the spectrum. Implementations throw DomainError for
/// nodes outside their domain.
struct MatrixFunction {
    std::string name;
    std::function<double(double)> f;

    double operator()(double x) const { return f(x); }

    static MatrixFunction identity() {
        return {"identity", [](double x) { return x; }};
    }
    static MatrixFunction exp() {
        return {"exp", [](double x) { return std::exp(x); }};
    }
    static MatrixFunction log1p() {
        return {"log1p", [](double x) {
                    if (!(x > -1.0)) throw DomainError("log1p: node " + std::to_string(x) + " <= -1", x);
                    return std::log1p(x);
                }};
    }
    static MatrixFunction inv_shift(double mu) {
        return {"inv_shift(" + std::to_string(mu) + ")", [mu](double x) {
                    if (x + mu == 0.0) throw DomainError("inv_shift: node " + std::to_string(x) + " hits the pole", x);
                    return 1.0 / (x + mu);
                }};
    }
    static MatrixFunction polynomial(std::vector<double> coeffs) {
        return {"polynomial", [c = std::move(coeffs)](double x) {
                    double acc = 0.0;
                    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
                    return acc;
                }};
    }

    /// Parses identity | exp | log1p | inv_shift(mu).
    static MatrixFunction parse(const std::string& s) {
        if (s == "identity") return identity();
        if (s == "exp") return exp();
        if (s == "log1p") return log1p();
        if (s.rfind("inv_shift(", 0) == 0 && s.back() == ')') {
            std::size_t pos = 0;
            const std::string arg = s.substr(10, s.size() - 11);
            double mu = 0.0;
            try {
                mu = std::stod(arg, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos == 0 || pos != arg.size()) throw std::invalid_argument("bad inv_shift argument '" + arg + "'");
            return inv_shift(mu);
        }
        throw std::invalid_argument("unknown matrix function '" + s + "'");
    }
};

struct QuadratureRule {
    Vector nodes;    // Ritz values
    Vector weights;  // squared first components of the Jacobi eigenvectors, times ||w||^2
};

/// Gauss quadrature rule for the spectral measure of B seen by probe w.
inline QuadratureRule lanczos_quadrature(const LinearOperator& B, const Vector& w, int s, Reorth reorth = Reorth::full) {
    const double nrm = w.norm();
    if (nrm == 0.0) throw std::invalid_argument("lanczos_quadrature: zero probe");
    const LanczosResult L = lanczos_tridiag(B, w / nrm, s, reorth);
    QuadratureRule q;
    if (L.alpha.size() == 1) {
        q.nodes = L.alpha;
        q.weights = Vector::Constant(1, nrm * nrm);
        return q;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(L.alpha, L.beta, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw std::runtime_error("lanczos_quadrature: Jacobi eigensolver failed");
    q.nodes = es.eigenvalues();
    q.weights = nrm * nrm * es.eigenvectors().row(0).transpose().cwiseAbs2();
    return q;
}

/// trace(f(B)) by averaging per-probe quadrature estimates ||w||^2 sum_l tau_l^2 f(theta_l).
inline TraceEstimate slq(const LinearOperator& B, const MatrixFunction& f, Index m, int s, RngKey seed,
                         Reorth reorth = Reorth::full, ProbeDist dist = ProbeDist::rademacher) {
    if (B.rows != B.cols) throw std::invalid_argument("slq: operator must be square");
    if (m < 1 || s < 1) throw std::invalid_argument("slq: need m >= 1 and s >= 1");
    std::vector<double> samples(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
        const Vector w = probe_vector(B.rows, dist, seed.substream(static_cast<std::uint64_t>(i)));
        const QuadratureRule q = lanczos_quadrature(B, w, s, reorth);
        double acc = 0.0;
        for (Index l = 0; l < q.nodes.size(); ++l) acc += q.weights(l) * f(q.nodes(l));
        samples[static_cast<std::size_t>(i)] = acc;
    }
    return detail::summarize(std::move(samples), m);
}

}  // namespace randnla
