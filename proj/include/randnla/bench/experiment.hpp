#pragma once

// Experiment runner: one driver, one matrix spec, many seeded trials.
// Produces a CSV row per trial and a JSON summary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "randnla/bench/matgen.hpp"
#include "randnla/errorest.hpp"
#include "randnla/fullrank.hpp"
#include "randnla/leastsq.hpp"
#include "randnla/leverage.hpp"
#include "randnla/lowrank.hpp"
#include "randnla/parallel.hpp"
#include "randnla/serialize.hpp"
#include "randnla/trace.hpp"

namespace randnla::bench {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

using Metrics = std::vector<std::pair<std::string, double>>;

struct TrialContext {
    const Matrix& A;
    const nlohmann::json& params;
    RngKey key;  // per-trial key; drivers carve sub-streams from it
};

struct DriverInfo {
    std::vector<std::string> metrics;
    std::function<Metrics(const TrialContext&)> run;
};

namespace detail {

template <class T>
T param(const nlohmann::json& p, const char* name, T fallback) {
    if (!p.contains(name)) return fallback;
    try {
        return p.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("parameter '") + name + "' has the wrong type");
    }
}

inline Vector gaussian_vector(Index n, RngKey key) {
    const auto v = gaussian_stream(key, static_cast<std::size_t>(n));
    return Eigen::Map<const Vector>(v.data(), n);
}

inline SketchConfig sketch_param(const nlohmann::json& p, SketchFamily fallback) {
    SketchConfig cfg;
    cfg.family = fallback;
    if (p.contains("sketch")) {
        try {
            cfg.family = parse_sketch_family(p.at("sketch").get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    cfg.saso_k = param<Index>(p, "saso_k", cfg.saso_k);
    return cfg;
}

inline TsogOptions tsog_param(const nlohmann::json& p) {
    TsogOptions t;
    t.passes = param<int>(p, "passes", t.passes);
    t.stab_period = param<int>(p, "stab_period", t.stab_period);
    const std::string stab = param<std::string>(p, "stabilizer", "qr");
    if (stab != "qr" && stab != "lu") throw ConfigError("stabilizer must be qr or lu");
    t.stabilizer = stab == "qr" ? Stabilizer::qr : Stabilizer::lu;
    return t;
}

inline double tail_norm(const Vector& sigma, Index k) {
    return k < sigma.size() ? sigma.tail(sigma.size() - k).norm() : 0.0;
}

inline Metrics run_spo1(const TrialContext& c) {
    LsOptions o;
    o.tol = param(c.params, "tol", 1e-12);
    o.maxit = param(c.params, "maxit", 100);
    o.sampling_factor = param(c.params, "sampling_factor", 4.0);
    o.sketch = sketch_param(c.params, SketchFamily::saso);
    const Vector b = gaussian_vector(c.A.rows(), c.key.substream(7));
    const LsResult r = spo1(c.A, b, c.key, o);
    const Vector res = c.A * r.x - b;
    // rel_nres is the solver's normalized normal-equation residual for the
    // preconditioned system at exit. The recomputed value from x carries a
    // rounding floor near eps * cond(A), as any backward-stable solver does.
    const double nres = r.report.residual_history.empty() ? 0.0 : r.report.residual_history.back();
    const Vector xq = c.A.householderQr().solve(b);
    const Vector rq = c.A * xq - b;
    const double an = spectral_norm(c.A);
    const double recomputed = (c.A.transpose() * res).norm() / (an * res.norm());
    const double qr_floor = (c.A.transpose() * rq).norm() / (an * rq.norm());
    return {{"iters", r.report.iterations}, {"rel_nres", nres}, {"rel_nres_recomputed", recomputed},
            {"rel_nres_dense_qr", qr_floor}, {"converged", r.report.converged ? 1.0 : 0.0},
            {"fallback", r.used_fallback ? 1.0 : 0.0}};
}

inline Metrics run_sps2(const TrialContext& c) {
    LsOptions o;
    o.tol = param(c.params, "tol", 1e-12);
    o.maxit = param(c.params, "maxit", 100);
    o.sampling_factor = param(c.params, "sampling_factor", 4.0);
    o.sketch = sketch_param(c.params, SketchFamily::saso);
    SaddleProblem P{c.A, gaussian_vector(c.A.rows(), c.key.substream(7)), Vector(), param(c.params, "mu", 0.0)};
    if (param<bool>(c.params, "random_c", false)) P.c = gaussian_vector(c.A.cols(), c.key.substream(8));
    const SaddleSolution s = sps2(P, c.key, o);
    const Vector cv = P.c_or_zero();
    const Vector rhs = c.A.transpose() * P.b - cv;
    const Vector lhs = c.A.transpose() * (c.A * s.x) + P.mu * s.x;
    const double scale = std::pow(spectral_norm(c.A), 2) * s.x.norm() + rhs.norm();
    return {{"iters", s.report.iterations}, {"rel_nres", (lhs - rhs).norm() / scale},
            {"converged", s.report.converged ? 1.0 : 0.0}};
}

inline Metrics run_sketch_solve(const TrialContext& c) {
    const Index m = c.A.rows(), n = c.A.cols();
    const Index d = param<Index>(c.params, "d", std::min(m, 4 * (n + 1)));
    const Vector b = gaussian_vector(m, c.key.substream(7));
    const SketchOp S = make_sketch(sketch_param(c.params, SketchFamily::gaussian), d, m, c.key);
    const Vector xh = sketch_and_solve_ols(c.A, b, S);
    const Vector xs = pinv_solve(c.A, b);
    Matrix Ab(m, n + 1);
    Ab << c.A, b;
    const double delta = distortion_diagnostics(S, orth(Ab)).eff_distortion;
    const double ratio = (c.A * xh - b).norm() / (c.A * xs - b).norm();
    const double bound = delta < 1.0 ? (1.0 + delta) / (1.0 - delta) : INFINITY;
    return {{"residual_ratio", ratio}, {"eff_distortion", delta}, {"bound", bound},
            {"bound_ok", ratio <= bound * (1.0 + 1e-12) ? 1.0 : 0.0}};
}

inline Metrics run_qb2(const TrialContext& c) {
    const Index k = param<Index>(c.params, "k", 10);
    QbOptions q;
    q.block_size = param<Index>(c.params, "block_size", 8);
    q.tsog = tsog_param(c.params);
    const double tol = param(c.params, "tol", 0.0);
    const QBFactors f = qb2(c.A, k, tol, c.key, q);
    const double err = (c.A - f.Q * f.B).norm() / c.A.norm();
    const double opt = tail_norm(singular_values(c.A), f.Q.cols()) / c.A.norm();
    return {{"rank", f.Q.cols()}, {"rel_err", err}, {"opt_rel_err", opt}, {"tol_ok", tol <= 0.0 || err <= tol ? 1.0 : 0.0}};
}

inline Metrics run_svd1(const TrialContext& c) {
    const Index k = param<Index>(c.params, "k", 10);
    const Index s = param<Index>(c.params, "s", 5);
    const SVDFactors f = svd1(c.A, k, param(c.params, "tol", 0.0), s, c.key, tsog_param(c.params));
    const double err = (c.A - f.U * f.sigma.asDiagonal() * f.V.transpose()).norm();
    const double opt = tail_norm(singular_values(c.A), k);
    return {{"rank", f.sigma.size()}, {"rel_err", err / c.A.norm()}, {"ratio_to_optimal", opt > 0 ? err / opt : 0.0}};
}

inline Metrics run_evd2(const TrialContext& c) {
    const Matrix G = c.A.transpose() * c.A;
    const Index k = param<Index>(c.params, "k", 5);
    const Index s = param<Index>(c.params, "s", 5);
    TsogOptions t = tsog_param(c.params);
    t.passes = param(c.params, "passes", 0);
    const EVDFactors f = evd2(G, k, s, c.key, t);
    const Vector ev = eigh(G).lambda.reverse();
    double maxrel = 0.0;
    for (Index j = 0; j < f.lambda.size(); ++j) maxrel = std::max(maxrel, std::abs(f.lambda(j) - ev(j)) / ev(j));
    const Matrix Ahat = f.V * f.lambda.asDiagonal() * f.V.transpose();
    return {{"rank", f.lambda.size()}, {"max_rel_eig_err", maxrel},
            {"rel_err", (G - Ahat).norm() / G.norm()}, {"clamped", f.clamped}};
}

inline Metrics run_osid1(const TrialContext& c) {
    const Index k = param<Index>(c.params, "k", 10);
    const Index s = param<Index>(c.params, "s", 5);
    const OneSidedID id = osid1(c.A, k, s, Axis::column, c.key, tsog_param(c.params));
    const Matrix Ahat = select_columns(c.A, id.skeleton) * id.M;
    const double err = spectral_norm(c.A - Ahat);
    return {{"rank", static_cast<double>(id.skeleton.size())}, {"rel_err", err / spectral_norm(c.A)},
            {"x_norm", spectral_norm(id.M)}};
}

inline Metrics run_curd1(const TrialContext& c) {
    const Index k = param<Index>(c.params, "k", 10);
    const Index s = param<Index>(c.params, "s", 5);
    const CURFactors f = curd1(c.A, k, s, c.key, tsog_param(c.params));
    const double err = (c.A - cur_reconstruct(c.A, f)).norm();
    const double opt = tail_norm(singular_values(c.A), k);
    return {{"rel_err", err / c.A.norm()}, {"ratio_to_optimal", opt > 0 ? err / opt : 0.0}};
}

inline Metrics run_qrcp(const TrialContext& c) {
    const Index n = c.A.cols();
    const Index d = param<Index>(c.params, "d", default_qrcp_sketch_dim(c.A.rows(), n));
    const PivotedQR f = sap_chol_qrcp(c.A, d, c.key, sketch_param(c.params, SketchFamily::saso));
    const double recon = (select_columns(c.A, f.J) - f.Q * f.R).norm() / c.A.norm();
    const double orth_err =
        f.Q.cols() ? (f.Q.transpose() * f.Q - Matrix::Identity(f.Q.cols(), f.Q.cols())).cwiseAbs().maxCoeff() : 0.0;
    return {{"rank", f.rank}, {"recon_err", recon}, {"orth_err", orth_err}, {"retries", f.retries}};
}

inline Metrics trace_result(const TraceEstimate& t, double truth) {
    return {{"estimate", t.value}, {"truth", truth}, {"rel_err", std::abs(t.value - truth) / std::abs(truth)},
            {"sample_variance", t.sample_variance}};
}

inline Metrics run_gh(const TrialContext& c) {
    const Matrix B = c.A.transpose() * c.A;
    const Index m = param<Index>(c.params, "probes", 30);
    ProbeDist dist;
    try {
        dist = parse_probe_dist(param<std::string>(c.params, "dist", "rademacher"));
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return trace_result(girard_hutchinson(LinearOperator::from_matrix(B), m, dist, c.key), B.trace());
}

inline Metrics run_hutchpp(const TrialContext& c) {
    const Matrix B = c.A.transpose() * c.A;
    const Index m = param<Index>(c.params, "probes", 30);
    return trace_result(hutch_pp(LinearOperator::from_matrix(B), m, c.key), B.trace());
}

inline Metrics run_slq(const TrialContext& c) {
    const Matrix B = c.A.transpose() * c.A;
    MatrixFunction f;
    try {
        f = MatrixFunction::parse(param<std::string>(c.params, "f", "exp"));
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const EighFactors e = eigh(B);
    double truth = 0.0;
    for (Index i = 0; i < e.lambda.size(); ++i) truth += f(e.lambda(i));
    const TraceEstimate t = slq(LinearOperator::from_matrix(B), f, param<Index>(c.params, "probes", 50),
                                param(c.params, "steps", 20), c.key);
    return trace_result(t, truth);
}

inline Metrics run_nystrom(const TrialContext& c) {
    const Matrix G = c.A.transpose() * c.A;
    const double mu = param(c.params, "mu", 1e-2);
    const Vector h = gaussian_vector(G.rows(), c.key.substream(7));
    PcgOptions o;
    o.tol = param(c.params, "tol", 1e-10);
    o.maxit = param(c.params, "maxit", 500);
    const NystromPcgResult r =
        nystrom_pcg(G, mu, h, param<Index>(c.params, "rank", 10), param<Index>(c.params, "s", 5), c.key, o);
    const double res = ((G * r.x + mu * r.x) - h).norm() / h.norm();
    return {{"iters", r.report.iterations}, {"rel_res", res}, {"converged", r.report.converged ? 1.0 : 0.0}};
}

inline Metrics run_leverage(const TrialContext& c) {
    const Index m = c.A.rows(), n = c.A.cols();
    const LeverageScores ex = exact_leverage(c.A);
    const LeverageScores ap = approx_leverage(c.A, param<Index>(c.params, "d1", std::min(m, 4 * n)),
                                              param<Index>(c.params, "d2", default_leverage_d2(m)), c.key);
    const double maxrel = ((ap.scores - ex.scores).array().abs() / ex.scores.array()).maxCoeff();
    return {{"max_rel_err", maxrel}, {"coherence", coherence(ex)}, {"sum_exact", ex.scores.sum()}};
}

inline Metrics run_bootstrap_ls(const TrialContext& c) {
    const Index m = c.A.rows(), n = c.A.cols();
    const Index d = param<Index>(c.params, "d", std::min(m, 12 * n));
    const Index B = param<Index>(c.params, "B", 100);
    const double alpha = param(c.params, "alpha", 0.1);
    const Vector b = c.A * gaussian_vector(n, c.key.substream(6)) + gaussian_vector(m, c.key.substream(7));
    const SketchOp S = make_sketch({SketchFamily::gaussian, 8, 1.0 / std::sqrt(static_cast<double>(d))}, d, m, c.key);
    const Matrix Ah = S.apply(c.A);
    const Vector bh = S.apply(b);
    const Vector xh = pinv_solve(Ah, bh);
    const BootstrapResult r = bootstrap_ls(Ah, bh, xh, B, alpha, ErrorNorm::l2, c.key.substream(9));
    const double truth = (xh - pinv_solve(c.A, b)).norm();
    return {{"quantile", r.quantile_estimate}, {"true_err", truth}, {"covered", truth <= r.quantile_estimate ? 1.0 : 0.0}};
}

}  // namespace detail

inline const std::map<std::string, DriverInfo>& driver_table() {
    static const std::map<std::string, DriverInfo> table = {
        {"spo1", {{"iters", "rel_nres", "rel_nres_recomputed", "rel_nres_dense_qr", "converged", "fallback"}, detail::run_spo1}},
        {"sps2", {{"iters", "rel_nres", "converged"}, detail::run_sps2}},
        {"sketch_and_solve", {{"residual_ratio", "eff_distortion", "bound", "bound_ok"}, detail::run_sketch_solve}},
        {"qb2", {{"rank", "rel_err", "opt_rel_err", "tol_ok"}, detail::run_qb2}},
        {"svd1", {{"rank", "rel_err", "ratio_to_optimal"}, detail::run_svd1}},
        {"evd2", {{"rank", "max_rel_eig_err", "rel_err", "clamped"}, detail::run_evd2}},
        {"osid1", {{"rank", "rel_err", "x_norm"}, detail::run_osid1}},
        {"curd1", {{"rel_err", "ratio_to_optimal"}, detail::run_curd1}},
        {"sap_chol_qrcp", {{"rank", "recon_err", "orth_err", "retries"}, detail::run_qrcp}},
        {"girard_hutchinson", {{"estimate", "truth", "rel_err", "sample_variance"}, detail::run_gh}},
        {"hutch_pp", {{"estimate", "truth", "rel_err", "sample_variance"}, detail::run_hutchpp}},
        {"slq", {{"estimate", "truth", "rel_err", "sample_variance"}, detail::run_slq}},
        {"nystrom_pcg", {{"iters", "rel_res", "converged"}, detail::run_nystrom}},
        {"leverage", {{"max_rel_err", "coherence", "sum_exact"}, detail::run_leverage}},
        {"bootstrap_ls", {{"quantile", "true_err", "covered"}, detail::run_bootstrap_ls}},
    };
    return table;
}

struct ExperimentConfig {
    std::string driver;
    nlohmann::json params = nlohmann::json::object();
    MatrixSpec matrix;
    Index trials = 1;
    std::uint64_t seed = 0;
    std::string output;  // path prefix; empty means caller decides
};

/// {"driver", "params", "matrix", "trials", "seed", "output"}.
inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (key != "driver" && key != "params" && key != "matrix" && key != "trials" && key != "seed" && key != "output")
            throw ConfigError("unknown config key '" + key + "'");
    ExperimentConfig c;
    try {
        c.driver = j.at("driver").get<std::string>();
        if (!driver_table().count(c.driver)) throw ConfigError("unknown driver '" + c.driver + "'");
        if (j.contains("params")) {
            c.params = j.at("params");
            if (!c.params.is_object()) throw ConfigError("params must be an object");
        }
        c.matrix = spec_from_json(j.at("matrix"));
        c.trials = j.value("trials", Index{1});
        if (c.trials < 0) throw ConfigError("trials must be nonnegative");
        if (j.contains("seed")) c.seed = seed_from_json(j.at("seed")).key;
        c.output = j.value("output", std::string());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
    return c;
}

inline nlohmann::json experiment_to_json(const ExperimentConfig& c) {
    return {{"driver", c.driver}, {"params", c.params}, {"matrix", spec_to_json(c.matrix)},
            {"trials", c.trials}, {"seed", hex_u64(c.seed)}, {"output", c.output}};
}

struct TrialRecord {
    Index trial = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<double> values;  // aligned with ExperimentReport::metrics
    double wall_ms = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<std::string> metrics;
    std::vector<TrialRecord> trials;
    [[nodiscard]] Index failures() const {
        return static_cast<Index>(std::count_if(trials.begin(), trials.end(), [](const auto& t) { return !t.ok; }));
    }
    /// 0 when every trial completed, 3 when every trial failed, 1 otherwise.
    [[nodiscard]] int exit_code() const {
        const Index f = failures();
        if (f == 0) return 0;
        return f == static_cast<Index>(trials.size()) ? 3 : 1;
    }
};

/// Trial t runs with key derive_key(seed, t). The matrix is generated once from its own spec seed.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
    const DriverInfo& drv = driver_table().at(cfg.driver);
    ExperimentReport rep;
    rep.config = cfg;
    rep.metrics = drv.metrics;
    rep.trials.resize(static_cast<std::size_t>(cfg.trials));
    if (cfg.trials == 0) return rep;
    const Matrix A = gen_matrix(cfg.matrix);
    // Surface configuration errors once rather than as per-trial failures.
    parallel_for(rep.trials.size(), threads, [&](std::size_t t) {
        TrialRecord& rec = rep.trials[t];
        rec.trial = static_cast<Index>(t);
        const RngKey key = derive_key(cfg.seed, t);
        rec.seed = key.key;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Metrics m = drv.run({A, cfg.params, key});
            rec.values.assign(drv.metrics.size(), NAN);
            for (const auto& [name, v] : m) {
                const auto it = std::find(drv.metrics.begin(), drv.metrics.end(), name);
                rec.values[static_cast<std::size_t>(it - drv.metrics.begin())] = v;
            }
            rec.ok = true;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
            rec.values.assign(drv.metrics.size(), NAN);
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    });
    return rep;
}

inline void write_csv(std::ostream& os, const ExperimentReport& rep) {
    os << "trial,seed,status";
    for (const auto& m : rep.metrics) os << ',' << m;
    os << ",wall_ms\n";
    os << std::setprecision(17);
    for (const auto& t : rep.trials) {
        os << t.trial << ',' << hex_u64(t.seed) << ',' << (t.ok ? "ok" : "failed");
        for (double v : t.values) os << ',' << v;
        os << ',' << std::setprecision(6) << t.wall_ms << std::setprecision(17) << '\n';
    }
}

inline nlohmann::json summarize(const ExperimentReport& rep) {
    nlohmann::json s;
    s["config"] = experiment_to_json(rep.config);
    s["trials"] = rep.trials.size();
    s["failed"] = rep.failures();
    nlohmann::json stats = nlohmann::json::object();
    for (std::size_t k = 0; k < rep.metrics.size(); ++k) {
        std::vector<double> v;
        for (const auto& t : rep.trials)
            if (t.ok && std::isfinite(t.values[k])) v.push_back(t.values[k]);
        if (v.empty()) {
            stats[rep.metrics[k]] = nullptr;
            continue;
        }
        std::sort(v.begin(), v.end());
        auto q = [&](double p) {
            const double pos = p * static_cast<double>(v.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, v.size() - 1);
            return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
        };
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        stats[rep.metrics[k]] = {{"median", q(0.5)}, {"q10", q(0.1)}, {"q90", q(0.9)}, {"mean", mean},
                                 {"min", v.front()}, {"max", v.back()}};
    }
    s["metrics"] = stats;
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& t : rep.trials)
        if (!t.ok) errors.push_back({{"trial", t.trial}, {"error", t.error}});
    s["errors"] = errors;
    return s;
}

}  // namespace randnla::bench
