// randnla command-line harness.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 every trial failed
// (for single-shot subcommands: the computation itself failed), 1 when only
// some experiment trials failed.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "randnla/bench/experiment.hpp"
#include "randnla/bench/matgen.hpp"
#include "randnla/bench/mmio.hpp"
#include "randnla/randnla.hpp"

using namespace randnla;
using randnla::bench::ConfigError;
using nlohmann::json;

namespace {

struct Globals {
    std::string seed;
    std::string config;
    std::string out;
    unsigned parallel = 1;

    [[nodiscard]] std::optional<std::uint64_t> seed_value() const {
        if (seed.empty()) return std::nullopt;
        try {
            return parse_u64(seed);
        } catch (const std::exception& e) {
            throw ConfigError("bad --seed: " + std::string(e.what()));
        }
    }
    [[nodiscard]] RngKey key() const { return {seed_value().value_or(0), 0}; }
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

// Output sink: a file when a path is given, stdout otherwise.
class Sink {
  public:
    explicit Sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw ConfigError("cannot write " + path);
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

  private:
    std::unique_ptr<std::ofstream> file_;
};

// Input matrix from --matrix (Matrix Market) or from a matrix spec in --config.
Matrix load_matrix(const std::string& path, const Globals& g) {
    if (!path.empty()) {
        try {
            return bench::read_matrix_market(path);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    if (g.config.empty()) throw ConfigError("need --matrix or a matrix spec via --config");
    json j = read_json_file(g.config);
    if (j.contains("matrix")) j = j.at("matrix");
    try {
        return bench::gen_matrix(bench::spec_from_json(j));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("matrix spec: ") + e.what());
    }
}

Vector load_vector_or_random(const std::string& path, Index n, RngKey key) {
    if (!path.empty()) {
        Vector v;
        try {
            v = bench::read_vector(path);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (v.size() != n) throw ConfigError("vector in " + path + " has the wrong length");
        return v;
    }
    const auto s = gaussian_stream(key, static_cast<std::size_t>(n));
    return Eigen::Map<const Vector>(s.data(), n);
}

std::vector<Index> to_vec(const IndexVector& v) { return {v.begin(), v.end()}; }

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void write_factor(const std::string& prefix, const std::string& name, const Matrix& M) {
    if (!prefix.empty()) bench::write_matrix_market(prefix + "." + name + ".mtx", M);
}

TsogOptions tsog_from(int passes) {
    TsogOptions t;
    t.passes = passes;
    return t;
}

SketchConfig sketch_from(const std::string& family) {
    SketchConfig c;
    try {
        c.family = parse_sketch_family(family);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized numerical linear algebra toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed (decimal or 0x hex)");
    app.add_option("--config", g.config, "JSON config (experiment for run, matrix spec elsewhere)");
    app.add_option("--out", g.out, "Output path (run: prefix for .csv and .json)");
    app.add_option("--parallel", g.parallel, "Worker threads")->check(CLI::Range(1u, 1024u));

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic matrix (Matrix Market)");
    std::optional<Index> gm, gn, grank, gr, grows;
    std::optional<double> ggap, gdecay, gcond, gweight;
    std::string gspectrum, gcoh;
    gen->add_option("--m", gm);
    gen->add_option("--n", gn);
    gen->add_option("--spectrum", gspectrum)->check(CLI::IsMember({"flat", "step", "power", "exp"}));
    gen->add_option("--r", gr, "step: number of large singular values");
    gen->add_option("--gap", ggap);
    gen->add_option("--decay", gdecay);
    gen->add_option("--cond", gcond, "exp: sets decay from the condition number");
    gen->add_option("--rank", grank);
    gen->add_option("--coherence", gcoh)->check(CLI::IsMember({"incoherent", "spiked"}));
    gen->add_option("--spiked-rows", grows);
    gen->add_option("--spiked-weight", gweight);

    // run
    auto* run = app.add_subcommand("run", "Run an experiment config (--config)");

    // leverage
    auto* lev = app.add_subcommand("leverage", "Leverage scores as CSV");
    std::string lmat, lkind = "exact";
    Index ld1 = 0, ld2 = 0, lk = 0, ls = 5;
    lev->add_option("--matrix", lmat);
    lev->add_option("--kind", lkind)->check(CLI::IsMember({"exact", "approx", "subspace"}));
    lev->add_option("--d1", ld1);
    lev->add_option("--d2", ld2);
    lev->add_option("--k", lk);
    lev->add_option("--s", ls);

    // trace
    auto* tr = app.add_subcommand("trace", "Trace estimation");
    std::string tmat, tmethod = "hutchpp", tdist = "rademacher", tf = "exp";
    Index tprobes = 30;
    int tsteps = 20;
    bool tgram = false;
    tr->add_option("--matrix", tmat);
    tr->add_option("--method", tmethod)->check(CLI::IsMember({"gh", "hutchpp", "slq", "exact"}));
    tr->add_option("--probes", tprobes);
    tr->add_option("--steps", tsteps);
    tr->add_option("--dist", tdist);
    tr->add_option("--f", tf, "slq function: identity, exp, log1p, inv_shift(mu)");
    tr->add_flag("--gram", tgram, "Use A^T A instead of A");

    // lowrank
    auto* lr = app.add_subcommand("lowrank", "Low-rank approximation");
    std::string lrmat, lralgo = "svd1", lraxis = "column", lrfactors;
    Index lrk = 10, lrs = 5;
    double lrtol = 0.0;
    int lrpasses = 2;
    lr->add_option("--matrix", lrmat);
    lr->add_option("--algo", lralgo)->check(CLI::IsMember({"rf1", "qb2", "svd1", "evd2", "osid1", "curd1"}));
    lr->add_option("--k", lrk);
    lr->add_option("--s", lrs);
    lr->add_option("--tol", lrtol);
    lr->add_option("--passes", lrpasses);
    lr->add_option("--axis", lraxis)->check(CLI::IsMember({"row", "column"}));
    lr->add_option("--factors", lrfactors, "Prefix for factor .mtx files");

    // lstsq
    auto* ls_cmd = app.add_subcommand("lstsq", "Least squares / saddle point solve");
    std::string qmat, qrhs, qc, qalgo = "spo1", qsketch;
    double qmu = 0.0, qtol = 1e-12, qfactor = 4.0;
    int qmaxit = 100;
    Index qd = 0;
    ls_cmd->add_option("--matrix", qmat);
    ls_cmd->add_option("--rhs", qrhs, "b vector (default: Gaussian from the seed)");
    ls_cmd->add_option("--c", qc, "c vector (sps2)");
    ls_cmd->add_option("--algo", qalgo)->check(CLI::IsMember({"spo1", "sps2", "sketch_and_solve"}));
    ls_cmd->add_option("--mu", qmu);
    ls_cmd->add_option("--tol", qtol);
    ls_cmd->add_option("--maxit", qmaxit);
    ls_cmd->add_option("--sampling-factor", qfactor);
    ls_cmd->add_option("--d", qd, "sketch_and_solve embedding dimension");
    ls_cmd->add_option("--sketch", qsketch, "Sketch family");

    // qrcp
    auto* qr = app.add_subcommand("qrcp", "Cholesky-based QR factorizations");
    std::string pmat, palgo = "sap_chol_qrcp", psketch = "saso", pfactors;
    Index pd = 0;
    qr->add_option("--matrix", pmat);
    qr->add_option("--algo", palgo)->check(CLI::IsMember({"sap_chol_qrcp", "rand_chol_qr", "chol_qr"}));
    qr->add_option("--d", pd);
    qr->add_option("--sketch", psketch);
    qr->add_option("--factors", pfactors, "Prefix for Q and R .mtx files");

    // bootstrap
    auto* bs = app.add_subcommand("bootstrap", "Bootstrap error estimate for a sketched problem");
    std::string bmat, brhs, bkind = "ls", bnorm = "l2";
    Index bd = 0, bB = 100, bk = 5;
    double balpha = 0.1;
    bs->add_option("--matrix", bmat);
    bs->add_option("--rhs", brhs);
    bs->add_option("--kind", bkind)->check(CLI::IsMember({"ls", "svd"}));
    bs->add_option("--d", bd);
    bs->add_option("--B", bB);
    bs->add_option("--alpha", balpha);
    bs->add_option("--k", bk);
    bs->add_option("--norm", bnorm)->check(CLI::IsMember({"l2", "linf"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            json j = g.config.empty() ? json::object() : read_json_file(g.config);
            if (j.contains("matrix")) j = j.at("matrix");
            if (gm) j["m"] = *gm;
            if (gn) j["n"] = *gn;
            json sp = j.contains("spectrum") && j["spectrum"].is_object() ? j["spectrum"] : json::object();
            if (j.contains("spectrum") && j["spectrum"].is_string()) sp["kind"] = j["spectrum"];
            if (!gspectrum.empty()) sp["kind"] = gspectrum;
            if (gr) sp["r"] = *gr;
            if (ggap) sp["gap"] = *ggap;
            if (gdecay) sp["decay"] = *gdecay;
            if (gcond) sp["cond"] = *gcond;
            if (!sp.empty()) j["spectrum"] = sp;
            if (grank) j["rank"] = *grank;
            if (!gcoh.empty() || grows || gweight) {
                json c = j.contains("coherence") && j["coherence"].is_object() ? j["coherence"] : json::object();
                c["kind"] = gcoh.empty() ? c.value("kind", std::string("spiked")) : gcoh;
                if (grows) c["rows"] = *grows;
                if (gweight) c["weight"] = *gweight;
                j["coherence"] = c;
            }
            if (auto s = g.seed_value()) j["seed"] = *s;
            bench::MatrixSpec spec;
            try {
                spec = bench::spec_from_json(j);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("matrix spec: ") + e.what());
            }
            Sink sink(g.out);
            bench::write_matrix_market(sink.os(), bench::gen_matrix(spec));
            return 0;
        }

        if (run->parsed()) {
            if (g.config.empty()) throw ConfigError("run needs --config");
            bench::ExperimentConfig cfg = bench::parse_experiment(read_json_file(g.config));
            if (auto s = g.seed_value()) cfg.seed = *s;
            if (!g.out.empty()) cfg.output = g.out;
            const bench::ExperimentReport rep = bench::run_experiment(cfg, g.parallel);
            const json summary = bench::summarize(rep);
            if (cfg.output.empty()) {
                bench::write_csv(std::cout, rep);
                std::cerr << summary.dump(2) << '\n';
            } else {
                Sink csv(cfg.output + ".csv");
                bench::write_csv(csv.os(), rep);
                Sink js(cfg.output + ".json");
                js.os() << summary.dump(2) << '\n';
            }
            return rep.exit_code();
        }

        if (lev->parsed()) {
            const Matrix A = load_matrix(lmat, g);
            LeverageScores l;
            if (lkind == "exact") {
                l = exact_leverage(A);
            } else if (lkind == "approx") {
                const Index d1 = ld1 > 0 ? ld1 : std::min(A.rows(), 4 * A.cols());
                const Index d2 = ld2 > 0 ? ld2 : default_leverage_d2(A.rows());
                l = approx_leverage(A, d1, d2, g.key());
            } else {
                if (lk < 1) throw ConfigError("subspace leverage needs --k");
                l = subspace_leverage(A, lk, ls, g.key());
            }
            Sink sink(g.out);
            write_leverage_csv(sink.os(), l.scores);
            std::cerr << json{{"kind", lkind}, {"sum", l.scores.sum()}, {"coherence", coherence(l)},
                              {"truncated", l.truncated}}
                             .dump()
                      << '\n';
            return 0;
        }

        if (tr->parsed()) {
            Matrix A = load_matrix(tmat, g);
            if (tgram) A = A.transpose() * A;
            if (A.rows() != A.cols()) throw ConfigError("trace needs a square matrix (or --gram)");
            const LinearOperator op = LinearOperator::from_matrix(A);
            json out{{"method", tmethod}, {"n", A.rows()}};
            TraceEstimate t;
            if (tmethod == "gh") {
                ProbeDist d;
                try {
                    d = parse_probe_dist(tdist);
                } catch (const std::exception& e) {
                    throw ConfigError(e.what());
                }
                t = girard_hutchinson(op, tprobes, d, g.key());
            } else if (tmethod == "hutchpp") {
                t = hutch_pp(op, tprobes, g.key());
            } else if (tmethod == "slq") {
                MatrixFunction f;
                try {
                    f = MatrixFunction::parse(tf);
                } catch (const std::exception& e) {
                    throw ConfigError(e.what());
                }
                t = slq(op, f, tprobes, tsteps, g.key());
                out["f"] = f.name;
            } else {
                t.value = A.trace();
            }
            out["estimate"] = t.value;
            out["sample_variance"] = t.sample_variance;
            out["probes"] = t.probes_used;
            Sink sink(g.out);
            sink.os() << std::setprecision(17) << out.dump(2) << '\n';
            return 0;
        }

        if (lr->parsed()) {
            const Matrix A = load_matrix(lrmat, g);
            const TsogOptions tsog = tsog_from(lrpasses);
            const Axis axis = lraxis == "row" ? Axis::row : Axis::column;
            json out{{"algo", lralgo}, {"k", lrk}};
            Matrix Ahat;
            if (lralgo == "rf1") {
                const Matrix Q = rf1(A, lrk, g.key(), tsog);
                Ahat = Q * (Q.transpose() * A);
                out["rank"] = Q.cols();
                write_factor(lrfactors, "Q", Q);
            } else if (lralgo == "qb2") {
                QbOptions q;
                q.tsog = tsog;
                const QBFactors f = qb2(A, lrk, lrtol, g.key(), q);
                Ahat = f.Q * f.B;
                out["rank"] = f.Q.cols();
                out["error_estimate"] = f.error_estimate;
                write_factor(lrfactors, "Q", f.Q);
                write_factor(lrfactors, "B", f.B);
            } else if (lralgo == "svd1") {
                const SVDFactors f = svd1(A, lrk, lrtol, lrs, g.key(), tsog);
                Ahat = f.U * f.sigma.asDiagonal() * f.V.transpose();
                out["sigma"] = to_vec(f.sigma);
                write_factor(lrfactors, "U", f.U);
                write_factor(lrfactors, "V", f.V);
            } else if (lralgo == "evd2") {
                if (!is_hermitian(A)) throw ConfigError("evd2 needs a symmetric psd matrix");
                const EVDFactors f = evd2(A, lrk, lrs, g.key(), tsog);
                Ahat = f.V * f.lambda.asDiagonal() * f.V.transpose();
                out["lambda"] = to_vec(f.lambda);
                out["clamped"] = f.clamped;
                write_factor(lrfactors, "V", f.V);
            } else if (lralgo == "osid1") {
                const OneSidedID id = osid1(A, lrk, lrs, axis, g.key(), tsog);
                Ahat = axis == Axis::column ? Matrix(select_columns(A, id.skeleton) * id.M)
                                            : Matrix(id.M * select_rows(A, id.skeleton));
                out["skeleton"] = to_vec(id.skeleton);
                write_factor(lrfactors, "X", id.M);
            } else {
                const CURFactors f = curd1(A, lrk, lrs, g.key(), tsog);
                Ahat = cur_reconstruct(A, f);
                out["columns"] = to_vec(f.J);
                out["rows"] = to_vec(f.I);
                write_factor(lrfactors, "U", f.U);
            }
            out["rel_err_fro"] = (A - Ahat).norm() / A.norm();
            out["rel_err_spectral"] = spectral_norm(A - Ahat) / spectral_norm(A);
            Sink sink(g.out);
            sink.os() << out.dump(2) << '\n';
            return 0;
        }

        if (ls_cmd->parsed()) {
            const Matrix A = load_matrix(qmat, g);
            const Vector b = load_vector_or_random(qrhs, A.rows(), g.key().substream(7));
            LsOptions o;
            o.tol = qtol;
            o.maxit = qmaxit;
            o.sampling_factor = qfactor;
            if (!qsketch.empty()) o.sketch = sketch_from(qsketch);
            json rep{{"algo", qalgo}};
            Vector x;
            if (qalgo == "spo1") {
                const LsResult r = spo1(A, b, g.key(), o);
                x = r.x;
                rep["iterations"] = r.report.iterations;
                rep["converged"] = r.report.converged;
                rep["fallback"] = r.used_fallback;
            } else if (qalgo == "sps2") {
                SaddleProblem P{A, b, Vector(), qmu};
                if (!qc.empty()) P.c = load_vector_or_random(qc, A.cols(), {});
                const SaddleSolution s = sps2(P, g.key(), o);
                x = s.x;
                rep["iterations"] = s.report.iterations;
                rep["converged"] = s.report.converged;
            } else {
                const Index d = qd > 0 ? qd : embedding_dim(A.rows(), A.cols(), qfactor);
                SketchConfig cfg = qsketch.empty() ? SketchConfig{SketchFamily::gaussian} : o.sketch;
                x = sketch_and_solve_ols(A, b, make_sketch(cfg, d, A.rows(), g.key()));
                rep["d"] = d;
            }
            const Vector r = A * x - b;
            rep["residual_norm"] = r.norm();
            Sink sink(g.out);
            bench::write_vector(sink.os(), x);
            std::cerr << rep.dump() << '\n';
            return 0;
        }

        if (qr->parsed()) {
            const Matrix A = load_matrix(pmat, g);
            const Index d = pd > 0 ? pd : default_qrcp_sketch_dim(A.rows(), A.cols());
            json out{{"algo", palgo}};
            Matrix Q, R, AJ;
            if (palgo == "sap_chol_qrcp") {
                const PivotedQR f = sap_chol_qrcp(A, d, g.key(), sketch_from(psketch));
                Q = f.Q;
                R = f.R;
                AJ = select_columns(A, f.J);
                out["rank"] = f.rank;
                out["J"] = to_vec(f.J);
                out["retries"] = f.retries;
            } else {
                const QRFactors f = palgo == "chol_qr" ? chol_qr(A) : rand_chol_qr(A, d, g.key(), sketch_from(psketch));
                Q = f.Q;
                R = f.R;
                AJ = A;
            }
            out["recon_err"] = (AJ - Q * R).norm() / A.norm();
            out["orth_err"] =
                Q.cols() ? (Q.transpose() * Q - Matrix::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff() : 0.0;
            write_factor(pfactors, "Q", Q);
            write_factor(pfactors, "R", R);
            Sink sink(g.out);
            sink.os() << out.dump(2) << '\n';
            return 0;
        }

        if (bs->parsed()) {
            const Matrix A = load_matrix(bmat, g);
            const Index d = bd > 0 ? bd : std::min(A.rows(), 10 * A.cols());
            const SketchOp S = make_sketch({SketchFamily::gaussian, 8, 1.0 / std::sqrt(static_cast<double>(d))}, d,
                                           A.rows(), g.key());
            const Matrix Ah = S.apply(A);
            json out{{"kind", bkind}, {"d", d}, {"B", bB}, {"alpha", balpha}};
            if (bkind == "ls") {
                const Vector b = load_vector_or_random(brhs, A.rows(), g.key().substream(7));
                const Vector bh = S.apply(b);
                const Vector xh = pinv_solve(Ah, bh);
                const BootstrapResult r = bootstrap_ls(Ah, bh, xh, bB, balpha,
                                                       bnorm == "l2" ? ErrorNorm::l2 : ErrorNorm::linf,
                                                       g.key().substream(9), g.parallel);
                out["quantile_estimate"] = r.quantile_estimate;
            } else {
                const BootstrapSvdResult r = bootstrap_svd(Ah, bk, bB, balpha, g.key().substream(9), g.parallel);
                out["sigma_quantile"] = r.sigma.quantile_estimate;
                out["vector_quantile"] = r.V.quantile_estimate;
            }
            Sink sink(g.out);
            sink.os() << out.dump(2) << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
