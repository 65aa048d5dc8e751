#pragma once

// Synthetic test matrices A = U diag(sigma) V^T with a prescribed spectrum and
// leverage structure.

#include <cmath>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "randnla/linalg.hpp"
#include "randnla/lowrank.hpp"
#include "randnla/rng.hpp"
#include "randnla/serialize.hpp"

namespace randnla::bench {

enum class SpectrumKind { flat, step, power, exp };
enum class CoherenceKind { incoherent, spiked };

struct MatrixSpec {
    Index m = 100, n = 10;
    SpectrumKind spectrum = SpectrumKind::flat;
    Index step_rank = 1;   // step: leading singular values equal to gap
    double gap = 10.0;
    double decay = 1.0;    // power: (i+1)^-decay, exp: exp(-decay i)
    Index rank = -1;       // if >= 0, singular values past `rank` are zeroed
    CoherenceKind coherence = CoherenceKind::incoherent;
    Index spiked_rows = 1;
    double spiked_weight = 10.0;
    std::uint64_t seed = 0;
};

inline Vector spectrum_values(const MatrixSpec& s) {
    const Index p = std::min(s.m, s.n);
    Vector sigma(p);
    for (Index i = 0; i < p; ++i) {
        const auto x = static_cast<double>(i);
        switch (s.spectrum) {
            case SpectrumKind::flat: sigma(i) = 1.0; break;
            case SpectrumKind::step: sigma(i) = i < s.step_rank ? s.gap : 1.0; break;
            case SpectrumKind::power: sigma(i) = std::pow(x + 1.0, -s.decay); break;
            case SpectrumKind::exp: sigma(i) = std::exp(-s.decay * x); break;
        }
    }
    if (s.rank >= 0)
        for (Index i = s.rank; i < p; ++i) sigma(i) = 0.0;
    return sigma;
}

inline void validate(const MatrixSpec& s) {
    if (s.m < 1 || s.n < 1) throw std::invalid_argument("matrix spec: m and n must be positive");
    const Index p = std::min(s.m, s.n);
    if (s.spectrum == SpectrumKind::step && (s.step_rank < 0 || s.step_rank > p))
        throw std::invalid_argument("matrix spec: step rank exceeds min(m, n)");
    if (s.rank > p) throw std::invalid_argument("matrix spec: rank exceeds min(m, n)");
    if (s.coherence == CoherenceKind::spiked && (s.spiked_rows < 0 || s.spiked_rows > p))
        throw std::invalid_argument("matrix spec: spiked rows exceed min(m, n)");
}

/// Orthonormal m x p factor from a Gaussian matrix. Spiked coherence adds a
/// multiple of sqrt(m) e_j to column j < spiked_rows before orthonormalizing,
/// which pulls the left singular vectors toward the first coordinate axes.
inline Matrix left_factor(const MatrixSpec& s, Index p) {
    Matrix G = gaussian_matrix(s.m, p, derive_key(s.seed, 0));
    if (s.coherence == CoherenceKind::spiked)
        for (Index j = 0; j < s.spiked_rows; ++j) G(j, j) += s.spiked_weight * std::sqrt(static_cast<double>(s.m));
    return qr_econ(G).Q;
}

inline Matrix gen_matrix(const MatrixSpec& s) {
    validate(s);
    const Index p = std::min(s.m, s.n);
    const Matrix U = left_factor(s, p);
    const Matrix V = qr_econ(gaussian_matrix(s.n, p, derive_key(s.seed, 1))).Q;
    return U * spectrum_values(s).asDiagonal() * V.transpose();
}

inline std::string to_string(SpectrumKind k) {
    switch (k) {
        case SpectrumKind::flat: return "flat";
        case SpectrumKind::step: return "step";
        case SpectrumKind::power: return "power";
        case SpectrumKind::exp: return "exp";
    }
    return "?";
}

/// {"m", "n", "spectrum": {"kind", "r", "gap", "decay" | "cond"}, "rank",
///  "coherence": {"kind", "rows", "weight"}, "seed"}. For exp spectra a "cond"
/// entry sets decay = ln(cond) / (min(m, n) - 1).
inline MatrixSpec spec_from_json(const nlohmann::json& j) {
    MatrixSpec s;
    s.m = j.at("m").get<Index>();
    s.n = j.at("n").get<Index>();
    if (j.contains("spectrum")) {
        const auto& sp = j.at("spectrum");
        const std::string kind = sp.is_string() ? sp.get<std::string>() : sp.at("kind").get<std::string>();
        if (kind == "flat") s.spectrum = SpectrumKind::flat;
        else if (kind == "step") s.spectrum = SpectrumKind::step;
        else if (kind == "power") s.spectrum = SpectrumKind::power;
        else if (kind == "exp") s.spectrum = SpectrumKind::exp;
        else throw std::invalid_argument("unknown spectrum kind '" + kind + "'");
        if (sp.is_object()) {
            s.step_rank = sp.value("r", s.step_rank);
            s.gap = sp.value("gap", s.gap);
            s.decay = sp.value("decay", s.decay);
            if (sp.contains("cond")) {
                const double cond = sp.at("cond").get<double>();
                const Index p = std::min(s.m, s.n);
                if (!(cond >= 1.0)) throw std::invalid_argument("spectrum cond must be >= 1");
                s.decay = p > 1 ? std::log(cond) / static_cast<double>(p - 1) : 0.0;
            }
        }
    }
    s.rank = j.value("rank", Index{-1});
    if (j.contains("coherence")) {
        const auto& c = j.at("coherence");
        const std::string kind = c.is_string() ? c.get<std::string>() : c.at("kind").get<std::string>();
        if (kind == "incoherent") s.coherence = CoherenceKind::incoherent;
        else if (kind == "spiked") s.coherence = CoherenceKind::spiked;
        else throw std::invalid_argument("unknown coherence kind '" + kind + "'");
        if (c.is_object()) {
            s.spiked_rows = c.value("rows", s.spiked_rows);
            s.spiked_weight = c.value("weight", s.spiked_weight);
        }
    }
    if (j.contains("seed")) s.seed = seed_from_json(j.at("seed")).key;
    validate(s);
    return s;
}

inline nlohmann::json spec_to_json(const MatrixSpec& s) {
    nlohmann::json sp{{"kind", to_string(s.spectrum)}};
    if (s.spectrum == SpectrumKind::step) {
        sp["r"] = s.step_rank;
        sp["gap"] = s.gap;
    } else if (s.spectrum != SpectrumKind::flat) {
        sp["decay"] = s.decay;
    }
    nlohmann::json j{{"m", s.m}, {"n", s.n}, {"spectrum", sp}, {"seed", hex_u64(s.seed)}};
    if (s.rank >= 0) j["rank"] = s.rank;
    if (s.coherence == CoherenceKind::spiked)
        j["coherence"] = {{"kind", "spiked"}, {"rows", s.spiked_rows}, {"weight", s.spiked_weight}};
    else
        j["coherence"] = "incoherent";
    return j;
}

}  // namespace randnla::bench
