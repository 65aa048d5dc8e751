#pragma once

// JSON descriptors for sketching operators. A descriptor records how to
// regenerate an operator, never its entries.

#include <cstdio>
#include <string>
#include <type_traits>

#include "json.hpp"

#include "randnla/sketching.hpp"

namespace randnla {

using json = nlohmann::json;

inline std::string hex_u64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline json seed_to_json(const RngKey& k) { return {{"key", hex_u64(k.key)}, {"counter_offset", hex_u64(k.counter_offset)}}; }

/// Accepts a number, a decimal/hex string, or {"key": ..., "counter_offset": ...}.
inline RngKey seed_from_json(const json& j) {
    auto u64 = [](const json& v) -> std::uint64_t {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer()) {
            const auto x = v.get<long long>();
            if (x < 0) throw std::invalid_argument("seed values must be nonnegative");
            return static_cast<std::uint64_t>(x);
        }
        if (v.is_string()) return parse_u64(v.get<std::string>());
        throw std::invalid_argument("seed must be an integer or integer string");
    };
    if (j.is_object()) return {u64(j.at("key")), j.contains("counter_offset") ? u64(j.at("counter_offset")) : 0};
    return {u64(j), 0};
}

inline json to_descriptor(const SketchOp& op) {
    json j = std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            json d{{"d", s.rows()}, {"m", s.cols()}, {"seed", seed_to_json(s.seed())}};
            if constexpr (std::is_same_v<T, DenseSketchOp>) {
                d["family"] = to_string(s.family());
                d["orientation"] = s.orientation() == Orientation::wide ? "wide" : "tall";
            } else if constexpr (std::is_same_v<T, Saso>) {
                d["family"] = "saso";
                d["k"] = s.nnz_per_column();
                d["method"] = to_string(s.method());
            } else if constexpr (std::is_same_v<T, SrftOp>) {
                d["family"] = "srft";
            } else {
                d["family"] = "row_sampler";
                d["probabilities"] = std::vector<double>(s.probabilities().data(),
                                                         s.probabilities().data() + s.probabilities().size());
            }
            return d;
        },
        op.impl());
    if (op.is_transposed()) j["transposed"] = true;
    if (op.scale() != 1.0) j["scale"] = op.scale();
    return j;
}

inline SketchOp from_descriptor(const json& j) {
    const std::string fam = j.at("family").get<std::string>();
    const Index d = j.at("d").get<Index>();
    const Index m = j.at("m").get<Index>();
    const RngKey seed = seed_from_json(j.at("seed"));
    SketchOp op = [&]() -> SketchOp {
        if (fam == "saso") {
            const std::string method = j.value("method", std::string("replacement_free"));
            if (method != "replacement_free" && method != "blocked") throw std::invalid_argument("unknown SASO method");
            return sample_saso(d, m, j.value("k", Index{8}), seed,
                               method == "blocked" ? SasoMethod::blocked : SasoMethod::replacement_free);
        }
        if (fam == "srft") return sample_srft(d, m, seed);
        if (fam == "row_sampler") {
            const auto q = j.at("probabilities").get<std::vector<double>>();
            return sample_row_sampler(d, Eigen::Map<const Vector>(q.data(), static_cast<Index>(q.size())), seed);
        }
        DenseFamily df;
        if (fam == "gaussian") df = DenseFamily::gaussian;
        else if (fam == "rademacher") df = DenseFamily::rademacher;
        else if (fam == "uniform") df = DenseFamily::uniform;
        else if (fam == "haar") df = DenseFamily::haar;
        else throw std::invalid_argument("unknown sketch family '" + fam + "'");
        const std::string orient = j.value("orientation", std::string(d <= m ? "wide" : "tall"));
        return sample_dense(df, d, m, seed, orient == "wide" ? Orientation::wide : Orientation::tall);
    }();
    if (j.value("transposed", false)) op = op.transposed();
    if (j.contains("scale")) op = op.scaled(j.at("scale").get<double>());
    return op;
}

}  // namespace randnla
