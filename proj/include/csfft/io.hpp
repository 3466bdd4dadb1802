#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "csfft/common.hpp"
#include "csfft/recovery.hpp"
#include "csfft/signal_model.hpp"

namespace csfft {

using json = nlohmann::json;

/// Everything needed to rebuild an instance bit-for-bit.
struct InstanceSpec {
    int k = 1;
    real F = 1000.0;
    real eta = 50.0;
    real T = 0.0;     // 0 means "use the feasibility minimum"
    real delta = 1e-6;
    std::string noise_kind = "none";   // none | gaussian | decay
    real noise_variance = 0.0;
    real noise_decay_rate = 0.0;
    real magnitude_lo = 1.0;
    real magnitude_hi = 1.0;
    uint64_t seed = 1;
    std::vector<Tone> tones;   // explicit tones; empty means "draw from seed"

    NoiseModel noise_model() const {
        if (noise_kind == "none") return NoiseModel::none();
        if (noise_kind == "gaussian") return NoiseModel::gaussian(noise_variance);
        if (noise_kind == "decay") return NoiseModel::decay(noise_decay_rate);
        throw ConfigError("unknown noise kind: " + noise_kind);
    }

    SignalSource build() const {
        if (T <= 0.0) throw ConfigError("InstanceSpec: T must be set before building");
        if (!tones.empty()) {
            ToneSet set;
            set.eta = eta;
            set.tones = tones;
            return SignalSource(std::move(set), noise_model(), T, F, seed);
        }
        return make_instance(k, F, eta, {magnitude_lo, magnitude_hi}, noise_model(), T, seed);
    }
};

inline json to_json(const InstanceSpec& s) {
    json tones = json::array();
    for (const auto& t : s.tones)
        tones.push_back({{"re", t.v.real()}, {"im", t.v.imag()}, {"f", t.f}});
    json noise = {{"kind", s.noise_kind}};
    if (s.noise_kind == "gaussian") noise["variance"] = s.noise_variance;
    if (s.noise_kind == "decay") noise["rate"] = s.noise_decay_rate;
    return json{{"k", s.k},
                {"F", s.F},
                {"eta", s.eta},
                {"T", s.T},
                {"delta", s.delta},
                {"tones", tones},
                {"noise", noise},
                {"magnitude", {{"lo", s.magnitude_lo}, {"hi", s.magnitude_hi}}},
                {"seed", s.seed}};
}

inline InstanceSpec instance_from_json(const json& j) {
    InstanceSpec s;
    s.k = j.at("k").get<int>();
    s.F = j.at("F").get<real>();
    s.eta = j.at("eta").get<real>();
    s.T = j.value("T", 0.0);
    s.delta = j.value("delta", 1e-6);
    s.seed = j.value("seed", uint64_t(1));
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        s.noise_kind = n.value("kind", "none");
        s.noise_variance = n.value("variance", 0.0);
        s.noise_decay_rate = n.value("rate", 0.0);
    }
    if (j.contains("magnitude")) {
        s.magnitude_lo = j.at("magnitude").value("lo", 1.0);
        s.magnitude_hi = j.at("magnitude").value("hi", 1.0);
    }
    if (j.contains("tones"))
        for (const auto& t : j.at("tones"))
            s.tones.push_back({cplx(t.at("re").get<real>(), t.at("im").get<real>()),
                               t.at("f").get<real>()});
    if (s.k < 1) throw ConfigError("instance: k must be >= 1");
    if (!s.tones.empty() && static_cast<int>(s.tones.size()) != s.k)
        throw ConfigError("instance: explicit tone list length must equal k");
    return s;
}

inline json to_json(const RecoverOptions& o) {
    return json{{"k", o.k},
                {"delta", o.delta},
                {"alpha", o.alpha},
                {"bins_per_tone", o.bins_per_tone},
                {"merge",
                 {{"c", o.merge.c},
                  {"b_frac", o.merge.b_frac},
                  {"stage_floor", o.merge.stage_floor},
                  {"c_s", o.merge.c_s}}},
                {"locate",
                 {{"C", o.stage.locate.C},
                  {"c_n", o.stage.locate.c_n},
                  {"c_R", o.stage.locate.c_R},
                  {"r_loc_min", o.stage.locate.r_loc_min},
                  {"t_min", o.stage.locate.t_min},
                  {"duration_fraction", o.stage.locate.duration_fraction}}},
                {"estimate_offset_fraction", o.stage.estimate_offset_fraction},
                {"exclude_alpha_fraction", o.stage.exclude_alpha_fraction},
                {"prune_sparsity_factor", o.prune_sparsity_factor},
                {"eq3_mc_points", o.eq3_mc_points}};
}

inline RecoverOptions recover_options_from_json(const json& j) {
    RecoverOptions o;
    o.k = j.value("k", 1);
    o.delta = j.value("delta", 1e-6);
    o.alpha = j.value("alpha", 0.2);
    o.bins_per_tone = j.value("bins_per_tone", 16.0);
    if (j.contains("merge")) {
        const auto& m = j.at("merge");
        o.merge.c = m.value("c", 0.1);
        o.merge.b_frac = m.value("b_frac", 0.6);
        o.merge.stage_floor = m.value("stage_floor", 10);
        o.merge.c_s = m.value("c_s", 2.0);
    }
    if (j.contains("locate")) {
        const auto& l = j.at("locate");
        o.stage.locate.C = l.value("C", 36.0);
        o.stage.locate.c_n = l.value("c_n", 2);
        o.stage.locate.c_R = l.value("c_R", 1.0);
        o.stage.locate.r_loc_min = l.value("r_loc_min", 5);
        o.stage.locate.t_min = l.value("t_min", 6);
        o.stage.locate.duration_fraction = l.value("duration_fraction", 0.5);
    }
    o.stage.estimate_offset_fraction = j.value("estimate_offset_fraction", 0.25);
    o.stage.exclude_alpha_fraction = j.value("exclude_alpha_fraction", 0.125);
    o.prune_sparsity_factor = j.value("prune_sparsity_factor", 2);
    o.eq3_mc_points = j.value("eq3_mc_points", 100000);
    return o;
}

/// FNV-1a over the canonical (key-sorted) dump; embedded in every output so a
/// report can be traced back to its exact configuration.
inline std::string config_hash(const json& j) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : j.dump()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline json report_to_json(const RecoveryReport& r, const json& config_echo) {
    json tones = json::array();
    for (const auto& t : r.tones.tones)
        tones.push_back({{"re", t.v.real()}, {"im", t.v.imag()}, {"f", t.f}});
    json per_tone = json::array();
    for (const auto& p : r.per_tone)
        per_tone.push_back({{"f_true", p.f_true},
                            {"v_true_abs", p.v_true_abs},
                            {"df", p.df},
                            {"dv", p.dv},
                            {"dist2", p.dist2},
                            {"f_found", p.f_found}});
    return json{{"config", config_echo},
                {"config_hash", config_hash(config_echo)},
                {"seed", r.seed},
                {"tones", tones},
                {"metrics",
                 {{"per_tone", per_tone},
                  {"matched", r.matched},
                  {"eq2_total", r.eq2},
                  {"eq3", r.eq3},
                  {"eq3_std_error", r.eq3_std_error},
                  {"noise_level2", r.noise_level2}}},
                {"samples_used", r.samples_used},
                {"samples_run2", r.samples_run2},
                {"fewer_than_k", r.fewer_than_k},
                {"min_feasible_T", r.min_feasible_T},
                {"wall_ms", r.wall_ms}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << content;
}

/// Minimal CSV writer; fields are written with full double precision.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw ConfigError("cannot open for writing: " + path);
        out_ << std::setprecision(17);
    }
    void header(const std::string& line) { out_ << line << "\n"; }
    template <typename... Ts>
    void row(Ts&&... vals) {
        bool first = true;
        ((out_ << (first ? "" : ",") << vals, first = false), ...);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

inline void write_tones_csv(const std::string& path, const RecoveryReport& r) {
    CsvWriter csv(path);
    csv.header("f,re,im,abs,matched_true_f,dist2");
    for (const auto& t : r.tones.tones) {
        const RecoveryReport::PerTone* match = nullptr;
        for (const auto& p : r.per_tone)
            if (p.f_found == t.f && p.v_found == t.v) { match = &p; break; }
        if (match)
            csv.row(t.f, t.v.real(), t.v.imag(), std::abs(t.v), match->f_true, match->dist2);
        else
            csv.row(t.f, t.v.real(), t.v.imag(), std::abs(t.v), "", "");
    }
}

inline void write_window_csv(const std::string& path, const FlatWindow& w) {
    CsvWriter csv(path);
    csv.header("i,g");
    for (int n = -w.half; n <= w.half; ++n) csv.row(n, w.coeff(n));
}

inline void write_spectrum_csv(const std::string& path, const FlatWindow& w, int grid) {
    CsvWriter csv(path);
    csv.header("theta,magnitude");
    auto vals = w.spectrum_grid(grid);
    for (int j = 0; j < grid; ++j) {
        real theta = kTwoPi * j / grid;
        if (theta >= kPi) theta -= kTwoPi;
        csv.row(theta, std::abs(vals[static_cast<std::size_t>(j)]));
    }
}

inline void write_bins_csv(const std::string& path, const BinMeasurement& m) {
    CsvWriter csv(path);
    csv.header("bin,re,im,abs");
    for (std::size_t j = 0; j < m.u_hat.size(); ++j)
        csv.row(j, m.u_hat[j].real(), m.u_hat[j].imag(), std::abs(m.u_hat[j]));
}

}  // namespace csfft
