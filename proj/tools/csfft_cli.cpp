// Reproducible experiment driver: instance generation, recovery runs, metric
// evaluation, parameter sweeps, and baseline comparisons. All outputs embed
// the configuration echo plus its hash so any report can be reproduced.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <csfft/csfft.hpp>
#include <csfft/io.hpp>

namespace fs = std::filesystem;
using namespace csfft;

namespace {

int worker_count() {
    if (const char* env = std::getenv("CSFFT_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on a small pool; results ordered by index.
void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_count(), std::max(1, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

struct LoadedConfig {
    json raw;
    InstanceSpec instance;
    RecoverOptions algo;
};

LoadedConfig load_config(const std::string& path, uint64_t seed_override, bool has_seed) {
    LoadedConfig c;
    c.raw = load_json(path);
    if (c.raw.contains("instance_path")) {
        c.instance = instance_from_json(load_json(c.raw.at("instance_path").get<std::string>()));
    } else if (c.raw.contains("instance")) {
        c.instance = instance_from_json(c.raw.at("instance"));
    } else {
        throw ConfigError("config needs an \"instance\" object or \"instance_path\"");
    }
    c.algo = c.raw.contains("algo") ? recover_options_from_json(c.raw.at("algo")) : RecoverOptions{};
    c.algo.k = c.instance.k;
    c.algo.delta = c.instance.delta;
    if (has_seed) c.instance.seed = seed_override;
    return c;
}

/// Resolve T = 0 to the feasibility minimum (with 5% headroom).
void resolve_duration(InstanceSpec& inst, const RecoverOptions& algo) {
    if (inst.T > 0.0) return;
    HashConfig cfg = HashConfig::make(inst.k, inst.F, inst.eta, algo.delta, algo.alpha,
                                      algo.bins_per_tone);
    FlatWindow w = build_window(cfg.B, cfg.k, cfg.delta, cfg.alpha);
    real tmin = min_feasible_duration(cfg, w);
    HashConfig cfg2 = HashConfig::make(algo.prune_sparsity_factor * inst.k, inst.F, inst.eta,
                                       algo.delta, algo.alpha,
                                       std::max(2.0, algo.bins_per_tone / algo.prune_sparsity_factor));
    FlatWindow w2 = build_window(cfg2.B, cfg2.k, cfg2.delta, cfg2.alpha);
    tmin = std::max(tmin, min_feasible_duration(cfg2, w2));
    inst.T = 1.05 * tmin;
}

InstanceSpec piano_preset() {
    InstanceSpec s;
    s.k = 5;
    s.F = 4200.0;
    s.eta = 30.0;
    s.delta = 1e-6;
    s.seed = 1;
    return s;
}

int cmd_gen(const std::string& config_path, const std::string& preset, uint64_t seed,
            bool has_seed, const std::string& out_dir, bool trace) {
    InstanceSpec inst;
    RecoverOptions algo;
    json raw;
    if (!preset.empty()) {
        if (preset != "piano") throw ConfigError("unknown preset: " + preset);
        inst = piano_preset();
        raw = json{{"preset", preset}};
    } else {
        auto c = load_config(config_path, seed, has_seed);
        inst = c.instance;
        algo = c.algo;
        raw = c.raw;
    }
    if (has_seed) inst.seed = seed;
    resolve_duration(inst, algo);

    // freeze the drawn tones into the file so the instance is exactly portable
    SignalSource src = inst.build();
    InstanceSpec frozen = inst;
    frozen.tones = src.tones().tones;

    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / "instance.json").string();
    write_text_file(path, to_json(frozen).dump(2) + "\n");
    std::cout << "wrote " << path << " (k=" << inst.k << ", F=" << inst.F << ", eta=" << inst.eta
              << ", T=" << inst.T << ")\n";

    if (trace) {
        CsvWriter csv((fs::path(out_dir) / "trace.csv").string());
        csv.header("t,re,im");
        const int n = 2048;
        for (int i = 0; i < n; ++i) {
            real t = inst.T * (i + 0.5) / n;
            cplx v = src.probe(t);
            csv.row(t, v.real(), v.imag());
        }
    }
    return 0;
}

int cmd_recover(const std::string& config_path, uint64_t seed, bool has_seed,
                const std::string& out_dir, bool oracle, bool trace) {
    auto c = load_config(config_path, seed, has_seed);
    resolve_duration(c.instance, c.algo);
    SignalSource src = c.instance.build();
    RecoveryReport rep = recover(src, c.algo, c.instance.seed);

    json echo{{"instance", to_json(c.instance)}, {"algo", to_json(c.algo)}};
    json out = report_to_json(rep, echo);

    if (oracle) {
        GridOracleResult orc = grid_oracle(src, c.instance.k);
        json ot = json::array();
        for (const auto& t : orc.tones.tones)
            ot.push_back({{"re", t.v.real()}, {"im", t.v.imag()}, {"f", t.f}});
        out["oracle"] = {{"tones", ot},
                         {"samples_used", orc.samples_used},
                         {"low_confidence", orc.low_confidence}};
    }
    if (trace) {
        // one diagnostic stage with the trace hook wired in
        fs::create_directories(out_dir);
        std::ofstream tf(fs::path(out_dir) / "locate_trace.jsonl");
        HashConfig cfg = HashConfig::make(c.algo.k, c.instance.F, c.instance.eta, c.algo.delta,
                                          c.algo.alpha, c.algo.bins_per_tone);
        FlatWindow w = build_window(cfg.B, cfg.k, cfg.delta, cfg.alpha);
        Rng rng(c.instance.seed ^ 0xABCDEF);
        HashDraw d = draw_hash(cfg, rng);
        locate_k_signal(src, cfg, d, c.algo.stage.locate, w, rng, nullptr,
                        [&](const LocateTraceEntry& e) {
                            tf << json{{"round", e.round},
                                       {"bin", e.bin},
                                       {"delta_l", e.delta_l},
                                       {"beta_hat", e.beta_hat},
                                       {"resolved", e.resolved},
                                       {"value", e.value}}
                                      .dump()
                               << "\n";
                        });
    }

    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "report.json").string(), out.dump(2) + "\n");
    write_tones_csv((fs::path(out_dir) / "tones.csv").string(), rep);
    std::cout << "recovered " << rep.tones.k() << " tones, eq2=" << rep.eq2 << ", eq3=" << rep.eq3
              << ", samples=" << rep.samples_used << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path) {
    json j = load_json(config_path);
    InstanceSpec inst = instance_from_json(
        j.contains("instance_path") ? load_json(j.at("instance_path").get<std::string>())
                                    : j.at("instance"));
    if (inst.T <= 0.0) throw ConfigError("eval: instance must carry an explicit T");
    if (!j.contains("tones")) throw ConfigError("eval: config needs a \"tones\" array");
    ToneSet found;
    found.eta = inst.eta;
    for (const auto& t : j.at("tones"))
        found.tones.push_back(
            {cplx(t.at("re").get<real>(), t.at("im").get<real>()), t.at("f").get<real>()});
    SignalSource src = inst.build();
    Matching m = match_tones(src.tones(), found, inst.T);
    Eq3Result e3 = eq3_error(found, src, inst.T);
    json out{{"eq2_total", m.total()},
             {"matched", m.pairs.size()},
             {"eq3", e3.value},
             {"eq3_std_error", e3.std_error},
             {"noise_level2", noise_level(src, inst.delta)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, uint64_t seed, bool has_seed, int trials_override,
              const std::string& out_dir) {
    auto c = load_config(config_path, seed, has_seed);
    if (!c.raw.contains("sweep")) throw ConfigError("sweep: config needs a \"sweep\" object");
    const auto& sw = c.raw.at("sweep");
    const std::string param = sw.value("parameter", "");
    std::vector<real> values = sw.value("values", std::vector<real>{});
    int trials = trials_override > 0 ? trials_override : sw.value("trials", 5);
    if (values.empty()) throw ConfigError("sweep: empty \"values\" list");
    if (param != "snr" && param != "k") throw ConfigError("sweep: parameter must be snr or k");

    struct Row {
        real value;
        int trial;
        uint64_t seed;
        int k;
        real df_max, df_med, dv_max, eq2, eq3, n2;
        uint64_t samples;
        double wall_ms;
        bool ok;
    };
    const int n = static_cast<int>(values.size()) * trials;
    std::vector<Row> rows(static_cast<std::size_t>(n));

    parallel_for(n, [&](int idx) {
        const int vi = idx / trials;
        const int trial = idx % trials;
        InstanceSpec inst = c.instance;
        RecoverOptions algo = c.algo;
        inst.tones.clear();   // re-draw per trial
        inst.seed = c.instance.seed + 1000003ULL * static_cast<uint64_t>(idx);
        const real value = values[static_cast<std::size_t>(vi)];
        if (param == "snr") {
            // amplitude SNR rho = |v| / N with unit magnitudes
            real n2 = 1.0 / (value * value);
            real var = n2 - algo.delta * inst.k;
            if (var <= 0.0) throw ConfigError("sweep: SNR unreachable at this delta");
            inst.noise_kind = "gaussian";
            inst.noise_variance = var;
        } else {
            inst.k = static_cast<int>(value);
            algo.k = inst.k;
        }
        resolve_duration(inst, algo);
        SignalSource src = inst.build();
        RecoveryReport rep = recover(src, algo, inst.seed * 2654435761ULL + 17);

        Row r{};
        r.value = value;
        r.trial = trial;
        r.seed = inst.seed;
        r.k = inst.k;
        std::vector<real> dfs;
        for (const auto& p : rep.per_tone) {
            dfs.push_back(p.df);
            r.df_max = std::max(r.df_max, p.df);
            r.dv_max = std::max(r.dv_max, p.dv);
        }
        std::sort(dfs.begin(), dfs.end());
        r.df_med = dfs.empty() ? -1.0 : dfs[dfs.size() / 2];
        r.eq2 = rep.eq2;
        r.eq3 = rep.eq3;
        r.n2 = rep.noise_level2;
        r.samples = rep.samples_used;
        r.wall_ms = rep.wall_ms;
        r.ok = rep.matched == inst.k;
        rows[static_cast<std::size_t>(idx)] = r;
    });

    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / ("sweep_" + param + ".csv")).string();
    CsvWriter csv(path);
    csv.header("parameter,value,trial,seed,k,df_max,df_median,dv_max,eq2,eq3,noise_level2,samples,"
               "wall_ms,all_matched,config_hash");
    const std::string hash = config_hash(c.raw);
    for (const auto& r : rows)
        csv.row(param, r.value, r.trial, r.seed, r.k, r.df_max, r.df_med, r.dv_max, r.eq2, r.eq3,
                r.n2, r.samples, r.wall_ms, r.ok ? 1 : 0, hash);
    std::cout << "wrote " << path << " (" << n << " rows)\n";
    return 0;
}

int cmd_baselines(const std::string& config_path, uint64_t seed, bool has_seed,
                  const std::string& out_dir) {
    auto c = load_config(config_path, seed, has_seed);
    resolve_duration(c.instance, c.algo);
    SignalSource src = c.instance.build();
    const real T = c.instance.T;

    struct Entry {
        std::string method;
        real df_max = -1.0;
        real eq3 = -1.0;
        uint64_t samples = 0;
    };
    std::vector<Entry> entries;

    auto eval_set = [&](const std::string& name, const ToneSet& set, uint64_t samples) {
        Entry e;
        e.method = name;
        Matching m = match_tones(src.tones(), set, T,
                                 std::max(0.5 * c.instance.eta, 1.0 / T));
        for (const auto& p : m.pairs) e.df_max = std::max(e.df_max, p.error.df);
        e.eq3 = eq3_error(set, src, T).value;
        e.samples = samples;
        entries.push_back(e);
    };

    {
        uint64_t before = src.samples_used();
        RecoveryReport rep = recover(src, c.algo, c.instance.seed);
        eval_set("csfft", rep.tones, src.samples_used() - before);
    }
    {
        uint64_t before = src.samples_used();
        GridOracleResult orc = grid_oracle(src, c.instance.k);
        eval_set("grid_oracle", orc.tones, src.samples_used() - before);
    }
    {
        uint64_t before = src.samples_used();
        int n = static_cast<int>(std::ceil(2.0 * c.instance.F * T));
        ToneSet dft = dense_dft_baseline(src, n, c.instance.k);
        eval_set("dense_dft", dft, src.samples_used() - before);
    }

    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / "baselines.csv").string();
    CsvWriter csv(path);
    csv.header("method,df_max,eq3,samples,config_hash");
    const std::string hash = config_hash(c.raw);
    for (const auto& e : entries) csv.row(e.method, e.df_max, e.eq3, e.samples, hash);
    std::cout << "wrote " << path << "\n";
    for (const auto& e : entries)
        std::cout << "  " << e.method << ": df_max=" << e.df_max << " eq3=" << e.eq3
                  << " samples=" << e.samples << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse continuous-frequency recovery experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", preset;
    uint64_t seed = 0;
    bool has_seed = false, oracle = false, trace = false;
    int trials = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "JSON config path");
        if (needs_config) opt->required();
        sub->add_option("--seed", seed, "instance seed override")->each([&](const std::string&) {
            has_seed = true;
        });
        sub->add_option("--out-dir", out_dir, "output directory");
    };

    auto* gen = app.add_subcommand("gen", "generate an instance file");
    add_common(gen, false);
    gen->add_option("--preset", preset, "named preset (piano)");
    gen->add_flag("--trace", trace, "also write a dense sample trace CSV");

    auto* rec = app.add_subcommand("recover", "run recovery and write a report");
    add_common(rec, true);
    rec->add_flag("--oracle", oracle, "also run the dense grid oracle");
    rec->add_flag("--trace", trace, "write a locate trace (JSON lines)");

    auto* ev = app.add_subcommand("eval", "evaluate a tone list against an instance");
    add_common(ev, true);

    auto* sw = app.add_subcommand("sweep", "parameter sweep producing long-form CSV");
    add_common(sw, true);
    sw->add_option("--trials", trials, "trials per sweep point");

    auto* bl = app.add_subcommand("baselines", "compare against naive baselines");
    add_common(bl, true);

    try {
        app.parse(argc, argv);
        if (gen->parsed()) {
            if (config_path.empty() && preset.empty())
                throw ConfigError("gen: need --config or --preset");
            return cmd_gen(config_path, preset, seed, has_seed, out_dir, trace);
        }
        if (rec->parsed()) return cmd_recover(config_path, seed, has_seed, out_dir, oracle, trace);
        if (ev->parsed()) return cmd_eval(config_path);
        if (sw->parsed()) return cmd_sweep(config_path, seed, has_seed, trials, out_dir);
        if (bl->parsed()) return cmd_baselines(config_path, seed, has_seed, out_dir);
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    } catch (const DurationError& e) {
        std::cerr << "duration error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
