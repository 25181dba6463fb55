// iotac: attack detection over packet traces and feature datasets.
//
//   iotac synth    --scenario flood --seed 7 -o flood.csv
//   iotac init     benign.csv -o state.json
//   iotac replay   trace.csv --state state.json --online --log decisions.csv
//   iotac replay   trace.csv --cold-start --online
//   iotac replay   hosts.csv --cold-start --online --devices --report devices.json
//   iotac eval     decisions.csv trace.csv --out-dir report --assert "accuracy>=99,fpr<=1"
//   iotac bench

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iotac/bench.hpp"
#include "iotac/config.hpp"
#include "iotac/device_monitor.hpp"
#include "iotac/errors.hpp"
#include "iotac/eval.hpp"
#include "iotac/state_io.hpp"
#include "iotac/traffic.hpp"

using namespace iotac;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;

struct CommonOpts {
    std::string config;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", o.sets, "override a config key, e.g. --set train.seed=3")->take_all();
}

Config resolve_config(const CommonOpts& o) { return load_config(o.config, o.sets); }

OrderPolicy order_of(const Config& c) { return c.io.strict_order ? OrderPolicy::strict : OrderPolicy::stable_sort; }

/// Output stream that is stdout for "-" or an empty path.
class Sink {
public:
    Sink() = default;
    explicit Sink(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw Error("cannot write " + path);
    }
    std::ostream& out() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

json alert_json(const Decision& d, const std::string* addr = nullptr) {
    json j = {{"timestamp_us", d.at_us}, {"decision_value", d.value}, {"threshold", d.threshold},
              {"mode", to_string(d.mode)}};
    if (addr) j["addr"] = *addr;
    return j;
}

std::string safe_name(std::string addr) {
    for (char& c : addr) {
        if (c == '/' || c == ':' || c == '\\') c = '_';
    }
    return addr;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
    std::string spec;
    std::string scenario;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_synth(const SynthOpts& o) {
    SynthSpec spec;
    if (!o.spec.empty()) {
        std::ifstream in(o.spec);
        if (!in) throw Error("cannot open " + o.spec);
        spec = json::parse(in).get<SynthSpec>();
    } else if (o.scenario == "flood") {
        spec = flood_scenario();
    } else if (o.scenario == "drift") {
        spec = drift_scenario();
    } else if (o.scenario == "stationary") {
        spec = stationary_scenario();
    } else if (o.scenario == "device") {
        spec = device_scenario();
    } else {
        throw ConfigError("give --spec or --scenario {flood,drift,stationary,device}");
    }
    const auto trace = synth_trace(spec, o.seed);
    Sink sink(o.out);
    write_trace(trace, sink.out());
    std::cerr << "synth: " << trace.records.size() << " records\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// init

struct InitOpts {
    CommonOpts common;
    std::string input;
    bool features = false;
    std::string out;
};

std::vector<std::vector<double>> benign_init_rows_trace(const Trace& trace, const Config& cfg) {
    MetricWindow window(cfg.metrics);
    std::vector<std::vector<double>> rows;
    const auto& d = cfg.detector;
    const auto limit_us = static_cast<std::int64_t>(d.init_seconds * 1e6);
    for (const auto& r : trace.records) {
        const auto m = window.push(r.timestamp_us, r.size_bytes);
        if (d.init_seconds > 0.0 && r.timestamp_us - trace.records.front().timestamp_us >= limit_us) break;
        if (r.label == Label::attack) continue;
        rows.push_back(to_vector(m));
        if (d.init_seconds <= 0.0 && rows.size() == d.init_len) break;
    }
    return rows;
}

int cmd_init(const InitOpts& o) {
    Config cfg = resolve_config(o.common);
    std::vector<std::vector<double>> rows;
    std::size_t dim = 3;
    Mode mode = Mode::botnet;
    if (o.features) {
        mode = Mode::features;
        const auto data = load_feature_dataset(o.input);
        for (const auto& r : data) {
            if (r.label == Label::attack) continue;
            rows.push_back(r.features);
            if (rows.size() == cfg.detector.init_len) break;
        }
        if (!data.empty()) dim = data.front().features.size();
    } else {
        rows = benign_init_rows_trace(load_trace(o.input, order_of(cfg)), cfg);
    }
    const bool by_time = cfg.detector.init_seconds > 0.0;
    if ((!by_time && rows.size() < cfg.detector.init_len) || rows.size() < 4) {
        throw DataError("init needs " + std::to_string(by_time ? 4 : cfg.detector.init_len) +
                        " benign rows, the input has " + std::to_string(rows.size()));
    }
    cfg.detector.mode = mode;
    cfg.detector.async_training = false;
    DetectorConfig dc = cfg.detector;
    if (dc.gamma.empty()) dc.gamma = cfg.metrics.gamma;
    Detector det(dc, dim);
    det.initialize(rows);
    save_state(o.out, det, cfg);
    std::cerr << "init: " << rows.size() << " rows, threshold " << det.threshold() << ", wrote " << o.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// replay

struct ReplayOpts {
    CommonOpts common;
    std::string input;
    std::string state;
    bool cold_start = false;
    bool online = false;
    bool devices = false;
    bool features = false;
    std::string log;
    std::string alerts;
    std::string report;
    std::string log_dir;
    std::string save_state;
};

Detector make_detector(const ReplayOpts& o, Config& cfg, Mode mode, std::size_t dim) {
    if (!o.state.empty()) {
        auto st = load_state(o.state);
        if (st.mode != mode) {
            throw ConfigError(std::string("state file holds a ") + to_string(st.mode) + " detector, replay runs " +
                              to_string(mode) + " mode");
        }
        if (st.model.dim() != dim) throw DimensionError("state file dimension does not match the input");
        cfg = config_from_json(apply_overrides(to_json(st.config), o.common.sets));
        st.config = cfg;
        return st.restore(o.online ? Phase::online : Phase::frozen);
    }
    cfg.detector.mode = mode;
    cfg.detector.online = o.online;
    DetectorConfig dc = cfg.detector;
    if (dc.gamma.empty()) dc.gamma = cfg.metrics.gamma;
    return Detector(dc, dim);
}

int replay_stream(const ReplayOpts& o, Config& cfg) {
    Sink log(o.log);
    std::optional<Sink> alerts;
    if (!o.alerts.empty()) alerts.emplace(o.alerts);
    write_decision_log_header(log.out());
    log.out().flush();

    std::uint64_t n = 0, attacks = 0;
    auto emit = [&](const Decision& d) {
        ++n;
        if (d.is_attack) ++attacks;
        write_decision_log_row(log.out(), d);
        log.out().flush();
        if (alerts && d.is_attack) alerts->out() << alert_json(d).dump() << std::endl;
    };

    Detector* det = nullptr;
    std::optional<BotnetPipeline> pipe;
    std::optional<Detector> fdet;
    if (o.features) {
        const auto rows = load_feature_dataset(o.input);
        if (rows.empty()) throw DataError("feature dataset is empty");
        fdet.emplace(make_detector(o, cfg, Mode::features, rows.front().features.size()));
        det = &*fdet;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (auto d = det->step(rows[i].features, static_cast<std::int64_t>(i))) emit(*d);
        }
    } else {
        const auto trace = load_trace(o.input, order_of(cfg));
        pipe.emplace(cfg.metrics, make_detector(o, cfg, Mode::botnet, 3));
        det = &pipe->detector();
        for (const auto& r : trace.records) {
            if (auto d = pipe->step(r)) emit(*d);
        }
    }
    det->drain();
    std::cerr << "replay: " << n << " decisions, " << attacks << " attacks, phase " << to_string(det->phase())
              << ", " << det->updates() << " windows trained\n";

    if (!o.report.empty()) {
        json j = {{"decisions", n}, {"attacks", attacks}, {"phase", to_string(det->phase())},
                  {"windows", det->updates()}, {"config", to_json(cfg)}};
        if (det->phase() != Phase::init) j["threshold"] = det->threshold();
        write_json(o.report, j);
    }
    if (!o.save_state.empty()) save_state(o.save_state, *det, cfg);
    return kExitOk;
}

int replay_devices(const ReplayOpts& o, Config& cfg) {
    if (!o.state.empty()) throw ConfigError("--devices trains one detector per address; use --cold-start");
    cfg.detector.online = o.online;
    const auto trace = load_trace(o.input, order_of(cfg));
    DeviceBank bank(cfg.metrics, cfg.detector, cfg.device, cfg.io.partitions);

    std::optional<Sink> alerts;
    if (!o.alerts.empty()) alerts.emplace(o.alerts);
    std::map<std::string, std::ofstream> logs;
    std::ofstream levels;
    if (!o.log_dir.empty()) {
        std::filesystem::create_directories(o.log_dir);
        const auto p = std::filesystem::path(o.log_dir) / "device_levels.csv";
        levels.open(p, std::ios::binary);
        if (!levels) throw Error("cannot write " + p.string());
        write_device_levels_header(levels);
    }

    auto emit = [&](const DeviceDecision& d) {
        if (!o.log_dir.empty()) {
            auto it = logs.find(d.addr);
            if (it == logs.end()) {
                const auto p = std::filesystem::path(o.log_dir) / (safe_name(d.addr) + ".csv");
                it = logs.emplace(d.addr, std::ofstream(p, std::ios::binary)).first;
                if (!it->second) throw Error("cannot write " + p.string());
                write_decision_log_header(it->second);
            }
            write_decision_log_row(it->second, d.decision);
            it->second.flush();
            write_device_level_row(levels, {d.decision.at_us, d.addr, d.infection_level, d.compromised});
        }
        if (alerts && d.decision.is_attack) {
            auto j = alert_json(d.decision, &d.addr);
            j["infection_level"] = d.infection_level;
            j["compromised"] = d.compromised;
            alerts->out() << j.dump() << std::endl;
        }
    };

    if (cfg.io.partitions > 1) {
        for (const auto& d : bank.ingest_all(trace.records)) emit(d);
    } else {
        for (const auto& r : trace.records) {
            for (const auto& d : bank.ingest(r)) emit(d);
        }
    }

    const auto rep = bank.report();
    std::printf("%-18s %10s %10s %6s %10s %8s\n", "addr", "level", "max", "comp", "decisions", "phase");
    for (const auto& s : rep.devices) {
        std::printf("%-18s %10.4f %10.4f %6s %10llu %8s%s\n", s.addr.c_str(), s.infection_level, s.max_level,
                    s.is_compromised ? "yes" : "no", static_cast<unsigned long long>(s.decisions_count),
                    s.phase.c_str(), s.evicted ? " (evicted)" : "");
    }
    std::printf("%zu devices, %zu compromised\n", rep.devices.size(), rep.compromised_devices);
    std::fflush(stdout);
    if (!o.report.empty()) {
        json j = to_json(rep);
        j["config"] = to_json(cfg);
        write_json(o.report, j);
    }
    return kExitOk;
}

int cmd_replay(const ReplayOpts& o) {
    if (o.state.empty() == !o.cold_start) throw ConfigError("give exactly one of --state or --cold-start");
    if (o.devices && o.features) throw ConfigError("--devices and --features are exclusive");
    const bool trace_input = is_trace_csv(o.input);
    if (o.features && trace_input) throw ConfigError("--features needs a feature CSV, got a packet trace");
    if (!o.features && !trace_input) throw ConfigError(o.input + " is not a packet trace; use --features for feature CSVs");
    Config cfg = resolve_config(o.common);
    return o.devices ? replay_devices(o, cfg) : replay_stream(o, cfg);
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    CommonOpts common;
    std::string log;
    std::string labels;
    std::string out_dir = "eval_out";
    std::string asserts;
};

int cmd_eval(const EvalOpts& o) {
    const auto asserts = parse_assertions(o.asserts);
    const Config cfg = resolve_config(o.common);
    const auto log = load_decision_log(o.log);
    std::vector<LabelRow> labels;
    if (is_trace_csv(o.labels)) {
        labels = label_rows(load_trace(o.labels, order_of(cfg)));
    } else {
        const auto rows = load_feature_dataset(o.labels);
        labels = label_rows(std::span<const FeatureRow>(rows));
    }
    const auto aligned = align(log, labels);
    const auto report = score(aligned);

    emit_plot_data(report, o.out_dir);
    json j = to_json(report);
    j["config"] = to_json(cfg);
    j["inputs"] = {{"log", o.log}, {"labels", o.labels}};
    const auto failed = check_assertions(report, asserts);
    j["assertions"] = {{"expr", o.asserts}, {"failed", failed}};
    write_json((std::filesystem::path(o.out_dir) / "report.json").string(), j);

    const auto& r = report.rates;
    std::printf("accuracy %s  TPR %s  FNR %s  TNR %s  FPR %s  (%llu decisions)\n", format_percent(r.accuracy).c_str(),
                format_percent(r.tpr).c_str(), format_percent(r.fnr).c_str(), format_percent(r.tnr).c_str(),
                format_percent(r.fpr).c_str(), static_cast<unsigned long long>(report.counts.total()));
    for (const auto& [type, t] : report.per_attack_type) {
        std::printf("  %-24s %8llu rows  accuracy %6.2f\n", type.c_str(), static_cast<unsigned long long>(t.samples),
                    t.accuracy);
    }
    for (const auto& f : failed) std::printf("assertion failed: %s\n", f.c_str());
    return failed.empty() ? kExitOk : kExitAssert;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(std::uint64_t seed) {
    bool ok = true;
    for (const auto& l : run_scenario_bench(seed)) {
        std::printf("[%s] %-3s %s: %s\n", l.pass ? "PASS" : "FAIL", l.id.c_str(), l.name.c_str(), l.detail.c_str());
        ok = ok && l.pass;
    }
    return ok ? kExitOk : kExitAssert;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AADRNN attack detector for packet traces"};
    app.require_subcommand(1);

    SynthOpts synth;
    auto* c_synth = app.add_subcommand("synth", "generate a labeled synthetic trace");
    c_synth->add_option("--spec", synth.spec, "generator spec JSON")->check(CLI::ExistingFile);
    c_synth->add_option("--scenario", synth.scenario, "built-in scenario: flood, drift, stationary, device");
    c_synth->add_option("--seed", synth.seed, "generator seed");
    c_synth->add_option("-o,--out", synth.out, "output CSV (default stdout)");

    InitOpts init;
    auto* c_init = app.add_subcommand("init", "fit scaling, model and threshold on benign data");
    add_common(c_init, init.common);
    c_init->add_option("input", init.input, "packet trace or feature CSV")->required()->check(CLI::ExistingFile);
    c_init->add_flag("--features", init.features, "input is a feature CSV");
    c_init->add_option("-o,--out", init.out, "state file to write")->required();

    ReplayOpts replay;
    auto* c_replay = app.add_subcommand("replay", "stream decisions over a trace");
    add_common(c_replay, replay.common);
    c_replay->add_option("input", replay.input, "packet trace or feature CSV")->required()->check(CLI::ExistingFile);
    c_replay->add_option("--state", replay.state, "state file from init")->check(CLI::ExistingFile);
    c_replay->add_flag("--cold-start", replay.cold_start, "initialize from the start of the input");
    c_replay->add_flag("--online", replay.online, "incremental training after init");
    c_replay->add_flag("--devices", replay.devices, "one detector per address");
    c_replay->add_flag("--features", replay.features, "input is a feature CSV");
    c_replay->add_option("--log", replay.log, "decision log CSV (default stdout)");
    c_replay->add_option("--alerts", replay.alerts, "JSON lines for attack decisions ('-' for stdout)");
    c_replay->add_option("--report", replay.report, "summary JSON");
    c_replay->add_option("--log-dir", replay.log_dir, "per-device decision logs (device mode)");
    c_replay->add_option("--save-state", replay.save_state, "write the final detector state");

    EvalOpts ev;
    auto* c_eval = app.add_subcommand("eval", "score a decision log against labels");
    add_common(c_eval, ev.common);
    c_eval->add_option("log", ev.log, "decision log CSV")->required()->check(CLI::ExistingFile);
    c_eval->add_option("labels", ev.labels, "labeled trace or feature CSV")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--out-dir", ev.out_dir, "report and plot data directory");
    c_eval->add_option("--assert", ev.asserts, "e.g. accuracy>=99,fpr<=1");

    std::uint64_t bench_seed = 1;
    auto* c_bench = app.add_subcommand("bench", "run the synthetic benchmark scenarios");
    c_bench->add_option("--seed", bench_seed, "scenario seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_synth) return cmd_synth(synth);
        if (*c_init) return cmd_init(init);
        if (*c_replay) return cmd_replay(replay);
        if (*c_eval) return cmd_eval(ev);
        if (*c_bench) return cmd_bench(bench_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
