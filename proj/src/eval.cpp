#include "iotac/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "iotac/errors.hpp"

namespace iotac {

namespace {

std::optional<double> percent(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string type_key(const LabeledDecision& d) {
    if (!d.attack_type.empty()) return d.attack_type;
    return to_string(*d.label);
}

std::optional<Label> parse_label(std::string_view f, std::size_t line_no) {
    if (f.empty()) return std::nullopt;
    if (f == "0") return Label::benign;
    if (f == "1") return Label::attack;
    throw ParseError(line_no, "invalid label '" + std::string(f) + "'");
}

const char* label_field(const std::optional<Label>& l) {
    if (!l) return "";
    return *l == Label::attack ? "1" : "0";
}

bool parse_flag(std::string_view f, std::size_t line_no, std::string_view column) {
    if (f == "1" || f == "true") return true;
    if (f == "0" || f == "false") return false;
    throw ParseError(line_no, "invalid " + std::string(column) + " '" + std::string(f) + "'");
}

void expect_header(std::istream& in, std::string_view header) {
    std::string line;
    if (!csv::next_line(in, line)) throw ParseError(1, "missing header");
    if (line != header) throw ParseError(1, "expected header '" + std::string(header) + "'");
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

} // namespace

void ConfusionCounts::add(bool is_attack, Label truth) {
    if (truth == Label::attack) {
        ++(is_attack ? tp : fn);
    } else {
        ++(is_attack ? fp : tn);
    }
}

Rates rates_of(const ConfusionCounts& c) {
    Rates r;
    r.accuracy = percent(c.tp + c.tn, c.total());
    r.tpr = percent(c.tp, c.tp + c.fn);
    r.fnr = percent(c.fn, c.tp + c.fn);
    r.tnr = percent(c.tn, c.tn + c.fp);
    r.fpr = percent(c.fp, c.tn + c.fp);
    return r;
}

EvalReport score(std::span<const LabeledDecision> decisions) {
    if (decisions.empty()) throw DataError("score: no decisions");
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (!decisions[i].label) missing.push_back(i);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "score: " << missing.size() << " decision(s) without a label, rows";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg << ' ' << missing[i];
        if (missing.size() > 10) msg << " ...";
        throw DataError(msg.str());
    }

    EvalReport r;
    r.series.reserve(decisions.size());
    for (const auto& d : decisions) {
        r.counts.add(d.decision.is_attack, *d.label);
        auto& t = r.per_attack_type[type_key(d)];
        ++t.samples;
        if (d.decision.is_attack == (*d.label == Label::attack)) ++t.correct;
        r.series.push_back({d.decision.at_us, d.decision.value, d.decision.threshold, d.decision.is_attack, d.label});
    }
    for (auto& [_, t] : r.per_attack_type) t.accuracy = *percent(t.correct, t.samples);
    r.rates = rates_of(r.counts);
    return r;
}

std::string format_percent(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

nlohmann::json to_json(const EvalReport& r, bool with_series) {
    auto rate = [](const std::optional<double>& v) { return v ? nlohmann::json(round2(*v)) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["counts"] = {{"tp", r.counts.tp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}, {"fp", r.counts.fp},
                   {"total", r.counts.total()}};
    j["accuracy"] = rate(r.rates.accuracy);
    j["tpr"] = rate(r.rates.tpr);
    j["fnr"] = rate(r.rates.fnr);
    j["tnr"] = rate(r.rates.tnr);
    j["fpr"] = rate(r.rates.fpr);
    auto types = nlohmann::json::object();
    for (const auto& [k, t] : r.per_attack_type) {
        types[k] = {{"samples", t.samples}, {"correct", t.correct}, {"accuracy", round2(t.accuracy)}};
    }
    j["per_attack_type"] = std::move(types);
    if (with_series) {
        auto s = nlohmann::json::array();
        for (const auto& p : r.series) {
            s.push_back({p.at_us, p.value, p.threshold, p.is_attack});
        }
        j["decision_series"] = std::move(s);
    }
    return j;
}

EvalReport run_botnet(const Trace& trace, const MetricConfig& metrics, const DetectorConfig& cfg) {
    BotnetPipeline pipe(metrics, cfg);
    std::vector<LabeledDecision> out;
    for (const auto& rec : trace.records) {
        if (auto d = pipe.step(rec)) out.push_back({*d, rec.label, rec.attack_type});
    }
    if (out.empty()) throw DataError("trace ended before initialization completed");
    return score(out);
}

Comparison compare_online_offline(const Trace& trace, const MetricConfig& metrics, DetectorConfig cfg) {
    std::size_t prefix = 0;
    while (prefix < trace.records.size() && trace.records[prefix].label == Label::benign) ++prefix;
    if (cfg.init_seconds > 0.0) {
        const auto need = static_cast<std::int64_t>(std::llround(cfg.init_seconds * 1e6));
        const bool covered = prefix > 0 && prefix < trace.records.size() &&
                             trace.records[prefix].timestamp_us - trace.records.front().timestamp_us >= need;
        if (!covered) {
            throw DataError("benign prefix is shorter than the " + csv::format_double(cfg.init_seconds) +
                            " s init span");
        }
    } else if (prefix < cfg.init_len) {
        throw DataError("benign prefix has " + std::to_string(prefix) + " packets, init needs " +
                        std::to_string(cfg.init_len));
    }
    // Reports must be reproducible, so training always runs inline here.
    cfg.async_training = false;
    Comparison c;
    cfg.online = false;
    c.offline = run_botnet(trace, metrics, cfg);
    cfg.online = true;
    c.online = run_botnet(trace, metrics, cfg);
    return c;
}

void write_decision_log_header(std::ostream& out) { out << "timestamp_us,decision_value,threshold,is_attack,mode\n"; }

void write_decision_log_row(std::ostream& out, const Decision& d) {
    out << d.at_us << ',' << csv::format_double(d.value) << ',' << csv::format_double(d.threshold) << ','
        << (d.is_attack ? 1 : 0) << ',' << to_string(d.mode) << '\n';
}

std::vector<Decision> read_decision_log(std::istream& in) {
    expect_header(in, "timestamp_us,decision_value,threshold,is_attack,mode");
    std::vector<Decision> out;
    std::string line;
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 5) throw ParseError(line_no, "expected 5 fields, got " + std::to_string(f.size()));
        Decision d;
        d.at_us = csv::parse_number<std::int64_t>(f[0], line_no, "timestamp_us");
        d.value = csv::parse_number<double>(f[1], line_no, "decision_value");
        d.threshold = csv::parse_number<double>(f[2], line_no, "threshold");
        d.is_attack = parse_flag(f[3], line_no, "is_attack");
        try {
            d.mode = mode_from_string(std::string(f[4]));
        } catch (const Error&) {
            throw ParseError(line_no, "invalid mode '" + std::string(f[4]) + "'");
        }
        out.push_back(d);
    }
    return out;
}

std::vector<Decision> load_decision_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read_decision_log(in);
}

std::vector<LabelRow> label_rows(const Trace& trace) {
    std::vector<LabelRow> out;
    out.reserve(trace.records.size());
    for (const auto& r : trace.records) out.push_back({r.timestamp_us, r.label, r.attack_type});
    return out;
}

std::vector<LabelRow> label_rows(std::span<const FeatureRow> rows) {
    std::vector<LabelRow> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.push_back({static_cast<std::int64_t>(i), rows[i].label, rows[i].attack_type});
    }
    return out;
}

std::vector<LabeledDecision> align(std::span<const Decision> log, std::span<const LabelRow> labels) {
    if (log.size() > labels.size()) {
        throw DataError("decision log has " + std::to_string(log.size()) + " rows but only " +
                        std::to_string(labels.size()) + " label rows exist");
    }
    const std::size_t offset = labels.size() - log.size();
    std::vector<LabeledDecision> out;
    out.reserve(log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& l = labels[offset + i];
        if (log[i].at_us != l.at_us) {
            throw DataError("decision log row " + std::to_string(i + 1) + " (timestamp " +
                            std::to_string(log[i].at_us) + ") does not match label row " +
                            std::to_string(offset + i + 1) + " (timestamp " + std::to_string(l.at_us) + ")");
        }
        out.push_back({log[i], l.label, l.attack_type});
    }
    return out;
}

std::vector<LevelPoint> level_series(std::span<const DeviceDecision> decisions) {
    std::vector<LevelPoint> out;
    out.reserve(decisions.size());
    for (const auto& d : decisions) out.push_back({d.decision.at_us, d.addr, d.infection_level, d.compromised});
    return out;
}

void write_device_levels_header(std::ostream& out) { out << "timestamp_us,addr,infection_level,compromised\n"; }

void write_device_level_row(std::ostream& out, const LevelPoint& p) {
    out << p.at_us << ',' << p.addr << ',' << csv::format_double(p.infection_level) << ',' << (p.compromised ? 1 : 0)
        << '\n';
}

std::vector<std::filesystem::path> emit_plot_data(const EvalReport& report, const std::filesystem::path& dir,
                                                  std::span<const LevelPoint> levels) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;

    {
        const auto p = dir / "decision_series.csv";
        auto out = open_out(p);
        out << "timestamp_us,decision_value,threshold,is_attack,label\n";
        for (const auto& s : report.series) {
            out << s.at_us << ',' << csv::format_double(s.value) << ',' << csv::format_double(s.threshold) << ','
                << (s.is_attack ? 1 : 0) << ',' << label_field(s.label) << '\n';
        }
        written.push_back(p);
    }
    {
        const auto p = dir / "per_type_accuracy.csv";
        auto out = open_out(p);
        out << "attack_type,samples,correct,accuracy\n";
        for (const auto& [k, t] : report.per_attack_type) {
            out << k << ',' << t.samples << ',' << t.correct << ',' << csv::format_double(t.accuracy) << '\n';
        }
        written.push_back(p);
    }
    if (!levels.empty()) {
        const auto p = dir / "device_levels.csv";
        auto out = open_out(p);
        write_device_levels_header(out);
        for (const auto& l : levels) write_device_level_row(out, l);
        written.push_back(p);
    }
    return written;
}

std::vector<SeriesPoint> read_decision_series(std::istream& in) {
    expect_header(in, "timestamp_us,decision_value,threshold,is_attack,label");
    std::vector<SeriesPoint> out;
    std::string line;
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 5) throw ParseError(line_no, "expected 5 fields");
        out.push_back({csv::parse_number<std::int64_t>(f[0], line_no, "timestamp_us"),
                       csv::parse_number<double>(f[1], line_no, "decision_value"),
                       csv::parse_number<double>(f[2], line_no, "threshold"),
                       parse_flag(f[3], line_no, "is_attack"), parse_label(f[4], line_no)});
    }
    return out;
}

std::map<std::string, TypeAccuracy> read_per_type_accuracy(std::istream& in) {
    expect_header(in, "attack_type,samples,correct,accuracy");
    std::map<std::string, TypeAccuracy> out;
    std::string line;
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 4) throw ParseError(line_no, "expected 4 fields");
        out[std::string(f[0])] = {csv::parse_number<std::uint64_t>(f[1], line_no, "samples"),
                                  csv::parse_number<std::uint64_t>(f[2], line_no, "correct"),
                                  csv::parse_number<double>(f[3], line_no, "accuracy")};
    }
    return out;
}

std::vector<LevelPoint> read_device_levels(std::istream& in) {
    expect_header(in, "timestamp_us,addr,infection_level,compromised");
    std::vector<LevelPoint> out;
    std::string line;
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 4) throw ParseError(line_no, "expected 4 fields");
        out.push_back({csv::parse_number<std::int64_t>(f[0], line_no, "timestamp_us"), std::string(f[1]),
                       csv::parse_number<double>(f[2], line_no, "infection_level"),
                       parse_flag(f[3], line_no, "compromised")});
    }
    return out;
}

std::vector<Assertion> parse_assertions(const std::string& expr) {
    std::vector<Assertion> out;
    for (auto part : csv::split(expr)) {
        if (part.empty()) continue;
        std::size_t pos = std::string_view::npos;
        std::string op;
        for (const char* cand : {">=", "<=", ">", "<"}) {
            pos = part.find(cand);
            if (pos != std::string_view::npos) {
                op = cand;
                break;
            }
        }
        if (pos == std::string_view::npos) throw ConfigError("bad assertion '" + std::string(part) + "'");
        Assertion a;
        a.metric = std::string(part.substr(0, pos));
        a.op = op;
        static const std::vector<std::string> known{"accuracy", "tpr", "fnr", "tnr", "fpr"};
        if (std::find(known.begin(), known.end(), a.metric) == known.end()) {
            throw ConfigError("unknown metric in assertion '" + std::string(part) + "'");
        }
        try {
            a.bound = csv::parse_number<double>(part.substr(pos + op.size()), 0, "bound");
        } catch (const ParseError&) {
            throw ConfigError("bad bound in assertion '" + std::string(part) + "'");
        }
        out.push_back(a);
    }
    return out;
}

std::vector<std::string> check_assertions(const EvalReport& r, std::span<const Assertion> asserts) {
    std::vector<std::string> failed;
    for (const auto& a : asserts) {
        std::optional<double> v;
        if (a.metric == "accuracy") v = r.rates.accuracy;
        if (a.metric == "tpr") v = r.rates.tpr;
        if (a.metric == "fnr") v = r.rates.fnr;
        if (a.metric == "tnr") v = r.rates.tnr;
        if (a.metric == "fpr") v = r.rates.fpr;
        const std::string desc = a.metric + a.op + csv::format_double(a.bound);
        if (!v) {
            failed.push_back(desc + " (undefined: no rows of that class)");
            continue;
        }
        const double x = *v;
        const bool ok = (a.op == ">=" && x >= a.bound) || (a.op == "<=" && x <= a.bound) ||
                        (a.op == ">" && x > a.bound) || (a.op == "<" && x < a.bound);
        if (!ok) failed.push_back(desc + " (got " + format_percent(v) + ")");
    }
    return failed;
}

} // namespace iotac
