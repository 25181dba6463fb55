#include "iotac/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "csv.hpp"
#include "iotac/errors.hpp"

namespace iotac {

namespace {

constexpr std::string_view kTraceHeader = "timestamp_us,src,dst,size_bytes,label,attack_type";

std::optional<Label> parse_label(std::string_view field, std::size_t line_no) {
    if (field.empty()) return std::nullopt;
    if (field == "0") return Label::benign;
    if (field == "1") return Label::attack;
    throw ParseError(line_no, "invalid label '" + std::string(field) + "' (expected 0, 1 or empty)");
}

std::string_view label_field(const std::optional<Label>& label) {
    if (!label) return "";
    return *label == Label::attack ? "1" : "0";
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

} // namespace

const char* to_string(Label label) { return label == Label::attack ? "attack" : "benign"; }

Trace parse_trace(std::istream& in, std::string name, OrderPolicy policy) {
    Trace trace;
    trace.name = std::move(name);
    std::string line;
    if (!csv::next_line(in, line)) throw ParseError(1, "empty trace file");
    if (line != kTraceHeader) {
        throw ParseError(1, "unexpected header '" + line + "', expected '" + std::string(kTraceHeader) + "'");
    }

    std::size_t line_no = 1;
    bool sorted = true;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (fields.size() != 6) {
            throw ParseError(line_no, "expected 6 fields, got " + std::to_string(fields.size()));
        }
        PacketRecord rec;
        rec.timestamp_us = csv::parse_number<std::int64_t>(fields[0], line_no, "timestamp_us");
        rec.src = std::string(fields[1]);
        rec.dst = std::string(fields[2]);
        rec.size_bytes = csv::parse_number<std::uint64_t>(fields[3], line_no, "size_bytes");
        rec.label = parse_label(fields[4], line_no);
        rec.attack_type = std::string(fields[5]);

        if (!trace.records.empty() && rec.timestamp_us < trace.records.back().timestamp_us) {
            if (policy == OrderPolicy::strict) {
                throw OrderError("line " + std::to_string(line_no) + ": timestamp " +
                                 std::to_string(rec.timestamp_us) + " precedes " +
                                 std::to_string(trace.records.back().timestamp_us));
            }
            sorted = false;
        }
        trace.records.push_back(std::move(rec));
    }
    if (!sorted) {
        std::stable_sort(trace.records.begin(), trace.records.end(),
                         [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp_us < b.timestamp_us; });
    }
    return trace;
}

Trace load_trace(const std::filesystem::path& path, OrderPolicy policy) {
    auto in = open_input(path);
    return parse_trace(in, path.stem().string(), policy);
}

void write_trace(const Trace& trace, std::ostream& out) {
    out << kTraceHeader << '\n';
    for (const auto& r : trace.records) {
        out << r.timestamp_us << ',' << r.src << ',' << r.dst << ',' << r.size_bytes << ','
            << label_field(r.label) << ',' << r.attack_type << '\n';
    }
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_trace(trace, out);
}

bool is_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    return in && csv::next_line(in, line) && line == kTraceHeader;
}

std::vector<FeatureRow> parse_feature_dataset(std::istream& in) {
    std::string line;
    if (!csv::next_line(in, line)) throw ParseError(1, "empty feature file");
    auto header = csv::split(line);
    std::size_t label_col = 0;
    bool has_type = false;
    if (header.size() >= 3 && header[header.size() - 2] == "label" && header.back() == "attack_type") {
        label_col = header.size() - 2;
        has_type = true;
    } else if (header.size() >= 2 && header.back() == "label") {
        label_col = header.size() - 1;
    } else {
        throw ParseError(1, "feature header must end with 'label' or 'label,attack_type'");
    }
    const std::size_t columns = header.size();
    const std::size_t dim = label_col;

    std::vector<FeatureRow> rows;
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = csv::split(line);
        if (fields.size() != columns) {
            throw DimensionError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                                 " columns, got " + std::to_string(fields.size()));
        }
        FeatureRow row;
        row.features.reserve(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            row.features.push_back(csv::parse_number<double>(fields[i], line_no, header[i]));
        }
        row.label = parse_label(fields[label_col], line_no);
        if (has_type) row.attack_type = std::string(fields[label_col + 1]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<FeatureRow> load_feature_dataset(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_feature_dataset(in);
}

void write_feature_dataset(const std::vector<FeatureRow>& rows, std::ostream& out) {
    const std::size_t dim = rows.empty() ? 0 : rows.front().features.size();
    for (std::size_t i = 0; i < dim; ++i) out << 'f' << (i + 1) << ',';
    out << "label,attack_type\n";
    for (const auto& row : rows) {
        if (row.features.size() != dim) throw DimensionError("feature rows differ in dimension");
        for (double v : row.features) out << csv::format_double(v) << ',';
        out << label_field(row.label) << ',' << row.attack_type << '\n';
    }
}

// ---------------------------------------------------------------------------
// synthetic traces

namespace {

std::uint64_t draw_size(const SizeDistribution& dist, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(dist.mean, dist.stddev);
    double v = dist.stddev > 0.0 ? normal(rng) : dist.mean;
    v = std::round(v);
    v = std::clamp(v, static_cast<double>(dist.min_bytes), static_cast<double>(dist.max_bytes));
    return static_cast<std::uint64_t>(v);
}

std::int64_t to_us(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1e6)); }

void validate(const SizeDistribution& s) {
    if (s.min_bytes > s.max_bytes) throw ConfigError("size distribution: min_bytes > max_bytes");
    if (!(s.stddev >= 0.0)) throw ConfigError("size distribution: negative stddev");
}

} // namespace

Trace synth_trace(const SynthSpec& spec, std::uint64_t seed) {
    if (!(spec.duration_s > 0.0)) throw ConfigError("synth: duration must be positive");
    if (!(spec.rate_ramp > 0.0)) throw ConfigError("synth: rate_ramp must be positive");

    std::mt19937_64 rng(seed);
    Trace trace;
    trace.name = "synth-" + std::to_string(seed);

    // Benign flows: non-homogeneous Poisson with a linear rate ramp, sampled by thinning.
    const double peak = std::max(1.0, spec.rate_ramp);
    for (const auto& flow : spec.flows) {
        validate(flow.size);
        if (!(flow.rate_pps > 0.0)) throw ConfigError("synth: flow rate must be positive");
        std::exponential_distribution<double> gap(flow.rate_pps * peak);
        std::uniform_real_distribution<double> accept(0.0, 1.0);
        double t = 0.0;
        while (true) {
            t += gap(rng);
            if (t >= spec.duration_s) break;
            const double factor = 1.0 + (spec.rate_ramp - 1.0) * (t / spec.duration_s);
            if (accept(rng) * peak > factor) continue;
            PacketRecord rec;
            rec.timestamp_us = to_us(t);
            rec.src = flow.src;
            rec.dst = flow.dst;
            rec.size_bytes = draw_size(flow.size, rng);
            rec.label = Label::benign;
            trace.records.push_back(std::move(rec));
        }
    }

    double total_rate = 0.0;
    for (const auto& flow : spec.flows) total_rate += flow.rate_pps;

    for (const auto& seg : spec.attacks) {
        validate(seg.size);
        if (!(seg.end_s > seg.start_s)) throw ConfigError("synth: attack segment must have end_s > start_s");
        if (!(seg.rate_multiplier > 0.0)) throw ConfigError("synth: rate_multiplier must be positive");
        if (seg.attackers.empty() || seg.targets.empty()) {
            throw ConfigError("synth: attack segment needs attackers and targets");
        }
        double reference = 0.0;
        for (const auto& flow : spec.flows) {
            if (std::find(seg.attackers.begin(), seg.attackers.end(), flow.src) != seg.attackers.end()) {
                reference += flow.rate_pps;
            }
        }
        if (reference <= 0.0) reference = total_rate;
        if (reference <= 0.0) throw ConfigError("synth: attack segment has no reference rate");

        std::exponential_distribution<double> gap(reference * seg.rate_multiplier);
        std::uniform_int_distribution<std::size_t> pick_src(0, seg.attackers.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_dst(0, seg.targets.size() - 1);
        double t = seg.start_s;
        while (true) {
            t += gap(rng);
            if (t >= seg.end_s) break;
            PacketRecord rec;
            rec.timestamp_us = to_us(t);
            rec.src = seg.attackers[pick_src(rng)];
            rec.dst = seg.targets[pick_dst(rng)];
            rec.size_bytes = draw_size(seg.size, rng);
            rec.label = Label::attack;
            rec.attack_type = seg.attack_type;
            trace.records.push_back(std::move(rec));
        }
    }

    std::stable_sort(trace.records.begin(), trace.records.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp_us < b.timestamp_us; });
    return trace;
}

void to_json(nlohmann::json& j, const SizeDistribution& s) {
    j = {{"mean", s.mean}, {"stddev", s.stddev}, {"min_bytes", s.min_bytes}, {"max_bytes", s.max_bytes}};
}

void from_json(const nlohmann::json& j, SizeDistribution& s) {
    s.mean = j.value("mean", s.mean);
    s.stddev = j.value("stddev", s.stddev);
    s.min_bytes = j.value("min_bytes", s.min_bytes);
    s.max_bytes = j.value("max_bytes", s.max_bytes);
}

void to_json(nlohmann::json& j, const BenignFlow& f) {
    j = {{"src", f.src}, {"dst", f.dst}, {"rate_pps", f.rate_pps}, {"size", f.size}};
}

void from_json(const nlohmann::json& j, BenignFlow& f) {
    f.src = j.value("src", f.src);
    f.dst = j.value("dst", f.dst);
    f.rate_pps = j.value("rate_pps", f.rate_pps);
    if (j.contains("size")) f.size = j.at("size").get<SizeDistribution>();
}

void to_json(nlohmann::json& j, const AttackSegment& a) {
    j = {{"start_s", a.start_s},     {"end_s", a.end_s},         {"rate_multiplier", a.rate_multiplier},
         {"size", a.size},           {"attackers", a.attackers}, {"targets", a.targets},
         {"attack_type", a.attack_type}};
}

void from_json(const nlohmann::json& j, AttackSegment& a) {
    a.start_s = j.value("start_s", a.start_s);
    a.end_s = j.value("end_s", a.end_s);
    a.rate_multiplier = j.value("rate_multiplier", a.rate_multiplier);
    if (j.contains("size")) a.size = j.at("size").get<SizeDistribution>();
    a.attackers = j.value("attackers", a.attackers);
    a.targets = j.value("targets", a.targets);
    a.attack_type = j.value("attack_type", a.attack_type);
}

void to_json(nlohmann::json& j, const SynthSpec& s) {
    j = {{"duration_s", s.duration_s}, {"flows", s.flows}, {"rate_ramp", s.rate_ramp}, {"attacks", s.attacks}};
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
    s.duration_s = j.value("duration_s", s.duration_s);
    if (j.contains("flows")) s.flows = j.at("flows").get<std::vector<BenignFlow>>();
    s.rate_ramp = j.value("rate_ramp", s.rate_ramp);
    if (j.contains("attacks")) s.attacks = j.at("attacks").get<std::vector<AttackSegment>>();
}

} // namespace iotac
