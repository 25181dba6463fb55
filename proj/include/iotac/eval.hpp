#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotac/detector.hpp"
#include "iotac/device_monitor.hpp"
#include "iotac/traffic.hpp"

namespace iotac {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;

    std::uint64_t total() const noexcept { return tp + fn + tn + fp; }
    void add(bool is_attack, Label truth);
    bool operator==(const ConfusionCounts&) const = default;
};

/// Percentages; absent when the denominator is zero.
struct Rates {
    std::optional<double> accuracy;
    std::optional<double> tpr;
    std::optional<double> fnr;
    std::optional<double> tnr;
    std::optional<double> fpr;

    bool operator==(const Rates&) const = default;
};

Rates rates_of(const ConfusionCounts& c);

struct TypeAccuracy {
    std::uint64_t samples = 0;
    std::uint64_t correct = 0;
    double accuracy = 0.0;  ///< percent

    bool operator==(const TypeAccuracy&) const = default;
};

/// A decision paired with the ground truth of the row that triggered it.
struct LabeledDecision {
    Decision decision;
    std::optional<Label> label;
    std::string attack_type;
};

struct SeriesPoint {
    std::int64_t at_us = 0;
    double value = 0.0;
    double threshold = 0.0;
    bool is_attack = false;
    std::optional<Label> label;

    bool operator==(const SeriesPoint&) const = default;
};

struct EvalReport {
    ConfusionCounts counts;
    Rates rates;
    /// Keyed by attack type; unlabeled types fall back to "benign" / "attack".
    std::map<std::string, TypeAccuracy> per_attack_type;
    std::vector<SeriesPoint> series;
};

/// Throws DataError on empty input or when any decision lacks a label.
EvalReport score(std::span<const LabeledDecision> decisions);

/// Rates rounded to 2 decimals for display; counts exact. Series omitted unless asked.
nlohmann::json to_json(const EvalReport& r, bool with_series = false);
std::string format_percent(const std::optional<double>& v);

struct Comparison {
    EvalReport offline;
    EvalReport online;
};

/// Runs the botnet pipeline twice on the same labeled trace: frozen after init, and with
/// incremental windows. Throws DataError when the benign prefix cannot cover init.
Comparison compare_online_offline(const Trace& trace, const MetricConfig& metrics, DetectorConfig cfg);

/// Runs one botnet pipeline over a labeled trace and scores the post-init decisions.
EvalReport run_botnet(const Trace& trace, const MetricConfig& metrics, const DetectorConfig& cfg);

// Decision log CSV: timestamp_us,decision_value,threshold,is_attack,mode
void write_decision_log_header(std::ostream& out);
void write_decision_log_row(std::ostream& out, const Decision& d);
std::vector<Decision> read_decision_log(std::istream& in);
std::vector<Decision> load_decision_log(const std::filesystem::path& path);

/// One ground-truth row for aligning a decision log.
struct LabelRow {
    std::int64_t at_us = 0;
    std::optional<Label> label;
    std::string attack_type;
};

std::vector<LabelRow> label_rows(const Trace& trace);
/// Feature rows are keyed by their zero-based index.
std::vector<LabelRow> label_rows(std::span<const FeatureRow> rows);

/// The log must match the last |log| label rows by timestamp (init rows produce no decision).
/// Throws DataError naming the first mismatching log row.
std::vector<LabeledDecision> align(std::span<const Decision> log, std::span<const LabelRow> labels);

/// One point of a per-device infection level series.
struct LevelPoint {
    std::int64_t at_us = 0;
    std::string addr;
    double infection_level = 0.0;
    bool compromised = false;

    bool operator==(const LevelPoint&) const = default;
};

std::vector<LevelPoint> level_series(std::span<const DeviceDecision> decisions);

// Device level CSV: timestamp_us,addr,infection_level,compromised
void write_device_levels_header(std::ostream& out);
void write_device_level_row(std::ostream& out, const LevelPoint& p);

/// Writes decision_series.csv, per_type_accuracy.csv and, when levels are given,
/// device_levels.csv into `dir`. Returns the files written.
std::vector<std::filesystem::path> emit_plot_data(const EvalReport& report, const std::filesystem::path& dir,
                                                  std::span<const LevelPoint> levels = {});

std::vector<SeriesPoint> read_decision_series(std::istream& in);
std::map<std::string, TypeAccuracy> read_per_type_accuracy(std::istream& in);
std::vector<LevelPoint> read_device_levels(std::istream& in);

/// Parsed `--assert` expression, e.g. "accuracy>=99,fpr<=1".
struct Assertion {
    std::string metric;
    std::string op;
    double bound = 0.0;
};

std::vector<Assertion> parse_assertions(const std::string& expr);
/// Returns a description of every violated assertion; empty when all hold.
std::vector<std::string> check_assertions(const EvalReport& r, std::span<const Assertion> asserts);

} // namespace iotac
