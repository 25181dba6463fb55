#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iotac/aadrnn.hpp"
#include "iotac/metrics.hpp"
#include "iotac/training.hpp"

namespace iotac {

enum class Mode { botnet, features, device };
enum class Phase { init, online, frozen };
enum class ThresholdMode { whisker, fixed };

const char* to_string(Mode m);
const char* to_string(Phase p);
Mode mode_from_string(const std::string& s);
Phase phase_from_string(const std::string& s);

struct Decision {
    double value = 0.0;      ///< weighted mean absolute reconstruction gap
    double threshold = 0.0;  ///< threshold in force when the decision was made
    bool is_attack = false;
    std::int64_t at_us = 0;
    Mode mode = Mode::botnet;
};

/// sum_i gamma_i |x_i - xhat_i|
double decision_value(std::span<const double> x, std::span<const double> xhat, std::span<const double> gamma);

/// Strict: a value equal to the threshold is benign.
inline bool classify(double d, double threshold) { return d > threshold; }

/// Q3 + 1.5 (Q3 - Q1) with quartiles interpolated at positions q (n - 1). Non-positive
/// results fall back to max(values), then to 1e-6. Needs at least 4 values.
double whisker_threshold(std::span<const double> values);

/// Linear-interpolation quantile at position q (n - 1) of the sorted values.
double quantile(std::vector<double> values, double q);

/// Model-free baseline: attack iff any component exceeds its threshold.
bool simple_threshold_baseline(std::span<const double> x, std::span<const double> theta);
/// Per-component whisker thresholds over normalized benign rows.
std::vector<double> baseline_thresholds(std::span<const std::vector<double>> rows);

struct ThresholdConfig {
    ThresholdMode mode = ThresholdMode::whisker;
    double value = 0.1;              ///< used in fixed mode
    bool freeze_after_init = false;  ///< keep the init threshold through online updates
    std::size_t history = 5000;      ///< most recent training rows the whisker is re-estimated over
};

struct DetectorConfig {
    Mode mode = Mode::botnet;
    std::size_t init_len = 1000;
    double init_seconds = 0.0;  ///< when > 0, init spans this much trace time instead of init_len rows
    bool online = true;         ///< incremental window updates after init; false freezes the init model
    std::size_t hidden_layers = 3;
    ActivationParams act;
    std::vector<double> gamma;  ///< empty means uniform
    ThresholdConfig threshold;
    TrainConfig train;
    bool async_training = false;

    void validate(std::size_t dim) const;
};

/// Model and threshold published together by training.
struct Snapshot {
    std::shared_ptr<const AadrnnModel> model;
    double threshold = 0.0;
    std::uint64_t version = 0;
};

/// Holds the current snapshot; readers copy the pointer, writers swap it.
class SnapshotSlot {
public:
    std::shared_ptr<const Snapshot> load() const {
        std::lock_guard lock(mu_);
        return current_;
    }
    void store(std::shared_ptr<const Snapshot> s) {
        std::lock_guard lock(mu_);
        current_ = std::move(s);
    }

private:
    mutable std::mutex mu_;
    std::shared_ptr<const Snapshot> current_;
};

/// Rows pending the next incremental update. Only rows whose decision was benign get in.
class BenignWindow {
public:
    /// Throws LifecycleError for a row classified as attack.
    void accept(std::vector<double> row, const Decision& decision);
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
    const std::vector<double>& decision_values() const noexcept { return values_; }
    std::int64_t start_us() const noexcept { return start_us_; }
    void reset(std::int64_t start_us);

private:
    std::vector<std::vector<double>> rows_;
    std::vector<double> values_;
    std::int64_t start_us_ = 0;
};

class Trainer;

/// One AADRNN attack detector over a single stream of raw metric vectors.
///
/// Lifecycle: init (collect raw rows, no decisions) -> online (decide, feed benign rows to
/// window-by-window training) or frozen (decide only).
class Detector {
public:
    /// Unconfigured; step() throws LifecycleError.
    Detector();
    Detector(DetectorConfig cfg, std::size_t dim);
    Detector(Detector&&) noexcept;
    Detector& operator=(Detector&&) noexcept;
    ~Detector();

    /// Feeds one raw (unnormalized) vector. Returns a decision unless still initializing.
    std::optional<Decision> step(std::span<const double> raw, std::int64_t at_us);

    /// Completes initialization directly from a block of raw benign rows.
    void initialize(std::span<const std::vector<double>> raws);

    /// Rebuilds a detector from persisted state.
    static Detector restore(DetectorConfig cfg, Normalizer norm, AadrnnModel model, double threshold,
                            SufficientStats stats, Phase phase);

    /// Stop learning; subsequent steps only decide.
    void freeze();
    /// Waits until every submitted window has been published.
    void drain();

    bool configured() const noexcept { return dim_ != 0; }
    Phase phase() const noexcept { return phase_; }
    std::size_t dim() const noexcept { return dim_; }
    const DetectorConfig& config() const noexcept { return cfg_; }
    const std::vector<double>& gamma() const noexcept { return gamma_; }
    const Normalizer& normalizer() const;
    std::shared_ptr<const Snapshot> snapshot() const;
    double threshold() const { return snapshot()->threshold; }
    /// Training statistics after draining pending windows.
    SufficientStats stats();
    std::uint64_t updates() const noexcept { return windows_submitted_; }
    /// Normalized rows used for initialization.
    const std::vector<std::vector<double>>& init_rows() const noexcept { return init_rows_; }

private:
    void finish_init();
    void close_window(std::int64_t now_us);

    DetectorConfig cfg_;
    std::size_t dim_ = 0;
    std::vector<double> gamma_;
    Phase phase_ = Phase::init;
    std::optional<Normalizer> norm_;
    std::vector<std::vector<double>> pending_init_;
    std::optional<std::int64_t> init_start_us_;
    std::vector<std::vector<double>> init_rows_;
    BenignWindow window_;
    bool window_open_ = false;
    std::uint64_t windows_submitted_ = 0;
    std::unique_ptr<SnapshotSlot> slot_;
    std::unique_ptr<Trainer> trainer_;
};

/// Single-stream botnet detector: three-metric extraction in front of a Detector.
class BotnetPipeline {
public:
    BotnetPipeline(MetricConfig metrics, DetectorConfig cfg);
    /// Wraps an already-initialized detector (e.g. restored from a state file).
    BotnetPipeline(MetricConfig metrics, Detector detector);

    std::optional<Decision> step(const PacketRecord& pkt);
    Detector& detector() noexcept { return detector_; }
    const Detector& detector() const noexcept { return detector_; }
    /// Raw metrics of the last packet.
    const MetricTriple& last_raw() const noexcept { return last_raw_; }

private:
    MetricWindow window_;
    Detector detector_;
    MetricTriple last_raw_{};
};

} // namespace iotac
