#include "iotac/detector.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <thread>

#include "iotac/errors.hpp"

namespace iotac {

const char* to_string(Mode m) {
    switch (m) {
    case Mode::botnet: return "botnet";
    case Mode::features: return "features";
    case Mode::device: return "device";
    }
    return "?";
}

const char* to_string(Phase p) {
    switch (p) {
    case Phase::init: return "init";
    case Phase::online: return "online";
    case Phase::frozen: return "frozen";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "botnet") return Mode::botnet;
    if (s == "features") return Mode::features;
    if (s == "device") return Mode::device;
    throw ConfigError("unknown mode '" + s + "'");
}

Phase phase_from_string(const std::string& s) {
    if (s == "init") return Phase::init;
    if (s == "online") return Phase::online;
    if (s == "frozen") return Phase::frozen;
    throw ConfigError("unknown phase '" + s + "'");
}

double decision_value(std::span<const double> x, std::span<const double> xhat, std::span<const double> gamma) {
    if (x.size() != xhat.size() || x.size() != gamma.size()) {
        throw DimensionError("decision_value: dimension mismatch");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d += gamma[i] * std::abs(x[i] - xhat[i]);
    return d;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("quantile of an empty sequence");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double whisker_threshold(std::span<const double> values) {
    if (values.size() < 4) {
        throw DataError("whisker threshold needs at least 4 values, got " + std::to_string(values.size()));
    }
    std::vector<double> v(values.begin(), values.end());
    const double q1 = quantile(v, 0.25);
    const double q3 = quantile(std::move(v), 0.75);
    double w = q3 + 1.5 * (q3 - q1);
    if (w <= 0.0) w = *std::max_element(values.begin(), values.end());
    if (w <= 0.0) w = 1e-6;
    return w;
}

bool simple_threshold_baseline(std::span<const double> x, std::span<const double> theta) {
    if (x.size() != theta.size()) throw DimensionError("baseline: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > theta[i]) return true;
    }
    return false;
}

std::vector<double> baseline_thresholds(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw DataError("baseline thresholds: no rows");
    const std::size_t dim = rows.front().size();
    std::vector<double> theta(dim);
    std::vector<double> column(rows.size());
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t r = 0; r < rows.size(); ++r) column[r] = rows[r].at(i);
        theta[i] = whisker_threshold(column);
    }
    return theta;
}

void DetectorConfig::validate(std::size_t dim) const {
    if (dim == 0) throw ConfigError("detector dimension must be positive");
    if (hidden_layers == 0) throw ConfigError("at least one hidden layer is required");
    if (init_seconds <= 0.0 && init_len < 4) throw ConfigError("init_len must be at least 4");
    if (threshold.mode == ThresholdMode::fixed && !(threshold.value > 0.0)) {
        throw ConfigError("threshold.value must be positive");
    }
    if (!gamma.empty()) {
        MetricConfig probe;
        probe.gamma = gamma;
        probe.validate(dim);
    }
    train.validate(dim);
}

void BenignWindow::accept(std::vector<double> row, const Decision& decision) {
    if (decision.is_attack) throw LifecycleError("attack-classified rows cannot enter the training window");
    rows_.push_back(std::move(row));
    values_.push_back(decision.value);
}

void BenignWindow::reset(std::int64_t start_us) {
    rows_.clear();
    values_.clear();
    start_us_ = start_us;
}

// ---------------------------------------------------------------------------

/// Owns the sufficient statistics and turns finished windows into published snapshots,
/// either inline or on a worker thread.
class Trainer {
public:
    Trainer(AadrnnModel shape, SufficientStats stats, TrainConfig train, ThresholdConfig threshold,
            std::vector<double> gamma, SnapshotSlot& slot, bool async)
        : shape_(std::move(shape)), stats_(std::move(stats)), train_(train), threshold_(threshold),
          gamma_(std::move(gamma)), slot_(slot) {
        if (async) worker_ = std::thread([this] { run(); });
    }

    ~Trainer() {
        if (worker_.joinable()) {
            {
                std::lock_guard lock(mu_);
                stop_ = true;
            }
            cv_.notify_all();
            worker_.join();
        }
    }

    Trainer(const Trainer&) = delete;
    Trainer& operator=(const Trainer&) = delete;

    /// Seeds the threshold history, e.g. with the initialization rows.
    void seed_history(const std::vector<std::vector<double>>& rows) { remember(rows); }

    void submit(std::vector<std::vector<double>> rows, std::vector<double> values) {
        Job job{std::move(rows), std::move(values)};
        if (!worker_.joinable()) {
            apply(job);
            return;
        }
        {
            std::lock_guard lock(mu_);
            queue_.push_back(std::move(job));
        }
        cv_.notify_all();
    }

    void drain() {
        if (!worker_.joinable()) return;
        std::unique_lock lock(mu_);
        idle_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
    }

    SufficientStats stats() {
        drain();
        std::lock_guard lock(mu_);
        return stats_;
    }

private:
    struct Job {
        std::vector<std::vector<double>> rows;
        std::vector<double> values;
    };

    void apply(const Job& job) {
        auto [stats, model] = update_incremental(std::move(stats_), shape_, job.rows, train_);
        stats_ = std::move(stats);
        const auto prev = slot_.load();
        double threshold = prev->threshold;
        remember(job.rows);
        if (threshold_.mode == ThresholdMode::whisker && !threshold_.freeze_after_init && history_.size() >= 4) {
            std::vector<double> values;
            values.reserve(history_.size());
            for (const auto& x : history_) values.push_back(decision_value(x, model->forward(x), gamma_));
            threshold = whisker_threshold(values);
        }
        slot_.store(std::make_shared<const Snapshot>(Snapshot{std::move(model), threshold, prev->version + 1}));
    }

    void remember(const std::vector<std::vector<double>>& rows) {
        for (const auto& r : rows) history_.push_back(r);
        while (history_.size() > threshold_.history) history_.pop_front();
    }

    void run() {
        std::unique_lock lock(mu_);
        while (true) {
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (stop_) return;
            Job job = std::move(queue_.front());
            queue_.pop_front();
            busy_ = true;
            lock.unlock();
            apply(job);
            lock.lock();
            busy_ = false;
            if (queue_.empty()) idle_cv_.notify_all();
        }
    }

    AadrnnModel shape_;
    SufficientStats stats_;
    TrainConfig train_;
    ThresholdConfig threshold_;
    std::vector<double> gamma_;
    SnapshotSlot& slot_;
    std::deque<std::vector<double>> history_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<Job> queue_;
    bool stop_ = false;
    bool busy_ = false;
    std::thread worker_;
};

Detector::Detector() = default;
Detector::Detector(Detector&&) noexcept = default;
Detector& Detector::operator=(Detector&&) noexcept = default;
Detector::~Detector() = default;

Detector::Detector(DetectorConfig cfg, std::size_t dim) : cfg_(std::move(cfg)), dim_(dim) {
    cfg_.validate(dim_);
    gamma_ = cfg_.gamma.empty() ? std::vector<double>(dim_, 1.0 / static_cast<double>(dim_)) : cfg_.gamma;
    slot_ = std::make_unique<SnapshotSlot>();
}

const Normalizer& Detector::normalizer() const {
    if (!norm_) throw LifecycleError("detector has not finished initialization");
    return *norm_;
}

std::shared_ptr<const Snapshot> Detector::snapshot() const {
    auto s = slot_ ? slot_->load() : nullptr;
    if (!s) throw LifecycleError("detector has no model yet");
    return s;
}

SufficientStats Detector::stats() {
    if (!trainer_) return SufficientStats::empty(dim_, dim_);
    return trainer_->stats();
}

void Detector::drain() {
    if (trainer_) trainer_->drain();
}

void Detector::freeze() {
    if (phase_ == Phase::init) throw LifecycleError("cannot freeze a detector that is still initializing");
    drain();
    window_.reset(0);
    window_open_ = false;
    phase_ = Phase::frozen;
}

void Detector::initialize(std::span<const std::vector<double>> raws) {
    if (!configured()) throw LifecycleError("detector initialized before configuration");
    if (phase_ != Phase::init) throw LifecycleError("detector is already initialized");
    for (const auto& raw : raws) {
        if (raw.size() != dim_) throw DimensionError("initialization row has wrong dimension");
        pending_init_.push_back(raw);
    }
    finish_init();
}

void Detector::finish_init() {
    if (pending_init_.empty()) throw DataError("no rows available for initialization");
    if (cfg_.mode == Mode::features) {
        norm_ = MinMaxScaler::fit(pending_init_);
    } else {
        norm_ = fit_scaling(pending_init_);
    }
    init_rows_.clear();
    init_rows_.reserve(pending_init_.size());
    for (const auto& raw : pending_init_) init_rows_.push_back(apply_normalizer(*norm_, raw));
    pending_init_.clear();
    pending_init_.shrink_to_fit();

    const auto shape = AadrnnModel::reservoir(dim_, cfg_.hidden_layers, cfg_.act, cfg_.train.seed);
    auto stats = SufficientStats::empty(shape.hidden_dim(), dim_);
    accumulate(stats, shape, init_rows_, cfg_.train);
    auto model = std::make_shared<const AadrnnModel>(shape.with_readout(solve_readout(stats, cfg_.train.ridge_lambda)));

    double threshold = cfg_.threshold.value;
    if (cfg_.threshold.mode == ThresholdMode::whisker) {
        std::vector<double> values;
        values.reserve(init_rows_.size());
        for (const auto& x : init_rows_) values.push_back(decision_value(x, model->forward(x), gamma_));
        threshold = whisker_threshold(values);
    }

    slot_->store(std::make_shared<const Snapshot>(Snapshot{std::move(model), threshold, 0}));
    trainer_ = std::make_unique<Trainer>(shape, std::move(stats), cfg_.train, cfg_.threshold, gamma_, *slot_,
                                         cfg_.async_training);
    trainer_->seed_history(init_rows_);
    phase_ = cfg_.online ? Phase::online : Phase::frozen;
}

Detector Detector::restore(DetectorConfig cfg, Normalizer norm, AadrnnModel model, double threshold,
                           SufficientStats stats, Phase phase) {
    if (phase == Phase::init) throw LifecycleError("cannot restore a detector into the init phase");
    if (!(threshold > 0.0)) throw ConfigError("restored threshold must be positive");
    const std::size_t dim = model.dim();
    if (normalizer_dim(norm) != dim) throw DimensionError("restored normalizer does not match model dimension");
    Detector d(std::move(cfg), dim);
    d.norm_ = std::move(norm);
    auto shape = model.with_readout(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                                          static_cast<Eigen::Index>(model.hidden_dim())));
    d.slot_->store(std::make_shared<const Snapshot>(
        Snapshot{std::make_shared<const AadrnnModel>(std::move(model)), threshold, 0}));
    d.trainer_ = std::make_unique<Trainer>(std::move(shape), std::move(stats), d.cfg_.train, d.cfg_.threshold,
                                           d.gamma_, *d.slot_, d.cfg_.async_training);
    d.phase_ = phase;
    return d;
}

std::optional<Decision> Detector::step(std::span<const double> raw, std::int64_t at_us) {
    if (!configured()) throw LifecycleError("detector stepped before configuration");
    if (raw.size() != dim_) {
        throw DimensionError("detector expects dimension " + std::to_string(dim_) + ", got " + std::to_string(raw.size()));
    }

    if (phase_ == Phase::init) {
        const bool time_based = cfg_.init_seconds > 0.0;
        const bool elapsed = time_based && init_start_us_ && !pending_init_.empty() &&
                             static_cast<double>(at_us - *init_start_us_) >= cfg_.init_seconds * 1e6;
        if (!elapsed) {
            if (!init_start_us_) init_start_us_ = at_us;
            pending_init_.emplace_back(raw.begin(), raw.end());
            if (!time_based && pending_init_.size() >= cfg_.init_len) finish_init();
            return std::nullopt;
        }
        finish_init();
    }

    const auto snap = slot_->load();
    auto x = apply_normalizer(*norm_, raw);
    const auto xhat = snap->model->forward(x);
    const double d = decision_value(x, xhat, gamma_);
    const Decision decision{d, snap->threshold, classify(d, snap->threshold), at_us, cfg_.mode};

    if (phase_ == Phase::online) {
        if (!window_open_) {
            window_.reset(at_us);
            window_open_ = true;
        }
        if (!decision.is_attack) window_.accept(std::move(x), decision);
        const auto& tc = cfg_.train;
        const bool ready = tc.window_seconds > 0.0
                               ? static_cast<double>(at_us - window_.start_us()) >= tc.window_seconds * 1e6
                               : tc.window_len != kNoWindow && window_.size() >= tc.window_len;
        if (ready) close_window(at_us);
    }
    return decision;
}

void Detector::close_window(std::int64_t now_us) {
    if (!window_.empty()) {
        trainer_->submit(window_.rows(), window_.decision_values());
        ++windows_submitted_;
    }
    window_.reset(now_us);
}

// ---------------------------------------------------------------------------

namespace {

DetectorConfig with_metric_gamma(DetectorConfig cfg, const MetricConfig& metrics) {
    if (cfg.gamma.empty() && !metrics.gamma.empty()) cfg.gamma = metrics.gamma;
    return cfg;
}

} // namespace

BotnetPipeline::BotnetPipeline(MetricConfig metrics, DetectorConfig cfg)
    : window_(metrics), detector_(with_metric_gamma(std::move(cfg), metrics), 3) {
    metrics.validate(3);
}

BotnetPipeline::BotnetPipeline(MetricConfig metrics, Detector detector)
    : window_(metrics), detector_(std::move(detector)) {
    if (detector_.dim() != 3) throw DimensionError("botnet pipeline needs a 3-metric detector");
}

std::optional<Decision> BotnetPipeline::step(const PacketRecord& pkt) {
    last_raw_ = window_.push(pkt.timestamp_us, pkt.size_bytes);
    return detector_.step(last_raw_, pkt.timestamp_us);
}

} // namespace iotac
