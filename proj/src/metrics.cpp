#include "iotac/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "iotac/errors.hpp"

namespace iotac {

void MetricConfig::validate(std::size_t dim) const {
    if (latest_packets < 2) throw ConfigError("metrics.N must be at least 2");
    if (window_us <= 0) throw ConfigError("metrics.T_seconds must be positive");
    if (gamma.empty()) return;
    if (gamma.size() != dim) {
        throw ConfigError("metrics.gamma has " + std::to_string(gamma.size()) + " weights, expected " +
                          std::to_string(dim));
    }
    double sum = 0.0;
    for (double g : gamma) {
        if (!(g > 0.0)) throw ConfigError("metrics.gamma weights must be positive");
        sum += g;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("metrics.gamma must sum to 1");
}

std::vector<double> MetricConfig::weights(std::size_t dim) const {
    if (!gamma.empty()) return gamma;
    return std::vector<double>(dim, 1.0 / static_cast<double>(dim));
}

MetricWindow::MetricWindow(const MetricConfig& cfg)
    : n_(cfg.latest_packets), window_us_(cfg.window_us), order_(cfg.order) {
    if (n_ < 2) throw ConfigError("metrics.N must be at least 2");
    if (window_us_ <= 0) throw ConfigError("metrics.T_seconds must be positive");
}

MetricTriple MetricWindow::push(std::int64_t timestamp_us, std::uint64_t size_bytes) {
    if (!latest_.empty() && timestamp_us < latest_.back().first) {
        if (order_ == OrderPolicy::strict) {
            throw OrderError("packet at " + std::to_string(timestamp_us) + " us arrives after " +
                             std::to_string(latest_.back().first) + " us");
        }
        timestamp_us = latest_.back().first;
    }

    latest_.emplace_back(timestamp_us, size_bytes);
    latest_bytes_ += size_bytes;
    if (latest_.size() > n_) {
        latest_bytes_ -= latest_.front().second;
        latest_.pop_front();
    }

    in_window_.push_back(timestamp_us);
    const std::int64_t horizon = timestamp_us - window_us_;
    while (in_window_.front() <= horizon) in_window_.pop_front();

    const std::size_t n = latest_.size();
    double mean_gap = 0.0;
    if (n >= 2) {
        const auto span = static_cast<double>(timestamp_us - latest_.front().first);
        mean_gap = span / static_cast<double>(n - 1) / 1e6;
    }
    return {static_cast<double>(latest_bytes_), mean_gap, static_cast<double>(in_window_.size())};
}

const DirectionalMetrics& DirectionalState::on_transmit(std::int64_t timestamp_us, std::uint64_t size_bytes) {
    const auto m = tx_.push(timestamp_us, size_bytes);
    std::copy(m.begin(), m.end(), current_.begin());
    return current_;
}

const DirectionalMetrics& DirectionalState::on_receive(std::int64_t timestamp_us, std::uint64_t size_bytes) {
    const auto m = rx_.push(timestamp_us, size_bytes);
    std::copy(m.begin(), m.end(), current_.begin() + 3);
    return current_;
}

std::vector<DirectionalExtractor::Update> DirectionalExtractor::push(const PacketRecord& pkt) {
    std::vector<Update> out;
    auto& src = states_.try_emplace(pkt.src, cfg_).first->second;
    src.on_transmit(pkt.timestamp_us, pkt.size_bytes);
    if (pkt.dst == pkt.src) {
        out.push_back({pkt.src, src.on_receive(pkt.timestamp_us, pkt.size_bytes)});
        return out;
    }
    out.push_back({pkt.src, src.current()});
    auto& dst = states_.try_emplace(pkt.dst, cfg_).first->second;
    out.push_back({pkt.dst, dst.on_receive(pkt.timestamp_us, pkt.size_bytes)});
    return out;
}

const DirectionalMetrics* DirectionalExtractor::find(const std::string& addr) const {
    auto it = states_.find(addr);
    return it == states_.end() ? nullptr : &it->second.current();
}

ScalingFactors fit_scaling(std::span<const std::vector<double>> raws) {
    if (raws.empty()) throw DataError("fit_scaling: no raw metric vectors");
    const std::size_t dim = raws.front().size();
    ScalingFactors s{std::vector<double>(dim, 0.0)};
    for (const auto& raw : raws) {
        if (raw.size() != dim) throw DimensionError("fit_scaling: inconsistent metric dimension");
        for (std::size_t i = 0; i < dim; ++i) s.scale[i] = std::max(s.scale[i], raw[i]);
    }
    for (double& v : s.scale) {
        if (v <= 0.0) v = 1.0;
    }
    return s;
}

MetricVector normalize(std::span<const double> raw, const ScalingFactors& s, std::int64_t at_us) {
    if (raw.size() != s.scale.size()) throw DimensionError("normalize: dimension mismatch");
    MetricVector out;
    out.raw.assign(raw.begin(), raw.end());
    out.values.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = raw[i] / s.scale[i];
    out.at_us = at_us;
    return out;
}

MinMaxScaler::MinMaxScaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw DimensionError("min-max scaler: min/max dimension mismatch");
}

MinMaxScaler MinMaxScaler::fit(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw DataError("min-max fit: no rows");
    std::vector<double> lo = rows.front();
    std::vector<double> hi = rows.front();
    for (const auto& row : rows) {
        if (row.size() != lo.size()) throw DimensionError("min-max fit: inconsistent feature dimension");
        for (std::size_t i = 0; i < row.size(); ++i) {
            lo[i] = std::min(lo[i], row[i]);
            hi[i] = std::max(hi[i], row[i]);
        }
    }
    return MinMaxScaler(std::move(lo), std::move(hi));
}

std::vector<double> MinMaxScaler::apply(std::span<const double> row) const {
    if (row.size() != min_.size()) {
        throw DimensionError("min-max apply: expected dimension " + std::to_string(min_.size()) + ", got " +
                             std::to_string(row.size()));
    }
    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        const double range = max_[i] - min_[i];
        out[i] = range > 0.0 ? (row[i] - min_[i]) / range : 0.0;
    }
    return out;
}

std::vector<double> apply_normalizer(const Normalizer& norm, std::span<const double> raw) {
    if (const auto* s = std::get_if<ScalingFactors>(&norm)) return normalize(raw, *s).values;
    return std::get<MinMaxScaler>(norm).apply(raw);
}

std::size_t normalizer_dim(const Normalizer& norm) {
    if (const auto* s = std::get_if<ScalingFactors>(&norm)) return s->scale.size();
    return std::get<MinMaxScaler>(norm).dim();
}

} // namespace iotac
