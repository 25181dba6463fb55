#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "iotac/traffic.hpp"

namespace iotac {

/// Parameters of the sliding-window traffic metrics.
struct MetricConfig {
    std::size_t latest_packets = 10;         ///< N, number of latest packets for m1/m2
    std::int64_t window_us = 10'000'000;     ///< T, constant-length time window for m3
    std::vector<double> gamma;               ///< decision weights; empty means uniform
    OrderPolicy order = OrderPolicy::strict;

    /// Throws ConfigError unless N >= 2, T > 0 and gamma is empty or M positive weights summing to 1.
    void validate(std::size_t dim) const;
    /// gamma, or the uniform 1/M vector when unset.
    std::vector<double> weights(std::size_t dim) const;
};

/// (m1, m2, m3): total bytes of the latest N packets, their mean inter-transmission time in seconds,
/// and the packet count in the trailing time window (t - T, t].
using MetricTriple = std::array<double, 3>;
using DirectionalMetrics = std::array<double, 6>;

/// Streaming state of one packet stream.
class MetricWindow {
public:
    MetricWindow() = default;
    explicit MetricWindow(const MetricConfig& cfg);

    /// Pushes a packet and returns the metrics at that packet. The packet is part of its own window.
    MetricTriple push(std::int64_t timestamp_us, std::uint64_t size_bytes);

    std::size_t buffered() const noexcept { return latest_.size() + in_window_.size(); }
    bool empty() const noexcept { return latest_.empty(); }
    std::int64_t last_timestamp() const noexcept { return latest_.empty() ? 0 : latest_.back().first; }

private:
    std::size_t n_ = 10;
    std::int64_t window_us_ = 10'000'000;
    OrderPolicy order_ = OrderPolicy::strict;
    std::deque<std::pair<std::int64_t, std::uint64_t>> latest_;
    std::uint64_t latest_bytes_ = 0;
    std::deque<std::int64_t> in_window_;
};

/// Per-address transmitted/received sub-streams. The vector is
/// (m1_tx, m2_tx, m3_tx, m1_rx, m2_rx, m3_rx); each half only changes when its
/// own sub-stream receives a packet and starts at zero.
class DirectionalState {
public:
    DirectionalState() = default;
    explicit DirectionalState(const MetricConfig& cfg) : tx_(cfg), rx_(cfg) {}

    const DirectionalMetrics& on_transmit(std::int64_t timestamp_us, std::uint64_t size_bytes);
    const DirectionalMetrics& on_receive(std::int64_t timestamp_us, std::uint64_t size_bytes);
    const DirectionalMetrics& current() const noexcept { return current_; }

private:
    MetricWindow tx_;
    MetricWindow rx_;
    DirectionalMetrics current_{};
};

/// Directional extractor over a whole packet stream, keyed by address.
class DirectionalExtractor {
public:
    struct Update {
        std::string addr;
        DirectionalMetrics raw;
    };

    explicit DirectionalExtractor(MetricConfig cfg) : cfg_(std::move(cfg)) {}

    /// Updates src (transmit side) then dst (receive side); a self-addressed packet yields one update.
    std::vector<Update> push(const PacketRecord& pkt);
    /// nullptr for an address that has never been seen.
    const DirectionalMetrics* find(const std::string& addr) const;
    std::size_t size() const noexcept { return states_.size(); }

private:
    MetricConfig cfg_;
    std::unordered_map<std::string, DirectionalState> states_;
};

struct ScalingFactors {
    std::vector<double> scale;
};

/// Normalized metrics at one decision instant.
struct MetricVector {
    std::vector<double> values;
    std::vector<double> raw;
    std::int64_t at_us = 0;
};

/// Componentwise maximum over the rows; a zero maximum becomes 1.
ScalingFactors fit_scaling(std::span<const std::vector<double>> raws);
MetricVector normalize(std::span<const double> raw, const ScalingFactors& s, std::int64_t at_us = 0);

/// Min-max normalization for generic feature vectors. Constant columns map to 0;
/// values outside the fitted range are not clamped.
class MinMaxScaler {
public:
    MinMaxScaler() = default;
    MinMaxScaler(std::vector<double> min, std::vector<double> max);

    static MinMaxScaler fit(std::span<const std::vector<double>> rows);
    std::vector<double> apply(std::span<const double> row) const;

    const std::vector<double>& min() const noexcept { return min_; }
    const std::vector<double>& max() const noexcept { return max_; }
    std::size_t dim() const noexcept { return min_.size(); }

private:
    std::vector<double> min_;
    std::vector<double> max_;
};

using Normalizer = std::variant<ScalingFactors, MinMaxScaler>;

std::vector<double> apply_normalizer(const Normalizer& norm, std::span<const double> raw);
std::size_t normalizer_dim(const Normalizer& norm);

inline std::vector<double> to_vector(const MetricTriple& m) { return {m.begin(), m.end()}; }
inline std::vector<double> to_vector(const DirectionalMetrics& m) { return {m.begin(), m.end()}; }

} // namespace iotac
