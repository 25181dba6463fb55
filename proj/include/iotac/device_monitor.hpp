#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "iotac/detector.hpp"
#include "iotac/metrics.hpp"
#include "iotac/traffic.hpp"

namespace iotac {

struct DeviceConfig {
    double alpha = 0.1;             ///< smoothing of the infection level
    double level_threshold = 0.5;   ///< infection level above which a device counts as compromised
    std::size_t hysteresis_k = 3;   ///< consecutive updates needed to flip the compromised flag
    double ttl_seconds = 3600.0;    ///< idle devices are evicted (and restart fresh if seen again)
    double level_scale = 6.0;       ///< decision value that saturates the level, in units of the threshold
    /// Addresses to monitor: exact strings or IPv4 CIDR blocks. Empty monitors every address.
    std::vector<std::string> monitored;

    void validate() const;
};

/// (1 - alpha) prev + alpha min(d / saturation, 1)
double infection_level(double prev, double d, double saturation, double alpha);

/// Matches an address against exact entries and IPv4 CIDR blocks.
class AddressFilter {
public:
    AddressFilter() = default;
    explicit AddressFilter(std::span<const std::string> entries);
    bool matches(const std::string& addr) const;
    bool empty() const noexcept { return exact_.empty() && blocks_.empty(); }

private:
    struct Block {
        std::uint32_t network;
        std::uint32_t mask;
    };
    std::vector<std::string> exact_;
    std::vector<Block> blocks_;
};

struct DeviceDecision {
    std::string addr;
    Decision decision;
    double infection_level = 0.0;
    bool compromised = false;
};

/// Snapshot of one device for reports.
struct DeviceSummary {
    std::string addr;
    double infection_level = 0.0;
    double max_level = 0.0;
    bool is_compromised = false;
    bool ever_compromised = false;
    std::uint64_t decisions_count = 0;
    std::uint64_t attack_decisions = 0;
    std::uint64_t packets = 0;
    std::int64_t first_seen_us = 0;
    std::int64_t last_seen_us = 0;
    std::optional<std::int64_t> first_flagged_us;
    std::string phase;
    bool evicted = false;

    bool operator==(const DeviceSummary&) const = default;
};

struct InfectionReport {
    std::vector<DeviceSummary> devices;  ///< ordered by infection level, descending
    std::uint64_t packets = 0;
    std::size_t active_devices = 0;
    std::size_t compromised_devices = 0;

    bool operator==(const InfectionReport&) const = default;
};

nlohmann::json to_json(const DeviceSummary& s);
nlohmann::json to_json(const InfectionReport& r);

/// One independent detector per address over its 6 directional metrics.
class DeviceBank {
public:
    /// `partitions` fixes how addresses are sharded for ingest_all().
    DeviceBank(MetricConfig metrics, DetectorConfig detector, DeviceConfig device, std::size_t partitions = 1);

    /// Routes the packet to its source (transmit side) and destination (receive side).
    std::vector<DeviceDecision> ingest(const PacketRecord& pkt);

    /// Same result as calling ingest() on each packet in order; partitions run on separate threads.
    std::vector<DeviceDecision> ingest_all(std::span<const PacketRecord> packets);

    /// Deterministic; devices ordered by infection level descending, then address.
    InfectionReport report() const;

    std::size_t size() const noexcept;
    std::size_t evicted_count() const noexcept { return archive_.size(); }
    /// nullptr when the address has no live record.
    const DirectionalMetrics* metrics_of(const std::string& addr) const;

private:
    struct Device {
        std::string addr;
        DirectionalState metrics;
        Detector detector;
        double level = 0.0;
        double max_level = 0.0;
        bool compromised = false;
        bool ever_compromised = false;
        std::size_t above = 0;
        std::size_t below = 0;
        std::uint64_t decisions = 0;
        std::uint64_t attacks = 0;
        std::uint64_t packets = 0;
        std::int64_t first_seen_us = 0;
        std::int64_t last_seen_us = 0;
        std::optional<std::int64_t> first_flagged_us{};
    };
    using Partition = std::unordered_map<std::string, Device>;

    enum class Role { transmit, receive, both };

    std::size_t partition_of(const std::string& addr) const;
    std::optional<DeviceDecision> route(Partition& part, std::vector<DeviceSummary>& archive,
                                        const PacketRecord& pkt, const std::string& addr, Role role) const;
    void sweep(std::int64_t now_us);
    static DeviceSummary summarize(const Device& d, bool evicted);

    MetricConfig metrics_;
    DetectorConfig detector_;
    DeviceConfig device_;
    AddressFilter filter_;
    std::vector<Partition> partitions_;
    std::vector<DeviceSummary> archive_;
    std::uint64_t packets_ = 0;
    std::int64_t next_sweep_us_ = 0;
};

} // namespace iotac
