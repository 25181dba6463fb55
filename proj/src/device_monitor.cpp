#include "iotac/device_monitor.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "iotac/errors.hpp"

namespace iotac {

namespace {

std::optional<std::uint32_t> parse_ipv4(const std::string& s) {
    in_addr addr{};
    if (inet_pton(AF_INET, s.c_str(), &addr) != 1) return std::nullopt;
    return ntohl(addr.s_addr);
}

std::int64_t seconds_to_us(double s) { return static_cast<std::int64_t>(std::llround(s * 1e6)); }

} // namespace

void DeviceConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("device.alpha must be in (0, 1]");
    if (!(level_threshold >= 0.0)) throw ConfigError("device.level_threshold must be >= 0");
    if (hysteresis_k == 0) throw ConfigError("device.hysteresis_k must be >= 1");
    if (!(ttl_seconds > 0.0)) throw ConfigError("device.ttl_seconds must be > 0");
    if (!(level_scale > 0.0)) throw ConfigError("device.level_scale must be > 0");
    AddressFilter probe(monitored);
}

double infection_level(double prev, double d, double saturation, double alpha) {
    const double hit = saturation > 0.0 ? std::min(d / saturation, 1.0) : 1.0;
    return (1.0 - alpha) * prev + alpha * hit;
}

AddressFilter::AddressFilter(std::span<const std::string> entries) {
    for (const auto& e : entries) {
        const auto slash = e.find('/');
        if (slash == std::string::npos) {
            exact_.push_back(e);
            continue;
        }
        const auto net = parse_ipv4(e.substr(0, slash));
        int len = -1;
        try {
            len = std::stoi(e.substr(slash + 1));
        } catch (const std::exception&) {
        }
        if (!net || len < 0 || len > 32) throw ConfigError("device.monitored: invalid CIDR block '" + e + "'");
        const std::uint32_t mask = len == 0 ? 0u : ~std::uint32_t{0} << (32 - len);
        blocks_.push_back({*net & mask, mask});
    }
}

bool AddressFilter::matches(const std::string& addr) const {
    if (empty()) return true;
    if (std::find(exact_.begin(), exact_.end(), addr) != exact_.end()) return true;
    if (blocks_.empty()) return false;
    const auto ip = parse_ipv4(addr);
    if (!ip) return false;
    return std::any_of(blocks_.begin(), blocks_.end(), [&](const Block& b) { return (*ip & b.mask) == b.network; });
}

nlohmann::json to_json(const DeviceSummary& s) {
    nlohmann::json j = {{"addr", s.addr},
                        {"infection_level", s.infection_level},
                        {"max_level", s.max_level},
                        {"is_compromised", s.is_compromised},
                        {"ever_compromised", s.ever_compromised},
                        {"decisions_count", s.decisions_count},
                        {"attack_decisions", s.attack_decisions},
                        {"packets", s.packets},
                        {"first_seen_us", s.first_seen_us},
                        {"last_seen_us", s.last_seen_us},
                        {"phase", s.phase},
                        {"evicted", s.evicted}};
    j["first_flagged_us"] = s.first_flagged_us ? nlohmann::json(*s.first_flagged_us) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const InfectionReport& r) {
    auto devices = nlohmann::json::array();
    for (const auto& d : r.devices) devices.push_back(to_json(d));
    return {{"packets", r.packets},
            {"active_devices", r.active_devices},
            {"compromised_devices", r.compromised_devices},
            {"devices", std::move(devices)}};
}

DeviceBank::DeviceBank(MetricConfig metrics, DetectorConfig detector, DeviceConfig device, std::size_t partitions)
    : metrics_(std::move(metrics)), detector_(std::move(detector)), device_(std::move(device)),
      filter_(device_.monitored), partitions_(std::max<std::size_t>(1, partitions)) {
    detector_.mode = Mode::device;
    if (detector_.gamma.empty() && !metrics_.gamma.empty()) detector_.gamma = metrics_.gamma;
    metrics_.validate(6);
    detector_.validate(6);
    device_.validate();
}

std::size_t DeviceBank::partition_of(const std::string& addr) const {
    return std::hash<std::string>{}(addr) % partitions_.size();
}

std::size_t DeviceBank::size() const noexcept {
    std::size_t n = 0;
    for (const auto& p : partitions_) n += p.size();
    return n;
}

const DirectionalMetrics* DeviceBank::metrics_of(const std::string& addr) const {
    const auto& part = partitions_[partition_of(addr)];
    auto it = part.find(addr);
    return it == part.end() ? nullptr : &it->second.metrics.current();
}

DeviceSummary DeviceBank::summarize(const Device& d, bool evicted) {
    DeviceSummary s;
    s.addr = d.addr;
    s.infection_level = d.level;
    s.max_level = d.max_level;
    s.is_compromised = d.compromised;
    s.ever_compromised = d.ever_compromised;
    s.decisions_count = d.decisions;
    s.attack_decisions = d.attacks;
    s.packets = d.packets;
    s.first_seen_us = d.first_seen_us;
    s.last_seen_us = d.last_seen_us;
    s.first_flagged_us = d.first_flagged_us;
    s.phase = to_string(d.detector.phase());
    s.evicted = evicted;
    return s;
}

std::optional<DeviceDecision> DeviceBank::route(Partition& part, std::vector<DeviceSummary>& archive,
                                                const PacketRecord& pkt, const std::string& addr, Role role) const {
    const std::int64_t ttl_us = seconds_to_us(device_.ttl_seconds);
    auto it = part.find(addr);
    if (it != part.end() && pkt.timestamp_us - it->second.last_seen_us > ttl_us) {
        archive.push_back(summarize(it->second, true));
        part.erase(it);
        it = part.end();
    }
    if (it == part.end()) {
        Device fresh{.addr = addr, .metrics = DirectionalState(metrics_), .detector = Detector(detector_, 6)};
        fresh.first_seen_us = pkt.timestamp_us;
        it = part.emplace(addr, std::move(fresh)).first;
    }
    Device& d = it->second;
    d.last_seen_us = pkt.timestamp_us;
    ++d.packets;
    if (role != Role::receive) d.metrics.on_transmit(pkt.timestamp_us, pkt.size_bytes);
    if (role != Role::transmit) d.metrics.on_receive(pkt.timestamp_us, pkt.size_bytes);

    const auto decision = d.detector.step(d.metrics.current(), pkt.timestamp_us);
    if (!decision) return std::nullopt;

    ++d.decisions;
    if (decision->is_attack) ++d.attacks;
    d.level = infection_level(d.level, decision->value, decision->threshold * device_.level_scale, device_.alpha);
    d.max_level = std::max(d.max_level, d.level);
    if (d.level > device_.level_threshold) {
        d.below = 0;
        if (++d.above >= device_.hysteresis_k && !d.compromised) {
            d.compromised = true;
            d.ever_compromised = true;
            if (!d.first_flagged_us) d.first_flagged_us = pkt.timestamp_us;
        }
    } else {
        d.above = 0;
        if (++d.below >= device_.hysteresis_k) d.compromised = false;
    }
    return DeviceDecision{addr, *decision, d.level, d.compromised};
}

void DeviceBank::sweep(std::int64_t now_us) {
    const std::int64_t ttl_us = seconds_to_us(device_.ttl_seconds);
    for (auto& part : partitions_) {
        for (auto it = part.begin(); it != part.end();) {
            if (now_us - it->second.last_seen_us > ttl_us) {
                archive_.push_back(summarize(it->second, true));
                it = part.erase(it);
            } else {
                ++it;
            }
        }
    }
    next_sweep_us_ = now_us + std::max<std::int64_t>(ttl_us / 2, 1);
}

std::vector<DeviceDecision> DeviceBank::ingest(const PacketRecord& pkt) {
    if (packets_ == 0) next_sweep_us_ = pkt.timestamp_us + seconds_to_us(device_.ttl_seconds) / 2;
    if (pkt.timestamp_us >= next_sweep_us_) sweep(pkt.timestamp_us);
    ++packets_;

    std::vector<DeviceDecision> out;
    auto visit = [&](const std::string& addr, Role role) {
        if (!filter_.matches(addr)) return;
        if (auto d = route(partitions_[partition_of(addr)], archive_, pkt, addr, role)) out.push_back(std::move(*d));
    };
    if (pkt.src == pkt.dst) {
        visit(pkt.src, Role::both);
    } else {
        visit(pkt.src, Role::transmit);
        visit(pkt.dst, Role::receive);
    }
    return out;
}

std::vector<DeviceDecision> DeviceBank::ingest_all(std::span<const PacketRecord> packets) {
    if (packets.empty()) return {};
    struct Event {
        std::size_t seq;
        const PacketRecord* pkt;
        const std::string* addr;
        Role role;
    };
    const std::size_t parts = partitions_.size();
    std::vector<std::vector<Event>> events(parts);
    for (std::size_t i = 0; i < packets.size(); ++i) {
        const auto& pkt = packets[i];
        auto add = [&](const std::string& addr, Role role, std::size_t slot) {
            if (filter_.matches(addr)) events[partition_of(addr)].push_back({2 * i + slot, &pkt, &addr, role});
        };
        if (pkt.src == pkt.dst) {
            add(pkt.src, Role::both, 0);
        } else {
            add(pkt.src, Role::transmit, 0);
            add(pkt.dst, Role::receive, 1);
        }
    }

    std::vector<std::vector<std::pair<std::size_t, DeviceDecision>>> results(parts);
    std::vector<std::vector<DeviceSummary>> archives(parts);
    std::vector<std::exception_ptr> errors(parts);
    auto work = [&](std::size_t p) {
        try {
            for (const auto& ev : events[p]) {
                if (auto d = route(partitions_[p], archives[p], *ev.pkt, *ev.addr, ev.role)) {
                    results[p].emplace_back(ev.seq, std::move(*d));
                }
            }
        } catch (...) {
            errors[p] = std::current_exception();
        }
    };
    if (parts == 1) {
        work(0);
    } else {
        std::vector<std::jthread> workers;
        for (std::size_t p = 0; p < parts; ++p) workers.emplace_back(work, p);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<std::pair<std::size_t, DeviceDecision>> merged;
    for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(merged));
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& a : archives) std::move(a.begin(), a.end(), std::back_inserter(archive_));

    // Replay the sweep schedule of sequential ingestion so the archive ends up identical.
    const std::int64_t half_ttl = seconds_to_us(device_.ttl_seconds) / 2;
    std::optional<std::int64_t> last_sweep;
    for (const auto& pkt : packets) {
        if (packets_ == 0) next_sweep_us_ = pkt.timestamp_us + half_ttl;
        if (pkt.timestamp_us >= next_sweep_us_) {
            last_sweep = pkt.timestamp_us;
            next_sweep_us_ = pkt.timestamp_us + std::max<std::int64_t>(half_ttl, 1);
        }
        ++packets_;
    }
    if (last_sweep) sweep(*last_sweep);

    std::vector<DeviceDecision> out;
    out.reserve(merged.size());
    for (auto& m : merged) out.push_back(std::move(m.second));
    return out;
}

InfectionReport DeviceBank::report() const {
    InfectionReport r;
    r.packets = packets_;
    for (const auto& part : partitions_) {
        for (const auto& [addr, d] : part) r.devices.push_back(summarize(d, false));
    }
    r.active_devices = r.devices.size();
    r.devices.insert(r.devices.end(), archive_.begin(), archive_.end());
    for (const auto& d : r.devices) {
        if (d.is_compromised && !d.evicted) ++r.compromised_devices;
    }
    std::sort(r.devices.begin(), r.devices.end(), [](const DeviceSummary& a, const DeviceSummary& b) {
        if (a.infection_level != b.infection_level) return a.infection_level > b.infection_level;
        if (a.addr != b.addr) return a.addr < b.addr;
        return a.last_seen_us < b.last_seen_us;
    });
    return r;
}

} // namespace iotac
