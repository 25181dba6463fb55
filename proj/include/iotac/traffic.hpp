#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace iotac {

enum class Label : std::uint8_t { benign, attack };

/// One observed transmission. Only header-level fields are kept.
struct PacketRecord {
    std::int64_t timestamp_us = 0;
    std::string src;
    std::string dst;
    std::uint64_t size_bytes = 0;
    std::optional<Label> label;
    std::string attack_type;

    bool operator==(const PacketRecord&) const = default;
};

struct Trace {
    std::string name;
    std::vector<PacketRecord> records;
};

struct FeatureRow {
    std::vector<double> features;
    std::optional<Label> label;
    std::string attack_type;
};

/// How ingestion treats timestamps that go backwards.
enum class OrderPolicy {
    strict,      ///< throw OrderError
    stable_sort  ///< reorder by timestamp, keeping file order among ties
};

// Canonical trace CSV: timestamp_us,src,dst,size_bytes,label,attack_type
Trace parse_trace(std::istream& in, std::string name = {}, OrderPolicy policy = OrderPolicy::strict);
Trace load_trace(const std::filesystem::path& path, OrderPolicy policy = OrderPolicy::strict);
void write_trace(const Trace& trace, std::ostream& out);
void save_trace(const Trace& trace, const std::filesystem::path& path);

// Feature CSV: f1,...,fM,label[,attack_type]
std::vector<FeatureRow> parse_feature_dataset(std::istream& in);
std::vector<FeatureRow> load_feature_dataset(const std::filesystem::path& path);
void write_feature_dataset(const std::vector<FeatureRow>& rows, std::ostream& out);

/// True when the file's header names the canonical trace columns.
bool is_trace_csv(const std::filesystem::path& path);

/// Packet sizes drawn from a normal distribution, rounded and clipped to [min_bytes, max_bytes].
struct SizeDistribution {
    double mean = 300.0;
    double stddev = 50.0;
    std::uint64_t min_bytes = 40;
    std::uint64_t max_bytes = 1500;
};

/// A benign Poisson source between two addresses.
struct BenignFlow {
    std::string src = "10.0.0.1";
    std::string dst = "10.0.0.2";
    double rate_pps = 10.0;
    SizeDistribution size;
};

/// Extra Poisson traffic on [start_s, end_s), labeled attack.
///
/// The segment rate is `rate_multiplier` times the base benign rate of the flows
/// sourced by `attackers`, or of all flows when none of the attackers has one.
/// Each attack packet picks its source and target uniformly from the lists.
struct AttackSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    double rate_multiplier = 100.0;
    SizeDistribution size{1000.0, 20.0, 40, 1500};
    std::vector<std::string> attackers{"192.0.2.66"};
    std::vector<std::string> targets{"10.0.0.2"};
    std::string attack_type = "flood";
};

struct SynthSpec {
    double duration_s = 10.0;
    std::vector<BenignFlow> flows{BenignFlow{}};
    /// Benign rates ramp linearly from 1x at t=0 to `rate_ramp`x at t=duration.
    double rate_ramp = 1.0;
    std::vector<AttackSegment> attacks;
};

/// Deterministic for a fixed (spec, seed).
Trace synth_trace(const SynthSpec& spec, std::uint64_t seed);

void to_json(nlohmann::json& j, const SizeDistribution& s);
void from_json(const nlohmann::json& j, SizeDistribution& s);
void to_json(nlohmann::json& j, const BenignFlow& f);
void from_json(const nlohmann::json& j, BenignFlow& f);
void to_json(nlohmann::json& j, const AttackSegment& a);
void from_json(const nlohmann::json& j, AttackSegment& a);
void to_json(nlohmann::json& j, const SynthSpec& s);
void from_json(const nlohmann::json& j, SynthSpec& s);

const char* to_string(Label label);

} // namespace iotac
