#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iotac/config.hpp"
#include "iotac/eval.hpp"
#include "iotac/traffic.hpp"

namespace iotac {

// Seeded synthetic scenarios used by the benchmark suite.

/// 60 s of 50 pkt/s benign traffic, then a 2 s flood at 100x the benign rate.
SynthSpec flood_scenario();
/// Same as the flood scenario with the benign rate ramping to 2x over the run.
SynthSpec drift_scenario();
/// 120 s of stationary benign traffic at 50 pkt/s.
SynthSpec stationary_scenario();
/// Hosts 10.0.0.1-4 in a ring at 20 pkt/s per flow; 10.0.0.3 floods 203.0.113.7 from 60 s on.
SynthSpec device_scenario();
inline const char* kDeviceFlooder = "10.0.0.3";
inline const char* kDeviceNetwork = "10.0.0.0/24";

struct DetectionResult {
    EvalReport aadrnn;
    ConfusionCounts baseline;  ///< simple thresholding on the same post-init packets
    Rates baseline_rates;
};

/// Botnet pipeline plus the simple-thresholding baseline (per-metric whisker over the init rows).
DetectionResult run_detection_benchmark(const Trace& trace, const MetricConfig& metrics, const DetectorConfig& cfg);

struct DeviceResult {
    InfectionReport report;
    std::map<std::string, double> max_level;   ///< highest level each address reached
    std::vector<std::string> flagged;          ///< addresses compromised at any point, sorted
    std::vector<LevelPoint> levels;
};

DeviceResult run_device_benchmark(const Trace& trace, const Config& cfg);

struct BenchLine {
    std::string id;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Scenario benchmarks (detection, online vs offline, device identification) with their pass rules.
std::vector<BenchLine> run_scenario_bench(std::uint64_t seed = 1);

} // namespace iotac
