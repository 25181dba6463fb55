#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "iotac/detector.hpp"
#include "iotac/device_monitor.hpp"
#include "iotac/metrics.hpp"

namespace iotac {

struct IoConfig {
    bool strict_order = true;     ///< reject out-of-order traces instead of stable-sorting them
    std::size_t partitions = 1;   ///< device-mode worker partitions
};

/// Everything a run depends on besides its input files and command-line mode.
struct Config {
    MetricConfig metrics;
    DetectorConfig detector;
    DeviceConfig device;
    IoConfig io;
};

/// Sections metrics, train, threshold, device, io. Every key is always present.
nlohmann::json to_json(const Config& c);

/// Missing keys take defaults; unknown sections or keys throw ConfigError.
Config config_from_json(const nlohmann::json& j);

/// Applies "section.key=value" overrides; the value is parsed as JSON, falling back to a string.
nlohmann::json apply_overrides(nlohmann::json j, std::span<const std::string> overrides);

/// Reads an optional config file and applies overrides on top of the defaults.
Config load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});

} // namespace iotac
