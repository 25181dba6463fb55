#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "iotac/config.hpp"
#include "iotac/detector.hpp"

namespace iotac {

inline constexpr int kStateVersion = 1;

/// Everything needed to resume a single-stream detector.
struct DetectorState {
    Config config;
    Mode mode = Mode::botnet;
    Normalizer normalizer;
    AadrnnModel model;
    double threshold = 0.0;
    SufficientStats stats;
    Phase phase = Phase::online;

    /// Rebuilds the detector; `phase` overrides the stored one.
    Detector restore(std::optional<Phase> phase = std::nullopt) const;
};

/// Waits for pending training, then serializes the current snapshot, scaling and statistics.
nlohmann::json state_to_json(Detector& det, const Config& cfg);
DetectorState state_from_json(const nlohmann::json& j);

/// Output is a pure function of the detector contents: same input, same bytes.
void save_state(const std::filesystem::path& path, Detector& det, const Config& cfg);
DetectorState load_state(const std::filesystem::path& path);

} // namespace iotac
