#include "iotac/state_io.hpp"

#include <fstream>

#include "iotac/errors.hpp"

namespace iotac {

using nlohmann::json;

namespace {

json normalizer_to_json(const Normalizer& n) {
    if (const auto* s = std::get_if<ScalingFactors>(&n)) return {{"kind", "max"}, {"scale", s->scale}};
    const auto& m = std::get<MinMaxScaler>(n);
    return {{"kind", "min_max"}, {"min", m.min()}, {"max", m.max()}};
}

Normalizer normalizer_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "max") {
        ScalingFactors s{j.at("scale").get<std::vector<double>>()};
        for (double v : s.scale) {
            if (!(v > 0.0)) throw DataError("state file: scaling factors must be positive");
        }
        return s;
    }
    if (kind == "min_max") {
        return MinMaxScaler(j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>());
    }
    throw DataError("state file: unknown normalizer '" + kind + "'");
}

} // namespace

Detector DetectorState::restore(std::optional<Phase> p) const {
    DetectorConfig cfg = config.detector;
    cfg.mode = mode;
    if (cfg.gamma.empty() && !config.metrics.gamma.empty()) cfg.gamma = config.metrics.gamma;
    return Detector::restore(std::move(cfg), normalizer, model, threshold, stats, p.value_or(phase));
}

json state_to_json(Detector& det, const Config& cfg) {
    if (det.phase() == Phase::init) throw LifecycleError("cannot save a detector that is still initializing");
    det.drain();
    const auto snap = det.snapshot();
    const auto stats = det.stats();
    json j = model_to_json(*snap->model);
    j["version"] = kStateVersion;
    j["mode"] = to_string(det.config().mode);
    j["normalizer"] = normalizer_to_json(det.normalizer());
    j["threshold"] = snap->threshold;
    j["gamma"] = det.gamma();
    j["stats"] = {{"G", matrix_to_json(stats.gram)}, {"C", matrix_to_json(stats.cross)}, {"n", stats.count}};
    j["phase"] = to_string(det.phase());
    j["config"] = to_json(cfg);
    return j;
}

DetectorState state_from_json(const json& j) {
    try {
        const int version = j.at("version").get<int>();
        if (version != kStateVersion) {
            throw DataError("state file version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kStateVersion) + ")");
        }
        DetectorState s{config_from_json(j.at("config")),
                        mode_from_string(j.at("mode").get<std::string>()),
                        normalizer_from_json(j.at("normalizer")),
                        model_from_json(j),
                        j.at("threshold").get<double>(),
                        {matrix_from_json(j.at("stats").at("G")), matrix_from_json(j.at("stats").at("C")),
                         j.at("stats").at("n").get<std::uint64_t>()},
                        phase_from_string(j.at("phase").get<std::string>())};
        const auto hd = static_cast<Eigen::Index>(s.model.hidden_dim());
        if (s.stats.gram.rows() != hd || s.stats.gram.cols() != hd || s.stats.cross.rows() != hd ||
            s.stats.cross.cols() != static_cast<Eigen::Index>(s.model.dim())) {
            throw DimensionError("state file: training statistics do not match the model");
        }
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("state file is malformed: ") + e.what());
    }
}

void save_state(const std::filesystem::path& path, Detector& det, const Config& cfg) {
    const auto j = state_to_json(det, cfg);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

DetectorState load_state(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("state file " + path.string() + ": " + e.what());
    }
    return state_from_json(j);
}

} // namespace iotac
