#include "iotac/config.hpp"

#include <cmath>
#include <fstream>

#include "iotac/errors.hpp"

namespace iotac {

using nlohmann::json;

namespace {

json window_len_json(std::size_t n) { return n == kNoWindow ? json(nullptr) : json(n); }

std::size_t window_len_from(const json& v) {
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "inf")) return kNoWindow;
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
        throw ConfigError("train.window_len must be a positive integer, null or \"inf\"");
    }
    return v.get<std::size_t>();
}

template <typename T>
T get(const json& section, const char* sec, const char* key) {
    try {
        return section.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(sec) + "." + key + " has the wrong type");
    }
}

// Overlays `user` onto `base`, rejecting keys `base` does not define.
void merge_known(json& base, const json& user, const std::string& where) {
    if (!user.is_object()) throw ConfigError((where.empty() ? "config" : where) + " must be an object");
    for (const auto& [k, v] : user.items()) {
        const std::string path = where.empty() ? k : where + "." + k;
        if (!base.contains(k)) throw ConfigError("unknown config key '" + path + "'");
        if (base[k].is_object()) {
            merge_known(base[k], v, path);
        } else {
            base[k] = v;
        }
    }
}

} // namespace

json to_json(const Config& c) {
    const auto& d = c.detector;
    json j;
    j["metrics"] = {{"N", c.metrics.latest_packets},
                    {"T_seconds", static_cast<double>(c.metrics.window_us) / 1e6},
                    {"gamma", c.metrics.gamma}};
    j["train"] = {{"noise_sigma", d.train.noise_sigma},
                  {"ridge_lambda", d.train.ridge_lambda},
                  {"window_len", window_len_json(d.train.window_len)},
                  {"window_seconds", d.train.window_seconds},
                  {"seed", d.train.seed},
                  {"init_len", d.init_len},
                  {"init_seconds", d.init_seconds},
                  {"hidden_layers", d.hidden_layers},
                  {"act_r", d.act.r},
                  {"act_c", d.act.c},
                  {"async", d.async_training}};
    j["threshold"] = {{"mode", d.threshold.mode == ThresholdMode::whisker ? "whisker" : "fixed"},
                      {"value", d.threshold.value},
                      {"freeze_after_init", d.threshold.freeze_after_init},
                      {"history", d.threshold.history}};
    j["device"] = {{"alpha", c.device.alpha},
                   {"level_threshold", c.device.level_threshold},
                   {"hysteresis_k", c.device.hysteresis_k},
                   {"ttl_seconds", c.device.ttl_seconds},
                   {"level_scale", c.device.level_scale},
                   {"monitored", c.device.monitored}};
    j["io"] = {{"strict_order", c.io.strict_order}, {"partitions", c.io.partitions}};
    return j;
}

Config config_from_json(const json& user) {
    json j = to_json(Config{});
    merge_known(j, user, "");

    Config c;
    const auto& m = j["metrics"];
    c.metrics.latest_packets = get<std::size_t>(m, "metrics", "N");
    const double t = get<double>(m, "metrics", "T_seconds");
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("metrics.T_seconds must be > 0");
    c.metrics.window_us = static_cast<std::int64_t>(std::llround(t * 1e6));
    c.metrics.gamma = get<std::vector<double>>(m, "metrics", "gamma");

    const auto& tr = j["train"];
    auto& d = c.detector;
    d.train.noise_sigma = get<double>(tr, "train", "noise_sigma");
    d.train.ridge_lambda = get<double>(tr, "train", "ridge_lambda");
    d.train.window_len = window_len_from(tr["window_len"]);
    d.train.window_seconds = get<double>(tr, "train", "window_seconds");
    d.train.seed = get<std::uint64_t>(tr, "train", "seed");
    d.init_len = get<std::size_t>(tr, "train", "init_len");
    d.init_seconds = get<double>(tr, "train", "init_seconds");
    d.hidden_layers = get<std::size_t>(tr, "train", "hidden_layers");
    d.act.r = get<double>(tr, "train", "act_r");
    d.act.c = get<double>(tr, "train", "act_c");
    d.async_training = get<bool>(tr, "train", "async");

    const auto& th = j["threshold"];
    const auto mode = get<std::string>(th, "threshold", "mode");
    if (mode == "whisker") {
        d.threshold.mode = ThresholdMode::whisker;
    } else if (mode == "fixed") {
        d.threshold.mode = ThresholdMode::fixed;
    } else {
        throw ConfigError("threshold.mode must be \"whisker\" or \"fixed\"");
    }
    d.threshold.value = get<double>(th, "threshold", "value");
    d.threshold.freeze_after_init = get<bool>(th, "threshold", "freeze_after_init");
    d.threshold.history = get<std::size_t>(th, "threshold", "history");

    const auto& dv = j["device"];
    c.device.alpha = get<double>(dv, "device", "alpha");
    c.device.level_threshold = get<double>(dv, "device", "level_threshold");
    c.device.hysteresis_k = get<std::size_t>(dv, "device", "hysteresis_k");
    c.device.ttl_seconds = get<double>(dv, "device", "ttl_seconds");
    c.device.level_scale = get<double>(dv, "device", "level_scale");
    c.device.monitored = get<std::vector<std::string>>(dv, "device", "monitored");

    const auto& io = j["io"];
    c.io.strict_order = get<bool>(io, "io", "strict_order");
    c.io.partitions = get<std::size_t>(io, "io", "partitions");
    if (c.io.partitions == 0) throw ConfigError("io.partitions must be >= 1");
    c.metrics.order = c.io.strict_order ? OrderPolicy::strict : OrderPolicy::stable_sort;

    c.device.validate();
    if (d.threshold.mode == ThresholdMode::fixed && !(d.threshold.value > 0.0)) {
        throw ConfigError("threshold.value must be > 0");
    }
    return c;
}

json apply_overrides(json j, std::span<const std::string> overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
        const std::string key = o.substr(0, eq);
        const std::string raw = o.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;

        json* node = &j;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ConfigError("override '" + o + "' has an empty key segment");
            if (!node->is_object()) *node = json::object();
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            node = &(*node)[part];
            start = dot + 1;
        }
    }
    return j;
}

Config load_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path.string());
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config " + path.string() + ": " + e.what());
        }
    }
    return config_from_json(apply_overrides(std::move(j), overrides));
}

} // namespace iotac
