#include "iotac/aadrnn.hpp"

#include <cmath>
#include <random>

#include "iotac/errors.hpp"

namespace iotac {

RateActivation::RateActivation(ActivationParams p) : p_(p) {
    if (!(p_.r > 0.0) || !std::isfinite(p_.r)) throw ConfigError("activation: r must be positive");
    // c >= 1 keeps every activation inside [0, 1).
    if (!(p_.c >= 1.0) || !std::isfinite(p_.c)) throw ConfigError("activation: c must be at least 1");
}

nlohmann::json RateActivation::to_json() const { return {{"kind", "rate"}, {"r", p_.r}, {"c", p_.c}}; }

double activation(double v, const ActivationParams& p) {
    v = std::max(v, 0.0);
    return v / (p.r + p.c * v);
}

std::shared_ptr<const Activation> activation_from_json(const nlohmann::json& j) {
    const auto kind = j.value("kind", std::string("rate"));
    if (kind != "rate") throw ConfigError("unknown activation kind '" + kind + "'");
    return std::make_shared<RateActivation>(ActivationParams{j.at("r").get<double>(), j.at("c").get<double>()});
}

AadrnnModel::AadrnnModel(std::vector<Eigen::MatrixXd> hidden, Eigen::MatrixXd readout,
                         std::shared_ptr<const Activation> act, std::uint64_t seed)
    : hidden_(std::move(hidden)), readout_(std::move(readout)), act_(std::move(act)), seed_(seed) {
    if (!act_) throw ConfigError("model: missing activation");
    if (hidden_.empty()) throw DimensionError("model: at least one hidden layer is required");
    dim_ = static_cast<std::size_t>(hidden_.front().cols());
    if (dim_ == 0) throw DimensionError("model: zero input dimension");
    Eigen::Index prev = hidden_.front().cols();
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
        const auto& w = hidden_[l];
        if (w.cols() != prev || w.rows() == 0) {
            throw DimensionError("model: hidden layer " + std::to_string(l + 1) + " does not chain");
        }
        if ((w.array() < 0.0).any() || !w.allFinite()) {
            throw NumericError("model: hidden weights must be finite and nonnegative");
        }
        prev = w.rows();
    }
    if (readout_.rows() != static_cast<Eigen::Index>(dim_) || readout_.cols() != prev) {
        throw DimensionError("model: readout must be " + std::to_string(dim_) + "x" + std::to_string(prev));
    }
}

AadrnnModel AadrnnModel::reservoir(std::size_t dim, std::span<const std::size_t> widths, ActivationParams act,
                                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Eigen::MatrixXd> layers;
    std::size_t in = dim;
    for (std::size_t width : widths) {
        std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(in));
        Eigen::MatrixXd w(width, in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
        layers.push_back(std::move(w));
        in = width;
    }
    Eigen::MatrixXd readout = Eigen::MatrixXd::Zero(dim, in);
    return AadrnnModel(std::move(layers), std::move(readout), std::make_shared<RateActivation>(act), seed);
}

AadrnnModel AadrnnModel::reservoir(std::size_t dim, std::size_t layers, ActivationParams act, std::uint64_t seed) {
    std::vector<std::size_t> widths(layers, dim);
    return reservoir(dim, widths, act, seed);
}

AadrnnModel AadrnnModel::with_readout(Eigen::MatrixXd readout) const {
    return AadrnnModel(hidden_, std::move(readout), act_, seed_);
}

Eigen::VectorXd AadrnnModel::hidden(std::span<const double> x) const {
    if (x.size() != dim_) {
        throw DimensionError("forward: expected dimension " + std::to_string(dim_) + ", got " + std::to_string(x.size()));
    }
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    if (!h.allFinite()) throw NumericError("forward: non-finite input");
    for (const auto& w : hidden_) {
        Eigen::VectorXd v = w * h;
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = (*act_)(std::max(v[i], 0.0));
        h = std::move(v);
    }
    return h;
}

std::vector<double> AadrnnModel::forward(std::span<const double> x) const {
    const Eigen::VectorXd out = readout_ * hidden(x);
    return {out.data(), out.data() + out.size()};
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ParseError(0, "matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j.front().size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ParseError(0, "matrix rows differ in length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

nlohmann::json model_to_json(const AadrnnModel& model) {
    auto hidden = nlohmann::json::array();
    for (const auto& w : model.hidden_weights()) hidden.push_back(matrix_to_json(w));
    return {{"M", model.dim()},
            {"L", model.depth()},
            {"act", model.act().to_json()},
            {"seed", model.seed()},
            {"hidden_weights", std::move(hidden)},
            {"readout", matrix_to_json(model.readout())}};
}

AadrnnModel model_from_json(const nlohmann::json& j) {
    std::vector<Eigen::MatrixXd> hidden;
    for (const auto& w : j.at("hidden_weights")) hidden.push_back(matrix_from_json(w));
    AadrnnModel model(std::move(hidden), matrix_from_json(j.at("readout")), activation_from_json(j.at("act")),
                      j.value("seed", std::uint64_t{0}));
    if (j.contains("M") && j.at("M").get<std::size_t>() != model.dim()) throw DimensionError("model: M mismatch");
    if (j.contains("L") && j.at("L").get<std::size_t>() != model.depth()) throw DimensionError("model: L mismatch");
    return model;
}

} // namespace iotac
