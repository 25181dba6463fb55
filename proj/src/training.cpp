#include "iotac/training.hpp"

#include <cmath>
#include <random>

#include "iotac/errors.hpp"

namespace iotac {

void TrainConfig::validate(std::size_t dim) const {
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("train.noise_sigma must be >= 0");
    if (!(ridge_lambda > 0.0) || !std::isfinite(ridge_lambda)) throw ConfigError("train.ridge_lambda must be > 0");
    if (window_len < dim) {
        throw ConfigError("train.window_len must be at least the metric dimension (" + std::to_string(dim) + ")");
    }
    if (!(window_seconds >= 0.0)) throw ConfigError("train.window_seconds must be >= 0");
}

SufficientStats SufficientStats::empty(std::size_t hidden_dim, std::size_t dim) {
    return {Eigen::MatrixXd::Zero(hidden_dim, hidden_dim), Eigen::MatrixXd::Zero(hidden_dim, dim), 0};
}

std::vector<double> corrupt(std::span<const double> x, double sigma, std::uint64_t seed, std::uint64_t draw_index) {
    std::vector<double> out(x.begin(), x.end());
    if (sigma == 0.0) return out;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(draw_index), static_cast<std::uint32_t>(draw_index >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : out) v = std::max(0.0, v + noise(rng));
    return out;
}

void accumulate(SufficientStats& stats, const AadrnnModel& shape, std::span<const std::vector<double>> rows,
                const TrainConfig& cfg) {
    const auto hd = static_cast<Eigen::Index>(shape.hidden_dim());
    const auto dim = static_cast<Eigen::Index>(shape.dim());
    if (stats.gram.rows() != hd || stats.cross.cols() != dim) {
        throw DimensionError("training statistics do not match the model shape");
    }
    for (const auto& row : rows) {
        if (row.size() != shape.dim()) throw DimensionError("training row has wrong dimension");
        const auto noisy = corrupt(row, cfg.noise_sigma, cfg.seed, stats.count);
        const Eigen::VectorXd h = shape.hidden(noisy);
        const Eigen::Map<const Eigen::VectorXd> x(row.data(), dim);
        stats.gram.noalias() += h * h.transpose();
        stats.cross.noalias() += h * x.transpose();
        ++stats.count;
    }
}

Eigen::MatrixXd solve_readout(const SufficientStats& stats, double ridge_lambda) {
    if (!(ridge_lambda > 0.0)) throw ConfigError("ridge_lambda must be > 0");
    Eigen::MatrixXd a = stats.gram;
    a.diagonal().array() += ridge_lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericError("readout system is not positive definite");
    Eigen::MatrixXd w = llt.solve(stats.cross);
    if (!w.allFinite()) throw NumericError("readout solution is not finite");
    return w.transpose();
}

AadrnnModel fit_batch(const AadrnnModel& shape, std::span<const std::vector<double>> rows, const TrainConfig& cfg) {
    if (rows.empty()) throw DataError("fit_batch: no training rows");
    auto stats = SufficientStats::empty(shape.hidden_dim(), shape.dim());
    accumulate(stats, shape, rows, cfg);
    return shape.with_readout(solve_readout(stats, cfg.ridge_lambda));
}

std::pair<SufficientStats, std::shared_ptr<const AadrnnModel>> update_incremental(
    SufficientStats stats, const AadrnnModel& shape, std::span<const std::vector<double>> window,
    const TrainConfig& cfg) {
    if (window.empty()) throw DataError("update_incremental: empty window");
    accumulate(stats, shape, window, cfg);
    auto model = std::make_shared<const AadrnnModel>(shape.with_readout(solve_readout(stats, cfg.ridge_lambda)));
    return {std::move(stats), std::move(model)};
}

} // namespace iotac
