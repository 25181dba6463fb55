#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iotac/aadrnn.hpp"

namespace iotac {

/// Window length meaning "never complete a window" (offline behaviour).
inline constexpr std::size_t kNoWindow = std::numeric_limits<std::size_t>::max();

struct TrainConfig {
    double noise_sigma = 0.1;
    double ridge_lambda = 1e-4;
    std::size_t window_len = 500;   ///< accepted-benign rows per incremental update
    double window_seconds = 0.0;    ///< when > 0, windows close on elapsed time instead
    std::uint64_t seed = 1;

    void validate(std::size_t dim) const;
};

/// Additive normal-equation terms of the readout regression.
struct SufficientStats {
    Eigen::MatrixXd gram;   ///< sum of h h^T, hidden_dim x hidden_dim
    Eigen::MatrixXd cross;  ///< sum of h x^T, hidden_dim x M
    std::uint64_t count = 0;

    static SufficientStats empty(std::size_t hidden_dim, std::size_t dim);
};

/// x_i + e_i clipped at zero, e_i ~ Normal(0, sigma^2). The draw is a pure function of
/// (seed, draw_index), so the same row always receives the same noise.
std::vector<double> corrupt(std::span<const double> x, double sigma, std::uint64_t seed, std::uint64_t draw_index);

/// Adds each row (inputs corrupted, targets clean) to `stats`. Row k of the call gets noise
/// draw `stats.count + k`.
void accumulate(SufficientStats& stats, const AadrnnModel& shape, std::span<const std::vector<double>> rows,
                const TrainConfig& cfg);

/// Ridge solution W_out = ((G + lambda I)^-1 C)^T.
Eigen::MatrixXd solve_readout(const SufficientStats& stats, double ridge_lambda);

/// One-shot training on benign rows.
AadrnnModel fit_batch(const AadrnnModel& shape, std::span<const std::vector<double>> rows, const TrainConfig& cfg);

/// Folds one finished window into the statistics and publishes the refitted snapshot.
std::pair<SufficientStats, std::shared_ptr<const AadrnnModel>> update_incremental(
    SufficientStats stats, const AadrnnModel& shape, std::span<const std::vector<double>> window,
    const TrainConfig& cfg);

} // namespace iotac
