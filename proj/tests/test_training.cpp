#include <doctest.h>

#include <random>

#include "iotac/errors.hpp"
#include "iotac/training.hpp"
#include "oracles.hpp"

using namespace iotac;

namespace {

std::vector<std::vector<double>> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::uniform_real_distribution<double> u(0.0, 1.2);
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    for (auto& r : rows) {
        for (auto& v : r) v = u(rng);
    }
    return rows;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("corrupt: sigma 0 is the identity, output is nonnegative and reproducible") {
    const std::vector<double> x{0.3, 0.0, 1.5};
    CHECK(corrupt(x, 0.0, 1, 7) == x);
    for (std::uint64_t i = 0; i < 200; ++i) {
        for (double v : corrupt(std::vector<double>{0, 0, 0}, 0.5, 3, i)) CHECK(v >= 0.0);
    }
    CHECK(corrupt(x, 0.1, 9, 4) == corrupt(x, 0.1, 9, 4));
    CHECK(corrupt(x, 0.1, 9, 4) != corrupt(x, 0.1, 9, 5));
    CHECK(corrupt(x, 0.1, 9, 4) != corrupt(x, 0.1, 10, 4));
}

TEST_CASE("corrupt: Monte-Carlo mean of the noise at x = 1 is near zero") {
    const std::vector<double> x{1.0, 1.0, 1.0};
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto y = corrupt(x, 0.1, 42, static_cast<std::uint64_t>(i));
        for (int k = 0; k < 3; ++k) {
            sum[k] += y[k] - 1.0;
            sq[k] += (y[k] - 1.0) * (y[k] - 1.0);
        }
    }
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(sum[k] / n) <= 0.01);
        CHECK(std::sqrt(sq[k] / n) == doctest::Approx(0.1).epsilon(0.02));
    }
}

TEST_CASE("fit_batch matches the stacked-QR ridge oracle") {
    std::mt19937_64 rng(10);
    const auto rows = random_rows(rng, 300, 3);
    TrainConfig cfg;
    const auto shape = AadrnnModel::reservoir(3, 3, {}, 4);
    const auto m = fit_batch(shape, rows, cfg);
    const auto want = oracle::ridge_readout(shape, rows, cfg.noise_sigma, cfg.seed, cfg.ridge_lambda);
    CHECK(max_abs_diff(m.readout(), want) <= 1e-6 * std::max(1.0, want.cwiseAbs().maxCoeff()));
}

TEST_CASE("n = M rows with tiny ridge nearly interpolates") {
    std::mt19937_64 rng(13);
    const auto rows = random_rows(rng, 3, 3);
    TrainConfig cfg;
    cfg.noise_sigma = 0.0;
    cfg.ridge_lambda = 1e-12;
    const auto shape = AadrnnModel::reservoir(3, 1, {}, 8);
    const auto m = fit_batch(shape, rows, cfg);
    const auto direct = oracle::ridge_readout(shape, rows, 0.0, cfg.seed, cfg.ridge_lambda);
    CHECK(max_abs_diff(m.readout(), direct) <= 1e-4 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
    for (const auto& r : rows) {
        const auto y = m.forward(r);
        for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(r[i]).epsilon(1e-3));
    }
}

TEST_CASE("fit_batch rejects empty input; solve rejects non-positive lambda") {
    const auto shape = AadrnnModel::reservoir(3, 3, {}, 1);
    CHECK_THROWS_AS(fit_batch(shape, std::vector<std::vector<double>>{}, TrainConfig{}), DataError);
    CHECK_THROWS_AS(solve_readout(SufficientStats::empty(3, 3), 0.0), ConfigError);
    auto bad = SufficientStats::empty(3, 3);
    bad.gram(0, 0) = -10.0;
    CHECK_THROWS_AS(solve_readout(bad, 1e-4), NumericError);
}

TEST_CASE("config validation") {
    TrainConfig c;
    c.window_len = 2;
    CHECK_THROWS_AS(c.validate(3), ConfigError);
    c.window_len = 3;
    CHECK_NOTHROW(c.validate(3));
    c.ridge_lambda = 0.0;
    CHECK_THROWS_AS(c.validate(3), ConfigError);
}

TEST_CASE("two windows incrementally equal one batch") {
    std::mt19937_64 rng(20);
    const auto rows = random_rows(rng, 900, 3);
    const auto shape = AadrnnModel::reservoir(3, 3, {}, 6);
    TrainConfig cfg;
    const std::vector<std::vector<double>> w1(rows.begin(), rows.begin() + 400), w2(rows.begin() + 400, rows.end());
    auto [s1, m1] = update_incremental(SufficientStats::empty(3, 3), shape, w1, cfg);
    CHECK(m1->readout() == fit_batch(shape, w1, cfg).readout());
    auto [s2, m2] = update_incremental(std::move(s1), shape, w2, cfg);
    CHECK(s2.count == rows.size());
    CHECK(max_abs_diff(m2->readout(), fit_batch(shape, rows, cfg).readout()) <= 1e-9);
}

TEST_CASE("all-zero window contributes nothing to C") {
    const auto shape = AadrnnModel::reservoir(3, 3, {}, 6);
    TrainConfig cfg;
    cfg.noise_sigma = 0.0;
    const std::vector<std::vector<double>> zeros(10, std::vector<double>(3, 0.0));
    auto [stats, model] = update_incremental(SufficientStats::empty(3, 3), shape, zeros, cfg);
    CHECK(stats.cross.isZero(0.0));
    CHECK(model->forward(std::vector<double>{0, 0, 0}) == std::vector<double>{0, 0, 0});
}

TEST_CASE("permuting rows with their noise leaves the readout unchanged") {
    std::mt19937_64 rng(1);
    const auto rows = random_rows(rng, 100, 3);
    const auto shape = AadrnnModel::reservoir(3, 3, {}, 2);
    TrainConfig cfg;
    cfg.noise_sigma = 0.0;
    auto shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(max_abs_diff(fit_batch(shape, rows, cfg).readout(), fit_batch(shape, shuffled, cfg).readout()) <= 1e-9);
}

TEST_CASE("property: any seeded partition of 2000 rows gives the batch readout, and G stays PSD") {
    std::mt19937_64 rng(55);
    const auto rows = random_rows(rng, 2000, 3);
    const auto shape = AadrnnModel::reservoir(3, 3, {}, 12);
    TrainConfig cfg;
    const auto batch = fit_batch(shape, rows, cfg).readout();
    for (int c = 0; c < 100; ++c) {
        std::uniform_int_distribution<std::size_t> cut(1, 400);
        auto stats = SufficientStats::empty(3, 3);
        std::shared_ptr<const AadrnnModel> model;
        for (std::size_t start = 0; start < rows.size();) {
            const std::size_t end = std::min(rows.size(), start + cut(rng));
            std::vector<std::vector<double>> w(rows.begin() + static_cast<long>(start), rows.begin() + static_cast<long>(end));
            std::tie(stats, model) = update_incremental(std::move(stats), shape, w, cfg);
            REQUIRE((stats.gram - stats.gram.transpose()).cwiseAbs().maxCoeff() == 0.0);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(stats.gram);
            REQUIRE(eig.eigenvalues().minCoeff() >= -1e-10);
            start = end;
        }
        REQUIRE(stats.count == rows.size());
        REQUIRE(max_abs_diff(model->readout(), batch) <= 1e-9);
    }
}
