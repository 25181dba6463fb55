#include <doctest.h>

#include <limits>
#include <random>

#include "iotac/aadrnn.hpp"
#include "iotac/errors.hpp"
#include "iotac/training.hpp"
#include "oracles.hpp"

using namespace iotac;

namespace {

std::shared_ptr<const Activation> rate(double r = 1.0, double c = 1.0) {
    return std::make_shared<RateActivation>(ActivationParams{r, c});
}

} // namespace

TEST_CASE("activation values") {
    const ActivationParams p;
    CHECK(activation(0.0, p) == 0.0);
    CHECK(activation(1.0, p) == 0.5);
    CHECK(activation(1e9, p) < 1.0);
    CHECK(activation(1e9, p) > activation(1e6, p));
    CHECK(activation(-3.0, p) == 0.0);
    CHECK(activation(2.0, {2.0, 3.0}) == doctest::Approx(2.0 / 8.0));
}

TEST_CASE("activation parameters are validated") {
    CHECK_THROWS_AS(RateActivation({0.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(RateActivation({1.0, 0.5}), ConfigError);
    CHECK_NOTHROW(RateActivation({0.2, 1.0}));
}

TEST_CASE("zero input reconstructs to zero") {
    const auto m = AadrnnModel::reservoir(3, 3, {}, 5).with_readout(Eigen::MatrixXd::Random(3, 3));
    CHECK(m.forward(std::vector<double>{0, 0, 0}) == std::vector<double>{0, 0, 0});
}

TEST_CASE("one-layer model by hand") {
    Eigen::MatrixXd w1 = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd out(3, 3);
    out << 1, 2, 3, 0, 1, 0, -1, 0, 1;
    const AadrnnModel m({w1}, out, rate());
    // h = 2 / (1 + 2) = 2/3 in every unit.
    const auto y = m.forward(std::vector<double>{1, 1, 1});
    CHECK(y[0] == doctest::Approx(4.0));
    CHECK(y[1] == doctest::Approx(2.0 / 3.0));
    CHECK(y[2] == doctest::Approx(0.0));
}

TEST_CASE("model construction rejects bad shapes and weights") {
    Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(3, 3);
    neg(0, 1) = -0.1;
    CHECK_THROWS_AS(AadrnnModel({neg}, Eigen::MatrixXd::Zero(3, 3), rate()), NumericError);
    CHECK_THROWS_AS(AadrnnModel({Eigen::MatrixXd::Ones(4, 3), Eigen::MatrixXd::Ones(2, 3)}, Eigen::MatrixXd::Zero(3, 2),
                                rate()),
                    DimensionError);
    CHECK_THROWS_AS(AadrnnModel({Eigen::MatrixXd::Ones(4, 3)}, Eigen::MatrixXd::Zero(3, 3), rate()), DimensionError);
}

TEST_CASE("forward rejects wrong dimension and non-finite input") {
    const auto m = AadrnnModel::reservoir(3, 3, {}, 1);
    CHECK_THROWS_AS(m.forward(std::vector<double>{1, 2}), DimensionError);
    CHECK_THROWS_AS(m.forward(std::vector<double>{1, std::numeric_limits<double>::quiet_NaN(), 0}), NumericError);
    CHECK_THROWS_AS(m.forward(std::vector<double>{1, std::numeric_limits<double>::infinity(), 0}), NumericError);
}

TEST_CASE("reservoir weights are in [0, 1/d_in) and depend only on the seed") {
    const std::vector<std::size_t> widths{5, 4, 6};
    const auto a = AadrnnModel::reservoir(3, widths, {}, 9);
    const auto b = AadrnnModel::reservoir(3, widths, {}, 9);
    std::size_t in = 3;
    for (std::size_t l = 0; l < 3; ++l) {
        const auto& w = a.hidden_weights()[l];
        CHECK(w.rows() == static_cast<Eigen::Index>(widths[l]));
        CHECK(w.cols() == static_cast<Eigen::Index>(in));
        CHECK(w.minCoeff() >= 0.0);
        CHECK(w.maxCoeff() < 1.0 / static_cast<double>(in));
        CHECK(w == b.hidden_weights()[l]);
        in = widths[l];
    }
    CHECK(a.hidden_weights()[0] != AadrnnModel::reservoir(3, widths, {}, 10).hidden_weights()[0]);
    CHECK(a.readout().rows() == 3);
    CHECK(a.readout().cols() == 6);
}

TEST_CASE("training on constant rows reproduces them") {
    const std::vector<double> xs{0.7, 0.2, 0.9};
    const std::vector<std::vector<double>> rows(200, xs);
    TrainConfig cfg;
    cfg.noise_sigma = 0.0;
    cfg.ridge_lambda = 1e-8;
    const auto m = fit_batch(AadrnnModel::reservoir(3, 3, {}, 2), rows, cfg);
    const auto y = m.forward(xs);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(y[i] - xs[i]) <= 1e-4);
}

TEST_CASE("property: forward equals the loop oracle and hidden units stay in [0, 1)") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<std::size_t> dim(1, 8), depth(1, 4);
    std::uniform_real_distribution<double> x(0.0, 50.0), r(0.1, 5.0), c(1.0, 4.0);
    for (int k = 0; k < 100; ++k) {
        const std::size_t m = dim(rng);
        const ActivationParams p{r(rng), c(rng)};
        Eigen::MatrixXd out = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        const auto model = AadrnnModel::reservoir(m, depth(rng), p, rng()).with_readout(out);
        std::vector<double> in(m);
        for (auto& v : in) v = x(rng);
        const auto h = model.hidden(in);
        REQUIRE(h.minCoeff() >= 0.0);
        REQUIRE(h.maxCoeff() < 1.0);
        const auto want = oracle::forward(model, in, p.r, p.c);
        const auto got = model.forward(in);
        for (std::size_t i = 0; i < m; ++i) REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        REQUIRE(model.forward(in) == got);
    }
}

TEST_CASE("property: activation is monotone, bounded and zero at zero") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> v(0.0, 1e6), r(0.01, 10.0), c(1.0, 10.0);
    for (int k = 0; k < 100; ++k) {
        const ActivationParams p{r(rng), c(rng)};
        double a = v(rng), b = v(rng);
        if (a > b) std::swap(a, b);
        REQUIRE(activation(0.0, p) == 0.0);
        REQUIRE(activation(a, p) <= activation(b, p));
        REQUIRE(activation(b, p) < 1.0);
        REQUIRE(activation(a, p) >= 0.0);
    }
}

TEST_CASE("property: first hidden layer moves at most ||W1||_inf delta / r") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> x(0.0, 5.0), d(-0.5, 0.5), r(0.2, 3.0);
    for (int k = 0; k < 100; ++k) {
        const ActivationParams p{r(rng), 1.0};
        const auto full = AadrnnModel::reservoir(4, 3, p, rng());
        const AadrnnModel first({full.hidden_weights()[0]}, Eigen::MatrixXd::Zero(4, 4), full.act_ptr());
        std::vector<double> a(4), b(4);
        double delta = 0.0;
        for (int i = 0; i < 4; ++i) {
            a[i] = x(rng);
            b[i] = std::max(0.0, a[i] + d(rng));
            delta = std::max(delta, std::abs(a[i] - b[i]));
        }
        const double norm_inf = full.hidden_weights()[0].cwiseAbs().rowwise().sum().maxCoeff();
        const Eigen::VectorXd diff = (first.hidden(a) - first.hidden(b)).cwiseAbs();
        REQUIRE(diff.maxCoeff() <= norm_inf * delta / p.r + 1e-15);
    }
}

TEST_CASE("property: model JSON round-trip is bit-exact") {
    std::mt19937_64 rng(6);
    for (int k = 0; k < 100; ++k) {
        const auto shape = AadrnnModel::reservoir(3 + k % 4, 1 + k % 3, {1.0 + k % 5, 1.0}, rng());
        const auto m = shape.with_readout(Eigen::MatrixXd::Random(static_cast<Eigen::Index>(shape.dim()),
                                                                  static_cast<Eigen::Index>(shape.hidden_dim())));
        const auto text = model_to_json(m).dump();
        const auto back = model_from_json(nlohmann::json::parse(text));
        REQUIRE(back.depth() == m.depth());
        for (std::size_t l = 0; l < m.depth(); ++l) REQUIRE(back.hidden_weights()[l] == m.hidden_weights()[l]);
        REQUIRE(back.readout() == m.readout());
        REQUIRE(back.seed() == m.seed());
        REQUIRE(model_to_json(back).dump() == text);
    }
}
