#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace iotac {

struct ActivationParams {
    double r = 1.0;  ///< neuron rate parameter
    double c = 1.0;  ///< saturation coefficient
};

/// Elementwise hidden-layer nonlinearity. Implementations map [0, inf) into [0, 1),
/// are monotone and vanish at zero.
class Activation {
public:
    virtual ~Activation() = default;
    virtual double operator()(double v) const = 0;
    virtual nlohmann::json to_json() const = 0;
};

/// v / (r + c v): steady-state excitation of a spiking neuron driven by excitatory input v.
/// Requires r > 0 and c >= 1.
class RateActivation final : public Activation {
public:
    explicit RateActivation(ActivationParams p = {});
    double operator()(double v) const override { return v / (p_.r + p_.c * v); }
    nlohmann::json to_json() const override;
    const ActivationParams& params() const noexcept { return p_; }

private:
    ActivationParams p_;
};

/// Negative inputs are clipped to 0 before applying.
double activation(double v, const ActivationParams& p);

std::shared_ptr<const Activation> activation_from_json(const nlohmann::json& j);

/// Auto-associative network snapshot: fixed nonnegative hidden layers followed by a
/// linear readout back to the input dimension. Immutable; training publishes new snapshots.
class AadrnnModel {
public:
    AadrnnModel(std::vector<Eigen::MatrixXd> hidden, Eigen::MatrixXd readout,
                std::shared_ptr<const Activation> act, std::uint64_t seed = 0);

    /// Random hidden weights drawn i.i.d. Uniform(0, 1/d_in) per layer, readout zero.
    static AadrnnModel reservoir(std::size_t dim, std::span<const std::size_t> widths, ActivationParams act,
                                 std::uint64_t seed);
    /// `layers` hidden layers of width `dim`.
    static AadrnnModel reservoir(std::size_t dim, std::size_t layers, ActivationParams act, std::uint64_t seed);

    /// Same hidden layers with a new readout.
    AadrnnModel with_readout(Eigen::MatrixXd readout) const;

    /// Activations of the last hidden layer.
    Eigen::VectorXd hidden(std::span<const double> x) const;
    /// Expected (reconstructed) metric vector.
    std::vector<double> forward(std::span<const double> x) const;
    Eigen::VectorXd readout_of(const Eigen::VectorXd& h) const { return readout_ * h; }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t depth() const noexcept { return hidden_.size(); }
    std::size_t hidden_dim() const noexcept { return hidden_.empty() ? dim_ : hidden_.back().rows(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<Eigen::MatrixXd>& hidden_weights() const noexcept { return hidden_; }
    const Eigen::MatrixXd& readout() const noexcept { return readout_; }
    const Activation& act() const noexcept { return *act_; }
    std::shared_ptr<const Activation> act_ptr() const noexcept { return act_; }

private:
    std::vector<Eigen::MatrixXd> hidden_;
    Eigen::MatrixXd readout_;
    std::shared_ptr<const Activation> act_;
    std::uint64_t seed_;
    std::size_t dim_;
};

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

/// {M, L, act, seed, hidden_weights, readout}
nlohmann::json model_to_json(const AadrnnModel& model);
AadrnnModel model_from_json(const nlohmann::json& j);

} // namespace iotac
