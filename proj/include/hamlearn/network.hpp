#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hamlearn/systems.hpp"

namespace hamlearn::nn {

/// One affine map y = W x + b. Hidden layers apply tanh afterwards; the
/// final layer is linear with a single output.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  bool operator==(const DenseLayer& other) const {
    return weight == other.weight && bias == other.bias;
  }
};

using LayerStack = std::vector<DenseLayer>;

inline constexpr int kHiddenWidth = 200;
inline constexpr int kHiddenLayers = 2;

/// [param_channels + phase_dim, 200, 200, 1].
std::vector<int> default_layer_dims(std::size_t param_channels, std::size_t phase_dim,
                                    int hidden_layers = kHiddenLayers,
                                    int hidden_width = kHiddenWidth);

/// Scalar-output Hamiltonian network. Inputs are ordered
/// [bifurcation parameters..., q..., p...].
class HnnModel {
 public:
  HnnModel() = default;
  /// All weights and biases zero.
  HnnModel(std::vector<int> layer_dims, std::size_t param_channels);
  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static HnnModel initialized(std::vector<int> layer_dims, std::size_t param_channels,
                              std::uint64_t seed);

  const std::vector<int>& layer_dims() const { return dims_; }
  std::size_t param_channels() const { return param_channels_; }
  std::size_t input_width() const { return static_cast<std::size_t>(dims_.front()); }
  std::size_t phase_dim() const { return input_width() - param_channels_; }
  std::size_t dof() const { return phase_dim() / 2; }
  std::size_t parameter_count() const;

  LayerStack& layers() { return layers_; }
  const LayerStack& layers() const { return layers_; }

  double forward(std::span<const double> input) const;
  /// Reverse-mode gradient of forward() with respect to every input entry.
  Eigen::VectorXd input_gradient(std::span<const double> input) const;

  /// Column-per-sample versions.
  Eigen::RowVectorXd forward_batch(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd input_gradient_batch(const Eigen::MatrixXd& inputs) const;

  /// Throws ContractError if any weight or bias is non-finite.
  void check_finite() const;

  /// Parameter sets the model was trained on; carried through serialization.
  std::vector<std::vector<double>> training_params;

  bool operator==(const HnnModel& other) const {
    return dims_ == other.dims_ && param_channels_ == other.param_channels_ &&
           layers_ == other.layers_ && training_params == other.training_params;
  }

 private:
  void check_input(std::size_t width) const;

  std::vector<int> dims_;
  std::size_t param_channels_ = 0;
  LayerStack layers_;
};

/// Members share layer_dims; predictions average the members' derivatives.
struct HnnEnsemble {
  std::vector<HnnModel> members;

  void validate() const;
  std::size_t input_width() const { return members.front().input_width(); }
  std::size_t param_channels() const { return members.front().param_channels(); }
  std::size_t dof() const { return members.front().dof(); }

  /// Mean of the members' H; its gradient is the averaged derivative field.
  double forward(std::span<const double> input) const;
  Eigen::VectorXd input_gradient(std::span<const double> input) const;
  Eigen::RowVectorXd forward_batch(const Eigen::MatrixXd& inputs) const;
};

/// [params..., q..., p...].
std::vector<double> assemble_input(std::span<const double> params, const PhaseState& s);

/// dq/dt = dH/dp, dp/dt = -dH/dq from the network's input gradient.
Velocity learned_rhs(const HnnModel& model, std::span<const double> params, const PhaseState& s);
Velocity learned_rhs(const HnnEnsemble& ensemble, std::span<const double> params,
                     const PhaseState& s);

/// Flat vector field of a learned Hamiltonian at fixed parameters. The
/// returned callable references `ensemble`, which must outlive it.
VectorField learned_field(const HnnEnsemble& ensemble, std::vector<double> params);

/// Scalar Hamiltonian evaluated on a column-per-sample block of
/// [params, q, p] inputs; returns one value per column.
using HamiltonianFn = std::function<Eigen::RowVectorXd(const Eigen::MatrixXd&)>;

HamiltonianFn hamiltonian_of(const HnnModel& model);
HamiltonianFn hamiltonian_of(const HnnEnsemble& ensemble);
/// The closed-form H of a system family, reading parameters from the input.
HamiltonianFn analytic_hamiltonian(SystemKind kind);

}  // namespace hamlearn::nn
