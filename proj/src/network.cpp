#include "hamlearn/network.hpp"

#include <cmath>
#include <random>

namespace hamlearn::nn {

std::vector<int> default_layer_dims(std::size_t param_channels, std::size_t phase_dim,
                                    int hidden_layers, int hidden_width) {
  std::vector<int> dims{static_cast<int>(param_channels + phase_dim)};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
  dims.push_back(1);
  return dims;
}

HnnModel::HnnModel(std::vector<int> layer_dims, std::size_t param_channels)
    : dims_(std::move(layer_dims)), param_channels_(param_channels) {
  require(dims_.size() >= 2, "HnnModel: need at least input and output widths");
  require(dims_.back() == 1, "HnnModel: output width must be 1");
  for (int d : dims_) require(d >= 1, "HnnModel: layer widths must be positive");
  require(static_cast<std::size_t>(dims_.front()) > param_channels_,
          "HnnModel: input width must exceed the parameter channel count");
  require((static_cast<std::size_t>(dims_.front()) - param_channels_) % 2 == 0,
          "HnnModel: phase-space part of the input must have even width");
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    layers_.push_back({Eigen::MatrixXd::Zero(dims_[i + 1], dims_[i]),
                       Eigen::VectorXd::Zero(dims_[i + 1])});
  }
}

HnnModel HnnModel::initialized(std::vector<int> layer_dims, std::size_t param_channels,
                               std::uint64_t seed) {
  HnnModel model(std::move(layer_dims), param_channels);
  std::mt19937_64 rng(seed);
  for (DenseLayer& layer : model.layers_) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill so the draw order matches the serialized layout.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
  }
  return model;
}

std::size_t HnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

void HnnModel::check_input(std::size_t width) const {
  if (width != input_width()) {
    throw ContractError("HnnModel: input width " + std::to_string(width) + " does not match " +
                        std::to_string(input_width()));
  }
}

void HnnModel::check_finite() const {
  for (const DenseLayer& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw ContractError("HnnModel: non-finite weight or bias");
    }
  }
}

double HnnModel::forward(std::span<const double> input) const {
  check_input(input.size());
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    y = (layers_[l].weight * y + layers_[l].bias).array().tanh().matrix();
  }
  return (layers_.back().weight * y + layers_.back().bias)(0);
}

Eigen::VectorXd HnnModel::input_gradient(std::span<const double> input) const {
  check_input(input.size());
  const std::size_t hidden = layers_.size() - 1;
  std::vector<Eigen::VectorXd> act(hidden);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  for (std::size_t l = 0; l < hidden; ++l) {
    act[l] = (layers_[l].weight * y + layers_[l].bias).array().tanh().matrix();
    y = act[l];
  }
  Eigen::VectorXd g = layers_.back().weight.row(0).transpose();
  for (std::size_t l = hidden; l-- > 0;) {
    const Eigen::VectorXd delta = (g.array() * (1.0 - act[l].array().square())).matrix();
    g = layers_[l].weight.transpose() * delta;
  }
  return g;
}

Eigen::RowVectorXd HnnModel::forward_batch(const Eigen::MatrixXd& inputs) const {
  check_input(static_cast<std::size_t>(inputs.rows()));
  Eigen::MatrixXd y = inputs;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    y = ((layers_[l].weight * y).colwise() + layers_[l].bias).array().tanh().matrix();
  }
  Eigen::RowVectorXd out = layers_.back().weight * y;
  out.array() += layers_.back().bias(0);
  return out;
}

Eigen::MatrixXd HnnModel::input_gradient_batch(const Eigen::MatrixXd& inputs) const {
  check_input(static_cast<std::size_t>(inputs.rows()));
  const std::size_t hidden = layers_.size() - 1;
  std::vector<Eigen::MatrixXd> act(hidden);
  const Eigen::MatrixXd* y = &inputs;
  for (std::size_t l = 0; l < hidden; ++l) {
    act[l] = ((layers_[l].weight * *y).colwise() + layers_[l].bias).array().tanh().matrix();
    y = &act[l];
  }
  Eigen::MatrixXd g = layers_.back().weight.row(0).transpose().replicate(1, inputs.cols());
  for (std::size_t l = hidden; l-- > 0;) {
    const Eigen::MatrixXd delta = (g.array() * (1.0 - act[l].array().square())).matrix();
    g.noalias() = layers_[l].weight.transpose() * delta;
  }
  return g;
}

void HnnEnsemble::validate() const {
  require(!members.empty(), "HnnEnsemble: needs at least one member");
  for (const HnnModel& m : members) {
    require(m.layer_dims() == members.front().layer_dims() &&
                m.param_channels() == members.front().param_channels(),
            "HnnEnsemble: members must share layer dimensions");
  }
}

double HnnEnsemble::forward(std::span<const double> input) const {
  double sum = 0.0;
  for (const HnnModel& m : members) sum += m.forward(input);
  return sum / static_cast<double>(members.size());
}

Eigen::RowVectorXd HnnEnsemble::forward_batch(const Eigen::MatrixXd& inputs) const {
  Eigen::RowVectorXd sum = members.front().forward_batch(inputs);
  for (std::size_t i = 1; i < members.size(); ++i) sum += members[i].forward_batch(inputs);
  return sum / static_cast<double>(members.size());
}

Eigen::VectorXd HnnEnsemble::input_gradient(std::span<const double> input) const {
  Eigen::VectorXd sum = members.front().input_gradient(input);
  for (std::size_t i = 1; i < members.size(); ++i) sum += members[i].input_gradient(input);
  return sum / static_cast<double>(members.size());
}

std::vector<double> assemble_input(std::span<const double> params, const PhaseState& s) {
  std::vector<double> input(params.begin(), params.end());
  input.insert(input.end(), s.flat().begin(), s.flat().end());
  return input;
}

namespace {

Velocity velocity_from_gradient(const Eigen::VectorXd& grad, std::size_t param_channels,
                                std::size_t dof) {
  std::vector<double> dq(dof), dp(dof);
  for (std::size_t i = 0; i < dof; ++i) {
    dq[i] = grad(static_cast<Eigen::Index>(param_channels + dof + i));
    dp[i] = -grad(static_cast<Eigen::Index>(param_channels + i));
  }
  return Velocity(std::move(dq), std::move(dp));
}

}  // namespace

Velocity learned_rhs(const HnnModel& model, std::span<const double> params, const PhaseState& s) {
  require(params.size() == model.param_channels(), "learned_rhs: parameter width mismatch");
  return velocity_from_gradient(model.input_gradient(assemble_input(params, s)),
                                model.param_channels(), model.dof());
}

Velocity learned_rhs(const HnnEnsemble& ensemble, std::span<const double> params,
                     const PhaseState& s) {
  ensemble.validate();
  require(params.size() == ensemble.param_channels(), "learned_rhs: parameter width mismatch");
  return velocity_from_gradient(ensemble.input_gradient(assemble_input(params, s)),
                                ensemble.param_channels(), ensemble.dof());
}

VectorField learned_field(const HnnEnsemble& ensemble, std::vector<double> params) {
  ensemble.validate();
  require(params.size() == ensemble.param_channels(), "learned_field: parameter width mismatch");
  const std::size_t k = params.size();
  const std::size_t dof = ensemble.dof();
  return [&ensemble, params = std::move(params), k, dof](std::span<const double> x,
                                                         std::span<double> dx) {
    std::vector<double> input(params);
    input.insert(input.end(), x.begin(), x.end());
    const Eigen::VectorXd g = ensemble.input_gradient(input);
    for (std::size_t i = 0; i < dof; ++i) {
      dx[i] = g(static_cast<Eigen::Index>(k + dof + i));
      dx[dof + i] = -g(static_cast<Eigen::Index>(k + i));
    }
  };
}

HamiltonianFn hamiltonian_of(const HnnModel& model) {
  return [&model](const Eigen::MatrixXd& inputs) { return model.forward_batch(inputs); };
}

HamiltonianFn hamiltonian_of(const HnnEnsemble& ensemble) {
  ensemble.validate();
  return [&ensemble](const Eigen::MatrixXd& inputs) { return ensemble.forward_batch(inputs); };
}

HamiltonianFn analytic_hamiltonian(SystemKind kind) {
  return [kind](const Eigen::MatrixXd& inputs) {
    const auto k = static_cast<Eigen::Index>(param_count(kind));
    const auto width = static_cast<Eigen::Index>(k + 2 * degrees_of_freedom(kind));
    require(inputs.rows() == width, "analytic_hamiltonian: input width mismatch");
    Eigen::RowVectorXd out(inputs.cols());
    SystemSpec spec{kind, std::vector<double>(static_cast<std::size_t>(k))};
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
      for (Eigen::Index j = 0; j < k; ++j) spec.params[static_cast<std::size_t>(j)] = inputs(j, c);
      const auto col = inputs.col(c);
      out(c) = total_energy(spec, PhaseState::from_flat(std::span<const double>(
                                      col.data() + k, static_cast<std::size_t>(width - k))));
    }
    return out;
  };
}

}  // namespace hamlearn::nn
