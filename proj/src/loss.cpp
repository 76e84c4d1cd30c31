#include "hamlearn/loss.hpp"

#include <algorithm>

namespace hamlearn::nn {

namespace {

// Large batches are processed in column blocks to bound memory.
constexpr Eigen::Index kChunk = 4096;

void check_batch(const HnnModel& model, const SampleBatch& batch, const char* what) {
  if (batch.empty()) throw ContractError(std::string(what) + ": empty batch");
  batch.validate();
  require(static_cast<std::size_t>(batch.inputs.rows()) == model.input_width() &&
              batch.param_channels == model.param_channels(),
          std::string(what) + ": batch layout does not match the model");
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> act;    // act[0] = input, act[l] = tanh(z_l)
  std::vector<Eigen::MatrixXd> slope;  // slope[l] = 1 - act[l]^2 (l >= 1)
  std::vector<Eigen::MatrixXd> grad;   // grad[l] = dH/d act[l]
};

ForwardCache run_gradient_pass(const LayerStack& layers, const Eigen::MatrixXd& inputs) {
  const std::size_t hidden = layers.size() - 1;
  ForwardCache c;
  c.act.resize(hidden + 1);
  c.slope.resize(hidden + 1);
  c.grad.resize(hidden + 1);
  c.act[0] = inputs;
  for (std::size_t l = 1; l <= hidden; ++l) {
    c.act[l] = ((layers[l - 1].weight * c.act[l - 1]).colwise() + layers[l - 1].bias)
                   .array()
                   .tanh()
                   .matrix();
    c.slope[l] = (1.0 - c.act[l].array().square()).matrix();
  }
  c.grad[hidden] = layers.back().weight.row(0).transpose().replicate(1, inputs.cols());
  for (std::size_t l = hidden; l >= 1; --l) {
    const Eigen::MatrixXd delta = (c.grad[l].array() * c.slope[l].array()).matrix();
    c.grad[l - 1].noalias() = layers[l - 1].weight.transpose() * delta;
  }
  return c;
}

// Residuals in input layout (parameter rows are zero).
Eigen::MatrixXd residuals(const Eigen::MatrixXd& input_grad, const SampleBatch& batch,
                          Eigen::Index first, Eigen::Index count) {
  const auto k = static_cast<Eigen::Index>(batch.param_channels);
  const auto dof = static_cast<Eigen::Index>(batch.dof());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(input_grad.rows(), count);
  r.middleRows(k, dof) =
      input_grad.middleRows(k, dof) + batch.target_dp.middleCols(first, count);
  r.middleRows(k + dof, dof) =
      input_grad.middleRows(k + dof, dof) - batch.target_dq.middleCols(first, count);
  return r;
}

}  // namespace

void SampleBatch::validate() const {
  const Eigen::Index n = inputs.cols();
  require(target_dq.cols() == n && target_dp.cols() == n,
          "SampleBatch: row counts differ between inputs and targets");
  require(target_dq.rows() == target_dp.rows(), "SampleBatch: dq and dp widths differ");
  require(static_cast<std::size_t>(inputs.rows()) == param_channels + 2 * dof(),
          "SampleBatch: input width must equal param_channels + 2 dof");
}

SampleBatch SampleBatch::select(std::span<const Eigen::Index> columns) const {
  const std::vector<Eigen::Index> idx(columns.begin(), columns.end());
  return {inputs(Eigen::all, idx), target_dq(Eigen::all, idx), target_dp(Eigen::all, idx),
          param_channels};
}

SampleBatch SampleBatch::concatenate(const std::vector<SampleBatch>& parts) {
  require(!parts.empty(), "SampleBatch::concatenate: nothing to concatenate");
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    p.validate();
    require(p.inputs.rows() == parts.front().inputs.rows() &&
                p.param_channels == parts.front().param_channels,
            "SampleBatch::concatenate: layouts differ");
    total += p.inputs.cols();
  }
  SampleBatch out{Eigen::MatrixXd(parts.front().inputs.rows(), total),
                  Eigen::MatrixXd(parts.front().target_dq.rows(), total),
                  Eigen::MatrixXd(parts.front().target_dp.rows(), total),
                  parts.front().param_channels};
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    const Eigen::Index n = p.inputs.cols();
    out.inputs.middleCols(at, n) = p.inputs;
    out.target_dq.middleCols(at, n) = p.target_dq;
    out.target_dp.middleCols(at, n) = p.target_dp;
    at += n;
  }
  return out;
}

double loss(const HnnModel& model, const SampleBatch& batch) {
  check_batch(model, batch, "loss");
  const Eigen::Index n = batch.inputs.cols();
  double sum = 0.0;
  for (Eigen::Index first = 0; first < n; first += kChunk) {
    const Eigen::Index count = std::min(kChunk, n - first);
    const Eigen::MatrixXd g = model.input_gradient_batch(batch.inputs.middleCols(first, count));
    sum += residuals(g, batch, first, count).squaredNorm();
  }
  return sum / static_cast<double>(n);
}

LossGradient loss_gradient(const HnnModel& model, const SampleBatch& batch) {
  check_batch(model, batch, "loss_gradient");
  const LayerStack& layers = model.layers();
  const std::size_t hidden = layers.size() - 1;
  const Eigen::Index n = batch.inputs.cols();
  const double scale = 1.0 / static_cast<double>(n);

  LossGradient out;
  for (const DenseLayer& layer : layers) {
    out.gradient.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                            Eigen::VectorXd::Zero(layer.bias.size())});
  }

  for (Eigen::Index first = 0; first < n; first += kChunk) {
    const Eigen::Index count = std::min(kChunk, n - first);
    const ForwardCache c = run_gradient_pass(layers, batch.inputs.middleCols(first, count));
    const Eigen::MatrixXd r = residuals(c.grad[0], batch, first, count);
    out.loss += r.squaredNorm() * scale;

    // Adjoint of the input-gradient pass, walking it in reverse (input side
    // first). adj_grad[l] is dLoss/d grad[l]; adj_act[l] collects
    // dLoss/d act[l] through the tanh slopes.
    std::vector<Eigen::MatrixXd> adj_act(hidden + 1);
    Eigen::MatrixXd adj_grad = 2.0 * scale * r;
    for (std::size_t l = 1; l <= hidden; ++l) {
      const Eigen::MatrixXd delta = (c.grad[l].array() * c.slope[l].array()).matrix();
      const Eigen::MatrixXd adj_delta = layers[l - 1].weight * adj_grad;
      out.gradient[l - 1].weight.noalias() += delta * adj_grad.transpose();
      adj_grad = (adj_delta.array() * c.slope[l].array()).matrix();
      adj_act[l] = (-2.0 * c.act[l].array() * adj_delta.array() * c.grad[l].array()).matrix();
    }
    out.gradient.back().weight.row(0) += adj_grad.rowwise().sum().transpose();

    // Adjoint of the forward pass, output side first.
    for (std::size_t l = hidden; l >= 1; --l) {
      const Eigen::MatrixXd adj_z = (adj_act[l].array() * c.slope[l].array()).matrix();
      out.gradient[l - 1].weight.noalias() += adj_z * c.act[l - 1].transpose();
      out.gradient[l - 1].bias += adj_z.rowwise().sum();
      if (l > 1) adj_act[l - 1].noalias() += layers[l - 1].weight.transpose() * adj_z;
    }
  }
  return out;
}

}  // namespace hamlearn::nn
