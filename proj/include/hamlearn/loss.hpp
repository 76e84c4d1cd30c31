#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hamlearn/network.hpp"

namespace hamlearn::nn {

/// Training rows stored one sample per column:
///   inputs    (param_channels + 2 dof) x n, ordered [params, q, p]
///   target_dq dof x n, observed dq/dt
///   target_dp dof x n, observed dp/dt
struct SampleBatch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd target_dq;
  Eigen::MatrixXd target_dp;
  std::size_t param_channels = 0;

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t dof() const { return static_cast<std::size_t>(target_dq.rows()); }
  bool empty() const { return inputs.cols() == 0; }

  void validate() const;
  SampleBatch select(std::span<const Eigen::Index> columns) const;
  static SampleBatch concatenate(const std::vector<SampleBatch>& parts);
};

/// Mean over samples of |dH/dq + dp_obs|^2 + |dH/dp - dq_obs|^2.
double loss(const HnnModel& model, const SampleBatch& batch);

struct LossGradient {
  double loss = 0.0;
  LayerStack gradient;  ///< same shapes as the model's layers
};

/// Exact gradient of loss() with respect to every weight and bias, obtained
/// by differentiating the input-gradient pass a second time.
LossGradient loss_gradient(const HnnModel& model, const SampleBatch& batch);

}  // namespace hamlearn::nn
