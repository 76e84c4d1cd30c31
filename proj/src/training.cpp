#include "hamlearn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hamlearn::nn {

void TrainConfig::validate() const {
  require(epochs >= 0, "TrainConfig: epochs must be non-negative");
  require(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
  require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "TrainConfig: adam_beta1 must be in [0,1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "TrainConfig: adam_beta2 must be in [0,1)");
  require(adam_eps > 0.0, "TrainConfig: adam_eps must be positive");
  require(hidden_layers >= 0 && hidden_width >= 1, "TrainConfig: bad hidden layer shape");
}

AdamOptimizer::AdamOptimizer(const LayerStack& shape, double learning_rate, double beta1,
                             double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const DenseLayer& layer : shape) {
    DenseLayer zero{Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                    Eigen::VectorXd::Zero(layer.bias.size())};
    m_.push_back(zero);
    v_.push_back(zero);
  }
}

void AdamOptimizer::step(LayerStack& params, const LayerStack& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = (beta2_ * v.array() + (1.0 - beta2_) * grad.array().square()).matrix();
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, grads[l].weight, m_[l].weight, v_[l].weight);
    update(params[l].bias, grads[l].bias, m_[l].bias, v_[l].bias);
  }
}

TrainResult train(const SampleBatch& data, const TrainConfig& cfg, std::uint64_t init_seed,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  require(!data.empty(), "train: empty training data");
  data.validate();

  const auto dims = default_layer_dims(data.param_channels, 2 * data.dof(), cfg.hidden_layers,
                                       cfg.hidden_width);
  TrainResult result{HnnModel::initialized(dims, data.param_channels, init_seed), {}, 0.0};
  HnnModel& model = result.model;

  const double initial = loss(model, data);
  if (!std::isfinite(initial)) throw NumericalError("train: initial loss is not finite");
  result.loss_history.push_back(initial);

  AdamOptimizer adam(model.layers(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                     cfg.adam_eps);
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(data.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t first = 0; first < order.size(); first += batch) {
      const std::size_t count = std::min(batch, order.size() - first);
      const SampleBatch mini =
          data.select(std::span<const Eigen::Index>(order.data() + first, count));
      const LossGradient lg = loss_gradient(model, mini);
      if (!std::isfinite(lg.loss)) {
        throw NumericalError("train: loss became non-finite in epoch " + std::to_string(epoch));
      }
      weighted += lg.loss * static_cast<double>(count);
      adam.step(model.layers(), lg.gradient);
    }
    const double epoch_loss = weighted / static_cast<double>(order.size());
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  model.check_finite();
  result.final_loss = cfg.epochs == 0 ? initial : loss(model, data);
  return result;
}

}  // namespace hamlearn::nn
