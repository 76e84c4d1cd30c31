#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hamlearn/loss.hpp"
#include "hamlearn/network.hpp"

namespace hamlearn::nn {

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 1e-3;
  int batch_size = 512;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;  ///< mini-batch shuffling
  int hidden_layers = kHiddenLayers;
  int hidden_width = kHiddenWidth;

  void validate() const;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const LayerStack& shape, double learning_rate, double beta1, double beta2,
                double eps);

  void step(LayerStack& params, const LayerStack& grads);
  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  LayerStack m_, v_;
};

struct TrainResult {
  HnnModel model;
  /// Entry 0 is the full-data loss at initialization; entry e >= 1 is the
  /// mean mini-batch loss over epoch e.
  std::vector<double> loss_history;
  double final_loss = 0.0;  ///< full-data loss of the returned model
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Adam over shuffled mini-batches. The network is initialized from
/// `init_seed` with layer dims [inputs, hidden..., 1]. Throws NumericalError
/// if the loss becomes non-finite.
TrainResult train(const SampleBatch& data, const TrainConfig& cfg, std::uint64_t init_seed,
                  const EpochCallback& on_epoch = {});

}  // namespace hamlearn::nn
