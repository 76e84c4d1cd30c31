#include <doctest.h>

#include <cmath>
#include <random>

#include "hamlearn/dataset.hpp"
#include "hamlearn/error.hpp"
#include "hamlearn/training.hpp"

using namespace hamlearn;
using namespace hamlearn::nn;

namespace {

SampleBatch oscillator_data() {
  TrainingSetConfig cfg;
  cfg.kind = SystemKind::HenonHeiles;
  cfg.param_sets = {{0.0}};
  cfg.energies_per_param = 2;
  cfg.t_end = 20.0;
  return build_training_set(cfg, 4);
}

TrainConfig small_config(int epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.hidden_width = 16;
  tc.batch_size = 64;
  tc.seed = 3;
  return tc;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("Adam step matches the bias-corrected update") {
  LayerStack params{{Eigen::MatrixXd::Constant(1, 2, 1.0), Eigen::VectorXd::Constant(1, 0.5)}};
  LayerStack grads{{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Constant(1, -2.0)}};
  grads[0].weight << 0.1, 3.0;
  AdamOptimizer adam(params, 0.01, 0.9, 0.999, 1e-8);
  adam.step(params, grads);
  // First step: m_hat = g, v_hat = g^2, so each entry moves by lr * sign(g).
  CHECK(params[0].weight(0, 0) == doctest::Approx(1.0 - 0.01 * 0.1 / (0.1 + 1e-8)));
  CHECK(params[0].weight(0, 1) == doctest::Approx(0.99));
  CHECK(params[0].bias(0) == doctest::Approx(0.51));
  adam.step(params, grads);
  const double m = (0.9 * 0.1 * 3.0 + 0.1 * 3.0) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 9.0 + 0.001 * 9.0) / (1 - 0.999 * 0.999);
  CHECK(params[0].weight(0, 1) == doctest::Approx(0.99 - 0.01 * m / (std::sqrt(v) + 1e-8)));
  CHECK(adam.steps_taken() == 2);
}

TEST_CASE("training lowers the loss") {
  const SampleBatch data = oscillator_data();
  const TrainResult r = train(data, small_config(30), 11);
  REQUIRE(r.loss_history.size() == 31);
  CHECK(r.final_loss < 0.2 * r.loss_history.front());
  CHECK(r.final_loss == doctest::Approx(loss(r.model, data)));
}

TEST_CASE("zero epochs returns the initialization") {
  const SampleBatch data = oscillator_data();
  const TrainResult r = train(data, small_config(0), 11);
  CHECK(r.model.layers() == HnnModel::initialized(r.model.layer_dims(), 1, 11).layers());
  CHECK(r.loss_history.size() == 1);
}

TEST_CASE("training is deterministic") {
  const SampleBatch data = oscillator_data();
  const TrainResult a = train(data, small_config(3), 5);
  const TrainResult b = train(data, small_config(3), 5);
  CHECK(a.model == b.model);
  CHECK(a.loss_history == b.loss_history);
  TrainConfig other = small_config(3);
  other.seed = 4;
  CHECK_FALSE(train(data, other, 5).model == a.model);
}

TEST_CASE("epoch callback sees every epoch") {
  const SampleBatch data = oscillator_data();
  std::vector<int> seen;
  train(data, small_config(4), 1, [&](int e, double l) {
    seen.push_back(e);
    CHECK(std::isfinite(l));
  });
  CHECK(seen == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("invalid configurations are rejected") {
  const SampleBatch data = oscillator_data();
  TrainConfig tc = small_config(1);
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(train(data, tc, 0), ContractError);
  tc = small_config(-1);
  CHECK_THROWS_AS(train(data, tc, 0), ContractError);
  CHECK_THROWS_AS(train(SampleBatch{}, small_config(1), 0), ContractError);
}

TEST_CASE("divergent training raises") {
  SampleBatch data = oscillator_data();
  data.target_dp(0, 0) = NAN;
  CHECK_THROWS_AS(train(data, small_config(2), 0), NumericalError);
}

}  // TEST_SUITE
