#include <doctest.h>

#include <cmath>
#include <random>

#include "hamlearn/error.hpp"
#include "hamlearn/loss.hpp"
#include "hamlearn/model_io.hpp"
#include "hamlearn/network.hpp"

using namespace hamlearn;
using namespace hamlearn::nn;

namespace {

// Random architecture with small widths so every weight can be perturbed.
HnnModel random_model(std::mt19937_64& rng, std::size_t& k, std::size_t& dof) {
  std::uniform_int_distribution<int> channels(0, 2), dofs(1, 2), width(3, 12), depth(1, 3);
  k = static_cast<std::size_t>(channels(rng));
  dof = static_cast<std::size_t>(dofs(rng));
  std::vector<int> dims{static_cast<int>(k + 2 * dof)};
  const int layers = depth(rng);
  for (int l = 0; l < layers; ++l) dims.push_back(width(rng));
  dims.push_back(1);
  HnnModel m = HnnModel::initialized(dims, k, rng());
  // Non-zero biases so every term of the backward pass is exercised.
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& layer : m.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = n(rng);
  }
  return m;
}

SampleBatch random_batch(std::mt19937_64& rng, std::size_t k, std::size_t dof, int n) {
  std::normal_distribution<double> g(0.0, 0.7);
  SampleBatch b;
  b.param_channels = k;
  b.inputs.resize(static_cast<Eigen::Index>(k + 2 * dof), n);
  b.target_dq.resize(static_cast<Eigen::Index>(dof), n);
  b.target_dp.resize(static_cast<Eigen::Index>(dof), n);
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs(i) = g(rng);
  for (Eigen::Index i = 0; i < b.target_dq.size(); ++i) b.target_dq(i) = g(rng);
  for (Eigen::Index i = 0; i < b.target_dp.size(); ++i) b.target_dp(i) = g(rng);
  return b;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("default architecture") {
  CHECK(default_layer_dims(1, 4) == std::vector<int>{5, 200, 200, 1});
  const HnnModel m = HnnModel::initialized(default_layer_dims(1, 4), 1, 42);
  CHECK(m.parameter_count() == 41601);
  CHECK(m.input_width() == 5);
  CHECK(m.dof() == 2);
  const double bound = std::sqrt(6.0 / (5 + 200));
  CHECK(m.layers()[0].weight.cwiseAbs().maxCoeff() <= bound);
  CHECK(m.layers()[0].weight.cwiseAbs().maxCoeff() > 0.9 * bound);
  CHECK(m.layers()[1].bias.isZero());
  CHECK(HnnModel::initialized(default_layer_dims(1, 4), 1, 42) == m);
  CHECK_FALSE(HnnModel::initialized(default_layer_dims(1, 4), 1, 43) == m);
}

TEST_CASE("input gradient matches central differences on 100 random instances") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 0.7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t k = 0, dof = 0;
    HnnModel m = trial % 4 == 0 ? HnnModel::initialized(default_layer_dims(1, 4), 1, rng())
                                : random_model(rng, k, dof);
    std::vector<double> x(m.input_width());
    for (double& v : x) v = g(rng);
    const Eigen::VectorXd grad = m.input_gradient(x);
    Eigen::VectorXd fd(grad.size());
    const double h = 1e-5;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto xp = x;
      auto xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd(static_cast<Eigen::Index>(i)) = (m.forward(xp) - m.forward(xm)) / (2 * h);
    }
    worst = std::max(worst, relative_error(grad, fd));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("batched evaluation agrees with single-sample evaluation") {
  std::mt19937_64 rng(5);
  const HnnModel m = HnnModel::initialized(default_layer_dims(2, 4), 2, 9);
  const SampleBatch b = random_batch(rng, 2, 2, 17);
  const Eigen::RowVectorXd h = m.forward_batch(b.inputs);
  const Eigen::MatrixXd g = m.input_gradient_batch(b.inputs);
  for (Eigen::Index c = 0; c < b.inputs.cols(); ++c) {
    const std::vector<double> x(b.inputs.col(c).data(), b.inputs.col(c).data() + b.inputs.rows());
    CHECK(h(c) == doctest::Approx(m.forward(x)).epsilon(1e-13));
    CHECK(relative_error(g.col(c), m.input_gradient(x)) < 1e-13);
  }
}

TEST_CASE("loss gradient matches central differences on 20 random instances") {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t k = 0, dof = 0;
    HnnModel m = random_model(rng, k, dof);
    const SampleBatch batch = random_batch(rng, k, dof, 6);
    const LossGradient lg = loss_gradient(m, batch);
    CHECK(lg.loss == doctest::Approx(loss(m, batch)).epsilon(1e-12));
    Eigen::VectorXd analytic(static_cast<Eigen::Index>(m.parameter_count()));
    Eigen::VectorXd numeric(analytic.size());
    Eigen::Index idx = 0;
    const double h = 1e-6;
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      auto perturb = [&](double& w, double g) {
        const double saved = w;
        w = saved + h;
        const double up = loss(m, batch);
        w = saved - h;
        const double down = loss(m, batch);
        w = saved;
        analytic(idx) = g;
        numeric(idx) = (up - down) / (2 * h);
        ++idx;
      };
      auto& layer = m.layers()[l];
      const auto& grad = lg.gradient[l];
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) perturb(layer.weight(i), grad.weight(i));
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) perturb(layer.bias(i), grad.bias(i));
    }
    REQUIRE(idx == analytic.size());
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss gradient of the full-size network along random directions") {
  std::mt19937_64 rng(31);
  HnnModel m = HnnModel::initialized(default_layer_dims(1, 4), 1, 4);
  const SampleBatch batch = random_batch(rng, 1, 2, 32);
  const LossGradient lg = loss_gradient(m, batch);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    LayerStack dir = m.layers();
    double predicted = 0.0;
    for (std::size_t l = 0; l < dir.size(); ++l) {
      for (Eigen::Index i = 0; i < dir[l].weight.size(); ++i) dir[l].weight(i) = g(rng);
      for (Eigen::Index i = 0; i < dir[l].bias.size(); ++i) dir[l].bias(i) = g(rng);
      predicted += (dir[l].weight.array() * lg.gradient[l].weight.array()).sum() +
                   dir[l].bias.dot(lg.gradient[l].bias);
    }
    const double h = 1e-6;
    HnnModel up = m, down = m;
    for (std::size_t l = 0; l < dir.size(); ++l) {
      up.layers()[l].weight += h * dir[l].weight;
      up.layers()[l].bias += h * dir[l].bias;
      down.layers()[l].weight -= h * dir[l].weight;
      down.layers()[l].bias -= h * dir[l].bias;
    }
    const double numeric = (loss(up, batch) - loss(down, batch)) / (2 * h);
    CHECK(predicted == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("loss vanishes for a network that reproduces the targets") {
  // H = (q^2 + p^2) / 2 via tanh is not exact, so use zero weights: H is
  // constant and the loss is the mean squared target norm.
  HnnModel m(default_layer_dims(0, 2), 0);
  std::mt19937_64 rng(1);
  const SampleBatch b = random_batch(rng, 0, 1, 10);
  const double expected = (b.target_dq.squaredNorm() + b.target_dp.squaredNorm()) / 10.0;
  CHECK(loss(m, b) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("learned right-hand side follows Hamilton's equations") {
  const HnnModel m = HnnModel::initialized(default_layer_dims(1, 4), 1, 3);
  const std::vector<double> params{0.4};
  const PhaseState s({0.1, 0.2}, {-0.3, 0.05});
  const Eigen::VectorXd g = m.input_gradient(assemble_input(params, s));
  const Velocity v = learned_rhs(m, params, s);
  CHECK(v.q()[0] == doctest::Approx(g(3)));
  CHECK(v.q()[1] == doctest::Approx(g(4)));
  CHECK(v.p()[0] == doctest::Approx(-g(1)));
  CHECK(v.p()[1] == doctest::Approx(-g(2)));
}

TEST_CASE("ensemble averages members") {
  HnnEnsemble ens;
  for (std::uint64_t s = 0; s < 3; ++s) {
    ens.members.push_back(HnnModel::initialized(default_layer_dims(1, 2), 1, s));
  }
  const std::vector<double> x{0.5, 0.1, -0.2};
  double mean = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(3);
  for (const auto& m : ens.members) {
    mean += m.forward(x) / 3.0;
    grad += m.input_gradient(x) / 3.0;
  }
  CHECK(ens.forward(x) == doctest::Approx(mean));
  CHECK(relative_error(ens.input_gradient(x), grad) < 1e-14);
  HnnEnsemble mixed = ens;
  mixed.members.push_back(HnnModel::initialized(default_layer_dims(1, 4), 1, 0));
  CHECK_THROWS_AS(mixed.validate(), ContractError);
  CHECK_THROWS_AS(HnnEnsemble{}.validate(), ContractError);
}

TEST_CASE("model files round-trip exactly") {
  HnnModel m = HnnModel::initialized(default_layer_dims(1, 4, 2, 16), 1, 8);
  m.layers()[0].bias(3) = 1.0 / 3.0;
  m.training_params = {{0.2}, {0.4}};
  const HnnModel back = model_from_string(model_to_string(m));
  CHECK(back == m);
  CHECK(model_to_string(back) == model_to_string(m));
  CHECK_THROWS_AS(model_from_string("{\"format\": \"other\"}"), IoError);
  CHECK_THROWS_AS(model_from_string("not json"), IoError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
}

TEST_CASE("wrong input width is rejected") {
  const HnnModel m = HnnModel::initialized(default_layer_dims(1, 4), 1, 0);
  CHECK_THROWS_AS(m.forward(std::vector<double>{1.0, 2.0}), ContractError);
}

}  // TEST_SUITE
