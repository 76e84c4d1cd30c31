#include <doctest.h>

#include <cmath>
#include <random>

#include "hamlearn/chaos.hpp"
#include "hamlearn/error.hpp"
#include "hamlearn/network.hpp"

using namespace hamlearn;
using namespace hamlearn::chaos;

namespace {

Eigen::Matrix4d hh_jacobian(double a, double x, double y) {
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j(0, 2) = 1.0;
  j(1, 3) = 1.0;
  j(2, 0) = -(1.0 + 2.0 * a * y);
  j(2, 1) = -2.0 * a * x;
  j(3, 0) = -2.0 * a * x;
  j(3, 1) = -(1.0 - 2.0 * a * y);
  return j;
}

const PhaseState kChaoticIc({0.0, 0.0}, {1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0)});

SpecFactory hh_specs() {
  return [](double a) { return SystemSpec::henon_heiles(a); };
}

FieldFactory true_fields() {
  return [](const SystemSpec& s) { return true_field(s); };
}

}  // namespace

TEST_SUITE("chaos") {

TEST_CASE("Jacobian of the linear field is constant") {
  const VectorField f = true_field(SystemSpec::henon_heiles(0.0));
  Eigen::Matrix4d expected;
  expected << 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0;
  for (const auto& x : {std::vector<double>{0, 0, 0, 0}, std::vector<double>{0.3, -0.7, 2.0, 1.1}}) {
    CHECK((jacobian_fd(f, x) - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(jacobian_fd(f, std::vector<double>{0, 0, 0, 0}, 0.0), ContractError);
}

TEST_CASE("Jacobian matches closed-form second derivatives") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  const VectorField f = true_field(SystemSpec::henon_heiles(1.0));
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
    const Eigen::MatrixXd j = jacobian_fd(f, x, 1e-4);
    CHECK((j - hh_jacobian(1.0, x[0], x[1])).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(j.trace()) < 1e-6);
  }
}

TEST_CASE("Hamiltonian fields are divergence free, learned ones included") {
  nn::HnnEnsemble ens;
  ens.members.push_back(nn::HnnModel::initialized(nn::default_layer_dims(1, 4), 1, 8));
  const VectorField f = nn::learned_field(ens, {0.4});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
    CHECK(std::abs(jacobian_fd(f, x).trace()) < 1e-6);
  }
}

TEST_CASE("non-finite field values raise") {
  const VectorField bad = [](std::span<const double>, std::span<double> dx) {
    for (double& v : dx) v = NAN;
  };
  CHECK_THROWS_AS(jacobian_fd(bad, std::vector<double>{0, 0}), NumericalError);
}

TEST_CASE("integrable orbits have vanishing exponents") {
  std::mt19937_64 rng(12);
  const auto spec = SystemSpec::henon_heiles(0.0);
  for (int i = 0; i < 3; ++i) {
    const PhaseState s0 = sample_state_at_energy(spec, 1.0 / 6.0, rng);
    const OrbitDiagnostics d = orbit_diagnostics(true_field(spec), s0, 0.01, 100000);
    CHECK(d.lyapunov.valid);
    for (double l : d.lyapunov.spectrum) CHECK(std::abs(l) < 5e-3);
    CHECK(d.alignment.gamma_min > 1e-8);
    CHECK(classify(d.lyapunov, d.alignment) == Regime::Regular);
  }
}

TEST_CASE("chaotic orbit at unit nonlinearity") {
  const auto spec = SystemSpec::henon_heiles(1.0);
  const OrbitDiagnostics d = orbit_diagnostics(true_field(spec), kChaoticIc, 0.01, 100000);
  REQUIRE(d.lyapunov.valid);
  CHECK(d.lyapunov.max_exponent() > 0.01);
  CHECK(d.alignment.gamma_min < 1e-8);
  CHECK(classify(d.lyapunov, d.alignment) == Regime::Chaotic);
  CHECK(d.alignment.gamma_series.size() == 100000);
  for (double g : d.alignment.gamma_series) {
    CHECK(g >= 0.0);
    CHECK(g <= 2.0);
  }
}

TEST_CASE("spectrum of the true field is symplectic") {
  std::mt19937_64 rng(21);
  for (double alpha : {0.6, 1.0}) {
    const auto spec = SystemSpec::henon_heiles(alpha);
    const PhaseState s0 = alpha == 1.0 ? kChaoticIc : sample_state_at_energy(spec, 1.0 / 6.0, rng);
    const LyapunovResult r = lyapunov_spectrum(true_field(spec), s0, 0.01, 100000);
    REQUIRE(r.spectrum.size() == 4);
    CHECK(std::is_sorted(r.spectrum.rbegin(), r.spectrum.rend()));
    CHECK(std::abs(r.spectrum[0] + r.spectrum[3]) < 1e-2);
    CHECK(std::abs(r.spectrum[1] + r.spectrum[2]) < 1e-2);
    CHECK(std::abs(r.spectrum[0] + r.spectrum[1] + r.spectrum[2] + r.spectrum[3]) < 1e-2);
    CHECK(r.n_steps == 100000);
    CHECK(r.dt == 0.01);
  }
}

TEST_CASE("the explicit Euler tangent map inflates every exponent") {
  // With I + J dt the harmonic oscillator grows deviations by
  // sqrt(1 + dt^2) per step, so every exponent reads ln(1 + dt^2) / (2 dt).
  DiagnosticOptions euler;
  euler.tangent = TangentMap::Euler;
  const auto spec = SystemSpec::henon_heiles(0.0);
  const LyapunovResult r = lyapunov_spectrum(true_field(spec), kChaoticIc, 0.01, 20000, euler);
  const double bias = std::log1p(1e-4) / 0.02;
  for (double l : r.spectrum) CHECK(l == doctest::Approx(bias).epsilon(1e-6));
}

TEST_CASE("alignment index of identical vectors is zero") {
  const auto spec = SystemSpec::henon_heiles(0.8);
  Eigen::VectorXd u = Eigen::VectorXd::Unit(4, 0);
  const AlignmentResult r = alignment_index(true_field(spec), kChaoticIc, u, u, 0.01, 500);
  REQUIRE(r.gamma_series.size() == 500);
  for (double g : r.gamma_series) CHECK(g == 0.0);
  CHECK(r.gamma_min == 0.0);
}

TEST_CASE("alignment index starts near sqrt(2)") {
  const auto spec = SystemSpec::henon_heiles(0.0);
  const AlignmentResult r = alignment_index(true_field(spec), kChaoticIc, 0.01, 1);
  CHECK(r.gamma_series.front() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("classification rule") {
  LyapunovResult lyap;
  AlignmentResult align;
  lyap.spectrum = {0.05, 0.0, 0.0, -0.05};
  align.gamma_min = 1e-12;
  CHECK(classify(lyap, align) == Regime::Chaotic);
  lyap.spectrum = {0.002, 0.0, 0.0, -0.002};
  align.gamma_min = 0.3;
  CHECK(classify(lyap, align) == Regime::Regular);
  lyap.spectrum = {0.05, 0.0, 0.0, -0.05};
  CHECK(classify(lyap, align) == Regime::Regular);
  lyap.spectrum = {0.002, 0.0, 0.0, -0.002};
  align.gamma_min = 1e-12;
  CHECK(classify(lyap, align) == Regime::Regular);
  CHECK(std::string(to_string(Regime::Chaotic)) == "chaotic");
}

TEST_CASE("divergent orbits are flagged invalid") {
  const VectorField drift = [](std::span<const double>, std::span<double> dx) {
    dx[0] = 1.0;
    dx[1] = 0.0;
  };
  DiagnosticOptions opts;
  opts.divergence_radius = 5.0;
  const OrbitDiagnostics d = orbit_diagnostics(drift, PhaseState({0.0}, {0.0}), 0.01, 10000, opts);
  CHECK_FALSE(d.lyapunov.valid);
  CHECK_FALSE(d.alignment.valid);
  CHECK(d.lyapunov.n_steps < 600);
  CHECK_THROWS_AS(orbit_diagnostics(drift, PhaseState({0.0}, {0.0}), 0.01, 0), ContractError);
}

TEST_CASE("sweep over the integrable point only") {
  SweepConfig c;
  c.alphas = {0.0};
  c.n_ic = 5;
  c.n_steps = 20000;
  const ChaosReport r = chaos_sweep(hh_specs(), true_fields(), c);
  REQUIRE(r.f_c.size() == 1);
  CHECK(r.f_c[0] == 0.0);
  CHECK(r.n_valid[0] == 5);
  CHECK(r.n_initial_conditions == 5);
  CHECK(r.energy == doctest::Approx(1.0 / 6.0));
  CHECK(std::isnan(r.transition_alpha()));
}

TEST_CASE("sweep is deterministic across worker counts") {
  SweepConfig c;
  c.alphas = {0.5, 1.0};
  c.n_ic = 4;
  c.n_steps = 5000;
  c.seed = 77;
  c.keep_orbits = true;
  const ChaosReport a = chaos_sweep(hh_specs(), true_fields(), c);
  c.jobs = 3;
  const ChaosReport b = chaos_sweep(hh_specs(), true_fields(), c);
  CHECK(a.lambda_M == b.lambda_M);
  CHECK(a.gamma_m == b.gamma_m);
  CHECK(a.f_c == b.f_c);
  CHECK(a.orbits.size() == 8);
  for (std::size_t i = 0; i < a.orbits.size(); ++i) CHECK(a.orbits[i].initial == b.orbits[i].initial);
  const CsvTable t = chaos_report_table(a);
  CHECK(t.header == std::vector<std::string>{"alpha", "lambda_M", "gamma_m", "f_c", "n_valid"});
  CHECK(chaos_orbit_table(a).rows.size() == 8);
}

TEST_CASE("single initial condition sweep") {
  SweepConfig c;
  c.alphas = {1.0};
  c.n_ic = 1;
  c.n_steps = 100000;
  const ChaosReport r = chaos_sweep(hh_specs(), true_fields(), c);
  CHECK(r.n_valid[0] == 1);
  CHECK((r.f_c[0] == 0.0 || r.f_c[0] == 1.0));
  CHECK(std::isfinite(r.lambda_M[0]));
}

TEST_CASE("sweep rejects energies above the escape threshold") {
  SweepConfig c;
  c.alphas = {0.5, 1.0};
  c.energy = 0.2;
  CHECK_THROWS_AS(chaos_sweep(hh_specs(), true_fields(), c), ContractError);
  c.alphas.clear();
  CHECK_THROWS_AS(chaos_sweep(hh_specs(), true_fields(), c), ContractError);
}

}  // TEST_SUITE

TEST_SUITE("chaos_consistency") {

TEST_CASE("Lyapunov and alignment classifications agree on 95% of random orbits") {
  // Random (alpha, initial condition) pairs on the E = 1/6 surface, t = 1000.
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);
  const int n = 200;
  int agree = 0;
  int valid = 0;
  DiagnosticOptions opts;
  opts.keep_gamma_series = false;
  opts.divergence_radius = 10.0;
  for (int i = 0; i < n; ++i) {
    const auto spec = SystemSpec::henon_heiles(alpha(rng));
    const PhaseState s0 = sample_state_at_energy(spec, 1.0 / 6.0, rng);
    const OrbitDiagnostics d = orbit_diagnostics(true_field(spec), s0, 0.01, 100000, opts);
    if (!d.lyapunov.valid) continue;
    ++valid;
    const bool by_gamma = d.alignment.gamma_min < 1e-8;
    const bool by_lambda = d.lyapunov.max_exponent() > 0.005;
    agree += by_gamma == by_lambda;
  }
  MESSAGE("agreement " << agree << " / " << valid);
  CHECK(valid == n);
  CHECK(static_cast<double>(agree) >= 0.95 * valid);
}

}  // TEST_SUITE
