#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "hamlearn/csv.hpp"
#include "hamlearn/error.hpp"
#include "hamlearn/systems.hpp"

using namespace hamlearn;

namespace {

// Closed forms written out independently of the library.
double hh_potential(double a1, double a2, double x, double y) {
  return 0.5 * (x * x + y * y) + a1 * x * x * y - a2 * y * y * y / 3.0;
}

double morse_potential(double a, double x) {
  const double s = 1.0 - std::exp(-a * (x - 1.0));
  return s * s - 1.0;
}

double asymmetric_saddle(double a1, double a2) {
  const double top = 1.0 / (6.0 * a2 * a2);
  const double side = 1.0 / (8.0 * a1 * a1) + a2 / (24.0 * a1 * a1 * a1);
  return std::min(top, side);
}

}  // namespace

TEST_SUITE("systems") {

TEST_CASE("potentials match their closed forms") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double a1 = 0.5 * (u(rng) + 1.0);
    const double a2 = 0.5 * (u(rng) + 1.0);
    const double x = u(rng);
    const double y = u(rng);
    CHECK(potential(SystemSpec::henon_heiles(a1), std::vector<double>{x, y}) ==
          doctest::Approx(hh_potential(a1, a1, x, y)).epsilon(1e-14));
    CHECK(potential(SystemSpec::asymmetric_hh(a1, a2), std::vector<double>{x, y}) ==
          doctest::Approx(hh_potential(a1, a2, x, y)).epsilon(1e-14));
    const double mx = 1.0 + 2.0 * x;
    CHECK(potential(SystemSpec::morse(1.0 + a1), std::vector<double>{mx}) ==
          doctest::Approx(morse_potential(1.0 + a1, mx)).epsilon(1e-14));
  }
  CHECK(potential(SystemSpec::morse(2.0), std::vector<double>{1.0}) == -1.0);
  CHECK(potential(SystemSpec::morse(2.0), std::vector<double>{60.0}) == doctest::Approx(0.0));
}

TEST_CASE("potential gradient matches central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  const double h = 1e-6;
  for (const auto& spec : {SystemSpec::henon_heiles(0.7), SystemSpec::asymmetric_hh(0.3, 0.9)}) {
    for (int i = 0; i < 20; ++i) {
      std::vector<double> q{u(rng), u(rng)};
      const auto g = potential_gradient(spec, q);
      for (std::size_t k = 0; k < 2; ++k) {
        auto qp = q;
        auto qm = q;
        qp[k] += h;
        qm[k] -= h;
        CHECK(g[k] == doctest::Approx((potential(spec, qp) - potential(spec, qm)) / (2 * h)).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("Hamilton's equations") {
  const auto spec = SystemSpec::henon_heiles(1.0);
  const PhaseState s({0.1, -0.2}, {0.3, 0.4});
  const Velocity v = analytic_rhs(spec, s);
  CHECK(v.q()[0] == 0.3);
  CHECK(v.q()[1] == 0.4);
  CHECK(v.p()[0] == doctest::Approx(-(0.1 + 2 * 0.1 * -0.2)));
  CHECK(v.p()[1] == doctest::Approx(-(-0.2 + 0.01 - 0.04)));
  CHECK_THROWS_AS(analytic_rhs(spec, PhaseState({0.1}, {0.2})), ContractError);
}

TEST_CASE("escape thresholds") {
  CHECK(escape_threshold(SystemSpec::henon_heiles(1.0)) == doctest::Approx(1.0 / 6.0));
  CHECK(escape_threshold(SystemSpec::henon_heiles(0.5)) == doctest::Approx(2.0 / 3.0));
  CHECK(std::isinf(escape_threshold(SystemSpec::henon_heiles(0.0))));
  for (auto [a1, a2] : {std::pair{1.0, 1.0}, {0.4, 0.9}, {0.9, 0.2}, {0.6, 0.6}, {1.0, 0.3}}) {
    CHECK(escape_threshold(SystemSpec::asymmetric_hh(a1, a2)) ==
          doctest::Approx(asymmetric_saddle(a1, a2)).epsilon(1e-9));
  }
  CHECK(escape_threshold(SystemSpec::morse(1.0)) == 0.0);
  CHECK(max_excitation(SystemSpec::morse(3.0)) == 1.0);
}

TEST_CASE("specs validate their parameters") {
  CHECK_THROWS_AS((SystemSpec{SystemKind::HenonHeiles, {0.1, 0.2}}.validate()), ContractError);
  CHECK_THROWS_AS(SystemSpec::morse(0.0).validate(), ContractError);
  CHECK_THROWS_AS(SystemSpec::henon_heiles(NAN).validate(), ContractError);
  CHECK(parse_system_kind("hh") == SystemKind::HenonHeiles);
  CHECK(parse_system_kind("asymmetric_hh") == SystemKind::AsymmetricHH);
  CHECK_THROWS_AS(parse_system_kind("lorenz"), ContractError);
}

TEST_CASE("energy-surface sampling") {
  std::mt19937_64 rng(3);
  for (const auto& spec : {SystemSpec::henon_heiles(0.0), SystemSpec::henon_heiles(0.6),
                           SystemSpec::asymmetric_hh(0.4, 0.8)}) {
    for (int i = 0; i < 200; ++i) {
      const PhaseState s = sample_state_at_energy(spec, 0.1, rng);
      CHECK(total_energy(spec, s) == doctest::Approx(0.1).epsilon(1e-12));
      CHECK(inside_well(spec, s.q()));
    }
  }
  const auto morse = SystemSpec::morse(2.0);
  for (int i = 0; i < 100; ++i) {
    CHECK(total_energy(morse, sample_state_at_energy(morse, 0.5, rng)) ==
          doctest::Approx(-0.5).epsilon(1e-12));
  }
  SUBCASE("boundary energy at unit nonlinearity is accepted") {
    const auto hh = SystemSpec::henon_heiles(1.0);
    const PhaseState s = sample_state_at_energy(hh, 1.0 / 6.0, rng);
    CHECK(total_energy(hh, s) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("boundary energy outside the reference window is rejected") {
    CHECK_THROWS_AS(sample_state_at_energy(SystemSpec::henon_heiles(0.5), 2.0 / 3.0, rng),
                    ContractError);
  }
  CHECK_THROWS_AS(sample_state_at_energy(SystemSpec::henon_heiles(1.0), 0.2, rng), ContractError);
  CHECK_THROWS_AS(sample_state_at_energy(morse, 1.0, rng), ContractError);
  CHECK_THROWS_AS(sample_state_at_energy(morse, 0.0, rng), ContractError);
}

TEST_CASE("RK4 matches the harmonic oscillator") {
  const auto spec = SystemSpec::henon_heiles(0.0);
  const PhaseState s0({0.3, 0.0}, {0.0, 0.2});
  const Trajectory traj = integrate_system(spec, s0, 0.01, 20.0, 0.1);
  REQUIRE(traj.size() == 201);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.time(i);
    CHECK(traj.states[i].q()[0] == doctest::Approx(0.3 * std::cos(t)).epsilon(1e-9).scale(1.0));
    CHECK(traj.states[i].q()[1] == doctest::Approx(0.2 * std::sin(t)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("integration bookkeeping") {
  const auto spec = SystemSpec::henon_heiles(0.5);
  const PhaseState s0({0.1, 0.1}, {0.2, 0.0});
  const Trajectory zero = integrate_system(spec, s0, 0.01, 0.0, 0.1);
  REQUIRE(zero.size() == 1);
  CHECK(zero.states[0] == s0);
  CHECK(integrate_system(spec, s0, 0.01, 1.0, 0.1).size() == 11);
  CHECK_THROWS_AS(integrate_system(spec, s0, 0.03, 1.0, 0.1), ContractError);
  CHECK_THROWS_AS(integrate_system(spec, s0, 0.01, -1.0, 0.1), ContractError);
  CHECK_THROWS_AS(integrate_system(spec, s0, 0.0, 1.0, 0.1), ContractError);
}

TEST_CASE("non-finite states truncate the trajectory") {
  const VectorField blowup = [](std::span<const double> x, std::span<double> dx) {
    dx[0] = x[0] * x[0];
    dx[1] = 0.0;
  };
  try {
    integrate(blowup, PhaseState({1.0}, {0.0}), 0.01, 5.0, 0.1);
    FAIL("expected truncation");
  } catch (const TruncatedTrajectoryError& e) {
    CHECK(e.partial().size() >= 10);
    CHECK(e.partial().size() < 51);
    for (const auto& s : e.partial().states) CHECK(std::isfinite(s.q()[0]));
  }
}

TEST_CASE("energy drift over long orbits stays below 1e-6") {
  std::mt19937_64 rng(5);
  for (double alpha : {0.0, 0.5, 1.0}) {
    const auto spec = SystemSpec::henon_heiles(alpha);
    const PhaseState s0 = sample_state_at_energy(spec, 1.0 / 6.0, rng);
    const Trajectory traj = integrate_system(spec, s0, 0.01, 1000.0, 0.1);
    double drift = 0.0;
    for (const auto& s : traj.states) drift = std::max(drift, std::abs(total_energy(spec, s) - traj.energy));
    CHECK(drift < 1e-6);
  }
}

TEST_CASE("Poincare section of the harmonic oscillator") {
  const auto spec = SystemSpec::henon_heiles(0.0);
  const PhaseState s0({0.0, 0.2}, {0.3, 0.0});
  const Trajectory traj = integrate_system(spec, s0, 0.01, 100.0, 0.1);
  const auto up = poincare_section(traj, 0, 0.0, CrossingDirection::Increasing);
  const auto both = poincare_section(traj, 0, 0.0, CrossingDirection::Both);
  // Upward crossings at t = 2 pi k, k >= 1 (t = 0 starts on the section).
  CHECK(up.size() == 15);
  CHECK(both.size() == 31);
  for (const auto& pt : up) {
    const double k = std::round(pt.t / (2 * M_PI));
    CHECK(pt.t == doctest::Approx(2 * M_PI * k).epsilon(1e-3));
    CHECK(pt.q == doctest::Approx(0.2 * std::cos(pt.t)).epsilon(1e-3));
  }
}

TEST_CASE("trajectory CSV round trip") {
  const auto spec = SystemSpec::henon_heiles(0.8);
  std::mt19937_64 rng(9);
  const Trajectory traj = integrate_system(spec, sample_state_at_energy(spec, 0.12, rng), 0.01, 5.0, 0.1);
  const auto path = std::filesystem::temp_directory_path() / "hamlearn_traj_roundtrip.csv";
  write_trajectory_csv(path, traj, spec);
  const Trajectory back = read_trajectory_csv(path);
  REQUIRE(back.size() == traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) CHECK(back.states[i] == traj.states[i]);
  CHECK(back.energy == traj.energy);
  CHECK(back.dt_sample == doctest::Approx(0.1));
  std::filesystem::remove(path);
}

TEST_CASE("CSV doubles are written in shortest exact form") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(NAN) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  std::ostringstream out;
  write_csv(out, CsvTable{{"a", "b"}, {{1.0, 0.5}}});
  CHECK(out.str() == "a,b\n1,0.5\n");
}

}  // TEST_SUITE
