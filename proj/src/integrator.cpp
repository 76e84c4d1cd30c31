#include "hamlearn/systems.hpp"

#include <algorithm>
#include <cmath>

namespace hamlearn {

namespace {

class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  void step(const VectorField& field, std::span<double> x, double dt) {
    const std::size_t n = x.size();
    field(x, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k1_[i];
    field(tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k2_[i];
    field(tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + dt * k3_[i];
    field(tmp_, k4_);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

 private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void rk4_step(const VectorField& field, std::span<double> x, double dt) {
  Rk4Stepper(x.size()).step(field, x, dt);
}

Trajectory integrate(const VectorField& field, const PhaseState& s0, double dt_internal,
                     double t_end, double dt_sample) {
  require(dt_internal > 0.0, "integrate: dt_internal must be positive");
  require(dt_sample >= dt_internal * (1.0 - 1e-12), "integrate: dt_sample must be >= dt_internal");
  require(t_end >= 0.0, "integrate: t_end must be non-negative");
  const double ratio = dt_sample / dt_internal;
  const long substeps = std::lround(ratio);
  require(std::abs(ratio - static_cast<double>(substeps)) < 1e-9 * ratio,
          "integrate: dt_sample must be an integer multiple of dt_internal");
  require(all_finite(s0.flat()), "integrate: initial state must be finite");

  const auto n_samples = static_cast<std::size_t>(std::floor(t_end / dt_sample + 1e-9)) + 1;
  // Recomputing the internal step from the sample step keeps sample times exact.
  const double h = dt_sample / static_cast<double>(substeps);

  Trajectory traj;
  traj.dt_sample = dt_sample;
  traj.t0 = 0.0;
  traj.states.reserve(n_samples);
  traj.states.push_back(s0);

  std::vector<double> x(s0.flat().begin(), s0.flat().end());
  Rk4Stepper stepper(x.size());
  for (std::size_t i = 1; i < n_samples; ++i) {
    for (long k = 0; k < substeps; ++k) {
      stepper.step(field, x, h);
      if (!all_finite(x)) {
        throw TruncatedTrajectoryError(
            "integrate: state became non-finite at t=" +
                std::to_string(traj.time(i - 1) + static_cast<double>(k + 1) * h),
            std::move(traj));
      }
    }
    traj.states.push_back(PhaseState::from_flat(x));
  }
  return traj;
}

Trajectory integrate_system(const SystemSpec& spec, const PhaseState& s0, double dt_internal,
                            double t_end, double dt_sample) {
  require(s0.dof() == spec.dof(), "integrate_system: state dimension does not match system");
  Trajectory traj = integrate(true_field(spec), s0, dt_internal, t_end, dt_sample);
  traj.energy = total_energy(spec, s0);
  return traj;
}

}  // namespace hamlearn
