#include "hamlearn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hamlearn/seeds.hpp"

namespace hamlearn::nn {

namespace {

constexpr double kMorseTrainingCeiling = 0.9;

SampleBatch interior_rows(const Trajectory& traj, std::span<const double> params) {
  require(traj.size() >= 3, "derivative_targets: trajectory needs at least 3 samples");
  require(traj.dt_sample > 0.0, "derivative_targets: dt_sample must be positive");
  const auto k = static_cast<Eigen::Index>(params.size());
  const auto dof = static_cast<Eigen::Index>(traj.states.front().dof());
  const auto n = static_cast<Eigen::Index>(traj.size() - 2);
  SampleBatch batch{Eigen::MatrixXd(k + 2 * dof, n), Eigen::MatrixXd(dof, n),
                    Eigen::MatrixXd(dof, n), params.size()};
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index j = 0; j < k; ++j) batch.inputs(j, c) = params[j];
    const auto x = traj.states[static_cast<std::size_t>(c + 1)].flat();
    for (Eigen::Index j = 0; j < 2 * dof; ++j) batch.inputs(k + j, c) = x[j];
  }
  return batch;
}

}  // namespace

SampleBatch derivative_targets(const Trajectory& traj, std::span<const double> params) {
  SampleBatch batch = interior_rows(traj, params);
  const auto dof = static_cast<Eigen::Index>(batch.dof());
  const double inv = 1.0 / (2.0 * traj.dt_sample);
  for (Eigen::Index c = 0; c < batch.inputs.cols(); ++c) {
    const auto prev = traj.states[static_cast<std::size_t>(c)].flat();
    const auto next = traj.states[static_cast<std::size_t>(c + 2)].flat();
    for (Eigen::Index j = 0; j < dof; ++j) {
      batch.target_dq(j, c) = (next[j] - prev[j]) * inv;
      batch.target_dp(j, c) = (next[dof + j] - prev[dof + j]) * inv;
    }
  }
  return batch;
}

SampleBatch analytic_targets(const Trajectory& traj, const SystemSpec& spec) {
  SampleBatch batch = interior_rows(traj, spec.params);
  const auto dof = static_cast<Eigen::Index>(batch.dof());
  for (Eigen::Index c = 0; c < batch.inputs.cols(); ++c) {
    const Velocity v = analytic_rhs(spec, traj.states[static_cast<std::size_t>(c + 1)]);
    for (Eigen::Index j = 0; j < dof; ++j) {
      batch.target_dq(j, c) = v.q()[j];
      batch.target_dp(j, c) = v.p()[j];
    }
  }
  return batch;
}

double training_energy_ceiling(const SystemSpec& spec) {
  if (spec.kind == SystemKind::Morse) return kMorseTrainingCeiling;
  return std::min(kReferenceEnergy, max_excitation(spec));
}

std::vector<double> training_energies(const SystemSpec& spec, int count) {
  require(count >= 1, "training_energies: need at least one energy");
  const double top = training_energy_ceiling(spec);
  std::vector<double> energies;
  for (int k = 1; k <= count; ++k) energies.push_back(top * k / count);
  return energies;
}

void TrainingSetConfig::validate() const {
  require(!param_sets.empty(), "TrainingSetConfig: no parameter sets");
  require(energies_per_param >= 1 && orbits_per_energy >= 1,
          "TrainingSetConfig: energies and orbits per energy must be >= 1");
  require(t_end > 0.0 && dt_sample > 0.0 && dt_internal > 0.0,
          "TrainingSetConfig: time settings must be positive");
  for (const auto& params : param_sets) {
    SystemSpec{kind, params}.validate();
    if (kind != SystemKind::Morse) {
      for (double a : params) {
        require(a >= 0.0 && a <= 1.0,
                "TrainingSetConfig: Henon-Heiles training parameters must lie in [0, 1]");
      }
    }
  }
}

std::vector<TrainingOrbit> generate_training_orbits(const TrainingSetConfig& cfg,
                                                    std::uint64_t seed) {
  cfg.validate();
  std::vector<TrainingOrbit> orbits;
  for (std::size_t ip = 0; ip < cfg.param_sets.size(); ++ip) {
    const SystemSpec spec{cfg.kind, cfg.param_sets[ip]};
    const auto energies = training_energies(spec, cfg.energies_per_param);
    for (int ie = 0; ie < cfg.energies_per_param; ++ie) {
      for (int io = 0; io < cfg.orbits_per_energy; ++io) {
        TrainingOrbit orbit{spec, energies[static_cast<std::size_t>(ie)], ie, io,
                            derive_seed(seed, {ip, static_cast<std::uint64_t>(ie),
                                               static_cast<std::uint64_t>(io)}),
                            {}};
        std::mt19937_64 rng(orbit.seed);
        const PhaseState s0 = sample_state_at_energy(spec, orbit.excitation, rng);
        orbit.trajectory = integrate_system(spec, s0, cfg.dt_internal, cfg.t_end, cfg.dt_sample);
        orbits.push_back(std::move(orbit));
      }
    }
  }
  return orbits;
}

SampleBatch batch_from_orbits(const std::vector<TrainingOrbit>& orbits, TargetMode targets) {
  std::vector<SampleBatch> parts;
  parts.reserve(orbits.size());
  for (const auto& o : orbits) {
    parts.push_back(targets == TargetMode::Analytic
                        ? analytic_targets(o.trajectory, o.spec)
                        : derivative_targets(o.trajectory, o.spec.params));
  }
  return SampleBatch::concatenate(parts);
}

SampleBatch build_training_set(const TrainingSetConfig& cfg, std::uint64_t seed) {
  return batch_from_orbits(generate_training_orbits(cfg, seed), cfg.targets);
}

}  // namespace hamlearn::nn
