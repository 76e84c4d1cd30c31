#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hamlearn/loss.hpp"
#include "hamlearn/systems.hpp"

namespace hamlearn::nn {

enum class TargetMode { FiniteDifference, Analytic };

/// Rows [params, q_i, p_i] at interior samples with central-difference
/// targets (x_{i+1} - x_{i-1}) / (2 dt). Needs at least 3 samples.
SampleBatch derivative_targets(const Trajectory& traj, std::span<const double> params);

/// Same interior rows, targets from the exact field (ablation only).
SampleBatch analytic_targets(const Trajectory& traj, const SystemSpec& spec);

/// Excitation energies used for training orbits: `count` values evenly
/// spaced up to the ceiling, top value included.
std::vector<double> training_energies(const SystemSpec& spec, int count);

/// Top training excitation: min(1/6, escape) for the Henon-Heiles family,
/// 0.9 (H = -0.1) for Morse.
double training_energy_ceiling(const SystemSpec& spec);

struct TrainingSetConfig {
  SystemKind kind = SystemKind::HenonHeiles;
  std::vector<std::vector<double>> param_sets{{0.2}, {0.4}, {0.6}, {0.8}};
  int energies_per_param = 7;
  int orbits_per_energy = 1;
  double t_end = 1000.0;
  double dt_sample = 0.1;
  double dt_internal = 0.01;
  TargetMode targets = TargetMode::FiniteDifference;

  void validate() const;
};

struct TrainingOrbit {
  SystemSpec spec;
  double excitation = 0.0;
  int energy_index = 0;
  int orbit_index = 0;
  std::uint64_t seed = 0;
  Trajectory trajectory;
};

/// One orbit per (parameter set, energy, orbit index); every initial
/// condition is drawn from its own derived seed.
std::vector<TrainingOrbit> generate_training_orbits(const TrainingSetConfig& cfg,
                                                    std::uint64_t seed);

SampleBatch batch_from_orbits(const std::vector<TrainingOrbit>& orbits, TargetMode targets);

/// generate_training_orbits followed by batch_from_orbits.
SampleBatch build_training_set(const TrainingSetConfig& cfg, std::uint64_t seed);

}  // namespace hamlearn::nn
