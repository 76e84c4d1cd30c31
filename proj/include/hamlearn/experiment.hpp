#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hamlearn/chaos.hpp"
#include "hamlearn/dataset.hpp"
#include "hamlearn/network.hpp"
#include "hamlearn/systems.hpp"
#include "hamlearn/training.hpp"

namespace hamlearn::experiment {

inline constexpr int kSummaryVersion = 1;

enum class Profile { Paper, Desk };

const char* to_string(Profile profile);
Profile parse_profile(const std::string& text);

/// Everything a run needs. Defaults are the `paper` profile; the `desk`
/// profile shrinks ensemble, epochs, energies, orbit length and sweep.
struct ExperimentConfig {
  Profile profile = Profile::Paper;
  SystemKind system = SystemKind::HenonHeiles;
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  unsigned jobs = 1;

  // data
  std::vector<std::vector<double>> train_params{{0.2}, {0.4}, {0.6}, {0.8}};
  int energies = 7;
  int orbits_per_energy = 1;
  double t_end = 1000.0;
  double dt_sample = 0.1;
  double dt_internal = 0.01;
  nn::TargetMode targets = nn::TargetMode::FiniteDifference;

  // training
  int ensemble = 20;
  nn::TrainConfig train;

  // analysis
  std::vector<std::vector<double>> analyze_params;
  int grid_resolution = 101;
  int taylor_samples = 4000;
  std::vector<double> orbit_params{0.7};
  std::vector<double> orbit_ic;  ///< empty selects the default for the system
  double orbit_t_end = 100.0;
  double profile_x_min = 0.3;
  double profile_x_max = 4.0;
  int profile_points = 371;

  // sweep
  double sweep_alpha_min = 0.0;
  double sweep_alpha_max = 1.0;
  int sweep_alphas = 100;
  int sweep_ic = 200;
  double sweep_energy = kReferenceEnergy;
  double sweep_t_end = 1000.0;
  double sweep_dt = 0.01;
  chaos::TangentMap sweep_tangent = chaos::TangentMap::Rk4;
  double sweep_divergence_radius = 10.0;
  bool sweep_orbits = false;

  /// Profile and system defaults.
  static ExperimentConfig preset(Profile profile, SystemKind system);

  /// Applies one `key = value` assignment; throws ContractError on an
  /// unknown key or malformed value.
  void set(const std::string& key, const std::string& value);

  void validate() const;

  /// Canonical `key = value` listing that reproduces this configuration.
  std::string to_text() const;

  nn::TrainingSetConfig training_set() const;
  chaos::SweepConfig sweep_config() const;
  std::vector<double> sweep_grid() const;
};

/// Reads `key = value` lines; `#` starts a comment. Later keys win.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Builds a configuration: the preset selected by `profile` and `system`
/// (from the overrides, else the file, else paper / henon_heiles), then
/// file keys, then overrides in order.
ExperimentConfig resolve_config(const std::optional<std::filesystem::path>& file,
                                const std::vector<std::pair<std::string, std::string>>& overrides);

/// Derived seeds for every task of a run, keyed by purpose and member.
struct SeedPlan {
  std::uint64_t master = 0;
  std::uint64_t data(int member) const;
  std::uint64_t init(int member) const;
  std::uint64_t shuffle(int member) const;
  std::uint64_t taylor() const;
  std::uint64_t sweep() const;
};

enum class AnalyzeMode { Potential, Taylor, Poincare, Orbit };
enum class SweepSource { True, Learned };

AnalyzeMode parse_analyze_mode(const std::string& text);
SweepSource parse_sweep_source(const std::string& text);

/// One trajectory CSV per (member, parameter set, energy, orbit) under
/// out/data, then data/manifest.json. Nothing is written when the output
/// directory cannot be created.
nlohmann::json cmd_generate(const ExperimentConfig& cfg);

/// Trains one network per ensemble member on that member's data and
/// writes models/member_XX.json, models/history_XX.csv and
/// models/summary.json.
nlohmann::json cmd_train(const ExperimentConfig& cfg);

/// Loads the trained ensemble and writes analysis/<mode>... files plus
/// analysis/<mode>.json.
nlohmann::json cmd_analyze(const ExperimentConfig& cfg, AnalyzeMode mode);

/// Chaos sweep over the configured alpha grid with the true or learned
/// field; writes sweep/<source>.csv and sweep/<source>.json.
nlohmann::json cmd_sweep(const ExperimentConfig& cfg, SweepSource source);

/// Loads every member listed in models/summary.json.
nn::HnnEnsemble load_ensemble(const std::filesystem::path& run_dir);

}  // namespace hamlearn::experiment
