#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hamlearn/csv.hpp"
#include "hamlearn/systems.hpp"

namespace hamlearn::chaos {

/// Central-difference Jacobian of a vector field. Throws ContractError for
/// h <= 0 and NumericalError when the field returns a non-finite value.
Eigen::MatrixXd jacobian_fd(const VectorField& field, std::span<const double> state,
                            double h = 1e-4);

/// How deviation vectors are carried across one integration step.
enum class TangentMap {
  Rk4,    ///< derivative of the RK4 step, stage Jacobians by finite differences
  Euler,  ///< I + J(x_i) dt
};

struct DiagnosticOptions {
  TangentMap tangent = TangentMap::Rk4;
  double jacobian_step = 1e-4;
  /// Orbit is flagged invalid once any coordinate exceeds this magnitude.
  double divergence_radius = 1e3;
  bool keep_gamma_series = true;
};

struct LyapunovResult {
  std::vector<double> spectrum;  ///< per time unit, sorted descending
  long n_steps = 0;
  double dt = 0.0;
  bool valid = true;

  double max_exponent() const;
};

struct AlignmentResult {
  std::vector<double> gamma_series;
  double gamma_min = std::numeric_limits<double>::infinity();
  bool valid = true;
};

struct OrbitDiagnostics {
  LyapunovResult lyapunov;
  AlignmentResult alignment;
};

/// Lyapunov spectrum and alignment index from one pass along the orbit of
/// s0: RK4 state steps of size dt, a QR re-orthonormalisation of the
/// tangent basis after every step, and unit renormalisation of the two
/// alignment vectors after every step.
OrbitDiagnostics orbit_diagnostics(const VectorField& field, const PhaseState& s0, double dt,
                                   long n_steps, const DiagnosticOptions& options = {});

LyapunovResult lyapunov_spectrum(const VectorField& field, const PhaseState& s0, double dt,
                                 long n_steps, const DiagnosticOptions& options = {});

/// Alignment index with u1 = e1, u2 = e2.
AlignmentResult alignment_index(const VectorField& field, const PhaseState& s0, double dt,
                                long n_steps, const DiagnosticOptions& options = {});

/// Alignment index from caller-chosen initial deviation vectors.
AlignmentResult alignment_index(const VectorField& field, const PhaseState& s0,
                                const Eigen::VectorXd& u1, const Eigen::VectorXd& u2, double dt,
                                long n_steps, const DiagnosticOptions& options = {});

enum class Regime { Regular, Chaotic };

const char* to_string(Regime regime);

struct ClassifyThresholds {
  double lambda = 0.005;
  double gamma = 1e-8;
};

/// Chaotic iff the largest exponent exceeds thresholds.lambda and the
/// minimum alignment index is below thresholds.gamma.
Regime classify(const LyapunovResult& lyap, const AlignmentResult& align,
                const ClassifyThresholds& thresholds = {});

using SpecFactory = std::function<SystemSpec(double)>;
using FieldFactory = std::function<VectorField(const SystemSpec&)>;

struct SweepConfig {
  std::vector<double> alphas;
  int n_ic = 50;
  double energy = kReferenceEnergy;  ///< excitation above the well bottom
  double dt = 0.01;
  long n_steps = 100000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  ClassifyThresholds thresholds;
  DiagnosticOptions diagnostics{TangentMap::Rk4, 1e-4, 10.0, false};
  bool keep_orbits = false;

  void validate() const;
};

struct OrbitRecord {
  double alpha = 0.0;
  int ic_index = 0;
  PhaseState initial;
  double lambda_max = 0.0;
  double gamma_min = 0.0;
  bool valid = true;
  Regime regime = Regime::Regular;
};

struct ChaosReport {
  std::vector<double> alphas;
  std::vector<double> lambda_M;  ///< max over valid orbits; NaN when none
  std::vector<double> gamma_m;   ///< min over valid orbits; NaN when none
  std::vector<double> f_c;       ///< chaotic fraction of valid orbits
  std::vector<int> n_valid;
  int n_initial_conditions = 0;
  double energy = 0.0;
  std::vector<OrbitRecord> orbits;  ///< filled when keep_orbits is set

  /// First alpha whose chaos fraction exceeds the level; NaN when none.
  double transition_alpha(double level = 0.05) const;
};

/// Chaos fraction versus alpha. Initial conditions are drawn on the true
/// energy surface of spec_of(alpha) with seeds derived from (alpha index,
/// IC index); the vector field comes from field_of. Invalid orbits are
/// excluded from every reduction and counted in n_valid.
ChaosReport chaos_sweep(const SpecFactory& spec_of, const FieldFactory& field_of,
                        const SweepConfig& config);

/// alpha, lambda_M, gamma_m, f_c, n_valid.
CsvTable chaos_report_table(const ChaosReport& report);

/// alpha, ic, q..., p..., lambda_max, gamma_min, valid, chaotic.
CsvTable chaos_orbit_table(const ChaosReport& report);

}  // namespace hamlearn::chaos
