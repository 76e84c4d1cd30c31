#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hamlearn/error.hpp"

namespace hamlearn {

enum class SystemKind { HenonHeiles, AsymmetricHH, Morse };

std::string_view to_string(SystemKind kind);
SystemKind parse_system_kind(std::string_view name);

/// Number of bifurcation parameters carried by each system family.
std::size_t param_count(SystemKind kind);
/// Degrees of freedom D_f; the phase space has dimension 2 * D_f.
std::size_t degrees_of_freedom(SystemKind kind);

/// Equilibrium position x0 of the Morse well.
inline constexpr double kMorseEquilibrium = 1.0;

/// Reference energy of the Henon-Heiles family: the escape energy at unit
/// nonlinearity and the energy at which all chaos diagnostics are taken.
inline constexpr double kReferenceEnergy = 1.0 / 6.0;

/// A target Hamiltonian: which family plus its bifurcation parameters.
///   HenonHeiles:  [alpha]
///   AsymmetricHH: [alpha1, alpha2]
///   Morse:        [a]        (x0 fixed at 1)
struct SystemSpec {
  SystemKind kind = SystemKind::HenonHeiles;
  std::vector<double> params{0.0};

  static SystemSpec henon_heiles(double alpha);
  static SystemSpec asymmetric_hh(double alpha1, double alpha2);
  static SystemSpec morse(double a);

  std::size_t dof() const { return degrees_of_freedom(kind); }
  std::size_t phase_dim() const { return 2 * dof(); }

  /// Throws ContractError unless params has the right length and is finite.
  void validate() const;
};

/// Canonical coordinates of one state, stored flat as [q..., p...].
class PhaseState {
 public:
  PhaseState() = default;
  PhaseState(std::vector<double> q, std::vector<double> p);
  static PhaseState from_flat(std::span<const double> x);

  std::size_t dof() const { return x_.size() / 2; }
  std::size_t dim() const { return x_.size(); }

  std::span<const double> q() const { return {x_.data(), dof()}; }
  std::span<const double> p() const { return {x_.data() + dof(), dof()}; }
  std::span<double> q() { return {x_.data(), dof()}; }
  std::span<double> p() { return {x_.data() + dof(), dof()}; }

  std::span<const double> flat() const { return x_; }
  std::span<double> flat() { return x_; }

  bool operator==(const PhaseState&) const = default;

 private:
  std::vector<double> x_;
};

/// Time derivative of a PhaseState; same [dq/dt..., dp/dt...] layout.
using Velocity = PhaseState;

/// A time-sampled orbit. `energy` is H at the first state when known
/// (NaN for orbits of a learned field).
struct Trajectory {
  std::vector<PhaseState> states;
  double dt_sample = 0.1;
  double t0 = 0.0;
  double energy = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return states.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt_sample; }
};

/// Raised by integrate() when the state stops being finite; carries every
/// finite sample produced before the blow-up.
class TruncatedTrajectoryError : public NumericalError {
 public:
  TruncatedTrajectoryError(const std::string& message, Trajectory partial);
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Autonomous vector field on flat phase vectors: writes dx/dt into the
/// second argument.
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

double potential(const SystemSpec& spec, std::span<const double> q);
double total_energy(const SystemSpec& spec, const PhaseState& s);
/// Gradient of the potential with respect to q.
std::vector<double> potential_gradient(const SystemSpec& spec, std::span<const double> q);

/// Exact Hamilton's equations: dq/dt = p, dp/dt = -dV/dq.
Velocity analytic_rhs(const SystemSpec& spec, const PhaseState& s);
/// The same field in flat form, suitable for the integrator and chaos code.
VectorField true_field(const SystemSpec& spec);

/// Energy above which orbits may leave the potential well. Henon-Heiles:
/// 1/(6 alpha^2), +inf at alpha = 0. Asymmetric: lowest saddle of V found
/// by Newton iteration from a ring of starting points. Morse: 0 in H units.
double escape_threshold(const SystemSpec& spec);

/// True when q lies in the potential well around the minimum: along the
/// ray from the origin the potential has not yet passed its peak. Always
/// true for Morse.
bool inside_well(const SystemSpec& spec, std::span<const double> q);

/// H at the bottom of the well (0 for the Henon-Heiles family, -1 for Morse).
double minimum_energy(const SystemSpec& spec);

/// Largest excitation energy (measured from the well bottom) admitted by
/// sample_state_at_energy.
double max_excitation(const SystemSpec& spec);

/// Draws a state whose energy above the well bottom equals `excitation`
/// (so H = excitation for Henon-Heiles and H = excitation - 1 for Morse).
/// Positions are uniform over the accessible well region, momentum
/// direction is uniform.
PhaseState sample_state_at_energy(const SystemSpec& spec, double excitation, std::mt19937_64& rng);

/// Single classical RK4 step on a flat state, in place.
void rk4_step(const VectorField& field, std::span<double> x, double dt);

/// Fixed-step RK4 with output decimated every dt_sample (an integer
/// multiple of dt_internal). Throws TruncatedTrajectoryError on non-finite
/// states.
Trajectory integrate(const VectorField& field, const PhaseState& s0, double dt_internal,
                     double t_end, double dt_sample);

/// integrate() with the true field, recording H(s0) as the trajectory energy.
Trajectory integrate_system(const SystemSpec& spec, const PhaseState& s0, double dt_internal,
                            double t_end, double dt_sample);

enum class CrossingDirection { Increasing, Decreasing, Both };

struct SectionPoint {
  double t = 0.0;
  double q = 0.0;  ///< position of the other degree of freedom
  double p = 0.0;  ///< momentum of the other degree of freedom
};

/// Crossings of q[coordinate_index] through crossing_value, linearly
/// interpolated between bracketing samples. Increasing crossings of q1
/// correspond to p1 > 0. Requires a two-degree-of-freedom trajectory.
std::vector<SectionPoint> poincare_section(const Trajectory& traj, std::size_t coordinate_index,
                                           double crossing_value,
                                           CrossingDirection direction = CrossingDirection::Increasing);

}  // namespace hamlearn
