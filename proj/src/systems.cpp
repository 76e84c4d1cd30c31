#include "hamlearn/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hamlearn {

namespace {

constexpr int kMaxSamplingAttempts = 1'000'000;

// Coefficients of the cubic part of the Henon-Heiles family potential,
// V = (q1^2 + q2^2)/2 + c1 q1^2 q2 - (c2/3) q2^3.
struct CubicCoefficients {
  double c1;
  double c2;
};

CubicCoefficients cubic_coefficients(const SystemSpec& spec) {
  if (spec.kind == SystemKind::HenonHeiles) return {spec.params[0], spec.params[0]};
  return {spec.params[0], spec.params[1]};
}

void require_dims(const SystemSpec& spec, std::size_t n, const char* what) {
  if (n != spec.dof()) {
    throw ContractError(std::string(what) + ": expected " + std::to_string(spec.dof()) +
                        " components, got " + std::to_string(n));
  }
}

// Cubic coefficient of V along the ray q = rho (cos t, sin t).
double ray_cubic(const CubicCoefficients& c, double theta) {
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  return c.c1 * ct * ct * st - c.c2 / 3.0 * st * st * st;
}

// Radius at which V first reaches `energy` along a ray with cubic
// coefficient `k`. Along the ray V = rho^2/2 + k rho^3 rises monotonically
// up to rho = -1/(3k) when k < 0, so bisection on that bracket is exact.
double ray_crossing(double k, double energy) {
  double hi = std::sqrt(2.0 * energy);
  if (k < 0.0) {
    hi = -1.0 / (3.0 * k);
    const double peak = 0.5 * hi * hi + k * hi * hi * hi;
    if (peak < energy * (1.0 - 1e-12)) {
      throw ContractError("sample_state_at_energy: energy above the escape threshold");
    }
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * mid * mid + k * mid * mid * mid < energy) lo = mid;
    else hi = mid;
  }
  return hi;
}

double henon_heiles_saddle_energy(const CubicCoefficients& c) {
  const double scale = std::max(std::abs(c.c1), std::abs(c.c2));
  if (scale == 0.0) return std::numeric_limits<double>::infinity();

  double best = std::numeric_limits<double>::infinity();
  constexpr int kAngles = 36;
  constexpr double kRadii[] = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  for (double r : kRadii) {
    for (int k = 0; k < kAngles; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / kAngles;
      double q1 = r / scale * std::cos(theta);
      double q2 = r / scale * std::sin(theta);
      bool converged = false;
      for (int it = 0; it < 100; ++it) {
        const double g1 = q1 + 2.0 * c.c1 * q1 * q2;
        const double g2 = q2 + c.c1 * q1 * q1 - c.c2 * q2 * q2;
        const double h11 = 1.0 + 2.0 * c.c1 * q2;
        const double h12 = 2.0 * c.c1 * q1;
        const double h22 = 1.0 - 2.0 * c.c2 * q2;
        const double det = h11 * h22 - h12 * h12;
        if (std::abs(g1) + std::abs(g2) < 1e-14 * (1.0 + std::abs(q1) + std::abs(q2))) {
          converged = true;
          break;
        }
        if (det == 0.0 || !std::isfinite(det)) break;
        q1 -= (h22 * g1 - h12 * g2) / det;
        q2 -= (h11 * g2 - h12 * g1) / det;
        if (!std::isfinite(q1) || !std::isfinite(q2)) break;
      }
      if (!converged) continue;
      if (std::hypot(q1, q2) < 1e-8) continue;  // the minimum at the origin
      const double h11 = 1.0 + 2.0 * c.c1 * q2;
      const double h12 = 2.0 * c.c1 * q1;
      const double h22 = 1.0 - 2.0 * c.c2 * q2;
      if (h11 * h22 - h12 * h12 >= 0.0) continue;  // not a saddle
      const double v = 0.5 * (q1 * q1 + q2 * q2) + c.c1 * q1 * q1 * q2 - c.c2 / 3.0 * q2 * q2 * q2;
      best = std::min(best, v);
    }
  }
  return best;
}

PhaseState sample_henon_heiles(const SystemSpec& spec, double energy, std::mt19937_64& rng) {
  const CubicCoefficients c = cubic_coefficients(spec);

  double box = 0.0;
  constexpr int kRays = 720;
  for (int k = 0; k < kRays; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / kRays;
    box = std::max(box, ray_crossing(ray_cubic(c, theta), energy));
  }
  box *= 1.02;

  std::uniform_real_distribution<double> coord(-box, box);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int attempt = 0; attempt < kMaxSamplingAttempts; ++attempt) {
    const double q1 = coord(rng);
    const double q2 = coord(rng);
    const std::vector<double> q{q1, q2};
    const double v = potential(spec, q);
    if (v >= energy || !inside_well(spec, q)) continue;
    const double magnitude = std::sqrt(2.0 * (energy - v));
    const double phi = angle(rng);
    return PhaseState({q1, q2}, {magnitude * std::cos(phi), magnitude * std::sin(phi)});
  }
  throw NumericalError("sample_state_at_energy: rejection sampling did not converge");
}

PhaseState sample_morse(const SystemSpec& spec, double excitation, std::mt19937_64& rng) {
  const double a = spec.params[0];
  const double h = excitation - 1.0;
  const double root = std::sqrt(excitation);
  const double lo = kMorseEquilibrium - std::log1p(root) / a;
  const double hi = kMorseEquilibrium - std::log1p(-root) / a;
  std::uniform_real_distribution<double> coord(std::min(lo, hi), std::max(lo, hi));
  std::bernoulli_distribution sign;
  for (int attempt = 0; attempt < kMaxSamplingAttempts; ++attempt) {
    const double x = coord(rng);
    const double v = potential(spec, std::vector<double>{x});
    if (v >= h) continue;
    const double magnitude = std::sqrt(2.0 * (h - v));
    return PhaseState({x}, {sign(rng) ? magnitude : -magnitude});
  }
  throw NumericalError("sample_state_at_energy: rejection sampling did not converge");
}

}  // namespace

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::HenonHeiles: return "henon_heiles";
    case SystemKind::AsymmetricHH: return "asymmetric_hh";
    case SystemKind::Morse: return "morse";
  }
  return "unknown";
}

SystemKind parse_system_kind(std::string_view name) {
  if (name == "henon_heiles" || name == "hh") return SystemKind::HenonHeiles;
  if (name == "asymmetric_hh" || name == "ahh") return SystemKind::AsymmetricHH;
  if (name == "morse") return SystemKind::Morse;
  throw ContractError("unknown system kind '" + std::string(name) + "'");
}

std::size_t param_count(SystemKind kind) { return kind == SystemKind::AsymmetricHH ? 2 : 1; }

std::size_t degrees_of_freedom(SystemKind kind) { return kind == SystemKind::Morse ? 1 : 2; }

SystemSpec SystemSpec::henon_heiles(double alpha) { return {SystemKind::HenonHeiles, {alpha}}; }

SystemSpec SystemSpec::asymmetric_hh(double alpha1, double alpha2) {
  return {SystemKind::AsymmetricHH, {alpha1, alpha2}};
}

SystemSpec SystemSpec::morse(double a) { return {SystemKind::Morse, {a}}; }

void SystemSpec::validate() const {
  if (params.size() != param_count(kind)) {
    throw ContractError(std::string(to_string(kind)) + " expects " +
                        std::to_string(param_count(kind)) + " parameters, got " +
                        std::to_string(params.size()));
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw ContractError("system parameters must be finite");
  }
  if (kind == SystemKind::Morse && params[0] <= 0.0) {
    throw ContractError("Morse width parameter a must be positive");
  }
}

PhaseState::PhaseState(std::vector<double> q, std::vector<double> p) {
  if (q.size() != p.size()) throw ContractError("PhaseState: q and p lengths differ");
  x_ = std::move(q);
  x_.insert(x_.end(), p.begin(), p.end());
}

PhaseState PhaseState::from_flat(std::span<const double> x) {
  if (x.size() % 2 != 0) throw ContractError("PhaseState: flat vector length must be even");
  PhaseState s;
  s.x_.assign(x.begin(), x.end());
  return s;
}

TruncatedTrajectoryError::TruncatedTrajectoryError(const std::string& message, Trajectory partial)
    : NumericalError(message), partial_(std::move(partial)) {}

double potential(const SystemSpec& spec, std::span<const double> q) {
  require_dims(spec, q.size(), "potential");
  if (spec.kind == SystemKind::Morse) {
    const double s = 1.0 - std::exp(-spec.params[0] * (q[0] - kMorseEquilibrium));
    return s * s - 1.0;
  }
  const CubicCoefficients c = cubic_coefficients(spec);
  const double q1 = q[0];
  const double q2 = q[1];
  return 0.5 * (q1 * q1 + q2 * q2) + c.c1 * q1 * q1 * q2 - c.c2 / 3.0 * q2 * q2 * q2;
}

std::vector<double> potential_gradient(const SystemSpec& spec, std::span<const double> q) {
  require_dims(spec, q.size(), "potential_gradient");
  if (spec.kind == SystemKind::Morse) {
    const double a = spec.params[0];
    const double e = std::exp(-a * (q[0] - kMorseEquilibrium));
    return {2.0 * a * e * (1.0 - e)};
  }
  const CubicCoefficients c = cubic_coefficients(spec);
  const double q1 = q[0];
  const double q2 = q[1];
  return {q1 + 2.0 * c.c1 * q1 * q2, q2 + c.c1 * q1 * q1 - c.c2 * q2 * q2};
}

double total_energy(const SystemSpec& spec, const PhaseState& s) {
  require_dims(spec, s.dof(), "total_energy");
  double kinetic = 0.0;
  for (double pi : s.p()) kinetic += 0.5 * pi * pi;
  return kinetic + potential(spec, s.q());
}

Velocity analytic_rhs(const SystemSpec& spec, const PhaseState& s) {
  require_dims(spec, s.dof(), "analytic_rhs");
  std::vector<double> grad = potential_gradient(spec, s.q());
  for (double& g : grad) g = -g;
  return Velocity(std::vector<double>(s.p().begin(), s.p().end()), std::move(grad));
}

VectorField true_field(const SystemSpec& spec) {
  spec.validate();
  if (spec.kind == SystemKind::Morse) {
    const double a = spec.params[0];
    return [a](std::span<const double> x, std::span<double> dx) {
      const double e = std::exp(-a * (x[0] - kMorseEquilibrium));
      dx[0] = x[1];
      dx[1] = -2.0 * a * e * (1.0 - e);
    };
  }
  const CubicCoefficients c = cubic_coefficients(spec);
  return [c](std::span<const double> x, std::span<double> dx) {
    const double q1 = x[0];
    const double q2 = x[1];
    dx[0] = x[2];
    dx[1] = x[3];
    dx[2] = -(q1 + 2.0 * c.c1 * q1 * q2);
    dx[3] = -(q2 + c.c1 * q1 * q1 - c.c2 * q2 * q2);
  };
}

double escape_threshold(const SystemSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case SystemKind::HenonHeiles: {
      const double alpha = spec.params[0];
      if (alpha == 0.0) return std::numeric_limits<double>::infinity();
      return 1.0 / (6.0 * alpha * alpha);
    }
    case SystemKind::AsymmetricHH:
      return henon_heiles_saddle_energy(cubic_coefficients(spec));
    case SystemKind::Morse:
      return 0.0;
  }
  return 0.0;
}

bool inside_well(const SystemSpec& spec, std::span<const double> q) {
  require_dims(spec, q.size(), "inside_well");
  if (spec.kind == SystemKind::Morse) return true;
  const double k = ray_cubic(cubic_coefficients(spec), std::atan2(q[1], q[0]));
  return k >= 0.0 || std::hypot(q[0], q[1]) <= -1.0 / (3.0 * k);
}

double minimum_energy(const SystemSpec& spec) {
  return spec.kind == SystemKind::Morse ? -1.0 : 0.0;
}

double max_excitation(const SystemSpec& spec) {
  return escape_threshold(spec) - minimum_energy(spec);
}

PhaseState sample_state_at_energy(const SystemSpec& spec, double excitation, std::mt19937_64& rng) {
  spec.validate();
  if (!(excitation > 0.0)) {
    throw ContractError("sample_state_at_energy: energy must lie above the well bottom");
  }
  const double limit = max_excitation(spec);
  // The escape energy itself is admitted only inside the reference window
  // E <= 1/6 used for the Henon-Heiles family; the channel is closed there.
  const bool closed_boundary = spec.kind != SystemKind::Morse && excitation == limit &&
                               excitation <= kReferenceEnergy;
  if (!(excitation < limit) && !closed_boundary) {
    throw ContractError("sample_state_at_energy: energy " + std::to_string(excitation) +
                        " not below escape threshold " + std::to_string(limit));
  }
  if (spec.kind == SystemKind::Morse) return sample_morse(spec, excitation, rng);
  return sample_henon_heiles(spec, excitation, rng);
}

}  // namespace hamlearn
