#include "hamlearn/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hamlearn/error.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/seeds.hpp"

namespace hamlearn::chaos {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

// Advances a state by RK4 and produces the tangent map of that step.
class TangentStepper {
 public:
  TangentStepper(const VectorField& field, Eigen::Index dim, const DiagnosticOptions& options)
      : field_(field), options_(options), dim_(dim) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &stage_, &plus_, &minus_, &fp_, &fm_}) v->resize(dim);
    for (auto* m : {&j_, &k1m_, &k2m_, &k3m_, &k4m_, &map_}) m->resize(dim, dim);
  }

  // Replaces x by its RK4 successor and stores the step's tangent map.
  void step(Eigen::VectorXd& x, double h) {
    const auto eye = Eigen::MatrixXd::Identity(dim_, dim_);
    eval(x, k1_);
    if (options_.tangent == TangentMap::Euler) {
      jacobian(x, j_);
      map_.noalias() = eye + h * j_;
    } else {
      jacobian(x, k1m_);
    }
    stage_ = x + 0.5 * h * k1_;
    eval(stage_, k2_);
    if (options_.tangent == TangentMap::Rk4) {
      jacobian(stage_, j_);
      k2m_.noalias() = j_ + 0.5 * h * j_ * k1m_;
    }
    stage_ = x + 0.5 * h * k2_;
    eval(stage_, k3_);
    if (options_.tangent == TangentMap::Rk4) {
      jacobian(stage_, j_);
      k3m_.noalias() = j_ + 0.5 * h * j_ * k2m_;
    }
    stage_ = x + h * k3_;
    eval(stage_, k4_);
    if (options_.tangent == TangentMap::Rk4) {
      jacobian(stage_, j_);
      k4m_.noalias() = j_ + h * j_ * k3m_;
      map_.noalias() = eye + (h / 6.0) * (k1m_ + 2.0 * k2m_ + 2.0 * k3m_ + k4m_);
    }
    x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

  const Eigen::MatrixXd& map() const { return map_; }

 private:
  void eval(const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    field_(std::span<const double>(x.data(), static_cast<std::size_t>(dim_)),
           std::span<double>(out.data(), static_cast<std::size_t>(dim_)));
  }

  void jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& out) {
    const double h = options_.jacobian_step;
    for (Eigen::Index c = 0; c < dim_; ++c) {
      plus_ = x;
      minus_ = x;
      plus_(c) += h;
      minus_(c) -= h;
      eval(plus_, fp_);
      eval(minus_, fm_);
      out.col(c) = (fp_ - fm_) / (2.0 * h);
    }
  }

  const VectorField& field_;
  const DiagnosticOptions& options_;
  Eigen::Index dim_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, stage_, plus_, minus_, fp_, fm_;
  Eigen::MatrixXd j_, k1m_, k2m_, k3m_, k4m_, map_;
};

struct PassRequest {
  bool lyapunov = true;
  bool alignment = true;
  Eigen::VectorXd u1;
  Eigen::VectorXd u2;
};

void check_pass_args(const PhaseState& s0, double dt, long n_steps,
                     const DiagnosticOptions& options) {
  require(s0.dim() >= 2, "chaos: empty initial state");
  require(dt > 0.0 && std::isfinite(dt), "chaos: dt must be positive");
  require(n_steps >= 1, "chaos: need at least one step");
  require(options.jacobian_step > 0.0, "chaos: Jacobian step must be positive");
  require(options.divergence_radius > 0.0, "chaos: divergence radius must be positive");
}

OrbitDiagnostics run_pass(const VectorField& field, const PhaseState& s0, double dt, long n_steps,
                          const DiagnosticOptions& options, PassRequest request) {
  check_pass_args(s0, dt, n_steps, options);
  const auto dim = static_cast<Eigen::Index>(s0.dim());
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s0.flat().data(), dim);
  TangentStepper stepper(field, dim, options);

  OrbitDiagnostics out;
  out.lyapunov.dt = dt;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd next(dim, dim);
  Eigen::VectorXd log_sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd v(dim);
  Eigen::VectorXd w1(dim);
  Eigen::VectorXd w2(dim);
  if (request.alignment && options.keep_gamma_series) {
    out.alignment.gamma_series.reserve(static_cast<std::size_t>(n_steps));
  }

  bool valid = true;
  long done = 0;
  for (; done < n_steps; ++done) {
    stepper.step(x, dt);
    if (!all_finite(x) || x.cwiseAbs().maxCoeff() > options.divergence_radius) {
      valid = false;
      break;
    }
    const Eigen::MatrixXd& map = stepper.map();
    if (request.lyapunov) {
      next.noalias() = map * basis;
      // Modified Gram-Schmidt with a positive diagonal.
      for (Eigen::Index j = 0; j < dim; ++j) {
        v = next.col(j);
        for (Eigen::Index i = 0; i < j; ++i) v -= basis.col(i).dot(v) * basis.col(i);
        const double r = v.norm();
        if (!(r > 0.0) || !std::isfinite(r)) {
          valid = false;
          break;
        }
        log_sum(j) += std::log(r);
        basis.col(j) = v / r;
      }
      if (!valid) break;
    }
    if (request.alignment) {
      w1.noalias() = map * request.u1;
      w2.noalias() = map * request.u2;
      const double n1 = w1.norm();
      const double n2 = w2.norm();
      if (!(n1 > 0.0) || !(n2 > 0.0) || !std::isfinite(n1) || !std::isfinite(n2)) {
        valid = false;
        break;
      }
      request.u1 = w1 / n1;
      request.u2 = w2 / n2;
      const double gamma =
          std::min((request.u1 + request.u2).norm(), (request.u1 - request.u2).norm());
      out.alignment.gamma_min = std::min(out.alignment.gamma_min, gamma);
      if (options.keep_gamma_series) out.alignment.gamma_series.push_back(gamma);
    }
  }

  out.lyapunov.n_steps = done;
  out.lyapunov.valid = valid;
  out.alignment.valid = valid;
  if (request.lyapunov) {
    const double span = static_cast<double>(std::max(done, 1L)) * dt;
    out.lyapunov.spectrum.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) {
      out.lyapunov.spectrum[static_cast<std::size_t>(j)] = log_sum(j) / span;
    }
    std::sort(out.lyapunov.spectrum.begin(), out.lyapunov.spectrum.end(), std::greater<>());
  }
  return out;
}

PassRequest unit_pair(Eigen::Index dim) {
  PassRequest r;
  r.u1 = Eigen::VectorXd::Unit(dim, 0);
  r.u2 = Eigen::VectorXd::Unit(dim, 1);
  return r;
}

}  // namespace

Eigen::MatrixXd jacobian_fd(const VectorField& field, std::span<const double> state, double h) {
  require(h > 0.0 && std::isfinite(h), "jacobian_fd: h must be positive");
  const auto dim = static_cast<Eigen::Index>(state.size());
  Eigen::MatrixXd jac(dim, dim);
  std::vector<double> plus(state.begin(), state.end());
  std::vector<double> minus(state.begin(), state.end());
  std::vector<double> fp(state.size());
  std::vector<double> fm(state.size());
  for (Eigen::Index c = 0; c < dim; ++c) {
    const auto i = static_cast<std::size_t>(c);
    plus[i] = state[i] + h;
    minus[i] = state[i] - h;
    field(plus, fp);
    field(minus, fm);
    plus[i] = state[i];
    minus[i] = state[i];
    for (Eigen::Index r = 0; r < dim; ++r) {
      const auto k = static_cast<std::size_t>(r);
      jac(r, c) = (fp[k] - fm[k]) / (2.0 * h);
    }
  }
  if (!jac.allFinite()) throw NumericalError("jacobian_fd: field is not finite near the state");
  return jac;
}

double LyapunovResult::max_exponent() const {
  require(!spectrum.empty(), "LyapunovResult: empty spectrum");
  return spectrum.front();
}

OrbitDiagnostics orbit_diagnostics(const VectorField& field, const PhaseState& s0, double dt,
                                   long n_steps, const DiagnosticOptions& options) {
  return run_pass(field, s0, dt, n_steps, options, unit_pair(static_cast<Eigen::Index>(s0.dim())));
}

LyapunovResult lyapunov_spectrum(const VectorField& field, const PhaseState& s0, double dt,
                                 long n_steps, const DiagnosticOptions& options) {
  PassRequest request;
  request.alignment = false;
  return run_pass(field, s0, dt, n_steps, options, request).lyapunov;
}

AlignmentResult alignment_index(const VectorField& field, const PhaseState& s0, double dt,
                                long n_steps, const DiagnosticOptions& options) {
  PassRequest request = unit_pair(static_cast<Eigen::Index>(s0.dim()));
  request.lyapunov = false;
  return run_pass(field, s0, dt, n_steps, options, request).alignment;
}

AlignmentResult alignment_index(const VectorField& field, const PhaseState& s0,
                                const Eigen::VectorXd& u1, const Eigen::VectorXd& u2, double dt,
                                long n_steps, const DiagnosticOptions& options) {
  const auto dim = static_cast<Eigen::Index>(s0.dim());
  require(u1.size() == dim && u2.size() == dim, "alignment_index: vector size mismatch");
  require(u1.norm() > 0.0 && u2.norm() > 0.0, "alignment_index: zero deviation vector");
  PassRequest request;
  request.lyapunov = false;
  request.u1 = u1.normalized();
  request.u2 = u2.normalized();
  return run_pass(field, s0, dt, n_steps, options, request).alignment;
}

const char* to_string(Regime regime) {
  return regime == Regime::Chaotic ? "chaotic" : "regular";
}

Regime classify(const LyapunovResult& lyap, const AlignmentResult& align,
                const ClassifyThresholds& thresholds) {
  const bool positive = !lyap.spectrum.empty() && lyap.spectrum.front() > thresholds.lambda;
  return positive && align.gamma_min < thresholds.gamma ? Regime::Chaotic : Regime::Regular;
}

void SweepConfig::validate() const {
  require(!alphas.empty(), "chaos_sweep: empty alpha grid");
  for (double a : alphas) require(std::isfinite(a), "chaos_sweep: non-finite alpha");
  require(n_ic >= 1, "chaos_sweep: n_ic must be >= 1");
  require(energy >= 0.0 && std::isfinite(energy), "chaos_sweep: energy must be >= 0");
  require(dt > 0.0, "chaos_sweep: dt must be positive");
  require(n_steps >= 1, "chaos_sweep: n_steps must be >= 1");
}

double ChaosReport::transition_alpha(double level) const {
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (n_valid[i] > 0 && f_c[i] > level) return alphas[i];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

ChaosReport chaos_sweep(const SpecFactory& spec_of, const FieldFactory& field_of,
                        const SweepConfig& config) {
  config.validate();
  require(static_cast<bool>(spec_of) && static_cast<bool>(field_of), "chaos_sweep: missing factory");
  const std::size_t n_alpha = config.alphas.size();
  const auto n_ic = static_cast<std::size_t>(config.n_ic);

  std::vector<SystemSpec> specs;
  for (double a : config.alphas) {
    specs.push_back(spec_of(a));
    specs.back().validate();
    require(config.energy <= max_excitation(specs.back()),
            "chaos_sweep: energy exceeds the escape threshold at alpha = " + format_double(a));
  }

  std::vector<OrbitRecord> records(n_alpha * n_ic);
  parallel_for(records.size(), config.jobs, [&](std::size_t task) {
    const std::size_t ia = task / n_ic;
    const std::size_t ic = task % n_ic;
    const SystemSpec& spec = specs[ia];
    std::mt19937_64 rng(derive_seed(config.seed, {ia, ic}));
    OrbitRecord& rec = records[task];
    rec.alpha = config.alphas[ia];
    rec.ic_index = static_cast<int>(ic);
    rec.initial = sample_state_at_energy(spec, config.energy, rng);
    const VectorField field = field_of(spec);
    OrbitDiagnostics d;
    try {
      d = orbit_diagnostics(field, rec.initial, config.dt, config.n_steps, config.diagnostics);
    } catch (const NumericalError&) {
      rec.valid = false;
      return;
    }
    rec.valid = d.lyapunov.valid;
    rec.lambda_max = d.lyapunov.spectrum.front();
    rec.gamma_min = d.alignment.gamma_min;
    rec.regime = classify(d.lyapunov, d.alignment, config.thresholds);
  });

  ChaosReport report;
  report.alphas = config.alphas;
  report.n_initial_conditions = config.n_ic;
  report.energy = config.energy;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ia = 0; ia < n_alpha; ++ia) {
    double lam = -std::numeric_limits<double>::infinity();
    double gam = std::numeric_limits<double>::infinity();
    int valid = 0;
    int chaotic = 0;
    for (std::size_t ic = 0; ic < n_ic; ++ic) {
      const OrbitRecord& rec = records[ia * n_ic + ic];
      if (!rec.valid) continue;
      ++valid;
      lam = std::max(lam, rec.lambda_max);
      gam = std::min(gam, rec.gamma_min);
      if (rec.regime == Regime::Chaotic) ++chaotic;
    }
    report.lambda_M.push_back(valid > 0 ? lam : nan);
    report.gamma_m.push_back(valid > 0 ? gam : nan);
    report.f_c.push_back(valid > 0 ? static_cast<double>(chaotic) / valid : 0.0);
    report.n_valid.push_back(valid);
  }
  if (config.keep_orbits) report.orbits = std::move(records);
  return report;
}

CsvTable chaos_report_table(const ChaosReport& report) {
  CsvTable table{{"alpha", "lambda_M", "gamma_m", "f_c", "n_valid"}, {}};
  for (std::size_t i = 0; i < report.alphas.size(); ++i) {
    table.rows.push_back({report.alphas[i], report.lambda_M[i], report.gamma_m[i], report.f_c[i],
                          static_cast<double>(report.n_valid[i])});
  }
  return table;
}

CsvTable chaos_orbit_table(const ChaosReport& report) {
  CsvTable table{{"alpha", "ic"}, {}};
  const std::size_t dof = report.orbits.empty() ? 2 : report.orbits.front().initial.dof();
  for (std::size_t i = 1; i <= dof; ++i) table.header.push_back("q" + std::to_string(i));
  for (std::size_t i = 1; i <= dof; ++i) table.header.push_back("p" + std::to_string(i));
  for (const char* h : {"lambda_max", "gamma_min", "valid", "chaotic"}) table.header.push_back(h);
  for (const auto& rec : report.orbits) {
    std::vector<double> row{rec.alpha, static_cast<double>(rec.ic_index)};
    for (double v : rec.initial.flat()) row.push_back(v);
    row.push_back(rec.lambda_max);
    row.push_back(rec.gamma_min);
    row.push_back(rec.valid ? 1.0 : 0.0);
    row.push_back(rec.regime == Regime::Chaotic ? 1.0 : 0.0);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace hamlearn::chaos
