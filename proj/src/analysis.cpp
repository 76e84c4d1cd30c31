#include "hamlearn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hamlearn::analysis {

namespace {

double lerp_axis(double lo, double hi, int i, int n) {
  return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

double PotentialGrid::x(int ix) const {
  return lerp_axis(config.x_min, config.x_max, ix, config.resolution);
}

double PotentialGrid::y(int iy) const {
  return lerp_axis(config.y_min, config.y_max, iy, config.resolution);
}

PotentialErrorResult potential_error(const nn::HamiltonianFn& predictor, const SystemSpec& spec,
                                     const GridConfig& config) {
  spec.validate();
  require(spec.dof() == 2, "potential_error: needs a two-degree-of-freedom system");
  require(config.resolution >= 2, "potential_error: resolution must be >= 2");

  PotentialErrorResult result;
  PotentialGrid& grid = result.grid;
  grid.config = config;
  if (std::isnan(grid.config.threshold)) {
    grid.config.threshold = std::min(kReferenceEnergy, escape_threshold(spec));
  }
  const int n = config.resolution;
  const auto k = static_cast<Eigen::Index>(spec.params.size());

  Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(k + 4, static_cast<Eigen::Index>(n) * n);
  grid.values_true.resize(n, n);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> well(n, n);
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      const Eigen::Index col = static_cast<Eigen::Index>(ix) * n + iy;
      const std::vector<double> q{grid.x(ix), grid.y(iy)};
      for (Eigen::Index j = 0; j < k; ++j) inputs(j, col) = spec.params[static_cast<std::size_t>(j)];
      inputs(k, col) = q[0];
      inputs(k + 1, col) = q[1];
      grid.values_true(ix, iy) = potential(spec, q);
      well(ix, iy) = inside_well(spec, q) && grid.values_true(ix, iy) < grid.config.threshold;
    }
  }
  const Eigen::RowVectorXd h = predictor(inputs);
  require(h.size() == inputs.cols(), "potential_error: predictor returned the wrong width");

  double offset = std::numeric_limits<double>::infinity();
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      if (well(ix, iy)) offset = std::min(offset, h(static_cast<Eigen::Index>(ix) * n + iy));
    }
  }
  if (!std::isfinite(offset)) throw NumericalError("potential_error: empty integration domain");
  grid.offset = offset;

  grid.values_pred.resize(n, n);
  grid.mask.resize(n, n);
  double abs_sum = 0.0;
  double true_sum = 0.0;
  long count = 0;
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      const double vp = h(static_cast<Eigen::Index>(ix) * n + iy) - offset;
      const double vt = grid.values_true(ix, iy);
      grid.values_pred(ix, iy) = vp;
      const bool in = inside_well(spec, std::vector<double>{grid.x(ix), grid.y(iy)}) &&
                      std::isfinite(vp) && std::max(vp, vt) < grid.config.threshold;
      grid.mask(ix, iy) = in;
      if (!in) continue;
      abs_sum += std::abs(vp - vt);
      true_sum += vt;
      ++count;
    }
  }
  if (count == 0 || true_sum <= 0.0) {
    throw NumericalError("potential_error: mask is empty, metric undefined");
  }
  result.relative_error = (abs_sum / static_cast<double>(count)) / (true_sum / static_cast<double>(count));
  return result;
}

CsvTable potential_grid_table(const PotentialGrid& grid) {
  CsvTable table{{"x", "y", "V_true", "V_pred", "in_mask"}, {}};
  const int n = grid.config.resolution;
  for (int ix = 0; ix < n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      table.rows.push_back({grid.x(ix), grid.y(iy), grid.values_true(ix, iy),
                            grid.values_pred(ix, iy), grid.mask(ix, iy) ? 1.0 : 0.0});
    }
  }
  return table;
}

PotentialProfile potential_profile(const nn::HamiltonianFn& predictor, const SystemSpec& spec,
                                   double x_min, double x_max, int points) {
  spec.validate();
  require(spec.dof() == 1, "potential_profile: needs a one-degree-of-freedom system");
  require(points >= 2 && x_max > x_min, "potential_profile: bad sampling range");
  const auto k = static_cast<Eigen::Index>(spec.params.size());
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(k + 2, points);
  PotentialProfile profile;
  for (int i = 0; i < points; ++i) {
    const double x = lerp_axis(x_min, x_max, i, points);
    for (Eigen::Index j = 0; j < k; ++j) inputs(j, i) = spec.params[static_cast<std::size_t>(j)];
    inputs(k, i) = x;
    profile.x.push_back(x);
    profile.v_true.push_back(potential(spec, std::vector<double>{x}));
  }
  const Eigen::RowVectorXd h = predictor(inputs);
  const double shift = minimum_energy(spec) - h.minCoeff();
  for (int i = 0; i < points; ++i) profile.v_pred.push_back(h(i) + shift);
  return profile;
}

CsvTable potential_profile_table(const PotentialProfile& profile) {
  CsvTable table{{"x", "V_true", "V_pred"}, {}};
  for (std::size_t i = 0; i < profile.x.size(); ++i) {
    table.rows.push_back({profile.x[i], profile.v_true[i], profile.v_pred[i]});
  }
  return table;
}

const std::vector<Exponents>& taylor_exponents() {
  static const std::vector<Exponents> exps = [] {
    std::vector<Exponents> out;
    for (int degree = 0; degree <= 3; ++degree) {
      for (int a = degree; a >= 0; --a) {
        for (int b = degree - a; b >= 0; --b) {
          for (int c = degree - a - b; c >= 0; --c) out.push_back({a, b, c, degree - a - b - c});
        }
      }
    }
    return out;
  }();
  return exps;
}

double TaylorCoefficients::at(int i1, int i2, int i3, int i4) const {
  const Exponents key{i1, i2, i3, i4};
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] == key) return beta[i];
  }
  throw ContractError("TaylorCoefficients: exponent tuple not in the cubic basis");
}

TaylorCoefficients taylor_fit(const nn::HamiltonianFn& predictor, const SystemSpec& spec,
                              int n_samples, std::uint64_t seed, const TaylorConfig& config) {
  spec.validate();
  require(spec.dof() == 2, "taylor_fit: needs a two-degree-of-freedom system");
  const auto& exps = taylor_exponents();
  const auto n_terms = static_cast<int>(exps.size());
  require(n_samples >= n_terms, "taylor_fit: need at least 35 samples");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-config.box, config.box);
  const auto k = static_cast<Eigen::Index>(spec.params.size());
  Eigen::MatrixXd inputs(k + 4, n_samples);
  int accepted = 0;
  for (long attempt = 0; accepted < n_samples; ++attempt) {
    if (attempt > 1000L * n_samples) throw NumericalError("taylor_fit: sampling region is empty");
    const PhaseState s({coord(rng), coord(rng)}, {coord(rng), coord(rng)});
    if (total_energy(spec, s) >= config.threshold) continue;
    for (Eigen::Index j = 0; j < k; ++j) inputs(j, accepted) = spec.params[static_cast<std::size_t>(j)];
    for (Eigen::Index j = 0; j < 4; ++j) inputs(k + j, accepted) = s.flat()[static_cast<std::size_t>(j)];
    ++accepted;
  }
  const Eigen::RowVectorXd h = predictor(inputs);

  Eigen::MatrixXd design(n_samples, n_terms);
  for (int r = 0; r < n_samples; ++r) {
    for (int t = 0; t < n_terms; ++t) {
      double m = 1.0;
      for (int v = 0; v < 4; ++v) m *= std::pow(inputs(k + v, r), exps[static_cast<std::size_t>(t)][v]);
      design(r, t) = m;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < n_terms) throw NumericalError("taylor_fit: design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(h.transpose());

  TaylorCoefficients out{exps, std::vector<double>(beta.data(), beta.data() + beta.size())};
  return out;
}

CsvTable taylor_table(const TaylorCoefficients& coeffs) {
  CsvTable table{{"i1", "i2", "i3", "i4", "beta"}, {}};
  for (std::size_t i = 0; i < coeffs.exponents.size(); ++i) {
    const auto& e = coeffs.exponents[i];
    table.rows.push_back({double(e[0]), double(e[1]), double(e[2]), double(e[3]), coeffs.beta[i]});
  }
  return table;
}

}  // namespace hamlearn::analysis
