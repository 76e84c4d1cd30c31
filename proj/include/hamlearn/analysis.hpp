#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hamlearn/csv.hpp"
#include "hamlearn/network.hpp"
#include "hamlearn/systems.hpp"

namespace hamlearn::analysis {

struct GridConfig {
  double x_min = -1.2;
  double x_max = 1.2;
  double y_min = -1.2;
  double y_max = 1.2;
  int resolution = 101;
  /// Mask level; NaN selects min(1/6, escape threshold).
  double threshold = std::numeric_limits<double>::quiet_NaN();
};

/// Potential maps on a resolution x resolution grid, indexed (ix, iy).
struct PotentialGrid {
  GridConfig config;
  double offset = 0.0;  ///< C = min H_pred over the well
  Eigen::MatrixXd values_true;
  Eigen::MatrixXd values_pred;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;

  double x(int ix) const;
  double y(int iy) const;
};

struct PotentialErrorResult {
  double relative_error = 0.0;  ///< mean |V_pred - V_true| / mean V_true over the mask
  PotentialGrid grid;
};

/// Relative potential error of a predicted Hamiltonian. V_pred is H_pred at
/// zero momentum minus its minimum over the well; the average runs over
/// cells inside the well where max(V_pred, V_true) stays below the
/// threshold. Throws NumericalError when the mask is empty.
PotentialErrorResult potential_error(const nn::HamiltonianFn& predictor, const SystemSpec& spec,
                                     const GridConfig& config = {});

/// x, y, V_true, V_pred, in_mask.
CsvTable potential_grid_table(const PotentialGrid& grid);

struct PotentialProfile {
  std::vector<double> x;
  std::vector<double> v_true;
  std::vector<double> v_pred;
};

/// One-dimensional potential of a single-degree-of-freedom system. The
/// predicted curve is shifted so its minimum over the sampled range equals
/// the true well bottom.
PotentialProfile potential_profile(const nn::HamiltonianFn& predictor, const SystemSpec& spec,
                                   double x_min, double x_max, int points);

CsvTable potential_profile_table(const PotentialProfile& profile);

using Exponents = std::array<int, 4>;

/// All 35 exponent tuples with total degree <= 3, ordered by degree then
/// lexicographically descending.
const std::vector<Exponents>& taylor_exponents();

struct TaylorCoefficients {
  std::vector<Exponents> exponents;
  std::vector<double> beta;

  /// Coefficient of q1^i1 q2^i2 p1^i3 p2^i4.
  double at(int i1, int i2, int i3, int i4) const;
};

struct TaylorConfig {
  double box = 0.7;  ///< half-width of the sampling cube in (q, p)
  double threshold = kReferenceEnergy;
};

/// Least-squares fit of the predicted H at fixed parameters against the 35
/// cubic monomials, sampled uniformly in the cube and kept where the true H
/// lies below the threshold. Throws NumericalError on a rank-deficient
/// design matrix.
TaylorCoefficients taylor_fit(const nn::HamiltonianFn& predictor, const SystemSpec& spec,
                              int n_samples, std::uint64_t seed, const TaylorConfig& config = {});

/// i1, i2, i3, i4, beta.
CsvTable taylor_table(const TaylorCoefficients& coeffs);

}  // namespace hamlearn::analysis
