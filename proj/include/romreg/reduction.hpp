#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <string>
#include <vector>

#include "romreg/core.hpp"

namespace romreg {

/// Truncated left-singular basis of a snapshot matrix plus the full singular
/// spectrum. No mean is subtracted before the decomposition.
struct PodBasis {
  Eigen::MatrixXd modes;            // N_h x N_r, orthonormal columns
  Eigen::VectorXd singular_values;  // full spectrum, non-increasing
  Index rank_selected = 0;
  double energy_captured = 0.0;
};

/// Rank selection: keep modes up to a cumulative energy threshold, or a
/// fixed count (clamped to the numerical rank of the matrix).
struct PodSelection {
  enum class Mode { energy, fixed };
  Mode mode = Mode::energy;
  double energy_threshold = 0.9999;
  Index fixed_rank = 0;

  static PodSelection energy(double threshold) {
    PodSelection s;
    s.mode = Mode::energy;
    s.energy_threshold = threshold;
    return s;
  }
  static PodSelection fixed(Index rank) {
    PodSelection s;
    s.mode = Mode::fixed;
    s.fixed_rank = rank;
    return s;
  }
};

// Singular values below this fraction of sigma_1 count as zero when the
// numerical rank is determined.
inline constexpr double kSingularValueFloor = 1e-13;

namespace detail {

inline Index numerical_rank(const Eigen::VectorXd& sigma) {
  if (sigma.size() == 0) return 0;
  const double floor = kSingularValueFloor * sigma[0];
  Index r = 0;
  while (r < sigma.size() && sigma[r] > floor) ++r;
  return r;
}

inline double cumulative_energy(const Eigen::VectorXd& sigma, Index m) {
  const double total = sigma.squaredNorm();
  if (total == 0.0) return 0.0;
  return sigma.head(m).squaredNorm() / total;
}

}  // namespace detail

inline PodBasis compute_pod(const Eigen::MatrixXd& S, const PodSelection& sel) {
  if (S.size() == 0) throw validation_error("compute_pod: empty matrix");
  if (!S.allFinite())
    throw validation_error("compute_pod: matrix contains non-finite entries");
  if (S.norm() == 0.0)
    throw validation_error("compute_pod: all-zero snapshot matrix");
  if (sel.mode == PodSelection::Mode::fixed && sel.fixed_rank <= 0)
    throw validation_error("compute_pod: fixed rank must be positive");
  if (sel.mode == PodSelection::Mode::energy &&
      !(sel.energy_threshold > 0.0 && sel.energy_threshold <= 1.0))
    throw validation_error("compute_pod: energy threshold must lie in (0, 1]");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU);
  PodBasis basis;
  basis.singular_values = svd.singularValues();

  const Index nrank = detail::numerical_rank(basis.singular_values);
  Index r = 0;
  if (sel.mode == PodSelection::Mode::fixed) {
    r = std::min(sel.fixed_rank, nrank);
  } else {
    r = nrank;
    for (Index m = 1; m <= nrank; ++m) {
      if (detail::cumulative_energy(basis.singular_values, m) >=
          sel.energy_threshold) {
        r = m;
        break;
      }
    }
  }
  basis.rank_selected = r;
  basis.modes = svd.matrixU().leftCols(r);
  basis.energy_captured = detail::cumulative_energy(basis.singular_values, r);
  return basis;
}

/// Cumulative energy E(m) for m = 1..spectrum length; non-decreasing, ends
/// at 1.
inline Eigen::VectorXd energy_curve(const PodBasis& basis) {
  const Eigen::VectorXd& s = basis.singular_values;
  Eigen::VectorXd curve(s.size());
  const double total = s.squaredNorm();
  double acc = 0.0;
  for (Index m = 0; m < s.size(); ++m) {
    acc += s[m] * s[m];
    curve[m] = acc / total;
  }
  return curve;
}

/// Temporal expansion coefficients, column i = c(times[i]).
struct CoefficientTable {
  std::vector<double> times;
  Eigen::MatrixXd coeffs;  // N_r x N_T
};

inline CoefficientTable project(const PodBasis& basis, const Eigen::MatrixXd& S,
                                const std::vector<double>& times) {
  if (S.rows() != basis.modes.rows())
    throw validation_error("project: row count " + std::to_string(S.rows()) +
                           " does not match basis length " +
                           std::to_string(basis.modes.rows()));
  if (static_cast<Index>(times.size()) != S.cols())
    throw validation_error("project: time stamp count mismatch");
  CoefficientTable table;
  table.times = times;
  table.coeffs = basis.modes.transpose() * S;
  return table;
}

inline Eigen::MatrixXd reconstruct(const PodBasis& basis,
                                   const CoefficientTable& table) {
  if (table.coeffs.rows() != basis.rank_selected)
    throw validation_error("reconstruct: coefficient rows " +
                           std::to_string(table.coeffs.rows()) +
                           " do not match basis rank " +
                           std::to_string(basis.rank_selected));
  return basis.modes * table.coeffs;
}

}  // namespace romreg
