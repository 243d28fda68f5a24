#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "romreg/core.hpp"
#include "romreg/reduction.hpp"
#include "romreg/registration.hpp"

namespace romreg {

enum class RbfKernel { gaussian, multiquadric, thin_plate };

/// Behaviour of the coefficient regression outside the training interval.
/// The chronological train/test split means every test query extrapolates;
/// clamping to the nearest knot keeps predictions bounded there, while
/// `native` evaluates the kernel expansion as-is.
enum class RbfExtrapolation { native, clamp_to_nearest_knot };

struct RbfConfig {
  RbfKernel kernel = RbfKernel::gaussian;
  std::optional<double> shape_parameter;  // default: 1 / mean knot gap
  double ridge = 0.0;
  RbfExtrapolation extrapolation = RbfExtrapolation::clamp_to_nearest_knot;
};

inline const char* to_string(RbfKernel k) {
  switch (k) {
    case RbfKernel::gaussian: return "gaussian";
    case RbfKernel::multiquadric: return "multiquadric";
    case RbfKernel::thin_plate: return "thin_plate";
  }
  return "?";
}

inline const char* to_string(RbfExtrapolation e) {
  return e == RbfExtrapolation::native ? "native" : "clamp_to_nearest_knot";
}

namespace detail {

inline double rbf_phi(RbfKernel kernel, double eps, double d) {
  const double r = eps * d;
  switch (kernel) {
    case RbfKernel::gaussian: return std::exp(-r * r);
    case RbfKernel::multiquadric: return std::sqrt(1.0 + r * r);
    case RbfKernel::thin_plate: return r > 0.0 ? r * r * std::log(r) : 0.0;
  }
  return 0.0;
}

inline double mean_gap(const std::vector<double>& t) {
  return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

}  // namespace detail

/// Kernel interpolant mapping time to the reduced coefficient vector.
struct RbfModel {
  std::vector<double> centers;   // training times
  Eigen::MatrixXd weights;       // N_r x N_train
  RbfKernel kernel = RbfKernel::gaussian;
  double shape_parameter = 1.0;
  RbfExtrapolation extrapolation = RbfExtrapolation::clamp_to_nearest_knot;
};

/// Interpolate the coefficient table with radial basis functions: one dense
/// symmetric solve of the N_train x N_train kernel matrix.
inline RbfModel fit_rbf(const CoefficientTable& table,
                        const RbfConfig& config = {}) {
  const Index n = static_cast<Index>(table.times.size());
  if (n < 2) throw validation_error("fit_rbf: need at least 2 training times");
  if (table.coeffs.cols() != n)
    throw validation_error("fit_rbf: coefficient column count mismatch");
  if (!table.coeffs.allFinite())
    throw validation_error("fit_rbf: coefficients contain non-finite entries");
  for (Index i = 0; i + 1 < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (table.times[static_cast<std::size_t>(i)] ==
          table.times[static_cast<std::size_t>(j)])
        throw validation_error(
            "fit_rbf: duplicate training times t[" + std::to_string(i) +
            "] = t[" + std::to_string(j) + "] = " +
            std::to_string(table.times[static_cast<std::size_t>(i)]));
    }
  }

  RbfModel model;
  model.centers = table.times;
  model.kernel = config.kernel;
  model.extrapolation = config.extrapolation;
  std::vector<double> sorted = table.times;
  std::sort(sorted.begin(), sorted.end());
  model.shape_parameter =
      config.shape_parameter.value_or(1.0 / detail::mean_gap(sorted));
  if (!(model.shape_parameter > 0.0))
    throw validation_error("fit_rbf: shape parameter must be positive");

  Eigen::MatrixXd A(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double d = std::abs(table.times[static_cast<std::size_t>(i)] -
                                table.times[static_cast<std::size_t>(j)]);
      const double v = detail::rbf_phi(model.kernel, model.shape_parameter, d);
      A(i, j) = v;
      A(j, i) = v;
    }
  }
  if (config.ridge != 0.0) A.diagonal().array() += config.ridge;

  const Eigen::MatrixXd rhs = table.coeffs.transpose();  // n x N_r
  const Eigen::MatrixXd W = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(rhs);
  const double scale = 1.0 + table.coeffs.cwiseAbs().maxCoeff();
  const double residual = (A * W - rhs).cwiseAbs().maxCoeff();
  if (!W.allFinite() || residual > 1e-8 * scale)
    throw solver_error(
        "fit_rbf: kernel system solve residual " + std::to_string(residual) +
        " exceeds tolerance; the kernel matrix is ill-conditioned -- consider "
        "a ridge term (config.ridge > 0) or a smaller shape parameter");
  model.weights = W.transpose();
  return model;
}

/// Evaluate the interpolant at time t. Defined for all real t; under the
/// clamp rule, queries outside the knot range evaluate at the nearest knot.
inline Eigen::VectorXd eval_rbf(const RbfModel& model, double t) {
  double tq = t;
  if (model.extrapolation == RbfExtrapolation::clamp_to_nearest_knot) {
    const auto [lo, hi] =
        std::minmax_element(model.centers.begin(), model.centers.end());
    tq = std::clamp(tq, *lo, *hi);
  }
  const Index n = static_cast<Index>(model.centers.size());
  Eigen::VectorXd phi(n);
  for (Index j = 0; j < n; ++j)
    phi[j] = detail::rbf_phi(model.kernel, model.shape_parameter,
                             std::abs(tq - model.centers[static_cast<std::size_t>(j)]));
  return model.weights * phi;
}

enum class ShiftExtrapolation { last_segment_slope, least_squares_line };

inline const char* to_string(ShiftExtrapolation e) {
  return e == ShiftExtrapolation::last_segment_slope ? "last_segment_slope"
                                                     : "least_squares_line";
}

/// Piecewise-linear map from time to per-axis shift lags. Queries beyond the
/// knot range follow the configured extrapolation rule; the least-squares
/// line is the default because the knot values are integer-quantized and a
/// single trailing segment amplifies that rounding over long horizons.
struct ShiftMap {
  std::vector<double> knots;        // strictly increasing
  Eigen::MatrixXd values;           // n_dims x n_knots, real-valued lags
  ShiftExtrapolation extrapolation = ShiftExtrapolation::least_squares_line;
  int n_dims = 1;
  std::array<Index, 2> axis_sizes{0, 0};
  std::array<double, 2> line_slope{0, 0};
  std::array<double, 2> line_intercept{0, 0};
};

inline ShiftMap fit_shift_map(
    const std::vector<double>& times, const std::vector<Shift>& shifts,
    const Grid& grid,
    ShiftExtrapolation extrapolation = ShiftExtrapolation::least_squares_line) {
  if (times.size() < 2)
    throw validation_error("fit_shift_map: need at least 2 knots");
  if (times.size() != shifts.size())
    throw validation_error("fit_shift_map: times/shifts length mismatch");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw validation_error("fit_shift_map: knots must be strictly increasing");

  ShiftMap map;
  map.knots = times;
  map.extrapolation = extrapolation;
  map.n_dims = grid.n_dims;
  map.axis_sizes = grid.sizes;
  const Index n = static_cast<Index>(times.size());
  map.values.resize(grid.n_dims, n);
  for (Index i = 0; i < n; ++i) {
    const Shift& s = shifts[static_cast<std::size_t>(i)];
    if (s.n_dims != grid.n_dims)
      throw validation_error("fit_shift_map: shift dimensionality mismatch");
    for (int a = 0; a < grid.n_dims; ++a)
      map.values(a, i) = static_cast<double>(s.lags[a]);
  }

  // Least-squares line per axis, cached for extrapolation.
  double tm = 0.0;
  for (double t : times) tm += t;
  tm /= static_cast<double>(n);
  double stt = 0.0;
  for (double t : times) stt += (t - tm) * (t - tm);
  for (int a = 0; a < grid.n_dims; ++a) {
    const double vm = map.values.row(a).mean();
    double stv = 0.0;
    for (Index i = 0; i < n; ++i)
      stv += (times[static_cast<std::size_t>(i)] - tm) * (map.values(a, i) - vm);
    map.line_slope[a] = stv / stt;
    map.line_intercept[a] = vm - map.line_slope[a] * tm;
  }
  return map;
}

/// Real-valued per-axis lag at time t: exact at knots, piecewise linear
/// between them, extrapolated by the configured rule outside.
inline std::array<double, 2> eval_shift_real(const ShiftMap& map, double t) {
  std::array<double, 2> out{0, 0};
  const std::size_t n = map.knots.size();
  const auto segment_value = [&](int a, std::size_t j0, double tq) {
    const double t0 = map.knots[j0], t1 = map.knots[j0 + 1];
    const double w = (tq - t0) / (t1 - t0);
    return map.values(a, static_cast<Index>(j0)) * (1.0 - w) +
           map.values(a, static_cast<Index>(j0 + 1)) * w;
  };
  for (int a = 0; a < map.n_dims; ++a) {
    if (t < map.knots.front()) {
      out[a] = map.extrapolation == ShiftExtrapolation::least_squares_line
                   ? map.line_intercept[a] + map.line_slope[a] * t
                   : segment_value(a, 0, t);
    } else if (t > map.knots.back()) {
      out[a] = map.extrapolation == ShiftExtrapolation::least_squares_line
                   ? map.line_intercept[a] + map.line_slope[a] * t
                   : segment_value(a, n - 2, t);
    } else {
      const auto it =
          std::upper_bound(map.knots.begin(), map.knots.end(), t);
      std::size_t j = static_cast<std::size_t>(it - map.knots.begin());
      if (j == 0) j = 1;  // t == first knot
      if (j >= n) j = n - 1;
      out[a] = segment_value(a, j - 1, t);
    }
  }
  return out;
}

/// Integer shift at time t: the real-valued lag rounded half away from zero
/// and clamped to the valid range per axis.
inline Shift eval_shift(const ShiftMap& map, double t) {
  const std::array<double, 2> real = eval_shift_real(map, t);
  Shift s = Shift::zero(map.n_dims);
  for (int a = 0; a < map.n_dims; ++a) {
    long k = std::lround(real[a]);
    const long bound = static_cast<long>(map.axis_sizes[a]) - 1;
    k = std::clamp(k, -bound, bound);
    s.lags[a] = k;
  }
  return s;
}

}  // namespace romreg
