#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "romreg/core.hpp"
#include "romreg/reduction.hpp"
#include "romreg/registration.hpp"
#include "romreg/regression.hpp"
#include "romreg/snapshots.hpp"

namespace romreg {

/// Complete reduced-order model: basis, coefficient regressor, shift map and
/// reference metadata. Immutable once built.
struct RomModel {
  PodBasis basis;
  CoefficientTable coefficients;  // training coefficients, persisted with the model
  RbfModel coeff_model;
  ShiftMap shift_map;
  Index reference_index = 0;
  double reference_time = 0.0;
  Grid grid;
  std::string field_name;
  bool registration_enabled = true;
};

struct OfflineConfig {
  PodSelection selection{};
  RbfConfig rbf{};
  ShiftExtrapolation shift_extrapolation = ShiftExtrapolation::least_squares_line;
  bool register_snapshots = true;
};

/// Training column whose time is nearest the target (ties to the lower
/// index). The CLI default targets 30% of the full dataset time span.
inline Index default_reference_index(const std::vector<double>& train_times,
                                     double target_time) {
  if (train_times.empty())
    throw validation_error("default_reference_index: no training times");
  Index best = 0;
  double best_d = std::abs(train_times[0] - target_time);
  for (std::size_t i = 1; i < train_times.size(); ++i) {
    const double d = std::abs(train_times[i] - target_time);
    if (d < best_d) {
      best_d = d;
      best = static_cast<Index>(i);
    }
  }
  return best;
}

namespace detail {

template <typename F>
auto offline_stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const validation_error& e) {
    throw validation_error(std::string("offline[") + name + "]: " + e.what());
  } catch (const degenerate_correlation_error& e) {
    throw degenerate_correlation_error(std::string("offline[") + name +
                                       "]: " + e.what());
  } catch (const solver_error& e) {
    throw solver_error(std::string("offline[") + name + "]: " + e.what());
  }
}

inline ShiftMap zero_shift_map(const std::vector<double>& times,
                               const Grid& grid,
                               ShiftExtrapolation extrapolation) {
  std::vector<Shift> zeros(times.size(), Shift::zero(grid.n_dims));
  return fit_shift_map(times, zeros, grid, extrapolation);
}

}  // namespace detail

/// Offline stage: optionally register the training snapshots, build the POD
/// basis, project for coefficients, and fit the two regression maps.
inline RomModel offline(const SnapshotSet& train, Index reference_index,
                        const OfflineConfig& config = {}) {
  train.validate();
  if (reference_index < 0 || reference_index >= train.num_snapshots())
    throw validation_error("offline: reference index out of range");

  RomModel model;
  model.grid = train.grid;
  model.field_name = train.field_name;
  model.reference_index = reference_index;
  model.reference_time =
      train.times[static_cast<std::size_t>(reference_index)];
  model.registration_enabled = config.register_snapshots;

  const Eigen::MatrixXd* matrix = &train.data;
  RegisteredSet registered;
  if (config.register_snapshots) {
    registered = detail::offline_stage(
        "registration", [&] { return register_set(train, reference_index); });
    matrix = &registered.snapshots.data;
  }

  model.basis = detail::offline_stage(
      "pod", [&] { return compute_pod(*matrix, config.selection); });
  model.coefficients = detail::offline_stage(
      "projection", [&] { return project(model.basis, *matrix, train.times); });
  model.coeff_model = detail::offline_stage(
      "coefficient_regression",
      [&] { return fit_rbf(model.coefficients, config.rbf); });
  model.shift_map = detail::offline_stage("shift_regression", [&] {
    if (config.register_snapshots)
      return fit_shift_map(train.times, registered.shifts, train.grid,
                           config.shift_extrapolation);
    return detail::zero_shift_map(train.times, train.grid,
                                  config.shift_extrapolation);
  });
  return model;
}

/// Online stage: regress the coefficients, expand in the basis, and (when
/// registration is enabled) transport the result back to the physical frame.
inline Eigen::VectorXd predict(const RomModel& model, double t) {
  const Eigen::VectorXd c = eval_rbf(model.coeff_model, t);
  Eigen::VectorXd field = model.basis.modes * c;
  if (model.registration_enabled)
    field = unregister(model.grid, field, eval_shift(model.shift_map, t));
  return field;
}

/// Per-snapshot and mean relative L2 errors against a ground-truth set.
struct ErrorReport {
  struct Entry {
    double time;
    double relative_l2;
  };
  std::vector<Entry> per_time;
  double mean_relative_l2 = 0.0;
  std::string set_label;
};

inline ErrorReport evaluate(const RomModel& model, const SnapshotSet& truth,
                            const std::string& set_label = "test") {
  truth.validate();
  if (!(truth.grid == model.grid))
    throw validation_error("evaluate: truth grid does not match the model grid");
  ErrorReport report;
  report.set_label = set_label;
  report.per_time.reserve(static_cast<std::size_t>(truth.num_snapshots()));
  double sum = 0.0;
  for (Index i = 0; i < truth.num_snapshots(); ++i) {
    const double t = truth.times[static_cast<std::size_t>(i)];
    const double denom = truth.data.col(i).norm();
    if (denom == 0.0)
      throw validation_error("evaluate: zero-norm truth column at index " +
                             std::to_string(i));
    const double err = (predict(model, t) - truth.data.col(i)).norm() / denom;
    report.per_time.push_back({t, err});
    sum += err;
  }
  report.mean_relative_l2 =
      truth.num_snapshots() > 0
          ? sum / static_cast<double>(truth.num_snapshots())
          : 0.0;
  return report;
}

struct SweepRow {
  Index rank;
  double mean_relative_l2_test;
};

namespace detail {

inline PodBasis truncate_basis(const PodBasis& full, Index rank) {
  PodBasis b;
  b.singular_values = full.singular_values;
  const Index r = std::min(rank, full.rank_selected);
  b.rank_selected = r;
  b.modes = full.modes.leftCols(r);
  b.energy_captured = cumulative_energy(full.singular_values, r);
  return b;
}

}  // namespace detail

/// Rebuild the ROM at each requested rank (fixed-rank selection) and report
/// the mean relative L2 error on the test set. Registration and the SVD are
/// shared across ranks; truncating the full basis is equivalent to selecting
/// the fixed rank directly.
inline std::vector<SweepRow> rank_sweep(const SnapshotSet& train,
                                        const SnapshotSet& test,
                                        const std::vector<Index>& ranks,
                                        bool register_snapshots,
                                        Index reference_index,
                                        const OfflineConfig& base = {}) {
  if (ranks.empty()) throw validation_error("rank_sweep: empty rank list");
  for (Index r : ranks)
    if (r <= 0) throw validation_error("rank_sweep: ranks must be positive");

  OfflineConfig config = base;
  config.register_snapshots = register_snapshots;
  config.selection =
      PodSelection::fixed(std::min(train.num_snapshots(), train.num_dofs()));
  RomModel full = offline(train, reference_index, config);

  std::vector<SweepRow> rows;
  rows.reserve(ranks.size());
  for (Index rank : ranks) {
    RomModel model = full;
    model.basis = detail::truncate_basis(full.basis, rank);
    model.coefficients.coeffs =
        full.coefficients.coeffs.topRows(model.basis.rank_selected);
    model.coeff_model = fit_rbf(model.coefficients, base.rbf);
    rows.push_back({rank, evaluate(model, test).mean_relative_l2});
  }
  return rows;
}

}  // namespace romreg
