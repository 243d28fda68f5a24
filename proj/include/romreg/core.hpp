#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace romreg {

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed requests, mismatched inputs. CLI maps this
/// to exit code 2.
class validation_error : public error {
 public:
  using error::error;
};

/// Corrupt or truncated files; the message names the failing byte offset.
class format_error : public error {
 public:
  using error::error;
};

/// Linear solves that did not converge to the required residual.
class solver_error : public error {
 public:
  using error::error;
};

/// Correlation signal carries no alignment information (zero or constant
/// field).
class degenerate_correlation_error : public error {
 public:
  using error::error;
};

using Index = Eigen::Index;

/// Cartesian node-centered grid, 1D or 2D, equidistant per axis.
/// Both interval endpoints are grid nodes.
struct Grid {
  int n_dims = 1;
  std::array<Index, 2> sizes{0, 0};     // nodes per axis (x first)
  std::array<double, 2> origin{0, 0};   // lower bound per axis
  std::array<double, 2> extent{0, 0};   // upper bound per axis

  static Grid line(Index n, double x0, double x1) {
    Grid g;
    g.n_dims = 1;
    g.sizes = {n, 0};
    g.origin = {x0, 0};
    g.extent = {x1, 0};
    g.validate();
    return g;
  }

  static Grid rectangle(Index nx, Index ny, double x0, double x1, double y0,
                        double y1) {
    Grid g;
    g.n_dims = 2;
    g.sizes = {nx, ny};
    g.origin = {x0, y0};
    g.extent = {x1, y1};
    g.validate();
    return g;
  }

  Index num_nodes() const {
    Index n = 1;
    for (int a = 0; a < n_dims; ++a) n *= sizes[a];
    return n;
  }

  double spacing(int axis) const {
    return (extent[axis] - origin[axis]) / static_cast<double>(sizes[axis] - 1);
  }

  double coordinate(int axis, Index i) const {
    return origin[axis] + spacing(axis) * static_cast<double>(i);
  }

  /// Index of the node nearest to x along `axis`; ties go to the lower index.
  Index nearest_node(int axis, double x) const {
    const double p = (x - origin[axis]) / spacing(axis);
    Index i = static_cast<Index>(std::floor(p + 0.5));
    if (std::abs(p - std::floor(p)) == 0.5) i = static_cast<Index>(std::floor(p));
    if (i < 0) i = 0;
    if (i >= sizes[axis]) i = sizes[axis] - 1;
    return i;
  }

  bool operator==(const Grid& o) const {
    if (n_dims != o.n_dims) return false;
    for (int a = 0; a < n_dims; ++a) {
      if (sizes[a] != o.sizes[a] || origin[a] != o.origin[a] ||
          extent[a] != o.extent[a])
        return false;
    }
    return true;
  }

  void validate() const {
    if (n_dims != 1 && n_dims != 2)
      throw validation_error("grid: n_dims must be 1 or 2, got " +
                             std::to_string(n_dims));
    for (int a = 0; a < n_dims; ++a) {
      if (sizes[a] < 2)
        throw validation_error("grid: axis " + std::to_string(a) +
                               " needs at least 2 nodes, got " +
                               std::to_string(sizes[a]));
      if (!(extent[a] > origin[a]))
        throw validation_error("grid: axis " + std::to_string(a) +
                               " extent must exceed origin");
    }
  }
};

/// Dense snapshot container: column i of `data` is the field at `times[i]`,
/// flattened in row-major (y-major) order for 2D grids.
struct SnapshotSet {
  Grid grid;
  std::vector<double> times;
  Eigen::MatrixXd data;  // N_h x N_T
  std::string field_name;

  Index num_dofs() const { return data.rows(); }
  Index num_snapshots() const { return data.cols(); }

  void validate() const {
    grid.validate();
    if (data.rows() != grid.num_nodes())
      throw validation_error(
          "snapshots: row count " + std::to_string(data.rows()) +
          " does not match grid size " + std::to_string(grid.num_nodes()));
    if (static_cast<Index>(times.size()) != data.cols())
      throw validation_error("snapshots: " + std::to_string(times.size()) +
                             " time stamps for " + std::to_string(data.cols()) +
                             " columns");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1]))
        throw validation_error("snapshots: times must be strictly increasing "
                               "(violated at index " +
                               std::to_string(i) + ")");
    }
    if (!data.allFinite())
      throw validation_error("snapshots: data contains non-finite entries");
  }
};

}  // namespace romreg
