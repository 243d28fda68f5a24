#pragma once

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>
#include <utility>

#include "romreg/core.hpp"

namespace romreg {

/// Travelling 1D Gaussian, f(x; t) = beta * exp(-(x - t)^2 / (2 sigma^2)).
///
/// The default time window keeps the pulse at least two standard deviations
/// inside the spatial domain at all times, so the transported feature stays
/// fully represented on the grid.
struct WaveParams {
  double beta = 1.0;
  double sigma = 0.4;
  double x_min = 0.0;
  double x_max = 10.25;
  double t_min = 0.8;
  double t_max = 9.45;
  Index n_nodes = 256;
  Index n_times = 100;

  void validate() const {
    if (!(sigma > 0.0)) throw validation_error("wave: sigma must be positive");
    if (beta == 0.0) throw validation_error("wave: beta must be nonzero");
    if (!(x_max > x_min)) throw validation_error("wave: empty x range");
    if (!(t_max > t_min)) throw validation_error("wave: empty t range");
    if (n_nodes < 2) throw validation_error("wave: need at least 2 nodes");
    if (n_times < 1) throw validation_error("wave: need at least 1 time");
  }
};

inline double wave_value(const WaveParams& p, double x, double t) {
  const double d = x - t;
  return p.beta * std::exp(-d * d / (2.0 * p.sigma * p.sigma));
}

inline SnapshotSet generate_wave(const WaveParams& p) {
  p.validate();
  SnapshotSet set;
  set.grid = Grid::line(p.n_nodes, p.x_min, p.x_max);
  set.field_name = "wave";
  set.times.resize(static_cast<std::size_t>(p.n_times));
  const double dt =
      p.n_times > 1 ? (p.t_max - p.t_min) / static_cast<double>(p.n_times - 1)
                    : 0.0;
  for (Index k = 0; k < p.n_times; ++k)
    set.times[static_cast<std::size_t>(k)] = p.t_min + dt * static_cast<double>(k);
  set.data.resize(p.n_nodes, p.n_times);
  for (Index k = 0; k < p.n_times; ++k) {
    const double t = set.times[static_cast<std::size_t>(k)];
    for (Index j = 0; j < p.n_nodes; ++j)
      set.data(j, k) = wave_value(p, set.grid.coordinate(0, j), t);
  }
  set.validate();
  return set;
}

enum class VortexField { density, pressure, velocity_x, velocity_y, energy };

inline const char* to_string(VortexField f) {
  switch (f) {
    case VortexField::density: return "density";
    case VortexField::pressure: return "pressure";
    case VortexField::velocity_x: return "velocity_x";
    case VortexField::velocity_y: return "velocity_y";
    case VortexField::energy: return "energy";
  }
  return "?";
}

/// Isentropic convective vortex for the 2D unsteady Euler equations. The
/// vortex translates rigidly with the freestream, so each snapshot is the
/// initial condition with the core centre moved to
/// (center_x + u_inf * t, center_y + v_inf * t).
struct VortexParams {
  double gamma = 1.4;
  double strength = 0.5;  // b
  double center_x = 5.0;
  double center_y = 10.0;
  double rho_inf = 1.0;
  double u_inf = 0.1;
  double v_inf = 0.0;
  double p_inf = 1.0;
  double x_min = 0.0;
  double x_max = 40.0;
  double y_min = 0.0;
  double y_max = 20.0;
  Index n_x = 240;
  Index n_y = 120;
  Index n_times = 100;
  double snapshot_dt = 0.625;  // snapshots at t = snapshot_dt * k, k = 1..n_times

  void validate() const {
    if (!(gamma > 1.0)) throw validation_error("vortex: gamma must exceed 1");
    if (!(strength > 0.0))
      throw validation_error("vortex: strength b must be positive");
    if (n_x < 2 || n_y < 2)
      throw validation_error("vortex: each axis needs at least 2 nodes");
    if (n_times < 1) throw validation_error("vortex: need at least 1 time");
    if (!(snapshot_dt > 0.0))
      throw validation_error("vortex: snapshot_dt must be positive");
    if (!(x_max > x_min) || !(y_max > y_min))
      throw validation_error("vortex: empty domain");
  }
};

namespace detail {

struct VortexState {
  double rho, u, v, p;
};

inline VortexState vortex_state(const VortexParams& pr, double x, double y,
                                double xc, double yc) {
  const double pi = std::numbers::pi;
  const double r2 = (x - xc) * (x - xc) + (y - yc) * (y - yc);
  const double gm1 = pr.gamma - 1.0;
  const double q =
      gm1 * pr.strength * pr.strength / (8.0 * pr.gamma * pi * pi) *
      std::exp(1.0 - r2);
  VortexState s;
  s.rho = std::pow(1.0 - q, 1.0 / gm1);
  s.p = std::pow(s.rho, pr.gamma);
  const double swirl = pr.strength / (2.0 * pi) * std::exp(0.5 * (1.0 - r2));
  s.u = pr.u_inf - swirl * (y - yc);
  s.v = pr.v_inf + swirl * (x - xc);
  return s;
}

inline double vortex_field_value(const VortexParams& pr, VortexField f,
                                 double x, double y, double xc, double yc) {
  const VortexState s = vortex_state(pr, x, y, xc, yc);
  switch (f) {
    case VortexField::density: return s.rho;
    case VortexField::pressure: return s.p;
    case VortexField::velocity_x: return s.u;
    case VortexField::velocity_y: return s.v;
    case VortexField::energy:
      return s.p / (pr.gamma - 1.0) + 0.5 * s.rho * (s.u * s.u + s.v * s.v);
  }
  return 0.0;
}

}  // namespace detail

inline SnapshotSet generate_vortex(const VortexParams& p,
                                   VortexField field = VortexField::density) {
  p.validate();
  SnapshotSet set;
  set.grid = Grid::rectangle(p.n_x, p.n_y, p.x_min, p.x_max, p.y_min, p.y_max);
  set.field_name = to_string(field);
  set.times.resize(static_cast<std::size_t>(p.n_times));
  for (Index k = 0; k < p.n_times; ++k)
    set.times[static_cast<std::size_t>(k)] =
        p.snapshot_dt * static_cast<double>(k + 1);

  const double len_x = p.x_max - p.x_min;
  const double len_y = p.y_max - p.y_min;
  bool warned = false;

  set.data.resize(set.grid.num_nodes(), p.n_times);
  for (Index k = 0; k < p.n_times; ++k) {
    const double t = set.times[static_cast<std::size_t>(k)];
    const double xc = p.center_x + p.u_inf * t;
    const double yc = p.center_y + p.v_inf * t;
    if (!warned &&
        (xc < p.x_min - len_x || xc > p.x_max + len_x || yc < p.y_min - len_y ||
         yc > p.y_max + len_y)) {
      std::cerr << "warning: vortex core at t=" << t
                << " has left the domain by more than the domain size\n";
      warned = true;
    }
    for (Index iy = 0; iy < p.n_y; ++iy) {
      const double y = set.grid.coordinate(1, iy);
      for (Index ix = 0; ix < p.n_x; ++ix) {
        const double x = set.grid.coordinate(0, ix);
        set.data(iy * p.n_x + ix, k) =
            detail::vortex_field_value(p, field, x, y, xc, yc);
      }
    }
  }
  set.validate();
  return set;
}

/// Chronological split: the first floor(train_fraction * N_T) columns form
/// the training set, the remainder the test set.
inline std::pair<SnapshotSet, SnapshotSet> split(const SnapshotSet& set,
                                                 double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw validation_error("split: train_fraction must lie in (0, 1)");
  const Index n_total = set.num_snapshots();
  const Index n_train = static_cast<Index>(
      std::floor(train_fraction * static_cast<double>(n_total)));
  if (n_train < 2)
    throw validation_error("split: train fraction " +
                           std::to_string(train_fraction) + " yields " +
                           std::to_string(n_train) +
                           " training snapshots, need at least 2");
  SnapshotSet train, test;
  train.grid = test.grid = set.grid;
  train.field_name = test.field_name = set.field_name;
  train.times.assign(set.times.begin(), set.times.begin() + n_train);
  test.times.assign(set.times.begin() + n_train, set.times.end());
  train.data = set.data.leftCols(n_train);
  test.data = set.data.rightCols(n_total - n_train);
  return {std::move(train), std::move(test)};
}

}  // namespace romreg
