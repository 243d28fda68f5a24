#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <cstdlib>
#include <string>
#include <vector>

#include "romreg/core.hpp"

namespace romreg {

/// Integer lag vector aligning a snapshot to the reference, one entry per
/// grid axis (x first). Lags live in [-(N_a - 1), N_a - 1].
struct Shift {
  int n_dims = 1;
  std::array<long, 2> lags{0, 0};

  static Shift zero(int n_dims) {
    Shift s;
    s.n_dims = n_dims;
    return s;
  }

  Shift negated() const {
    Shift s = *this;
    for (int a = 0; a < n_dims; ++a) s.lags[a] = -s.lags[a];
    return s;
  }

  bool operator==(const Shift& o) const {
    if (n_dims != o.n_dims) return false;
    for (int a = 0; a < n_dims; ++a)
      if (lags[a] != o.lags[a]) return false;
    return true;
  }
};

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

/// Circular cross-correlation via FFT: h[j] = sum_n f[n] g[(n + j) mod M]
/// on buffers zero-padded to length M.
inline std::vector<double> circular_correlation_fft(
    const std::vector<double>& f_pad, const std::vector<double>& g_pad) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> F, G;
  fft.fwd(F, f_pad);
  fft.fwd(G, g_pad);
  for (std::size_t i = 0; i < F.size(); ++i) F[i] = std::conj(F[i]) * G[i];
  std::vector<double> h;
  fft.inv(h, F);
  return h;
}

inline void fft_2d(Eigen::MatrixXcd& A, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, out;
  in.resize(static_cast<std::size_t>(A.rows()));
  for (Index c = 0; c < A.cols(); ++c) {
    for (Index r = 0; r < A.rows(); ++r)
      in[static_cast<std::size_t>(r)] = A(r, c);
    if (inverse) fft.inv(out, in); else fft.fwd(out, in);
    for (Index r = 0; r < A.rows(); ++r)
      A(r, c) = out[static_cast<std::size_t>(r)];
  }
  in.resize(static_cast<std::size_t>(A.cols()));
  for (Index r = 0; r < A.rows(); ++r) {
    for (Index c = 0; c < A.cols(); ++c)
      in[static_cast<std::size_t>(c)] = A(r, c);
    if (inverse) fft.inv(out, in); else fft.fwd(out, in);
    for (Index c = 0; c < A.cols(); ++c)
      A(r, c) = out[static_cast<std::size_t>(c)];
  }
}

}  // namespace detail

/// Full zero-padded discrete cross-correlation of two equal-length signals.
/// Output has length 2N - 1; the entry at index m = k + (N - 1) equals
/// sum_n f[n] g[n + k], with g treated as zero outside its range.
inline Eigen::VectorXd cross_correlate(const Eigen::VectorXd& f,
                                       const Eigen::VectorXd& g) {
  if (f.size() != g.size())
    throw validation_error("cross_correlate: size mismatch (" +
                           std::to_string(f.size()) + " vs " +
                           std::to_string(g.size()) + ")");
  const Index n = f.size();
  if (n == 0) throw validation_error("cross_correlate: empty input");
  const std::size_t m =
      detail::next_pow2(static_cast<std::size_t>(2 * n - 1));
  std::vector<double> fp(m, 0.0), gp(m, 0.0);
  for (Index i = 0; i < n; ++i) {
    fp[static_cast<std::size_t>(i)] = f[i];
    gp[static_cast<std::size_t>(i)] = g[i];
  }
  const std::vector<double> h = detail::circular_correlation_fft(fp, gp);
  Eigen::VectorXd out(2 * n - 1);
  for (Index idx = 0; idx < 2 * n - 1; ++idx) {
    const long k = static_cast<long>(idx) - (n - 1);
    const std::size_t j =
        (static_cast<std::size_t>(k + static_cast<long>(m))) % m;
    out[idx] = h[j];
  }
  return out;
}

/// 2D full zero-padded cross-correlation; output shape (2Ny - 1) x (2Nx - 1)
/// with entry (my, mx) = sum f(iy, ix) g(iy + ky, ix + kx), k_a = m_a - (N_a - 1).
inline Eigen::MatrixXd cross_correlate(const Eigen::MatrixXd& f,
                                       const Eigen::MatrixXd& g) {
  if (f.rows() != g.rows() || f.cols() != g.cols())
    throw validation_error("cross_correlate: shape mismatch");
  const Index ny = f.rows(), nx = f.cols();
  if (ny == 0 || nx == 0) throw validation_error("cross_correlate: empty input");
  const Index my = static_cast<Index>(
      detail::next_pow2(static_cast<std::size_t>(2 * ny - 1)));
  const Index mx = static_cast<Index>(
      detail::next_pow2(static_cast<std::size_t>(2 * nx - 1)));
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(my, mx);
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(my, mx);
  F.topLeftCorner(ny, nx) = f.cast<std::complex<double>>();
  G.topLeftCorner(ny, nx) = g.cast<std::complex<double>>();
  detail::fft_2d(F, false);
  detail::fft_2d(G, false);
  F = F.conjugate().cwiseProduct(G);
  detail::fft_2d(F, true);
  Eigen::MatrixXd out(2 * ny - 1, 2 * nx - 1);
  for (Index iy = 0; iy < 2 * ny - 1; ++iy) {
    const Index jy = ((iy - (ny - 1)) % my + my) % my;
    for (Index ix = 0; ix < 2 * nx - 1; ++ix) {
      const Index jx = ((ix - (nx - 1)) % mx + mx) % mx;
      out(iy, ix) = F(jy, jx).real();
    }
  }
  return out;
}

namespace detail {

/// Lag preference at equal correlation values: smaller L1 norm first, then
/// per axis smaller |lag|, then the negative lag.
inline bool lag_preferred(const std::array<long, 2>& a,
                          const std::array<long, 2>& b, int n_dims) {
  long la = 0, lb = 0;
  for (int d = 0; d < n_dims; ++d) {
    la += std::labs(a[d]);
    lb += std::labs(b[d]);
  }
  if (la != lb) return la < lb;
  for (int d = 0; d < n_dims; ++d) {
    if (std::labs(a[d]) != std::labs(b[d])) return std::labs(a[d]) < std::labs(b[d]);
    if (a[d] != b[d]) return a[d] < b[d];
  }
  return false;
}

// Correlation peaks are compared with a small relative slack so that exact
// ties survive FFT round-off and resolve by the deterministic lag rule.
constexpr double kTieRelTol = 1e-12;

inline Shift argmax_lag_1d(const Eigen::VectorXd& corr, Index n) {
  double vmax = corr.maxCoeff();
  const double tol = kTieRelTol * std::max(1.0, corr.cwiseAbs().maxCoeff());
  Shift best = Shift::zero(1);
  bool have = false;
  for (Index idx = 0; idx < corr.size(); ++idx) {
    if (corr[idx] < vmax - tol) continue;
    std::array<long, 2> cand{static_cast<long>(idx) - (n - 1), 0};
    if (!have || lag_preferred(cand, best.lags, 1)) {
      best.lags = cand;
      have = true;
    }
  }
  return best;
}

inline Shift argmax_lag_2d(const Eigen::MatrixXd& corr, Index ny, Index nx) {
  double vmax = corr.maxCoeff();
  const double tol = kTieRelTol * std::max(1.0, corr.cwiseAbs().maxCoeff());
  Shift best = Shift::zero(2);
  bool have = false;
  for (Index iy = 0; iy < corr.rows(); ++iy) {
    for (Index ix = 0; ix < corr.cols(); ++ix) {
      if (corr(iy, ix) < vmax - tol) continue;
      std::array<long, 2> cand{static_cast<long>(ix) - (nx - 1),
                               static_cast<long>(iy) - (ny - 1)};
      if (!have || lag_preferred(cand, best.lags, 2)) {
        best.lags = cand;
        have = true;
      }
    }
  }
  return best;
}

inline void check_alignable(const Eigen::VectorXd& centered, const char* which) {
  if (centered.cwiseAbs().maxCoeff() == 0.0)
    throw degenerate_correlation_error(
        std::string("optimal_shift: ") + which +
        " field is constant or zero; correlation carries no alignment");
}

}  // namespace detail

/// Lag maximizing the full cross-correlation of the two signals, i.e. the
/// displacement of `snap` relative to `ref`. Fields are centered (mean
/// removed) before correlating so that a constant background does not pin
/// the argmax at zero lag.
inline Shift optimal_shift(const Eigen::VectorXd& ref,
                           const Eigen::VectorXd& snap) {
  if (ref.size() != snap.size())
    throw validation_error("optimal_shift: size mismatch");
  const Eigen::VectorXd f = ref.array() - ref.mean();
  const Eigen::VectorXd g = snap.array() - snap.mean();
  detail::check_alignable(f, "reference");
  detail::check_alignable(g, "snapshot");
  return detail::argmax_lag_1d(cross_correlate(f, g), ref.size());
}

inline Shift optimal_shift(const Eigen::MatrixXd& ref,
                           const Eigen::MatrixXd& snap) {
  if (ref.rows() != snap.rows() || ref.cols() != snap.cols())
    throw validation_error("optimal_shift: shape mismatch");
  Eigen::MatrixXd f = ref.array() - ref.mean();
  Eigen::MatrixXd g = snap.array() - snap.mean();
  detail::check_alignable(Eigen::VectorXd(f.reshaped()), "reference");
  detail::check_alignable(Eigen::VectorXd(g.reshaped()), "snapshot");
  return detail::argmax_lag_2d(cross_correlate(f, g), ref.rows(), ref.cols());
}

namespace detail {

inline Eigen::MatrixXd unflatten(const Grid& grid, const Eigen::VectorXd& flat) {
  const Index nx = grid.sizes[0], ny = grid.sizes[1];
  Eigen::MatrixXd m(ny, nx);
  for (Index iy = 0; iy < ny; ++iy)
    for (Index ix = 0; ix < nx; ++ix) m(iy, ix) = flat[iy * nx + ix];
  return m;
}

}  // namespace detail

/// Flat-field overload; the grid supplies the 2D layout (row-major, y-major).
inline Shift optimal_shift(const Grid& grid, const Eigen::VectorXd& ref,
                           const Eigen::VectorXd& snap) {
  if (ref.size() != grid.num_nodes() || snap.size() != grid.num_nodes())
    throw validation_error("optimal_shift: field size does not match grid");
  if (grid.n_dims == 1) return optimal_shift(ref, snap);
  return optimal_shift(detail::unflatten(grid, ref),
                       detail::unflatten(grid, snap));
}

/// Circular shift: out[n] = in[(n + lag) mod N] per axis.
inline Eigen::VectorXd circular_shift(const Grid& grid,
                                      const Eigen::VectorXd& field,
                                      const Shift& shift) {
  if (field.size() != grid.num_nodes())
    throw validation_error("circular_shift: field size does not match grid");
  if (shift.n_dims != grid.n_dims)
    throw validation_error("circular_shift: shift dimensionality mismatch");
  std::array<Index, 2> lag{0, 0};
  for (int a = 0; a < grid.n_dims; ++a) {
    const Index n = grid.sizes[a];
    lag[a] = ((shift.lags[a] % n) + n) % n;
  }
  Eigen::VectorXd out(field.size());
  if (grid.n_dims == 1) {
    const Index n = grid.sizes[0];
    for (Index i = 0; i < n; ++i) out[i] = field[(i + lag[0]) % n];
  } else {
    const Index nx = grid.sizes[0], ny = grid.sizes[1];
    for (Index iy = 0; iy < ny; ++iy) {
      const Index sy = (iy + lag[1]) % ny;
      for (Index ix = 0; ix < nx; ++ix)
        out[iy * nx + ix] = field[sy * nx + (ix + lag[0]) % nx];
    }
  }
  return out;
}

/// Transport a reference-frame field back to the physical frame.
inline Eigen::VectorXd unregister(const Grid& grid, const Eigen::VectorXd& field,
                                  const Shift& shift) {
  return circular_shift(grid, field, shift.negated());
}

/// Training set aligned to one of its snapshots.
struct RegisteredSet {
  SnapshotSet snapshots;       // in the reference frame, original times kept
  std::vector<Shift> shifts;   // one per column; zero shift at the reference
  Index reference_index = 0;
  double reference_time = 0.0;
};

/// Align every training snapshot with the chosen reference by maximizing the
/// cross-correlation and applying the resulting circular shift.
inline RegisteredSet register_set(const SnapshotSet& train,
                                  Index reference_index) {
  if (reference_index < 0 || reference_index >= train.num_snapshots())
    throw validation_error("register_set: reference index " +
                           std::to_string(reference_index) + " out of range");
  RegisteredSet out;
  out.snapshots.grid = train.grid;
  out.snapshots.times = train.times;
  out.snapshots.field_name = train.field_name;
  out.snapshots.data.resize(train.data.rows(), train.data.cols());
  out.shifts.resize(static_cast<std::size_t>(train.num_snapshots()));
  out.reference_index = reference_index;
  out.reference_time = train.times[static_cast<std::size_t>(reference_index)];

  const Eigen::VectorXd ref = train.data.col(reference_index);
  for (Index i = 0; i < train.num_snapshots(); ++i) {
    Shift s = Shift::zero(train.grid.n_dims);
    if (i != reference_index) {
      try {
        s = optimal_shift(train.grid, ref, train.data.col(i));
      } catch (const degenerate_correlation_error& e) {
        throw degenerate_correlation_error("register_set: column " +
                                           std::to_string(i) + ": " + e.what());
      }
    }
    out.shifts[static_cast<std::size_t>(i)] = s;
    out.snapshots.data.col(i) = circular_shift(train.grid, train.data.col(i), s);
  }
  return out;
}

}  // namespace romreg
