#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "romreg/core.hpp"
#include "romreg/pipeline.hpp"
#include "romreg/reduction.hpp"
#include "romreg/registration.hpp"

namespace romreg {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; a byte-swapping reader is "
              "needed on big-endian hosts");
static_assert(sizeof(double) == 8);

namespace detail {

inline constexpr char kSnapshotMagic[8] = {'R', 'O', 'M', 'S', 'N', 'A', 'P', '1'};
inline constexpr char kBasisMagic[8] = {'R', 'O', 'M', 'B', 'A', 'S', 'E', '1'};

class BinaryReader {
 public:
  BinaryReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_)
      throw format_error("cannot open '" + path.string() + "' for reading");
  }

  void read(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw format_error("'" + path_.string() + "': truncated while reading " +
                         what + " at byte offset " + std::to_string(offset_));
    offset_ += n;
  }

  template <typename T>
  T scalar(const char* what) {
    T v;
    read(&v, sizeof(T), what);
    return v;
  }

  std::size_t offset() const { return offset_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

class BinaryWriter {
 public:
  BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_)
      throw format_error("cannot open '" + path.string() + "' for writing");
  }

  void write(const void* src, std::size_t n) {
    out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  }

  template <typename T>
  void scalar(T v) {
    write(&v, sizeof(T));
  }

  void close() {
    out_.close();
    if (!out_) throw format_error("write to '" + path_.string() + "' failed");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline std::filesystem::path meta_path(const std::filesystem::path& file) {
  std::filesystem::path p = file;
  p.replace_extension(".meta.json");
  return p;
}

inline std::string format_double(double v, const char* fmt = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace detail

/// Write the binary snapshot file (magic ROMSNAP1, little-endian) plus the
/// `<name>.meta.json` sidecar with the field name and generator parameters.
inline void write_snapshots(const std::filesystem::path& file,
                            const SnapshotSet& set,
                            const nlohmann::json& generator_params = {}) {
  set.validate();
  detail::BinaryWriter w(file);
  w.write(detail::kSnapshotMagic, 8);
  w.scalar<std::uint32_t>(1);  // version
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(set.grid.n_dims));
  for (int a = 0; a < set.grid.n_dims; ++a)
    w.scalar<std::uint64_t>(static_cast<std::uint64_t>(set.grid.sizes[a]));
  for (int a = 0; a < set.grid.n_dims; ++a) {
    w.scalar<double>(set.grid.origin[a]);
    w.scalar<double>(set.grid.extent[a]);
  }
  w.scalar<std::uint64_t>(static_cast<std::uint64_t>(set.num_snapshots()));
  w.write(set.times.data(), set.times.size() * sizeof(double));
  w.write(set.data.data(),
          static_cast<std::size_t>(set.data.size()) * sizeof(double));
  w.close();

  nlohmann::json meta;
  meta["field_name"] = set.field_name;
  if (!generator_params.empty()) meta["generator"] = generator_params;
  std::ofstream ms(detail::meta_path(file), std::ios::trunc);
  ms << meta.dump(2) << "\n";
}

inline SnapshotSet read_snapshots(const std::filesystem::path& file) {
  detail::BinaryReader r(file);
  char magic[8];
  r.read(magic, 8, "magic");
  if (std::memcmp(magic, detail::kSnapshotMagic, 8) != 0)
    throw format_error("'" + file.string() +
                       "': bad magic at byte offset 0 (not a ROMSNAP1 file)");
  const auto version = r.scalar<std::uint32_t>("version");
  if (version != 1)
    throw format_error("'" + file.string() + "': unsupported version " +
                       std::to_string(version) + " at byte offset 8");
  const auto n_dims = r.scalar<std::uint32_t>("n_dims");
  if (n_dims != 1 && n_dims != 2)
    throw format_error("'" + file.string() + "': invalid n_dims " +
                       std::to_string(n_dims) + " at byte offset 12");
  SnapshotSet set;
  set.grid.n_dims = static_cast<int>(n_dims);
  for (std::uint32_t a = 0; a < n_dims; ++a)
    set.grid.sizes[a] =
        static_cast<Index>(r.scalar<std::uint64_t>("axis size"));
  for (std::uint32_t a = 0; a < n_dims; ++a) {
    set.grid.origin[a] = r.scalar<double>("axis origin");
    set.grid.extent[a] = r.scalar<double>("axis extent");
  }
  const auto n_times = r.scalar<std::uint64_t>("snapshot count");
  set.times.resize(n_times);
  if (n_times > 0)
    r.read(set.times.data(), n_times * sizeof(double), "time stamps");
  const Index n_h = set.grid.num_nodes();
  set.data.resize(n_h, static_cast<Index>(n_times));
  if (set.data.size() > 0)
    r.read(set.data.data(),
           static_cast<std::size_t>(set.data.size()) * sizeof(double),
           "snapshot data");

  const std::filesystem::path mp = detail::meta_path(file);
  if (std::filesystem::exists(mp)) {
    std::ifstream ms(mp);
    nlohmann::json meta = nlohmann::json::parse(ms, nullptr, true, true);
    set.field_name = meta.value("field_name", std::string{});
  }
  try {
    set.validate();
  } catch (const validation_error& e) {
    throw format_error("'" + file.string() + "': inconsistent contents: " +
                       e.what());
  }
  return set;
}

/// Optional generator metadata from the sidecar (empty when absent).
inline nlohmann::json read_snapshot_meta(const std::filesystem::path& file) {
  const std::filesystem::path mp = detail::meta_path(file);
  if (!std::filesystem::exists(mp)) return nlohmann::json::object();
  std::ifstream ms(mp);
  return nlohmann::json::parse(ms, nullptr, true, true);
}

/// Binary basis file: magic ROMBASE1, u32 version, u64 rows, u64 rank,
/// u64 spectrum length, singular values, then modes in column-major order.
inline void write_basis(const std::filesystem::path& file, const PodBasis& b) {
  detail::BinaryWriter w(file);
  w.write(detail::kBasisMagic, 8);
  w.scalar<std::uint32_t>(1);
  w.scalar<std::uint64_t>(static_cast<std::uint64_t>(b.modes.rows()));
  w.scalar<std::uint64_t>(static_cast<std::uint64_t>(b.modes.cols()));
  w.scalar<std::uint64_t>(static_cast<std::uint64_t>(b.singular_values.size()));
  w.write(b.singular_values.data(),
          static_cast<std::size_t>(b.singular_values.size()) * sizeof(double));
  w.write(b.modes.data(),
          static_cast<std::size_t>(b.modes.size()) * sizeof(double));
  w.close();
}

inline PodBasis read_basis(const std::filesystem::path& file) {
  detail::BinaryReader r(file);
  char magic[8];
  r.read(magic, 8, "magic");
  if (std::memcmp(magic, detail::kBasisMagic, 8) != 0)
    throw format_error("'" + file.string() +
                       "': bad magic at byte offset 0 (not a ROMBASE1 file)");
  const auto version = r.scalar<std::uint32_t>("version");
  if (version != 1)
    throw format_error("'" + file.string() + "': unsupported version " +
                       std::to_string(version));
  PodBasis b;
  const auto rows = r.scalar<std::uint64_t>("mode length");
  const auto cols = r.scalar<std::uint64_t>("rank");
  const auto nsig = r.scalar<std::uint64_t>("spectrum length");
  b.singular_values.resize(static_cast<Index>(nsig));
  if (nsig > 0)
    r.read(b.singular_values.data(), nsig * sizeof(double), "singular values");
  b.modes.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  if (b.modes.size() > 0)
    r.read(b.modes.data(),
           static_cast<std::size_t>(b.modes.size()) * sizeof(double), "modes");
  b.rank_selected = static_cast<Index>(cols);
  b.energy_captured =
      detail::cumulative_energy(b.singular_values, b.rank_selected);
  return b;
}

/// shifts.json: reference metadata plus one {time, lags[]} record per knot.
inline nlohmann::json shifts_to_json(const std::vector<double>& times,
                                     const Eigen::MatrixXd& values,
                                     Index reference_index,
                                     double reference_time) {
  nlohmann::json j;
  j["reference_index"] = reference_index;
  j["reference_time"] = reference_time;
  nlohmann::json arr = nlohmann::json::array();
  for (Index i = 0; i < static_cast<Index>(times.size()); ++i) {
    nlohmann::json rec;
    rec["time"] = times[static_cast<std::size_t>(i)];
    nlohmann::json lags = nlohmann::json::array();
    for (Index a = 0; a < values.rows(); ++a) lags.push_back(values(a, i));
    rec["lags"] = lags;
    arr.push_back(rec);
  }
  j["shifts"] = arr;
  return j;
}

inline void write_registered_set(const std::filesystem::path& snapshot_file,
                                 const RegisteredSet& reg) {
  write_snapshots(snapshot_file, reg.snapshots);
  Eigen::MatrixXd values(reg.snapshots.grid.n_dims,
                         static_cast<Index>(reg.shifts.size()));
  for (std::size_t i = 0; i < reg.shifts.size(); ++i)
    for (int a = 0; a < reg.snapshots.grid.n_dims; ++a)
      values(a, static_cast<Index>(i)) =
          static_cast<double>(reg.shifts[i].lags[a]);
  std::ofstream out(snapshot_file.parent_path() / "shifts.json",
                    std::ios::trunc);
  out << shifts_to_json(reg.snapshots.times, values, reg.reference_index,
                        reg.reference_time)
             .dump(2)
      << "\n";
}

// --- CSV emission -----------------------------------------------------------

inline void write_error_csv(const std::filesystem::path& file,
                            const ErrorReport& report) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw format_error("cannot open '" + file.string() + "' for writing");
  out << "time,relative_l2\n";
  for (const auto& e : report.per_time)
    out << detail::format_double(e.time) << ","
        << detail::format_double(e.relative_l2) << "\n";
}

inline void write_sweep_csv(const std::filesystem::path& file,
                            const std::vector<SweepRow>& registered,
                            const std::vector<SweepRow>& unregistered) {
  if (registered.size() != unregistered.size())
    throw validation_error("sweep csv: row count mismatch");
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw format_error("cannot open '" + file.string() + "' for writing");
  out << "rank,mean_error_registered,mean_error_unregistered\n";
  for (std::size_t i = 0; i < registered.size(); ++i) {
    out << registered[i].rank << ","
        << detail::format_double(registered[i].mean_relative_l2_test) << ","
        << detail::format_double(unregistered[i].mean_relative_l2_test) << "\n";
  }
}

inline void write_singular_values_csv(const std::filesystem::path& file,
                                      const Eigen::VectorXd& registered,
                                      const Eigen::VectorXd& unregistered) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw format_error("cannot open '" + file.string() + "' for writing");
  out << "mode_index,sigma_registered,sigma_unregistered\n";
  const Index n = std::max(registered.size(), unregistered.size());
  for (Index i = 0; i < n; ++i) {
    out << (i + 1) << ",";
    if (i < registered.size()) out << detail::format_double(registered[i]);
    out << ",";
    if (i < unregistered.size()) out << detail::format_double(unregistered[i]);
    out << "\n";
  }
}

inline void write_energy_csv(const std::filesystem::path& file,
                             const PodBasis& basis) {
  const Eigen::VectorXd curve = energy_curve(basis);
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw format_error("cannot open '" + file.string() + "' for writing");
  out << "mode_index,sigma,energy_cumulative\n";
  for (Index i = 0; i < curve.size(); ++i)
    out << (i + 1) << ","
        << detail::format_double(basis.singular_values[i]) << ","
        << detail::format_double(curve[i], "%.15g") << "\n";
}

// --- Model bundle ------------------------------------------------------------

namespace detail {

inline RbfKernel kernel_from_string(const std::string& s) {
  if (s == "gaussian") return RbfKernel::gaussian;
  if (s == "multiquadric") return RbfKernel::multiquadric;
  if (s == "thin_plate") return RbfKernel::thin_plate;
  throw validation_error("unknown RBF kernel '" + s + "'");
}

inline RbfExtrapolation rbf_extrapolation_from_string(const std::string& s) {
  if (s == "native") return RbfExtrapolation::native;
  if (s == "clamp_to_nearest_knot") return RbfExtrapolation::clamp_to_nearest_knot;
  throw validation_error("unknown coefficient extrapolation '" + s + "'");
}

inline ShiftExtrapolation shift_extrapolation_from_string(const std::string& s) {
  if (s == "last_segment_slope") return ShiftExtrapolation::last_segment_slope;
  if (s == "least_squares_line") return ShiftExtrapolation::least_squares_line;
  throw validation_error("unknown shift extrapolation '" + s + "'");
}

}  // namespace detail

/// Persist a model as a directory: meta.json, basis.bin, coeffs.csv,
/// shifts.json. The coefficient regressor is re-fitted on load from the
/// stored training table, which reproduces the weights exactly.
inline void save_model(const std::filesystem::path& dir, const RomModel& model) {
  std::filesystem::create_directories(dir);

  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["field_name"] = model.field_name;
  meta["registration_enabled"] = model.registration_enabled;
  meta["reference_index"] = model.reference_index;
  meta["reference_time"] = model.reference_time;
  meta["grid"] = {{"n_dims", model.grid.n_dims},
                  {"sizes", std::vector<Index>(model.grid.sizes.begin(),
                                               model.grid.sizes.begin() +
                                                   model.grid.n_dims)},
                  {"origin", std::vector<double>(model.grid.origin.begin(),
                                                 model.grid.origin.begin() +
                                                     model.grid.n_dims)},
                  {"extent", std::vector<double>(model.grid.extent.begin(),
                                                 model.grid.extent.begin() +
                                                     model.grid.n_dims)}};
  meta["rank"] = model.basis.rank_selected;
  meta["energy_captured"] = model.basis.energy_captured;
  meta["rbf"] = {{"kernel", to_string(model.coeff_model.kernel)},
                 {"shape_parameter", model.coeff_model.shape_parameter},
                 {"extrapolation", to_string(model.coeff_model.extrapolation)}};
  meta["shift_extrapolation"] = to_string(model.shift_map.extrapolation);
  std::ofstream ms(dir / "meta.json", std::ios::trunc);
  ms << meta.dump(2) << "\n";

  write_basis(dir / "basis.bin", model.basis);

  std::ofstream cs(dir / "coeffs.csv", std::ios::trunc);
  cs << "time";
  for (Index r = 0; r < model.coefficients.coeffs.rows(); ++r)
    cs << ",c" << (r + 1);
  cs << "\n";
  for (Index i = 0; i < static_cast<Index>(model.coefficients.times.size());
       ++i) {
    cs << detail::format_double(
        model.coefficients.times[static_cast<std::size_t>(i)], "%.17g");
    for (Index r = 0; r < model.coefficients.coeffs.rows(); ++r)
      cs << "," << detail::format_double(model.coefficients.coeffs(r, i), "%.17g");
    cs << "\n";
  }

  std::ofstream ss(dir / "shifts.json", std::ios::trunc);
  ss << shifts_to_json(model.shift_map.knots, model.shift_map.values,
                       model.reference_index, model.reference_time)
            .dump(2)
     << "\n";
}

inline RomModel load_model(const std::filesystem::path& dir) {
  const char* required[] = {"meta.json", "basis.bin", "coeffs.csv",
                            "shifts.json"};
  std::string missing;
  for (const char* name : required) {
    if (!std::filesystem::exists(dir / name)) {
      if (!missing.empty()) missing += ", ";
      missing += name;
    }
  }
  if (!missing.empty())
    throw validation_error("model directory '" + dir.string() +
                           "' is missing: " + missing);

  std::ifstream ms(dir / "meta.json");
  nlohmann::json meta = nlohmann::json::parse(ms, nullptr, true, true);

  RomModel model;
  model.field_name = meta.value("field_name", std::string{});
  model.registration_enabled = meta.at("registration_enabled").get<bool>();
  model.reference_index = meta.at("reference_index").get<Index>();
  model.reference_time = meta.at("reference_time").get<double>();
  const auto& g = meta.at("grid");
  model.grid.n_dims = g.at("n_dims").get<int>();
  for (int a = 0; a < model.grid.n_dims; ++a) {
    model.grid.sizes[a] = g.at("sizes")[static_cast<std::size_t>(a)].get<Index>();
    model.grid.origin[a] =
        g.at("origin")[static_cast<std::size_t>(a)].get<double>();
    model.grid.extent[a] =
        g.at("extent")[static_cast<std::size_t>(a)].get<double>();
  }
  model.grid.validate();

  model.basis = read_basis(dir / "basis.bin");

  // coeffs.csv -> training coefficient table
  std::ifstream cs(dir / "coeffs.csv");
  std::string line;
  if (!std::getline(cs, line))
    throw format_error("'" + (dir / "coeffs.csv").string() + "': empty file");
  std::vector<std::vector<double>> rows;
  while (std::getline(cs, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      row.push_back(std::stod(line.substr(pos, next - pos)));
      pos = next + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw format_error("'" + (dir / "coeffs.csv").string() + "': no data rows");
  const Index n_r = static_cast<Index>(rows[0].size()) - 1;
  if (n_r != model.basis.rank_selected)
    throw format_error("'" + (dir / "coeffs.csv").string() +
                       "': coefficient count does not match basis rank");
  model.coefficients.times.resize(rows.size());
  model.coefficients.coeffs.resize(n_r, static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Index>(rows[i].size()) != n_r + 1)
      throw format_error("'" + (dir / "coeffs.csv").string() +
                         "': ragged row " + std::to_string(i + 1));
    model.coefficients.times[i] = rows[i][0];
    for (Index r = 0; r < n_r; ++r)
      model.coefficients.coeffs(r, static_cast<Index>(i)) =
          rows[i][static_cast<std::size_t>(r) + 1];
  }

  RbfConfig rbf;
  rbf.kernel = detail::kernel_from_string(meta.at("rbf").at("kernel"));
  rbf.shape_parameter = meta.at("rbf").at("shape_parameter").get<double>();
  rbf.extrapolation = detail::rbf_extrapolation_from_string(
      meta.at("rbf").at("extrapolation"));
  model.coeff_model = fit_rbf(model.coefficients, rbf);

  // shifts.json -> shift map
  std::ifstream ss(dir / "shifts.json");
  nlohmann::json sj = nlohmann::json::parse(ss, nullptr, true, true);
  const auto& arr = sj.at("shifts");
  std::vector<double> knots;
  std::vector<Shift> shifts;
  knots.reserve(arr.size());
  shifts.reserve(arr.size());
  for (const auto& rec : arr) {
    knots.push_back(rec.at("time").get<double>());
    Shift s = Shift::zero(model.grid.n_dims);
    const auto& lags = rec.at("lags");
    for (int a = 0; a < model.grid.n_dims; ++a)
      s.lags[a] = std::lround(lags[static_cast<std::size_t>(a)].get<double>());
    shifts.push_back(s);
  }
  model.shift_map = fit_shift_map(
      knots, shifts, model.grid,
      detail::shift_extrapolation_from_string(meta.at("shift_extrapolation")));
  return model;
}

}  // namespace romreg
