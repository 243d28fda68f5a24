#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "romreg/romreg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string normalize_name(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in)
    throw romreg::validation_error("cannot open config file '" + path + "'");
  return json::parse(in, nullptr, true, true);
}

/// Flags override config values; config values override built-in defaults.
template <typename T>
void apply_config(const json& cfg, const CLI::Option* opt, const char* key,
                  T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    const std::string tok = s.substr(pos, next - pos);
    if (!tok.empty()) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw romreg::validation_error(std::string("cannot parse ") + what +
                                       " value '" + tok + "'");
      }
    }
    pos = next + 1;
  }
  return out;
}

romreg::VortexField vortex_field_from_string(const std::string& s) {
  const std::string n = normalize_name(s);
  if (n == "density") return romreg::VortexField::density;
  if (n == "pressure") return romreg::VortexField::pressure;
  if (n == "velocity_x") return romreg::VortexField::velocity_x;
  if (n == "velocity_y") return romreg::VortexField::velocity_y;
  if (n == "energy") return romreg::VortexField::energy;
  throw romreg::validation_error("unknown vortex field '" + s + "'");
}

struct CaseDefaults {
  double train_fraction;
  std::optional<double> reference_time;  // empty: 30% of the full time span
};

CaseDefaults defaults_for_case(const std::string& case_name) {
  if (case_name == "gaussian_wave") return {0.5, 3.03};
  if (case_name == "isentropic_vortex") return {0.3, std::nullopt};
  return {0.5, std::nullopt};
}

std::string case_from_meta(const json& meta) {
  if (meta.contains("generator") && meta["generator"].contains("case"))
    return normalize_name(meta["generator"]["case"].get<std::string>());
  return {};
}

/// Options shared by `fit` and `sweep`, overridable from the config file.
struct FitOptions {
  std::string kernel = "gaussian";
  double shape_parameter = 0.0;  // 0: 1/mean-gap default
  double ridge = 0.0;
  std::string coeff_extrapolation = "clamp-to-nearest-knot";
  std::string shift_extrapolation = "least-squares-line";
  double energy_threshold = 0.9999;
  romreg::Index fixed_rank = 0;  // 0: use the energy threshold
  double train_fraction = -1.0;  // <0: per-case default
  double reference_time = std::numeric_limits<double>::quiet_NaN();
  romreg::Index reference_index = -1;
  bool no_register = false;

  struct Bound {
    const CLI::Option* opt;
    std::function<void(const json&, const char*)> assign;
    const char* key;
  };
  std::vector<Bound> bound;

  template <typename T>
  void bind(CLI::Option* opt, const char* key, T& field) {
    bound.push_back({opt,
                     [&field](const json& cfg, const char* k) {
                       field = cfg.at(k).get<T>();
                     },
                     key});
  }

  void add_flags(CLI::App* cmd) {
    bind(cmd->add_option("--kernel", kernel,
                         "RBF kernel: gaussian|multiquadric|thin-plate")
             ->capture_default_str(),
         "kernel", kernel);
    bind(cmd->add_option("--shape-parameter", shape_parameter,
                         "RBF shape parameter (0: 1/mean time gap)")
             ->capture_default_str(),
         "shape_parameter", shape_parameter);
    bind(cmd->add_option("--ridge", ridge,
                         "ridge regularization for the RBF solve")
             ->capture_default_str(),
         "ridge", ridge);
    bind(cmd->add_option("--coeff-extrapolation", coeff_extrapolation,
                         "coefficient model beyond the training interval: "
                         "clamp-to-nearest-knot|native")
             ->capture_default_str(),
         "coeff_extrapolation", coeff_extrapolation);
    bind(cmd->add_option("--shift-extrapolation", shift_extrapolation,
                         "shift map beyond the training interval: "
                         "least-squares-line|last-segment-slope")
             ->capture_default_str(),
         "shift_extrapolation", shift_extrapolation);
    bind(cmd->add_option("--energy-threshold", energy_threshold,
                         "cumulative energy threshold for rank selection")
             ->capture_default_str(),
         "energy_threshold", energy_threshold);
    bind(cmd->add_option("--rank", fixed_rank,
                         "fixed POD rank (overrides the energy threshold)"),
         "rank", fixed_rank);
    bind(cmd->add_option("--train-fraction", train_fraction,
                         "chronological training fraction (default: 0.5 wave, "
                         "0.3 vortex)"),
         "train_fraction", train_fraction);
    bind(cmd->add_option("--reference-time", reference_time,
                         "register against the training snapshot nearest this "
                         "time (default: 3.03 wave, 30% of the time span "
                         "otherwise)"),
         "reference_time", reference_time);
    bind(cmd->add_option("--reference-index", reference_index,
                         "register against this training column"),
         "reference_index", reference_index);
    bind(cmd->add_flag("--no-register", no_register,
                       "skip registration; build the ROM on raw snapshots"),
         "no_register", no_register);
  }

  void apply(const json& cfg) {
    for (const Bound& b : bound) {
      if (b.opt->count() > 0 || !cfg.contains(b.key)) continue;
      b.assign(cfg, b.key);
    }
  }

  romreg::OfflineConfig offline_config() const {
    romreg::OfflineConfig cfg;
    cfg.selection = fixed_rank > 0
                        ? romreg::PodSelection::fixed(fixed_rank)
                        : romreg::PodSelection::energy(energy_threshold);
    cfg.rbf.kernel = romreg::detail::kernel_from_string(normalize_name(kernel));
    if (shape_parameter > 0.0) cfg.rbf.shape_parameter = shape_parameter;
    cfg.rbf.ridge = ridge;
    cfg.rbf.extrapolation = romreg::detail::rbf_extrapolation_from_string(
        normalize_name(coeff_extrapolation));
    cfg.shift_extrapolation = romreg::detail::shift_extrapolation_from_string(
        normalize_name(shift_extrapolation));
    cfg.register_snapshots = !no_register;
    return cfg;
  }

  double resolved_fraction(const CaseDefaults& d) const {
    return train_fraction > 0.0 ? train_fraction : d.train_fraction;
  }

  romreg::Index resolve_reference(const std::vector<double>& all_times,
                                  const std::vector<double>& train_times,
                                  const CaseDefaults& d) const {
    if (reference_index >= 0) {
      if (reference_index >= static_cast<romreg::Index>(train_times.size()))
        throw romreg::validation_error(
            "reference index " + std::to_string(reference_index) +
            " is outside the training set");
      return reference_index;
    }
    double target = reference_time;
    if (std::isnan(target)) {
      target = d.reference_time
                   ? *d.reference_time
                   : all_times.front() +
                         0.3 * (all_times.back() - all_times.front());
    }
    return romreg::default_reference_index(train_times, target);
  }
};

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string case_name = "gaussian-wave";
  std::string out;
  std::string config_path;
  std::string grid_spec;
  std::string field = "density";
  bool full_scale = false;
  long seed = 0;
  romreg::WaveParams wave;
  romreg::VortexParams vortex;
};

void run_generate(GenerateArgs& a) {
  const std::string case_name = normalize_name(a.case_name);
  json generator;
  generator["case"] = case_name;
  generator["seed"] = a.seed;

  romreg::SnapshotSet set;
  if (case_name == "gaussian_wave") {
    set = romreg::generate_wave(a.wave);
    generator["beta"] = a.wave.beta;
    generator["sigma"] = a.wave.sigma;
    generator["x_min"] = a.wave.x_min;
    generator["x_max"] = a.wave.x_max;
    generator["t_min"] = a.wave.t_min;
    generator["t_max"] = a.wave.t_max;
    generator["n_nodes"] = a.wave.n_nodes;
    generator["n_times"] = a.wave.n_times;
  } else if (case_name == "isentropic_vortex") {
    if (!a.grid_spec.empty()) {
      const std::size_t x = a.grid_spec.find('x');
      if (x == std::string::npos || x == 0 || x + 1 >= a.grid_spec.size())
        throw romreg::validation_error("--grid expects NXxNY, e.g. 120x60");
      try {
        a.vortex.n_x = std::stol(a.grid_spec.substr(0, x));
        a.vortex.n_y = std::stol(a.grid_spec.substr(x + 1));
      } catch (const std::exception&) {
        throw romreg::validation_error("--grid expects NXxNY, e.g. 120x60");
      }
    } else if (a.full_scale) {
      a.vortex.n_x = 240;
      a.vortex.n_y = 120;
    } else {
      a.vortex.n_x = 120;  // desk-scale default
      a.vortex.n_y = 60;
    }
    const romreg::VortexField field = vortex_field_from_string(a.field);
    set = romreg::generate_vortex(a.vortex, field);
    generator["gamma"] = a.vortex.gamma;
    generator["strength"] = a.vortex.strength;
    generator["center"] = {a.vortex.center_x, a.vortex.center_y};
    generator["freestream"] = {a.vortex.rho_inf, a.vortex.u_inf, a.vortex.v_inf,
                               a.vortex.p_inf};
    generator["domain"] = {a.vortex.x_min, a.vortex.x_max, a.vortex.y_min,
                           a.vortex.y_max};
    generator["n_x"] = a.vortex.n_x;
    generator["n_y"] = a.vortex.n_y;
    generator["n_times"] = a.vortex.n_times;
    generator["snapshot_dt"] = a.vortex.snapshot_dt;
    generator["field"] = romreg::to_string(field);
  } else {
    throw romreg::validation_error(
        "unknown case '" + a.case_name +
        "' (expected gaussian-wave or isentropic-vortex)");
  }
  romreg::write_snapshots(a.out, set, generator);
  std::cout << "wrote " << a.out << " (" << set.num_dofs() << "x"
            << set.num_snapshots() << ")\n";
}

// --- fit ---------------------------------------------------------------------

void run_fit(const std::string& snapshots_path, const std::string& out_dir,
             const FitOptions& fit) {
  const romreg::SnapshotSet all = romreg::read_snapshots(snapshots_path);
  const json meta = romreg::read_snapshot_meta(snapshots_path);
  const CaseDefaults d = defaults_for_case(case_from_meta(meta));

  auto [train, test] = romreg::split(all, fit.resolved_fraction(d));
  const romreg::Index ref = fit.resolve_reference(all.times, train.times, d);
  const romreg::RomModel model =
      romreg::offline(train, ref, fit.offline_config());

  romreg::save_model(out_dir, model);
  romreg::write_energy_csv(fs::path(out_dir) / "energy.csv", model.basis);
  std::printf("rank=%lld energy=%.6f\n",
              static_cast<long long>(model.basis.rank_selected),
              model.basis.energy_captured);
  std::cout << "model written to " << out_dir << "\n";
}

// --- predict -----------------------------------------------------------------

void run_predict(const std::string& model_dir, const std::string& out_path,
                 const std::string& times_arg, const std::string& times_from,
                 const std::string& subset, double train_fraction) {
  const romreg::RomModel model = romreg::load_model(model_dir);

  std::vector<double> times;
  if (!times_from.empty()) {
    const romreg::SnapshotSet src = romreg::read_snapshots(times_from);
    const json meta = romreg::read_snapshot_meta(times_from);
    const CaseDefaults d = defaults_for_case(case_from_meta(meta));
    const double fraction =
        train_fraction > 0.0 ? train_fraction : d.train_fraction;
    if (subset == "all") {
      times = src.times;
    } else if (subset == "train" || subset == "test") {
      auto [train, test] = romreg::split(src, fraction);
      times = subset == "train" ? train.times : test.times;
    } else {
      throw romreg::validation_error("--subset expects train|test|all");
    }
  } else {
    times = parse_double_list(times_arg, "time");
  }
  if (times.empty()) throw romreg::validation_error("predict: empty time list");
  std::sort(times.begin(), times.end());
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] == times[i - 1])
      throw romreg::validation_error("predict: duplicate time " +
                                     std::to_string(times[i]));

  romreg::SnapshotSet pred;
  pred.grid = model.grid;
  pred.field_name = model.field_name;
  pred.times = times;
  pred.data.resize(model.grid.num_nodes(),
                   static_cast<romreg::Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i)
    pred.data.col(static_cast<romreg::Index>(i)) =
        romreg::predict(model, times[i]);

  json generator;
  generator["case"] = "prediction";
  generator["model"] = model_dir;
  romreg::write_snapshots(out_path, pred, generator);
  std::cout << "wrote " << out_path << " (" << pred.num_dofs() << "x"
            << pred.num_snapshots() << ")\n";
}

// --- evaluate ------------------------------------------------------------------

void run_evaluate(const std::string& model_dir, const std::string& truth_path,
                  const std::string& out_dir, double train_fraction) {
  const romreg::RomModel model = romreg::load_model(model_dir);
  const romreg::SnapshotSet truth = romreg::read_snapshots(truth_path);
  const json meta = romreg::read_snapshot_meta(truth_path);
  const CaseDefaults d = defaults_for_case(case_from_meta(meta));
  const double fraction =
      train_fraction > 0.0 ? train_fraction : d.train_fraction;

  auto [train, test] = romreg::split(truth, fraction);
  const romreg::ErrorReport train_report =
      romreg::evaluate(model, train, "train");
  const romreg::ErrorReport test_report = romreg::evaluate(model, test, "test");

  fs::create_directories(out_dir);
  romreg::write_error_csv(fs::path(out_dir) / "errors_train.csv", train_report);
  romreg::write_error_csv(fs::path(out_dir) / "errors_test.csv", test_report);
  std::printf("mean_train=%.6e mean_test=%.6e\n", train_report.mean_relative_l2,
              test_report.mean_relative_l2);
}

// --- sweep ---------------------------------------------------------------------

void run_sweep(const std::string& snapshots_path, const std::string& out_dir,
               const std::string& ranks_arg, const FitOptions& fit) {
  const romreg::SnapshotSet all = romreg::read_snapshots(snapshots_path);
  const json meta = romreg::read_snapshot_meta(snapshots_path);
  const CaseDefaults d = defaults_for_case(case_from_meta(meta));

  std::vector<romreg::Index> ranks;
  for (double v : parse_double_list(ranks_arg, "rank"))
    ranks.push_back(static_cast<romreg::Index>(v));
  if (ranks.empty()) throw romreg::validation_error("sweep: empty rank list");

  auto [train, test] = romreg::split(all, fit.resolved_fraction(d));
  const romreg::Index ref = fit.resolve_reference(all.times, train.times, d);
  const romreg::OfflineConfig base = fit.offline_config();

  const std::vector<romreg::SweepRow> registered =
      romreg::rank_sweep(train, test, ranks, true, ref, base);
  const std::vector<romreg::SweepRow> unregistered =
      romreg::rank_sweep(train, test, ranks, false, ref, base);

  // full spectra of both training matrices, for the singular-value decay plot
  const romreg::RegisteredSet reg = romreg::register_set(train, ref);
  const romreg::Index full = std::min(train.num_snapshots(), train.num_dofs());
  const romreg::PodBasis basis_reg =
      romreg::compute_pod(reg.snapshots.data, romreg::PodSelection::fixed(full));
  const romreg::PodBasis basis_unreg =
      romreg::compute_pod(train.data, romreg::PodSelection::fixed(full));

  fs::create_directories(out_dir);
  romreg::write_sweep_csv(fs::path(out_dir) / "sweep.csv", registered,
                          unregistered);
  romreg::write_singular_values_csv(fs::path(out_dir) / "singular_values.csv",
                                    basis_reg.singular_values,
                                    basis_unreg.singular_values);
  for (std::size_t i = 0; i < ranks.size(); ++i)
    std::printf("rank=%lld registered=%.6e unregistered=%.6e\n",
                static_cast<long long>(ranks[i]),
                registered[i].mean_relative_l2_test,
                unregistered[i].mean_relative_l2_test);
  std::cout << "wrote " << (fs::path(out_dir) / "sweep.csv").string() << " and "
            << (fs::path(out_dir) / "singular_values.csv").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-intrusive ROMs for transport-dominated problems via "
               "cross-correlation snapshot registration"};
  app.require_subcommand(1);

  // generate
  GenerateArgs gen;
  CLI::App* cmd_gen =
      app.add_subcommand("generate", "Generate a benchmark snapshot dataset");
  CLI::Option* g_case =
      cmd_gen->add_option("--case", gen.case_name,
                          "benchmark case: gaussian-wave|isentropic-vortex")
          ->capture_default_str();
  cmd_gen->add_option("--out", gen.out, "output snapshot file")->required();
  cmd_gen->add_option("--config", gen.config_path, "JSON config file");
  CLI::Option* g_seed =
      cmd_gen->add_option("--seed", gen.seed, "seed recorded in the metadata")
          ->capture_default_str();
  CLI::Option* g_beta =
      cmd_gen->add_option("--beta", gen.wave.beta, "wave amplitude")
          ->capture_default_str();
  CLI::Option* g_sigma =
      cmd_gen->add_option("--sigma", gen.wave.sigma, "wave standard deviation")
          ->capture_default_str();
  CLI::Option* g_tmin =
      cmd_gen->add_option("--t-min", gen.wave.t_min, "first wave time")
          ->capture_default_str();
  CLI::Option* g_tmax =
      cmd_gen->add_option("--t-max", gen.wave.t_max, "last wave time")
          ->capture_default_str();
  CLI::Option* g_nodes =
      cmd_gen->add_option("--nodes", gen.wave.n_nodes, "wave grid nodes")
          ->capture_default_str();
  CLI::Option* g_ntimes =
      cmd_gen
          ->add_option("--snapshots", gen.wave.n_times,
                       "number of snapshots (both cases)")
          ->capture_default_str();
  CLI::Option* g_grid = cmd_gen->add_option(
      "--grid", gen.grid_spec, "vortex grid as NXxNY (default 120x60)");
  cmd_gen->add_flag("--full-scale", gen.full_scale,
                    "use the full 240x120 vortex grid");
  CLI::Option* g_b =
      cmd_gen->add_option("--strength", gen.vortex.strength, "vortex strength b")
          ->capture_default_str();
  CLI::Option* g_field =
      cmd_gen
          ->add_option("--field", gen.field,
                       "vortex field: density|pressure|velocity-x|velocity-y|"
                       "energy")
          ->capture_default_str();
  cmd_gen->callback([&] {
    const json cfg = load_config(gen.config_path);
    apply_config(cfg, g_case, "case", gen.case_name);
    apply_config(cfg, g_seed, "seed", gen.seed);
    apply_config(cfg, g_beta, "beta", gen.wave.beta);
    apply_config(cfg, g_sigma, "sigma", gen.wave.sigma);
    apply_config(cfg, g_tmin, "t_min", gen.wave.t_min);
    apply_config(cfg, g_tmax, "t_max", gen.wave.t_max);
    apply_config(cfg, g_nodes, "n_nodes", gen.wave.n_nodes);
    apply_config(cfg, g_ntimes, "n_times", gen.wave.n_times);
    apply_config(cfg, g_ntimes, "n_times", gen.vortex.n_times);
    apply_config(cfg, g_grid, "grid", gen.grid_spec);
    apply_config(cfg, g_b, "strength", gen.vortex.strength);
    apply_config(cfg, g_field, "field", gen.field);
    run_generate(gen);
  });

  // fit
  std::string fit_snapshots, fit_out = "model", fit_config;
  FitOptions fit;
  CLI::App* cmd_fit =
      app.add_subcommand("fit", "Build a ROM from a snapshot file");
  cmd_fit->add_option("--snapshots", fit_snapshots, "input snapshot file")
      ->required();
  cmd_fit->add_option("--out", fit_out, "output model directory")
      ->capture_default_str();
  cmd_fit->add_option("--config", fit_config, "JSON config file");
  fit.add_flags(cmd_fit);
  cmd_fit->callback([&] {
    fit.apply(load_config(fit_config));
    run_fit(fit_snapshots, fit_out, fit);
  });

  // predict
  std::string pr_model, pr_out = "predictions.snap", pr_times, pr_from,
              pr_subset = "test";
  double pr_fraction = -1.0;
  CLI::App* cmd_pred =
      app.add_subcommand("predict", "Predict snapshots at new time instances");
  cmd_pred->add_option("--model", pr_model, "model directory")->required();
  cmd_pred->add_option("--out", pr_out, "output snapshot file")
      ->capture_default_str();
  cmd_pred->add_option("--times", pr_times, "comma-separated time list");
  cmd_pred->add_option("--times-from", pr_from,
                       "take times from this snapshot file");
  cmd_pred
      ->add_option("--subset", pr_subset, "with --times-from: train|test|all")
      ->capture_default_str();
  cmd_pred->add_option("--train-fraction", pr_fraction,
                       "split fraction for --subset");
  cmd_pred->callback([&] {
    run_predict(pr_model, pr_out, pr_times, pr_from, normalize_name(pr_subset),
                pr_fraction);
  });

  // evaluate
  std::string ev_model, ev_truth, ev_out = "errors";
  double ev_fraction = -1.0;
  CLI::App* cmd_eval = app.add_subcommand(
      "evaluate", "Relative L2 errors of a model against ground truth");
  cmd_eval->add_option("--model", ev_model, "model directory")->required();
  cmd_eval->add_option("--truth", ev_truth, "ground-truth snapshot file")
      ->required();
  cmd_eval->add_option("--out", ev_out, "output directory for error CSVs")
      ->capture_default_str();
  cmd_eval->add_option("--train-fraction", ev_fraction,
                       "chronological split fraction (default per case)");
  cmd_eval->callback(
      [&] { run_evaluate(ev_model, ev_truth, ev_out, ev_fraction); });

  // sweep
  std::string sw_snapshots, sw_out = "sweep", sw_config,
              sw_ranks = "1,2,5,10,15,20,25";
  FitOptions sweep_fit;
  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep",
      "Registered-vs-unregistered mean test error over a list of POD ranks");
  cmd_sweep->add_option("--snapshots", sw_snapshots, "input snapshot file")
      ->required();
  cmd_sweep->add_option("--out", sw_out, "output directory")
      ->capture_default_str();
  cmd_sweep->add_option("--config", sw_config, "JSON config file");
  CLI::Option* s_ranks =
      cmd_sweep->add_option("--ranks", sw_ranks, "comma-separated rank list")
          ->capture_default_str();
  sweep_fit.add_flags(cmd_sweep);
  cmd_sweep->callback([&] {
    const json cfg = load_config(sw_config);
    apply_config(cfg, s_ranks, "ranks", sw_ranks);
    sweep_fit.apply(cfg);
    run_sweep(sw_snapshots, sw_out, sw_ranks, sweep_fit);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const romreg::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
