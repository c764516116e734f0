#pragma once

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tdoalab/csv.hpp"

namespace tdoalab {

// `--config` accepts a file path or a bundled preset name; "all" expands to
// the three scenario presets.
inline std::vector<ExperimentConfig> resolve_configs(const std::string& config_arg) {
  if (std::filesystem::exists(config_arg)) {
    return {parse_config(read_file(config_arg))};
  }
  if (config_arg == "all")
    return {make_preset("fig3a"), make_preset("fig3b"), make_preset("fig3c")};
  for (const PresetInfo& p : preset_list())
    if (p.name == config_arg) return {make_preset(config_arg)};
  throw std::runtime_error("'" + config_arg + "' is neither a config file nor a preset (try: " +
                           std::string("tdoalab presets list)"));
}

struct SweepArgs {
  std::string config = "fig3b";
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> threads;
};

struct SingleArgs {
  std::string config = "fig3b";
  int k = 4;
  std::string filter_kind = "ages";
  std::optional<std::uint64_t> seed;
  std::string dump_window_path;  // empty = no dump
};

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline void print_result_table(std::ostream& os, const McResult& result,
                               const std::vector<int>& k_values) {
  os << "  " << std::left << std::setw(12) << "filter";
  for (int k : k_values) os << std::right << std::setw(8) << ("K=" + std::to_string(k));
  os << "\n";
  std::vector<std::string> order;
  for (const McRow& r : result.rows)
    if (order.empty() || order.back() != r.filter) order.push_back(r.filter);
  for (const std::string& f : order) {
    os << "  " << std::left << std::setw(12) << f;
    for (int k : k_values) {
      for (const McRow& r : result.rows)
        if (r.filter == f && r.k == k) os << std::right << std::setw(8) << fixed(r.normalized_error, 3);
    }
    os << "\n";
  }
}

}  // namespace detail

// Sweep every configured scenario, write one CSV per scenario plus a
// combined summary.csv, and print the normalized-error tables.
inline int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  try {
    std::vector<ExperimentConfig> configs = resolve_configs(args.config);
    std::filesystem::create_directories(args.out_dir);
    std::vector<McRow> all_rows;
    long total_runs = 0, total_nonconverged = 0;
    for (ExperimentConfig& cfg : configs) {
      if (args.seed) cfg.seed = *args.seed;
      if (args.runs) cfg.runs_per_point = *args.runs;
      if (args.threads) cfg.threads = *args.threads;
      const McPlan plan = cfg.make_plan();
      out << "scenario " << cfg.scenario.name << ": altitude " << cfg.scenario.altitude_m
          << " m, speed " << cfg.scenario.speed_kmh << " km/h, " << plan.runs_per_point
          << " runs per point, K in {" << detail::fixed(plan.k_values.front(), 0) << ".."
          << detail::fixed(plan.k_values.back(), 0) << "}, seed " << plan.seed << "\n";
      const McResult result = run_monte_carlo(cfg.scenario, plan, cfg.channel, cfg.gd,
                                              cfg.measurement);
      const std::filesystem::path csv_path =
          std::filesystem::path(args.out_dir) / (cfg.scenario.name + ".csv");
      atomic_write_file(csv_path, mc_rows_to_csv(result.rows));
      out << "  wrote " << csv_path.string() << "\n";
      detail::print_result_table(out, result, plan.k_values);
      all_rows.insert(all_rows.end(), result.rows.begin(), result.rows.end());
      total_runs += result.total_runs;
      total_nonconverged += result.total_nonconverged;
    }
    const std::filesystem::path summary_path = std::filesystem::path(args.out_dir) / "summary.csv";
    atomic_write_file(summary_path, mc_rows_to_csv(all_rows));
    out << "wrote " << summary_path.string() << "\n";
    const double rate = total_runs > 0 ? static_cast<double>(total_nonconverged) /
                                             static_cast<double>(total_runs)
                                       : 0.0;
    if (rate > 0.05) {
      err << "error: non-convergence rate " << detail::fixed(100.0 * rate, 2)
          << "% exceeds the 5% budget\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// One window end to end, printed in a stable layout: observations, quality
// reports, every filter's per-station estimates, then the raw and filtered
// localization results.
inline int cmd_single(const SingleArgs& args, std::ostream& out, std::ostream& err) {
  try {
    std::vector<ExperimentConfig> configs = resolve_configs(args.config);
    if (configs.size() != 1)
      throw std::runtime_error("'single' needs one scenario, not the 'all' preset");
    ExperimentConfig cfg = configs.front();
    if (args.seed) cfg.seed = *args.seed;
    const FilterKind selected = filter_kind_from_name(args.filter_kind);
    const FilterSpec selected_spec = cfg.filter.make(selected);

    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(args.k), 0));
    const auto gnbs = deploy_gnbs(cfg.scenario, rng);
    const auto traj = simulate_trajectory(cfg.scenario, args.k, rng);
    const auto offsets = SyncOffsets::draw(cfg.scenario.n_gnbs, cfg.measurement.sigma_delta_s, rng);
    const PrsSchedule sched{cfg.scenario.prs_interval_s, args.k};
    const MeasurementWindow window =
        generate_window(traj, gnbs, cfg.channel, sched, offsets, rng, cfg.measurement);
    const Eigen::Vector3d truth = traj.back();

    out << "scenario " << cfg.scenario.name << ", K=" << args.k << ", seed " << cfg.seed << "\n";
    out << "truth position: (" << detail::fixed(truth.x(), 3) << ", " << detail::fixed(truth.y(), 3)
        << ", " << detail::fixed(truth.z(), 3) << ") m\n\n";

    auto print_matrix = [&](const char* title, const Eigen::MatrixXd& m, int digits) {
      out << title << " (rows = frames, columns = stations):\n";
      for (int k = 0; k < m.rows(); ++k) {
        out << "  ";
        for (int n = 0; n < m.cols(); ++n) out << std::setw(12) << detail::fixed(m(k, n), digits);
        out << "\n";
      }
      out << "\n";
    };
    print_matrix("observed pseudo-ranges [m]", window.d_obs, 3);
    print_matrix("quality reports [m^2]", window.r_quality, 4);

    out << "per-station filter outputs [m]:\n";
    for (FilterKind kind : cfg.filter_kinds) {
      Eigen::VectorXd est;
      try {
        est = apply_filter(cfg.filter.make(kind), window);
      } catch (const std::exception&) {
        continue;  // filter not applicable at this K with the configured windows
      }
      out << "  " << std::left << std::setw(12) << filter_kind_name(kind) << std::right;
      for (int n = 0; n < est.size(); ++n) out << std::setw(12) << detail::fixed(est(n), 3);
      out << "\n";
    }
    out << "\n";

    GdConfig solver = cfg.gd;
    if (solver.pin_altitude) solver.fixed_altitude_m = truth.z();
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(window.stations());
    if (solver.quality_weights)
      weights = window.r_quality.row(window.frames() - 1).transpose().cwiseInverse();

    const LocalizeResult raw_res =
        localize(make_anchors(gnbs, raw_latest(window), weights), solver);
    const Eigen::VectorXd est = apply_filter(selected_spec, window);
    const LocalizeResult filt_res = localize(make_anchors(gnbs, est, weights), solver);

    auto print_loc = [&](const char* label, const LocalizeResult& res) {
      out << label << ": (" << detail::fixed(res.position.x(), 3) << ", "
          << detail::fixed(res.position.y(), 3) << ", " << detail::fixed(res.position.z(), 3)
          << ") m, " << (res.converged ? "converged" : "NOT converged") << " in "
          << res.iterations << " iterations\n";
    };
    print_loc("raw localization", raw_res);
    print_loc((args.filter_kind + " localization").c_str(), filt_res);
    out << "raw error: " << detail::fixed(position_error(raw_res.position, truth), 4) << " m\n";
    out << args.filter_kind
        << " error: " << detail::fixed(position_error(filt_res.position, truth), 4) << " m\n";

    if (!args.dump_window_path.empty()) {
      atomic_write_file(args.dump_window_path, window_to_csv(window, 0));
      out << "wrote " << args.dump_window_path << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_presets_list(std::ostream& out) {
  for (const PresetInfo& p : preset_list())
    out << "  " << std::left << std::setw(8) << p.name << p.description << "\n";
  return 0;
}

}  // namespace tdoalab
