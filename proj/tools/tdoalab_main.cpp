#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "tdoalab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"TDoA measurement denoising and localization laboratory"};
  app.require_subcommand(1);

  tdoalab::SweepArgs sweep_args;
  std::uint64_t sweep_seed = 0;
  int sweep_runs = 0, sweep_threads = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "run a Monte-Carlo window-length sweep");
  sweep->add_option("--config", sweep_args.config, "config file path or preset name")->required();
  sweep->add_option("--out", sweep_args.out_dir, "output directory for CSV tables")->required();
  CLI::Option* seed_opt = sweep->add_option("--seed", sweep_seed, "override plan.seed");
  CLI::Option* runs_opt = sweep->add_option("--runs", sweep_runs, "override plan.runs_per_point");
  CLI::Option* threads_opt = sweep->add_option("--threads", sweep_threads, "override plan.threads");

  tdoalab::SingleArgs single_args;
  std::uint64_t single_seed = 0;
  CLI::App* single = app.add_subcommand("single", "generate and solve one measurement window");
  single->add_option("--config", single_args.config, "config file path or preset name")->required();
  single->add_option("--k", single_args.k, "window length in frames")->required();
  single->add_option("--filter", single_args.filter_kind,
                     "filter kind (none, exp_smooth, double_exp, median, savgol, ages)")
      ->required();
  CLI::Option* single_seed_opt = single->add_option("--seed", single_seed, "override plan.seed");
  single->add_option("--dump-window", single_args.dump_window_path,
                     "write the window samples to this CSV path");

  CLI::App* presets = app.add_subcommand("presets", "bundled experiment presets");
  presets->require_subcommand(1);
  presets->add_subcommand("list", "list available presets");

  CLI11_PARSE(app, argc, argv);

  if (sweep->parsed()) {
    if (*seed_opt) sweep_args.seed = sweep_seed;
    if (*runs_opt) sweep_args.runs = sweep_runs;
    if (*threads_opt) sweep_args.threads = sweep_threads;
    return tdoalab::cmd_sweep(sweep_args, std::cout, std::cerr);
  }
  if (single->parsed()) {
    if (*single_seed_opt) single_args.seed = single_seed;
    return tdoalab::cmd_single(single_args, std::cout, std::cerr);
  }
  return tdoalab::cmd_presets_list(std::cout);
}
