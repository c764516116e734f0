#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tdoalab/cli.hpp"

using namespace tdoalab;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("tdoalab_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_temp_config(const std::string& name, const std::string& content) {
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / ("tdoalab_cfg_" + name + ".conf");
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("config round-trips through serialize and parse") {
  const ExperimentConfig def;
  CHECK(serialize_config(parse_config(serialize_config(def))) == serialize_config(def));

  for (const PresetInfo& p : preset_list()) {
    if (p.name == "all") continue;
    const ExperimentConfig preset = make_preset(p.name);
    CHECK(serialize_config(parse_config(serialize_config(preset))) == serialize_config(preset));
  }

  ExperimentConfig odd;
  odd.channel.kappa = 0.1;
  odd.channel.tau_max_s = 1.23456789e-7;
  odd.scenario.name = "weird";
  odd.scenario.speed_kmh = 72.3;
  odd.k_values = {2, 5, 9};
  odd.seed = 123456789012345ULL;
  odd.filter_kinds = {FilterKind::ages, FilterKind::none};
  odd.filter.ages_mode = AgesMode::verbatim;
  odd.filter.des_output = DesOutput::level_only;
  odd.gd.tol = 3.0e-5;
  odd.measurement.sigma_delta_s = 1e-6;
  CHECK(serialize_config(parse_config(serialize_config(odd))) == serialize_config(odd));
}

TEST_CASE("config parsing diagnostics and syntax") {
  CHECK_THROWS_WITH(parse_config("channel.fc_hz = 3e9\n"),
                    Catch::Matchers::ContainsSubstring("channel.fc_hz"));
  CHECK_THROWS_WITH(parse_config("plan.runs_per_point ten\n"),
                    Catch::Matchers::ContainsSubstring("key = value"));
  CHECK_THROWS_WITH(parse_config("channel.kappa = abc\n"),
                    Catch::Matchers::ContainsSubstring("channel.kappa"));

  // Comments, blank lines, and the K-range shorthand.
  const ExperimentConfig cfg = parse_config(
      "# comment line\n"
      "\n"
      "plan.k_values = 3:6  # trailing comment\n"
      "scenario.name = demo\n");
  CHECK(cfg.k_values == std::vector<int>{3, 4, 5, 6});
  CHECK(cfg.scenario.name == "demo");
}

TEST_CASE("bundled preset files match the built-in presets") {
  for (const char* name : {"fig3a", "fig3b", "fig3c"}) {
    const std::filesystem::path path =
        std::filesystem::path(TDOALAB_SOURCE_DIR) / "configs" / (std::string(name) + ".conf");
    REQUIRE(std::filesystem::exists(path));
    const ExperimentConfig from_file = parse_config(read_file(path));
    CHECK(serialize_config(from_file) == serialize_config(make_preset(name)));
  }
}

TEST_CASE("mc rows survive a CSV round trip losslessly") {
  ExperimentConfig cfg = make_preset("fig3b");
  cfg.k_values = {2, 3};
  cfg.runs_per_point = 8;
  const McResult res = run_monte_carlo(cfg.scenario, cfg.make_plan(), cfg.channel, cfg.gd,
                                       cfg.measurement);
  const std::string csv = mc_rows_to_csv(res.rows);
  const std::vector<McRow> parsed = mc_rows_from_csv(csv);
  REQUIRE(parsed.size() == res.rows.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].filter == res.rows[i].filter);
    CHECK(parsed[i].k == res.rows[i].k);
    CHECK(parsed[i].scenario == res.rows[i].scenario);
    CHECK(parsed[i].mean_raw_error_m == res.rows[i].mean_raw_error_m);
    CHECK(parsed[i].mean_filtered_error_m == res.rows[i].mean_filtered_error_m);
    CHECK(parsed[i].normalized_error == res.rows[i].normalized_error);
    CHECK(parsed[i].stderr_norm == res.rows[i].stderr_norm);
    CHECK(parsed[i].nonconverged == res.rows[i].nonconverged);
  }
  CHECK(mc_rows_to_csv(parsed) == csv);
}

TEST_CASE("sweep command smoke run") {
  const std::filesystem::path dir = fresh_dir("sweep_smoke");
  SweepArgs args;
  args.config = "fig3a";
  args.out_dir = dir.string();
  args.seed = 1;
  args.runs = 10;
  std::ostringstream out, err;
  const int rc = cmd_sweep(args, out, err);
  INFO(err.str());
  CHECK(rc == 0);
  REQUIRE(std::filesystem::exists(dir / "fig3a.csv"));
  REQUIRE(std::filesystem::exists(dir / "summary.csv"));
  const std::vector<McRow> rows = mc_rows_from_csv(read_file(dir / "fig3a.csv"));
  CHECK(rows.size() == 6 * 11);  // six filters, K = 2..12
  for (const McRow& r : rows) {
    CHECK(r.scenario == "fig3a");
    if (r.filter == "none") CHECK(r.normalized_error == 1.0);
  }
}

TEST_CASE("sweep command rejects bad configs with a named diagnostic") {
  const std::filesystem::path bad = write_temp_config("bad", "scenario.speed_mph = 55\n");
  SweepArgs args;
  args.config = bad.string();
  args.out_dir = fresh_dir("sweep_bad").string();
  std::ostringstream out, err;
  CHECK(cmd_sweep(args, out, err) != 0);
  CHECK(err.str().find("scenario.speed_mph") != std::string::npos);

  SweepArgs missing;
  missing.config = "no_such_preset";
  missing.out_dir = args.out_dir;
  std::ostringstream out2, err2;
  CHECK(cmd_sweep(missing, out2, err2) != 0);
  CHECK(err2.str().find("no_such_preset") != std::string::npos);
}

TEST_CASE("single command is deterministic and honors preconditions") {
  SingleArgs args;
  args.config = "fig3b";
  args.k = 4;
  args.filter_kind = "ages";
  args.seed = 5;

  std::ostringstream out1, err1, out2, err2;
  CHECK(cmd_single(args, out1, err1) == 0);
  CHECK(cmd_single(args, out2, err2) == 0);
  CHECK(out1.str() == out2.str());
  CHECK(!out1.str().empty());

  // Minimum window length runs.
  SingleArgs k2 = args;
  k2.k = 2;
  std::ostringstream out3, err3;
  CHECK(cmd_single(k2, out3, err3) == 0);

  // K = 1 violates the schedule precondition.
  SingleArgs k1 = args;
  k1.k = 1;
  std::ostringstream out4, err4;
  CHECK(cmd_single(k1, out4, err4) != 0);
  CHECK(err4.str().find("K >= 2") != std::string::npos);
}

TEST_CASE("single command window dump") {
  const std::filesystem::path dir = fresh_dir("single_dump");
  SingleArgs args;
  args.config = "fig3c";
  args.k = 3;
  args.filter_kind = "median";
  args.seed = 9;
  args.dump_window_path = (dir / "window.csv").string();
  std::ostringstream out, err;
  REQUIRE(cmd_single(args, out, err) == 0);
  const std::string csv = read_file(dir / "window.csv");
  CHECK(csv.rfind("run_id,k,n,d_true,d_obs,snr_db,r_quality\n", 0) == 0);
  // 3 frames x 8 stations plus header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 8);
}

TEST_CASE("seeded sweep output matches the golden file") {
  const std::filesystem::path golden_path =
      std::filesystem::path(TDOALAB_SOURCE_DIR) / "tests" / "data" / "golden_tiny_sweep.csv";
  REQUIRE(std::filesystem::exists(golden_path));

  const std::filesystem::path cfg_path = write_temp_config(
      "golden",
      "scenario.name = golden\n"
      "scenario.altitude_m = 30\n"
      "scenario.speed_kmh = 90\n"
      "channel.kappa = 2000\n"
      "plan.k_values = 2,3\n"
      "plan.runs_per_point = 3\n"
      "plan.seed = 7\n"
      "plan.threads = 2\n");
  const std::filesystem::path dir = fresh_dir("golden_sweep");
  SweepArgs args;
  args.config = cfg_path.string();
  args.out_dir = dir.string();
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(args, out, err) == 0);
  CHECK(read_file(dir / "golden.csv") == read_file(golden_path));
}

TEST_CASE("presets list") {
  std::ostringstream out;
  CHECK(cmd_presets_list(out) == 0);
  CHECK(out.str().find("fig3a") != std::string::npos);
  CHECK(out.str().find("fig3b") != std::string::npos);
  CHECK(out.str().find("fig3c") != std::string::npos);
  CHECK(out.str().find("all") != std::string::npos);
}
