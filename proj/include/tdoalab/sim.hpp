#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tdoalab/channel.hpp"
#include "tdoalab/localization.hpp"
#include "tdoalab/measurement.hpp"
#include "tdoalab/rng.hpp"

namespace tdoalab {

// Deployment and flight profile of one evaluation scenario.
struct ScenarioConfig {
  std::string name = "custom";
  double altitude_m = 30.0;
  double speed_kmh = 90.0;
  int n_gnbs = 8;
  double coverage_r_m = 120.0;
  double gnb_height_min_m = 0.0;
  double gnb_height_max_m = 5.0;
  double prs_interval_s = 0.02;
  double jitter_frac = 0.10;         // speed jitter as a fraction of nominal
  double heading_jitter_rad = 0.05;  // per-step heading perturbation half-width

  void validate() const {
    if (n_gnbs < 4) throw std::domain_error("ScenarioConfig: needs at least 4 stations");
    if (!(altitude_m > gnb_height_max_m))
      throw std::domain_error("ScenarioConfig: altitude must exceed station heights");
    if (speed_kmh < 0.0) throw std::domain_error("ScenarioConfig: negative speed");
    if (!(coverage_r_m > 0.0)) throw std::domain_error("ScenarioConfig: coverage radius must be positive");
    if (!(prs_interval_s > 0.0)) throw std::domain_error("ScenarioConfig: PRS interval must be positive");
    if (gnb_height_min_m < 0.0 || gnb_height_max_m < gnb_height_min_m)
      throw std::domain_error("ScenarioConfig: bad station height range");
    if (jitter_frac < 0.0 || heading_jitter_rad < 0.0)
      throw std::domain_error("ScenarioConfig: negative jitter");
  }

  double speed_ms() const { return speed_kmh / 3.6; }
};

// Monte-Carlo sweep plan: window lengths, repetition count, and the filter
// set evaluated against the shared per-run windows.
struct McPlan {
  std::vector<int> k_values = {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  int runs_per_point = 1000;
  std::vector<FilterSpec> filters;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (k_values.empty()) throw std::domain_error("McPlan: no window lengths");
    for (int k : k_values)
      if (k < 2) throw std::domain_error("McPlan: every K must be >= 2");
    if (runs_per_point < 1) throw std::domain_error("McPlan: runs_per_point must be >= 1");
    if (threads < 0) throw std::domain_error("McPlan: negative thread count");
  }
};

// Raw (unfiltered) mean error below this is treated as a degenerate
// normalization baseline; the normalized error is then reported as NaN
// instead of a meaningless ratio of solver-tolerance residues.
inline constexpr double kDegenerateRawErrorM = 1e-3;

struct McRow {
  std::string filter;
  int k = 0;
  std::string scenario;
  double mean_raw_error_m = 0.0;
  double mean_filtered_error_m = 0.0;
  double normalized_error = 0.0;
  double stderr_norm = 0.0;  // delta-method standard error of the ratio of means
  long nonconverged = 0;

  bool degenerate() const { return std::isnan(normalized_error); }
};

struct McResult {
  std::vector<McRow> rows;
  long total_runs = 0;
  long total_nonconverged = 0;

  double nonconvergence_rate() const {
    return total_runs > 0 ? static_cast<double>(total_nonconverged) / static_cast<double>(total_runs)
                          : 0.0;
  }
};

// Station positions drawn uniformly over a disc of radius coverage_r_m
// around the origin (the trajectory anchor), heights uniform over the
// configured range. Duplicate positions are redrawn.
inline std::vector<Eigen::Vector3d> deploy_gnbs(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Eigen::Vector3d> gnbs;
  gnbs.reserve(cfg.n_gnbs);
  while (static_cast<int>(gnbs.size()) < cfg.n_gnbs) {
    const double radius = cfg.coverage_r_m * std::sqrt(rng.uniform());
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double height = rng.uniform(cfg.gnb_height_min_m, cfg.gnb_height_max_m);
    const Eigen::Vector3d p(radius * std::cos(angle), radius * std::sin(angle), height);
    bool duplicate = false;
    for (const Eigen::Vector3d& q : gnbs)
      if ((p - q).norm() < 1e-6) duplicate = true;
    if (!duplicate) gnbs.push_back(p);
  }
  return gnbs;
}

// Near-constant-velocity track: constant altitude, random initial heading,
// per-step speed jitter (gaussian, truncated at 3 sigma) and a uniform
// heading perturbation. Starts at the deployment-disc center; at these
// speeds the K-frame traverse is a few meters, so start and midpoint are
// interchangeable against a 120 m coverage radius.
inline std::vector<Eigen::Vector3d> simulate_trajectory(const ScenarioConfig& cfg, int k_frames,
                                                        Rng& rng) {
  cfg.validate();
  if (k_frames < 2) throw std::domain_error("simulate_trajectory: K >= 2 required");
  std::vector<Eigen::Vector3d> traj;
  traj.reserve(k_frames);
  double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Eigen::Vector3d pos(0.0, 0.0, cfg.altitude_m);
  traj.push_back(pos);
  for (int i = 1; i < k_frames; ++i) {
    const double g = cfg.jitter_frac > 0.0 ? rng.truncated_normal(0.0, cfg.jitter_frac) : 0.0;
    const double speed = cfg.speed_ms() * (1.0 + g);
    if (cfg.heading_jitter_rad > 0.0)
      heading += rng.uniform(-cfg.heading_jitter_rad, cfg.heading_jitter_rad);
    pos += speed * cfg.prs_interval_s * Eigen::Vector3d(std::cos(heading), std::sin(heading), 0.0);
    traj.push_back(pos);
  }
  return traj;
}

// Everything observed in one Monte-Carlo run: errors of the raw path and of
// every planned filter, computed from the identical window (checksums kept
// so tests can assert the pairing).
struct RunOutcome {
  double raw_error = 0.0;
  bool raw_converged = false;
  std::uint64_t raw_checksum = 0;
  std::vector<double> filter_error;
  std::vector<char> filter_converged;
  std::vector<std::uint64_t> filter_checksum;
};

inline std::vector<Anchor> make_anchors(const std::vector<Eigen::Vector3d>& gnbs,
                                        const Eigen::VectorXd& ranges,
                                        const Eigen::VectorXd& weights) {
  std::vector<Anchor> anchors(gnbs.size());
  for (std::size_t n = 0; n < gnbs.size(); ++n)
    anchors[n] = Anchor{gnbs[n], ranges(static_cast<Eigen::Index>(n)),
                        weights(static_cast<Eigen::Index>(n))};
  return anchors;
}

// One end-to-end run evaluated at every requested window length. The
// deployment, trajectory and observations are drawn once at max(k_values);
// window length k then sees the leading k frames with truth at frame k.
// Sharing the draws across k (common random numbers) keeps the sweep curves
// comparable point to point, and every filter is evaluated against the same
// sub-window as the raw path.
inline std::vector<RunOutcome> simulate_run_multi(const ScenarioConfig& scenario,
                                                  const ChannelConfig& chan, const GdConfig& gd,
                                                  const MeasurementOptions& meas,
                                                  const std::vector<FilterSpec>& filters,
                                                  const std::vector<int>& k_values,
                                                  std::uint64_t seed) {
  const int k_max = *std::max_element(k_values.begin(), k_values.end());
  Rng rng(seed);
  const std::vector<Eigen::Vector3d> gnbs = deploy_gnbs(scenario, rng);
  const std::vector<Eigen::Vector3d> traj = simulate_trajectory(scenario, k_max, rng);
  const SyncOffsets offsets = SyncOffsets::draw(scenario.n_gnbs, meas.sigma_delta_s, rng);
  const PrsSchedule sched{scenario.prs_interval_s, k_max};
  const MeasurementWindow full = generate_window(traj, gnbs, chan, sched, offsets, rng, meas);

  std::vector<RunOutcome> outs;
  outs.reserve(k_values.size());
  for (int k : k_values) {
    const MeasurementWindow window = full.head(k);
    const Eigen::Vector3d truth = traj[static_cast<std::size_t>(k - 1)];

    GdConfig solver = gd;
    if (solver.pin_altitude) solver.fixed_altitude_m = truth.z();
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(window.stations());
    if (solver.quality_weights)
      weights = window.r_quality.row(window.frames() - 1).transpose().cwiseInverse();

    RunOutcome out;
    out.raw_checksum = window.checksum();
    {
      const LocalizeResult res = localize(make_anchors(gnbs, raw_latest(window), weights), solver);
      out.raw_error = position_error(res.position, truth);
      out.raw_converged = res.converged;
    }
    out.filter_error.resize(filters.size(), 0.0);
    out.filter_converged.resize(filters.size(), 0);
    out.filter_checksum.resize(filters.size(), 0);
    for (std::size_t f = 0; f < filters.size(); ++f) {
      out.filter_checksum[f] = window.checksum();
      if (filters[f].kind == FilterKind::none) {
        // Definitionally the raw path; reuse it so the paired ratio is exact.
        out.filter_error[f] = out.raw_error;
        out.filter_converged[f] = out.raw_converged;
        continue;
      }
      const Eigen::VectorXd est = apply_filter(filters[f], window);
      const LocalizeResult res = localize(make_anchors(gnbs, est, weights), solver);
      out.filter_error[f] = position_error(res.position, truth);
      out.filter_converged[f] = res.converged;
    }
    outs.push_back(std::move(out));
  }
  return outs;
}

// Single-window-length convenience wrapper.
inline RunOutcome simulate_run(const ScenarioConfig& scenario, const ChannelConfig& chan,
                               const GdConfig& gd, const MeasurementOptions& meas,
                               const std::vector<FilterSpec>& filters, int k_frames,
                               std::uint64_t seed) {
  return simulate_run_multi(scenario, chan, gd, meas, filters, {k_frames}, seed).front();
}

// Monte-Carlo sweep over (filter, K). Each run draws a fresh deployment,
// trajectory, offsets and window from seed mix(seed, run); every window
// length sees that run's leading frames and every filter is evaluated
// against the same sub-window, so all comparisons are paired both across
// filters and across K. Runs where the raw or the filtered solve failed to
// converge are excluded from that row's means and counted in `nonconverged`.
// Results are merged in run order, so the output is bit-identical for any
// thread count.
inline McResult run_monte_carlo(const ScenarioConfig& scenario, const McPlan& plan,
                                const ChannelConfig& chan, const GdConfig& gd,
                                const MeasurementOptions& meas = {}) {
  scenario.validate();
  plan.validate();
  chan.validate();

  const int runs = plan.runs_per_point;
  const std::size_t n_k = plan.k_values.size();
  std::vector<std::vector<RunOutcome>> outcomes(static_cast<std::size_t>(runs));

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned n_threads =
      std::min<unsigned>(plan.threads > 0 ? static_cast<unsigned>(plan.threads) : hw,
                         static_cast<unsigned>(runs));

  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const long run = next.fetch_add(1);
      if (run >= runs || failed.load()) return;
      try {
        outcomes[static_cast<std::size_t>(run)] =
            simulate_run_multi(scenario, chan, gd, meas, plan.filters, plan.k_values,
                               mix_seed(plan.seed, static_cast<std::uint64_t>(run)));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failure = e.what();
        failed.store(true);
        return;
      }
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("run_monte_carlo: " + failure);

  McResult result;
  for (std::size_t f = 0; f < plan.filters.size(); ++f) {
    for (std::size_t ki = 0; ki < n_k; ++ki) {
      McRow row;
      row.filter = filter_kind_name(plan.filters[f].kind);
      row.k = plan.k_values[ki];
      row.scenario = scenario.name;
      double sum_raw = 0.0, sum_filt = 0.0;
      double sum_raw2 = 0.0, sum_filt2 = 0.0, sum_cross = 0.0;
      long included = 0;
      for (int run = 0; run < runs; ++run) {
        const RunOutcome& o = outcomes[static_cast<std::size_t>(run)][ki];
        if (!o.raw_converged || !o.filter_converged[f]) {
          ++row.nonconverged;
          continue;
        }
        const double re = o.raw_error;
        const double fe = o.filter_error[f];
        sum_raw += re;
        sum_filt += fe;
        sum_raw2 += re * re;
        sum_filt2 += fe * fe;
        sum_cross += re * fe;
        ++included;
      }
      if (included > 0) {
        const double m = static_cast<double>(included);
        row.mean_raw_error_m = sum_raw / m;
        row.mean_filtered_error_m = sum_filt / m;
        if (row.mean_raw_error_m < kDegenerateRawErrorM) {
          row.normalized_error = std::numeric_limits<double>::quiet_NaN();
          row.stderr_norm = std::numeric_limits<double>::quiet_NaN();
        } else {
          row.normalized_error = row.mean_filtered_error_m / row.mean_raw_error_m;
          if (included > 1) {
            // Delta-method variance of the ratio of paired means, grouped so
            // the identical-series case (filter == none) cancels exactly.
            const double var_f = (sum_filt2 - m * row.mean_filtered_error_m * row.mean_filtered_error_m) / (m - 1.0);
            const double var_r = (sum_raw2 - m * row.mean_raw_error_m * row.mean_raw_error_m) / (m - 1.0);
            const double cov = (sum_cross - m * row.mean_filtered_error_m * row.mean_raw_error_m) / (m - 1.0);
            const double rbar = row.mean_raw_error_m;
            const double ratio = row.normalized_error;
            const double var_ratio =
                ((var_f - 2.0 * ratio * cov) + ratio * ratio * var_r) / (rbar * rbar * m);
            row.stderr_norm = var_ratio > 0.0 ? std::sqrt(var_ratio) : 0.0;
          }
        }
      } else {
        row.normalized_error = std::numeric_limits<double>::quiet_NaN();
        row.stderr_norm = std::numeric_limits<double>::quiet_NaN();
      }
      result.total_runs += runs;
      result.total_nonconverged += row.nonconverged;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace tdoalab
