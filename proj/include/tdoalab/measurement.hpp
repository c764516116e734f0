#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "tdoalab/channel.hpp"
#include "tdoalab/filters.hpp"
#include "tdoalab/rng.hpp"

namespace tdoalab {

// Reference-signal timing: one measurement frame every delta_t_s, K frames
// per reporting window.
struct PrsSchedule {
  double delta_t_s = 0.02;
  int k = 4;

  void validate() const {
    if (!(delta_t_s > 0.0)) throw std::domain_error("PrsSchedule: delta_t_s must be positive");
    if (k < 2) throw std::domain_error("PrsSchedule: K >= 2 required");
  }
};

// Per-station ranging offsets, constant across the frames of one window
// (station clocks drift negligibly over a few tens of milliseconds).
struct SyncOffsets {
  Eigen::VectorXd delta_m;      // per-station offset expressed in meters
  double sigma_delta_s = 0.0;   // configured offset scale in seconds

  static SyncOffsets draw(int n_stations, double sigma_delta_s, Rng& rng) {
    SyncOffsets o;
    o.sigma_delta_s = sigma_delta_s;
    o.delta_m = Eigen::VectorXd::Zero(n_stations);
    if (sigma_delta_s > 0.0) {
      const double sigma_m = kSpeedOfLight * sigma_delta_s;
      for (int i = 0; i < n_stations; ++i) o.delta_m(i) = rng.normal(0.0, sigma_m);
    }
    return o;
  }
};

// Generation knobs beyond the channel model itself.
struct MeasurementOptions {
  double sigma_delta_s = 0.0;  // station offset scale fed to SyncOffsets::draw
  double snr_quant_db = 0.0;   // quality-report SNR quantization step; 0 = exact reports
  bool freeze_los = false;     // draw the LoS state once per window per station
};

// One K-frame, N-station observation window: observed pseudo-ranges, the
// reported per-sample variances, plus ground truth kept for evaluation.
struct MeasurementWindow {
  Eigen::MatrixXd d_obs;          // K x N observed pseudo-ranges [m]
  Eigen::MatrixXd r_quality;      // K x N reported variances [m^2]
  Eigen::MatrixXd d_true;         // K x N true ranges [m]
  Eigen::MatrixXd snr_report_db;  // K x N reported SNRs [dB]

  int frames() const { return static_cast<int>(d_obs.rows()); }
  int stations() const { return static_cast<int>(d_obs.cols()); }

  // The leading k-frame sub-window (frames 1..k).
  MeasurementWindow head(int k) const {
    if (k < 1 || k > frames()) throw std::invalid_argument("MeasurementWindow::head: bad length");
    MeasurementWindow w;
    w.d_obs = d_obs.topRows(k);
    w.r_quality = r_quality.topRows(k);
    w.d_true = d_true.topRows(k);
    w.snr_report_db = snr_report_db.topRows(k);
    return w;
  }

  // FNV-1a over the observation and quality bit patterns; used to assert that
  // paired evaluations consumed the identical window.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const Eigen::MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, m.data() + i, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
          h ^= (bits >> (8 * b)) & 0xffULL;
          h *= 1099511628211ULL;
        }
      }
    };
    mix(d_obs);
    mix(r_quality);
    return h;
  }
};

// Simulate one observation window for a UAV track against N stations. For
// each frame and station: evaluate the link (LoS probability, mean path-loss
// exponent, SNR with the NLoS penalty under a Bernoulli LoS draw), then
// observe d_true + offset + gaussian(0, sigma) plus the optional exponential
// NLoS excess range. Reported variances are tdoa_variance of the reported
// SNR, so quality reports stay self-consistent. Deterministic for a fixed
// rng seed.
inline MeasurementWindow generate_window(const std::vector<Eigen::Vector3d>& traj,
                                         const std::vector<Eigen::Vector3d>& gnbs,
                                         const ChannelConfig& cfg, const PrsSchedule& sched,
                                         const SyncOffsets& offsets, Rng& rng,
                                         const MeasurementOptions& opts = {}) {
  cfg.validate();
  sched.validate();
  const int k_frames = sched.k;
  const int n_stations = static_cast<int>(gnbs.size());
  if (static_cast<int>(traj.size()) != k_frames)
    throw std::invalid_argument("generate_window: trajectory length differs from K");
  if (n_stations < 4) throw std::invalid_argument("generate_window: needs at least 4 stations");
  if (offsets.delta_m.size() != n_stations)
    throw std::invalid_argument("generate_window: offset vector length differs from N");

  MeasurementWindow w;
  w.d_obs.resize(k_frames, n_stations);
  w.r_quality.resize(k_frames, n_stations);
  w.d_true.resize(k_frames, n_stations);
  w.snr_report_db.resize(k_frames, n_stations);

  std::vector<char> frozen_los(n_stations, 1);
  if (opts.freeze_los) {
    for (int n = 0; n < n_stations; ++n) {
      const Eigen::Vector3d rel = traj.front() - gnbs[n];
      frozen_los[n] = rng.bernoulli(los_probability(rel.head<2>().norm(), traj.front().z()));
    }
  }

  for (int k = 0; k < k_frames; ++k) {
    for (int n = 0; n < n_stations; ++n) {
      const Eigen::Vector3d rel = traj[k] - gnbs[n];
      const double d3d = rel.norm();
      if (d3d < 1e-9)
        throw std::invalid_argument("generate_window: UAV coincides with a station");
      const LinkGeometry geom{rel.head<2>().norm(), d3d, traj[k].z()};
      const double p_los = los_probability(geom.d_2d_m, geom.h_m);
      const bool is_los = opts.freeze_los ? frozen_los[n] != 0 : rng.bernoulli(p_los);
      const double eta = pathloss_exponent(geom.h_m, p_los);
      const double snr = snr_db(cfg, geom, eta, is_los);
      const double sigma2 = tdoa_variance(cfg, snr);

      double obs = d3d + offsets.delta_m(n) + rng.normal(0.0, std::sqrt(sigma2));
      if (!is_los && cfg.nlos_excess_enabled) obs += rng.exponential(cfg.nlos_bias_mean_m());

      double snr_rep = snr;
      if (opts.snr_quant_db > 0.0)
        snr_rep = std::round(snr / opts.snr_quant_db) * opts.snr_quant_db;

      w.d_true(k, n) = d3d;
      w.d_obs(k, n) = obs;
      w.snr_report_db(k, n) = snr_rep;
      w.r_quality(k, n) = tdoa_variance(cfg, snr_rep);
    }
  }
  return w;
}

// The no-denoising baseline: the latest observation row, unchanged.
inline Eigen::VectorXd raw_latest(const MeasurementWindow& w) {
  if (w.frames() < 1) throw std::invalid_argument("raw_latest: empty window");
  return w.d_obs.row(w.frames() - 1).transpose();
}

inline Eigen::VectorXd apply_filter(const FilterSpec& spec, const MeasurementWindow& w) {
  return apply_filter(spec, w.d_obs, w.r_quality);
}

}  // namespace tdoalab
