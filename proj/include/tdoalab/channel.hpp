#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tdoalab {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Propagation and ranging-noise parameters of the urban-micro air-to-ground
// link. `kappa` scales the CRLB-shaped variance into distance-domain m^2;
// the model itself only fixes the proportionality, so kappa is calibrated
// (see README) such that unfiltered single-window localization error at
// 30 m altitude, K = 3 lands in the 1-5 m range.
struct ChannelConfig {
  double f_c = 3.5e9;        // carrier frequency [Hz]
  double p_t_dbm = 15.0;     // transmit power [dBm]
  double n_o_dbm = -91.0;    // noise floor [dBm]
  double beta = 1.0e7;       // ranging-signal bandwidth [Hz], > 1 so ln(beta) > 0
  double kappa = 1.0;        // variance calibration constant
  double tau_max_s = 2.0e-7; // maximum excess delay [s]
  bool nlos_excess_enabled = false;  // positive NLoS ranging bias on/off
  double nlos_snr_penalty_db = 5.0;  // SNR penalty applied under NLoS

  void validate() const {
    if (!(f_c > 0.0)) throw std::domain_error("ChannelConfig: f_c must be positive");
    if (!(beta > 1.0)) throw std::domain_error("ChannelConfig: beta must exceed 1 Hz");
    if (!(kappa > 0.0)) throw std::domain_error("ChannelConfig: kappa must be positive");
    if (tau_max_s < 0.0) throw std::domain_error("ChannelConfig: tau_max_s must be non-negative");
  }

  // Mean of the optional NLoS excess-range bias.
  double nlos_bias_mean_m() const { return kSpeedOfLight * tau_max_s / 4.0; }
};

struct LinkGeometry {
  double d_2d_m = 0.0;  // horizontal UAV-gNB distance
  double d_3d_m = 0.0;  // 3D distance
  double h_m = 0.0;     // UAV altitude above ground
};

struct LinkQuality {
  double p_los = 0.0;
  double eta = 0.0;      // mean path-loss exponent
  double snr_db = 0.0;
  double sigma2_d = 0.0; // ranging variance [m^2]
};

struct LosParams {
  double d1_m = 0.0;
  double p1_m = 0.0;
};

// Altitude-dependent constants of the LoS probability fit. The fit is only
// quoted for airborne platforms; altitudes at or below 1 m are rejected.
inline LosParams los_params(double h_m) {
  if (!(h_m > 1.0)) throw std::domain_error("los_params: altitude must exceed 1 m");
  const double lg = std::log10(h_m);
  return {std::max(294.05 * lg - 432.94, 18.0), 233.98 * lg - 0.95};
}

// LoS probability versus horizontal distance; continuous at d_2d == d1.
inline double los_probability(double d_2d_m, double h_m) {
  if (d_2d_m < 0.0) throw std::domain_error("los_probability: negative horizontal distance");
  const LosParams lp = los_params(h_m);
  if (d_2d_m <= lp.d1_m) return 1.0;
  const double ratio = lp.d1_m / d_2d_m;
  return (1.0 - ratio) * std::exp(-d_2d_m / lp.p1_m) + ratio;
}

// Mean path-loss exponent: the NLoS and LoS endpoint exponents blended by
// the LoS probability.
inline double pathloss_exponent(double h_m, double p_los) {
  if (!(h_m > 1.0)) throw std::domain_error("pathloss_exponent: altitude must exceed 1 m");
  if (!(p_los >= 0.0 && p_los <= 1.0))
    throw std::domain_error("pathloss_exponent: p_los outside [0, 1]");
  const double lg = std::log10(h_m);
  return (4.32 - 0.76 * lg) * (1.0 - p_los) + (2.225 - 0.05 * lg) * p_los;
}

// Log-distance link budget with a 1 m free-space reference intercept.
inline double snr_db(const ChannelConfig& cfg, const LinkGeometry& geom, double eta,
                     bool is_los) {
  if (geom.d_3d_m < 1.0)
    throw std::domain_error("snr_db: distance inside the 1 m reference");
  const double fspl_1m = 20.0 * std::log10(4.0 * std::numbers::pi * cfg.f_c / kSpeedOfLight);
  const double path_db = fspl_1m + 10.0 * eta * std::log10(geom.d_3d_m);
  const double penalty = is_los ? 0.0 : cfg.nlos_snr_penalty_db;
  return cfg.p_t_dbm - path_db - cfg.n_o_dbm - penalty;
}

// Fisher information of a single arrival-time estimate. Not on the pipeline
// path; kept to cross-check the simplified variance bound below.
inline double fisher_information(double snr_linear, double beta, double gamma, double phi) {
  if (!(snr_linear > 0.0)) throw std::domain_error("fisher_information: SNR must be positive");
  if (!(beta > 0.0)) throw std::domain_error("fisher_information: beta must be positive");
  if (!(gamma > 0.0)) throw std::domain_error("fisher_information: gamma must be positive");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double s = std::sin(phi);
  return 2.0 / kSpeedOfLight * 4.0 * pi2 * snr_linear * gamma * beta * beta * s * s;
}

// Distance-domain ranging variance, kappa times the simplified CRLB shape
// c / (8 pi^2 SNR beta ln beta). Strictly decreasing in SNR, and in beta
// for beta > 1.
inline double tdoa_variance(const ChannelConfig& cfg, double snr_db) {
  if (!(cfg.beta > 1.0)) throw std::domain_error("tdoa_variance: beta must exceed 1 Hz");
  if (!std::isfinite(snr_db)) throw std::domain_error("tdoa_variance: SNR must be finite");
  const double snr_lin = std::pow(10.0, snr_db / 10.0);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return cfg.kappa * kSpeedOfLight / (8.0 * pi2 * snr_lin * cfg.beta * std::log(cfg.beta));
}

// Full per-link evaluation used by the measurement generator.
inline LinkQuality link_quality(const ChannelConfig& cfg, const LinkGeometry& geom,
                                bool is_los) {
  LinkQuality q;
  q.p_los = los_probability(geom.d_2d_m, geom.h_m);
  q.eta = pathloss_exponent(geom.h_m, q.p_los);
  q.snr_db = snr_db(cfg, geom, q.eta, is_los);
  q.sigma2_d = tdoa_variance(cfg, q.snr_db);
  return q;
}

}  // namespace tdoalab
