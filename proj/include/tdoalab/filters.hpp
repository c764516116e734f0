#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdoalab {

enum class FilterKind { none, exp_smooth, double_exp, median, savgol, ages };

enum class AgesMode { verbatim, normalized };

enum class DesOutput { level_plus_trend, level_only };

inline std::string filter_kind_name(FilterKind k) {
  switch (k) {
    case FilterKind::none: return "none";
    case FilterKind::exp_smooth: return "exp_smooth";
    case FilterKind::double_exp: return "double_exp";
    case FilterKind::median: return "median";
    case FilterKind::savgol: return "savgol";
    case FilterKind::ages: return "ages";
  }
  return "?";
}

inline FilterKind filter_kind_from_name(const std::string& s) {
  if (s == "none") return FilterKind::none;
  if (s == "exp_smooth") return FilterKind::exp_smooth;
  if (s == "double_exp") return FilterKind::double_exp;
  if (s == "median") return FilterKind::median;
  if (s == "savgol") return FilterKind::savgol;
  if (s == "ages") return FilterKind::ages;
  throw std::invalid_argument("unknown filter kind '" + s + "'");
}

// Largest odd integer <= x (x >= 1).
inline int largest_odd_leq(int x) { return (x % 2 == 0) ? x - 1 : x; }

// One denoiser selection with its parameters. `window == 0` means "auto":
// the window is derived from the sequence length K when the spec is resolved.
struct FilterSpec {
  FilterKind kind = FilterKind::none;
  double alpha = 0.7;        // decay/level factor, (0, 1]
  double beta_trend = 0.3;   // trend factor, (0, 1); double_exp only
  int window = 0;            // odd positive, or 0 = auto; median/savgol
  int poly_order = 2;        // savgol; clamped to window - 1 when auto
  AgesMode ages_mode = AgesMode::normalized;
  DesOutput des_output = DesOutput::level_plus_trend;

  // Produce a concrete, valid spec for a K-frame window. Auto windows track
  // the full window (truncated to odd) for the median and savgol; the savgol
  // order degrades to window - 1 where needed. A two-frame trend fit is pure
  // extrapolation from one difference, so double_exp falls back to the level
  // term at K == 2.
  FilterSpec resolve_for_k(int k) const {
    FilterSpec r = *this;
    if (r.kind == FilterKind::median && r.window == 0) r.window = largest_odd_leq(k);
    if (r.kind == FilterKind::savgol) {
      if (r.window == 0) r.window = largest_odd_leq(k);
      r.poly_order = std::min(r.poly_order, r.window - 1);
    }
    if (r.kind == FilterKind::double_exp && k == 2) r.des_output = DesOutput::level_only;
    r.validate(k);
    return r;
  }

  void validate(int k) const {
    switch (kind) {
      case FilterKind::none:
        break;
      case FilterKind::exp_smooth:
      case FilterKind::ages:
        if (!(alpha > 0.0 && alpha <= 1.0))
          throw std::domain_error("FilterSpec: alpha outside (0, 1]");
        if (kind == FilterKind::ages && k < 2)
          throw std::domain_error("FilterSpec: ages requires K >= 2");
        break;
      case FilterKind::double_exp:
        if (!(alpha > 0.0 && alpha <= 1.0))
          throw std::domain_error("FilterSpec: alpha outside (0, 1]");
        if (!(beta_trend > 0.0 && beta_trend < 1.0))
          throw std::domain_error("FilterSpec: beta_trend outside (0, 1)");
        if (k < 2) throw std::domain_error("FilterSpec: double_exp requires K >= 2");
        break;
      case FilterKind::median:
        if (window < 1 || window % 2 == 0)
          throw std::domain_error("FilterSpec: median window must be odd and positive");
        if (window > k) throw std::domain_error("FilterSpec: median window exceeds K");
        break;
      case FilterKind::savgol:
        if (window < 1 || window % 2 == 0)
          throw std::domain_error("FilterSpec: savgol window must be odd and positive");
        if (window > k) throw std::domain_error("FilterSpec: savgol window exceeds K");
        if (poly_order < 0 || poly_order >= window)
          throw std::domain_error("FilterSpec: savgol needs poly_order < window");
        break;
    }
  }
};

// Exponentially weighted mean with weight 1 on the most recent sample:
// x_hat = sum(alpha^(K-i) x_i) / sum(alpha^(K-i)).
inline double exp_smooth(std::span<const double> seq, double alpha) {
  if (seq.empty()) throw std::invalid_argument("exp_smooth: empty sequence");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("exp_smooth: alpha outside (0, 1]");
  double num = 0.0, den = 0.0, w = 1.0;
  for (std::size_t i = seq.size(); i-- > 0;) {
    num += w * seq[i];
    den += w;
    w *= alpha;
  }
  return num / den;
}

// Level/trend recursion l_k = a x_k + (1-a)(l_{k-1} + b_{k-1}),
// b_k = b (l_k - l_{k-1}) + (1-b) b_{k-1}, seeded l_1 = x_1, b_1 = x_2 - x_1.
// level_plus_trend returns l_K + b_K, level_only returns l_K.
inline double double_exp_smooth(std::span<const double> seq, double alpha, double beta_trend,
                                DesOutput output = DesOutput::level_plus_trend) {
  if (seq.size() < 2) throw std::invalid_argument("double_exp_smooth: needs K >= 2");
  double level = seq[0];
  double trend = seq[1] - seq[0];
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const double prev_level = level;
    level = alpha * seq[i] + (1.0 - alpha) * (level + trend);
    trend = beta_trend * (level - prev_level) + (1.0 - beta_trend) * trend;
  }
  return output == DesOutput::level_plus_trend ? level + trend : level;
}

// Median of the trailing `window` samples. The window is anchored at the
// latest sample: the estimate of interest sits at the sequence edge, so a
// centered window has nothing to its right.
inline double median_filter(std::span<const double> seq, int window) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("median_filter: window must be odd and positive");
  if (static_cast<std::size_t>(window) > seq.size())
    throw std::invalid_argument("median_filter: window exceeds sequence length");
  std::vector<double> tail(seq.end() - window, seq.end());
  std::nth_element(tail.begin(), tail.begin() + window / 2, tail.end());
  return tail[window / 2];
}

// Least-squares polynomial fit to the trailing `window` samples at unit
// abscissae, evaluated at the latest sample. Abscissae run -(window-1)..0 so
// the returned value is the constant coefficient of the fit.
inline double savgol(std::span<const double> seq, int window, int poly_order) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("savgol: window must be odd and positive");
  if (static_cast<std::size_t>(window) > seq.size())
    throw std::invalid_argument("savgol: window exceeds sequence length");
  if (poly_order < 0 || poly_order >= window)
    throw std::invalid_argument("savgol: needs 0 <= poly_order < window");
  Eigen::MatrixXd vandermonde(window, poly_order + 1);
  Eigen::VectorXd y(window);
  for (int i = 0; i < window; ++i) {
    const double t = static_cast<double>(i - (window - 1));
    double p = 1.0;
    for (int j = 0; j <= poly_order; ++j) {
      vandermonde(i, j) = p;
      p *= t;
    }
    y(i) = seq[seq.size() - window + i];
  }
  const Eigen::VectorXd coeffs = vandermonde.colPivHouseholderQr().solve(y);
  return coeffs(0);
}

// Intermediate quantities of one adaptive-gain smoothing step.
struct AgesState {
  double x_pre = 0.0;   // prediction from the past K-1 frames [m]
  double p_pre = 0.0;   // predicted variance [m^2]
  double k_gain = 0.0;  // blend gain, in (0, 1) for positive finite variances
  double x_cur = 0.0;   // updated estimate [m]
};

// Adaptive-gain exponential smoothing of one station's K-frame column.
// Past frames k = 1..K-1 carry weights alpha^(K-2-k); the prediction is the
// weighted sum divided by (K-1) in verbatim mode or by the weight sum in
// normalized mode (the default; it keeps the prediction unbiased for
// alpha != 1 and coincides with verbatim at alpha == 1). The predicted
// variance is the mean reported variance of the past frames, and the latest
// frame enters through a variance-ratio gain.
inline AgesState ages_column(std::span<const double> d, std::span<const double> r, double alpha,
                             AgesMode mode = AgesMode::normalized) {
  const std::size_t k_frames = d.size();
  if (k_frames < 2) throw std::invalid_argument("ages_column: needs K >= 2");
  if (r.size() != k_frames) throw std::invalid_argument("ages_column: d/r length mismatch");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("ages_column: alpha outside (0, 1]");
  AgesState st;
  double weighted_sum = 0.0, weight_sum = 0.0;
  for (std::size_t k = 1; k <= k_frames - 1; ++k) {
    if (!(r[k - 1] > 0.0)) throw std::domain_error("ages_column: non-positive variance entry");
    const double w = std::pow(alpha, static_cast<double>(k_frames) - 2.0 - static_cast<double>(k));
    weighted_sum += d[k - 1] * w;
    weight_sum += w;
    st.p_pre += r[k - 1] / static_cast<double>(k_frames - 1);
  }
  const double r_latest = r[k_frames - 1];
  if (!(r_latest > 0.0)) throw std::domain_error("ages_column: non-positive variance entry");
  st.x_pre = mode == AgesMode::verbatim ? weighted_sum / static_cast<double>(k_frames - 1)
                                        : weighted_sum / weight_sum;
  st.k_gain = st.p_pre / (st.p_pre + r_latest);
  st.x_cur = st.x_pre + st.k_gain * (d[k_frames - 1] - st.x_pre);
  return st;
}

// Column-wise adaptive-gain smoothing over a K x N observation matrix with
// its K x N reported-variance matrix.
inline Eigen::VectorXd ages(const Eigen::MatrixXd& d, const Eigen::MatrixXd& r, double alpha,
                            AgesMode mode = AgesMode::normalized) {
  if (d.rows() != r.rows() || d.cols() != r.cols())
    throw std::invalid_argument("ages: d/r dimension mismatch");
  if (d.rows() < 2) throw std::invalid_argument("ages: needs K >= 2");
  Eigen::VectorXd out(d.cols());
  for (Eigen::Index n = 0; n < d.cols(); ++n) {
    const std::span<const double> dc(d.col(n).data(), static_cast<std::size_t>(d.rows()));
    const std::span<const double> rc(r.col(n).data(), static_cast<std::size_t>(r.rows()));
    out(n) = ages_column(dc, rc, alpha, mode).x_cur;
  }
  return out;
}

// Apply one filter independently to every station column of a K x N
// observation matrix; `r` supplies the per-sample variances consumed by the
// adaptive-gain filter. kind == none passes the latest row through.
inline Eigen::VectorXd apply_filter(const FilterSpec& spec, const Eigen::MatrixXd& d,
                                    const Eigen::MatrixXd& r) {
  const int k_frames = static_cast<int>(d.rows());
  if (k_frames < 1) throw std::invalid_argument("apply_filter: empty window");
  const FilterSpec fs = spec.resolve_for_k(k_frames);
  if (fs.kind == FilterKind::ages) return ages(d, r, fs.alpha, fs.ages_mode);
  Eigen::VectorXd out(d.cols());
  for (Eigen::Index n = 0; n < d.cols(); ++n) {
    const std::span<const double> col(d.col(n).data(), static_cast<std::size_t>(k_frames));
    switch (fs.kind) {
      case FilterKind::none: out(n) = col.back(); break;
      case FilterKind::exp_smooth: out(n) = exp_smooth(col, fs.alpha); break;
      case FilterKind::double_exp:
        out(n) = double_exp_smooth(col, fs.alpha, fs.beta_trend, fs.des_output);
        break;
      case FilterKind::median: out(n) = median_filter(col, fs.window); break;
      case FilterKind::savgol: out(n) = savgol(col, fs.window, fs.poly_order); break;
      case FilterKind::ages: break;  // handled above
    }
  }
  return out;
}

}  // namespace tdoalab
