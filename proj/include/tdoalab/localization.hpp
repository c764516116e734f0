#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tdoalab {

// One ranging anchor of the multilateration problem.
struct Anchor {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  double range_m = 0.0;  // measured pseudo-range
  double weight = 1.0;   // reliability weight, typically 1 / variance
};

// Gradient-descent settings. With line_search enabled the step starts at
// `step`, halves until the loss decreases, and carries over doubled between
// iterations. Range data cannot distinguish an airborne target from its
// mirror below the near-coplanar anchor plane; airborne_init settles that
// ambiguity by prior: when no explicit start is given, descend from a
// vertically lifted centroid and keep the iterate above the anchor plane.
struct GdConfig {
  int max_iters = 500;
  double step = 0.5;
  double tol = 1e-4;        // convergence threshold on the update norm [m]
  bool line_search = true;
  bool airborne_init = true;
  bool quality_weights = true;  // harness knob: weight anchors by 1 / reported variance
  bool pin_altitude = false;    // harness knob: fix the solved altitude to truth
  std::optional<double> fixed_altitude_m;  // set to solve in the horizontal plane only
};

struct LocalizeResult {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  bool converged = false;
  int iterations = 0;
  double loss = 0.0;
};

inline double position_error(const Eigen::Vector3d& est, const Eigen::Vector3d& truth) {
  return (est - truth).norm();
}

namespace detail {

inline double range_loss(const std::vector<Anchor>& anchors, const Eigen::Vector3d& x) {
  double loss = 0.0;
  for (const Anchor& a : anchors) {
    const double r = (x - a.pos).norm();
    const double e = r - a.range_m;
    loss += a.weight * e * e;
  }
  return loss;
}

inline Eigen::Vector3d range_grad(const std::vector<Anchor>& anchors, const Eigen::Vector3d& x,
                                  bool fixed_z) {
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (const Anchor& a : anchors) {
    const Eigen::Vector3d diff = x - a.pos;
    const double r = diff.norm();
    if (r < 1e-12) continue;  // iterate sits on an anchor: that term has no defined direction
    g += 2.0 * a.weight * (r - a.range_m) / r * diff;
  }
  if (fixed_z) g.z() = 0.0;
  return g;
}

struct GdRun {
  Eigen::Vector3d x;
  bool converged = false;
  int iterations = 0;
  double loss = 0.0;
};

// Plain gradient descent with optional halving line search; `floor_z`, when
// present, projects every candidate onto the half-space z >= floor_z.
inline GdRun gradient_descent(const std::vector<Anchor>& anchors, const GdConfig& cfg,
                              Eigen::Vector3d start, std::optional<double> floor_z,
                              std::vector<double>* loss_trace) {
  const bool fixed_z = cfg.fixed_altitude_m.has_value();
  if (fixed_z) start.z() = *cfg.fixed_altitude_m;
  auto project = [&](Eigen::Vector3d p) {
    if (floor_z && p.z() < *floor_z) p.z() = *floor_z;
    return p;
  };
  GdRun run;
  run.x = project(start);
  double loss = range_loss(anchors, run.x);
  if (loss_trace) loss_trace->push_back(loss);
  double step = cfg.step;
  int stalled = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    run.iterations = it;
    const Eigen::Vector3d g = range_grad(anchors, run.x, fixed_z);
    if (!cfg.line_search) {
      const Eigen::Vector3d next = project(run.x - step * g);
      const double update_norm = (next - run.x).norm();
      run.x = next;
      loss = range_loss(anchors, run.x);
      if (loss_trace) loss_trace->push_back(loss);
      if (update_norm < cfg.tol) {
        run.converged = true;
        break;
      }
      continue;
    }
    double s = step;
    Eigen::Vector3d candidate = project(run.x - s * g);
    double cand_loss = range_loss(anchors, candidate);
    int halvings = 0;
    while (cand_loss >= loss && halvings < 60) {
      s *= 0.5;
      candidate = project(run.x - s * g);
      cand_loss = range_loss(anchors, candidate);
      ++halvings;
    }
    if (cand_loss >= loss) {
      // No descent at machine scale: numerically stationary.
      run.converged = true;
      break;
    }
    const double update_norm = (candidate - run.x).norm();
    const double prev_loss = loss;
    run.x = candidate;
    loss = cand_loss;
    step = s * 2.0;
    if (loss_trace) loss_trace->push_back(loss);
    if (update_norm < cfg.tol) {
      run.converged = true;
      break;
    }
    // Decreases at the rounding floor of the objective no longer move the
    // iterate meaningfully; treat a streak of them as stationary.
    if (prev_loss - loss <= 1e-14 * prev_loss) {
      if (++stalled >= 5) {
        run.converged = true;
        break;
      }
    } else {
      stalled = 0;
    }
  }
  run.loss = loss;
  return run;
}

}  // namespace detail

// Weighted range-based multilateration: approximately minimizes
// L(x) = sum_n w_n (|x - p_n| - d_n)^2 by gradient descent. Exactly
// collinear/coplanar anchor sets (rank-deficient within 1e-9 of the spread)
// are reported as non-convergence rather than solved.
inline LocalizeResult localize(const std::vector<Anchor>& anchors, const GdConfig& cfg,
                               std::optional<Eigen::Vector3d> init = std::nullopt,
                               std::vector<double>* loss_trace = nullptr) {
  if (anchors.size() < 4) throw std::invalid_argument("localize: needs at least 4 anchors");
  if (cfg.max_iters < 1 || !(cfg.step > 0.0) || !(cfg.tol > 0.0))
    throw std::invalid_argument("localize: invalid gradient-descent settings");
  double weight_sum = 0.0;
  for (const Anchor& a : anchors) {
    if (a.weight < 0.0) throw std::invalid_argument("localize: negative anchor weight");
    weight_sum += a.weight;
  }
  if (!(weight_sum > 0.0)) throw std::invalid_argument("localize: all anchor weights are zero");

  // The minimizer is invariant to a common weight scale; normalizing to mean 1
  // makes the iterate path (and thus the returned point) exactly invariant too.
  std::vector<Anchor> scaled = anchors;
  const double scale = static_cast<double>(anchors.size()) / weight_sum;
  for (Anchor& a : scaled) a.weight *= scale;

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const Anchor& a : scaled) centroid += a.weight * a.pos;
  centroid /= static_cast<double>(scaled.size());

  const bool fixed_z = cfg.fixed_altitude_m.has_value();
  {
    // Rank check over the positively weighted anchors: a 3D solve needs a
    // full 3D span, a fixed-altitude solve a 2D horizontal span.
    Eigen::MatrixXd centered(static_cast<Eigen::Index>(scaled.size()), fixed_z ? 2 : 3);
    Eigen::Index rows = 0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    int used = 0;
    for (const Anchor& a : scaled)
      if (a.weight > 0.0) {
        mean += a.pos;
        ++used;
      }
    if (used > 0) mean /= used;
    for (const Anchor& a : scaled) {
      if (a.weight <= 0.0) continue;
      const Eigen::Vector3d d = a.pos - mean;
      if (fixed_z)
        centered.row(rows++) = d.head<2>().transpose();
      else
        centered.row(rows++) = d.transpose();
    }
    const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(centered.topRows(rows)).singularValues();
    const double smallest = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    const double largest = sv.size() > 0 ? sv(0) : 0.0;
    if (rows < (fixed_z ? 2 : 4) || smallest < 1e-9 * std::max(largest, 1.0)) {
      LocalizeResult res;
      res.position = init.value_or(centroid);
      if (fixed_z) res.position.z() = *cfg.fixed_altitude_m;
      res.converged = false;
      res.loss = detail::range_loss(scaled, res.position);
      return res;
    }
  }

  Eigen::Vector3d start = centroid;
  std::optional<double> floor_z;
  if (init.has_value()) {
    start = *init;
  } else if (!fixed_z && cfg.airborne_init) {
    double spread2 = 0.0;
    for (const Anchor& a : scaled) spread2 += (a.pos.head<2>() - centroid.head<2>()).squaredNorm();
    const double lift = 0.5 * std::max(std::sqrt(spread2 / static_cast<double>(scaled.size())), 1.0);
    start = centroid + Eigen::Vector3d(0, 0, lift);
    floor_z = centroid.z();
  }

  const detail::GdRun run = detail::gradient_descent(scaled, cfg, start, floor_z, loss_trace);
  LocalizeResult best;
  best.position = run.x;
  best.converged = run.converged;
  best.iterations = run.iterations;
  best.loss = run.loss;
  return best;
}

}  // namespace tdoalab
