#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "tdoalab/filters.hpp"
#include "tdoalab/rng.hpp"

using namespace tdoalab;

namespace {

std::vector<double> random_seq(Rng& rng, int len, double center = 100.0, double spread = 20.0) {
  std::vector<double> s(len);
  for (double& v : s) v = center + spread * rng.normal();
  return s;
}

double apply_seq_filter(const FilterSpec& spec, const std::vector<double>& seq,
                        const std::vector<double>& var) {
  Eigen::MatrixXd d(seq.size(), 1), r(seq.size(), 1);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    d(static_cast<Eigen::Index>(i), 0) = seq[i];
    r(static_cast<Eigen::Index>(i), 0) = var[i];
  }
  return apply_filter(spec, d, r)(0);
}

}  // namespace

TEST_CASE("exponential smoothing") {
  const std::vector<double> constant{3.5, 3.5, 3.5, 3.5};
  CHECK_THAT(exp_smooth(constant, 0.3), Catch::Matchers::WithinRel(3.5, 1e-14));

  const std::vector<double> two{1.0, 2.0};
  CHECK_THAT(exp_smooth(two, 0.5), Catch::Matchers::WithinRel(5.0 / 3.0, 1e-14));

  // alpha = 1 is the arithmetic mean.
  const std::vector<double> seq{1.0, 2.0, 6.0, 11.0};
  CHECK_THAT(exp_smooth(seq, 1.0), Catch::Matchers::WithinRel(5.0, 1e-14));

  CHECK_THROWS_AS(exp_smooth(std::vector<double>{}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(exp_smooth(two, 0.0), std::domain_error);
  CHECK_THROWS_AS(exp_smooth(two, 1.5), std::domain_error);
}

TEST_CASE("double exponential smoothing") {
  const std::vector<double> seq{1.0, 2.0, 3.0};
  CHECK_THAT(double_exp_smooth(seq, 0.5, 0.5, DesOutput::level_plus_trend),
             Catch::Matchers::WithinRel(4.0, 1e-14));
  CHECK_THAT(double_exp_smooth(seq, 0.5, 0.5, DesOutput::level_only),
             Catch::Matchers::WithinRel(3.0, 1e-14));

  // Constant input pins the trend at zero.
  const std::vector<double> constant{7.0, 7.0, 7.0, 7.0, 7.0};
  CHECK_THAT(double_exp_smooth(constant, 0.3, 0.6), Catch::Matchers::WithinRel(7.0, 1e-14));

  // Exact linear input: level tracks the sample, trend tracks the slope, so
  // level_plus_trend extrapolates one step ahead.
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double x0 = rng.uniform(-50.0, 50.0);
    const double slope = rng.uniform(-5.0, 5.0);
    const int len = 3 + static_cast<int>(rng.uniform() * 10);
    std::vector<double> lin(len);
    for (int i = 0; i < len; ++i) lin[i] = x0 + slope * i;
    const double alpha = rng.uniform(0.05, 1.0);
    const double beta = rng.uniform(0.05, 0.95);
    CHECK_THAT(double_exp_smooth(lin, alpha, beta, DesOutput::level_plus_trend),
               Catch::Matchers::WithinAbs(lin.back() + slope, 1e-9));
    CHECK_THAT(double_exp_smooth(lin, alpha, beta, DesOutput::level_only),
               Catch::Matchers::WithinAbs(lin.back(), 1e-9));
  }

  CHECK_THROWS_AS(double_exp_smooth(std::vector<double>{1.0}, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("median filter") {
  const std::vector<double> seq{10.0, 50.0, 11.0, 12.0, 13.0};
  CHECK(median_filter(seq, 3) == 12.0);
  CHECK(median_filter(seq, 1) == 13.0);  // identity window
  CHECK(median_filter(seq, 5) == 12.0);

  // An outlier in the trailing window lands on the middle rank, not the output.
  const std::vector<double> outlier{5.0, 5.0, 5.0, 500.0, 5.1};
  CHECK(median_filter(outlier, 3) == 5.1);

  CHECK_THROWS_AS(median_filter(seq, 2), std::invalid_argument);
  CHECK_THROWS_AS(median_filter(seq, 7), std::invalid_argument);
  CHECK_THROWS_AS(median_filter(seq, -1), std::invalid_argument);
}

TEST_CASE("savgol polynomial fit") {
  // Quadratic reproduction: fitting k^2 with order 2 returns the last sample.
  std::vector<double> quad(5);
  for (int k = 1; k <= 5; ++k) quad[k - 1] = static_cast<double>(k * k);
  CHECK_THAT(savgol(quad, 5, 2), Catch::Matchers::WithinAbs(25.0, 1e-10));

  // Order 0 is the mean of the trailing window.
  const std::vector<double> seq{1.0, 2.0, 3.0, 10.0, 20.0};
  CHECK_THAT(savgol(seq, 3, 0), Catch::Matchers::WithinRel(11.0, 1e-12));

  // Exact linear input, order 1: latest value exactly.
  std::vector<double> lin(9);
  for (int i = 0; i < 9; ++i) lin[i] = 4.0 + 2.5 * i;
  CHECK_THAT(savgol(lin, 9, 1), Catch::Matchers::WithinAbs(lin.back(), 1e-10));
  CHECK_THAT(savgol(lin, 5, 1), Catch::Matchers::WithinAbs(lin.back(), 1e-10));

  // Interpolating fit (order = window - 1) reproduces the latest sample.
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int window = 1 + 2 * static_cast<int>(rng.uniform() * 3);  // 1, 3, 5
    const auto s = random_seq(rng, window + 2);
    CHECK_THAT(savgol(s, window, window - 1), Catch::Matchers::WithinAbs(s.back(), 1e-7));
  }

  CHECK_THROWS_AS(savgol(seq, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(savgol(seq, 7, 1), std::invalid_argument);
  CHECK_THROWS_AS(savgol(seq, 3, 3), std::invalid_argument);
}

TEST_CASE("ages hand-worked example") {
  Eigen::MatrixXd d(3, 1), r(3, 1);
  d << 10.0, 10.0, 12.0;
  r << 1.0, 1.0, 1.0;

  // alpha = 0.5, K = 3: weights on the two past frames are (1, 2).
  const AgesState norm = ages_column(std::span<const double>(d.col(0).data(), 3),
                                     std::span<const double>(r.col(0).data(), 3), 0.5,
                                     AgesMode::normalized);
  CHECK_THAT(norm.x_pre, Catch::Matchers::WithinRel(10.0, 1e-14));
  CHECK_THAT(norm.p_pre, Catch::Matchers::WithinRel(1.0, 1e-14));
  CHECK_THAT(norm.k_gain, Catch::Matchers::WithinRel(0.5, 1e-14));
  CHECK_THAT(norm.x_cur, Catch::Matchers::WithinRel(11.0, 1e-14));

  const AgesState verb = ages_column(std::span<const double>(d.col(0).data(), 3),
                                     std::span<const double>(r.col(0).data(), 3), 0.5,
                                     AgesMode::verbatim);
  CHECK_THAT(verb.x_pre, Catch::Matchers::WithinRel(15.0, 1e-14));
  CHECK_THAT(verb.x_cur, Catch::Matchers::WithinRel(13.5, 1e-14));

  CHECK_THAT(ages(d, r, 0.5, AgesMode::normalized)(0), Catch::Matchers::WithinRel(11.0, 1e-14));
}

TEST_CASE("ages limits and edge behavior") {
  // alpha = 1, equal variances, constant column: both modes return the constant.
  Eigen::MatrixXd d(4, 1), r(4, 1);
  d.setConstant(42.0);
  r.setConstant(2.5);
  for (AgesMode mode : {AgesMode::normalized, AgesMode::verbatim}) {
    CHECK_THAT(ages(d, r, 1.0, mode)(0), Catch::Matchers::WithinRel(42.0, 1e-14));
  }

  // Distrusted latest sample: gain -> 0, output -> x_pre.
  Eigen::MatrixXd d2(3, 1), r2(3, 1);
  d2 << 10.0, 10.0, 1000.0;
  r2 << 1.0, 1.0, 1e18;
  const AgesState st = ages_column(std::span<const double>(d2.col(0).data(), 3),
                                   std::span<const double>(r2.col(0).data(), 3), 0.7);
  CHECK(st.k_gain < 1e-15);
  CHECK_THAT(st.x_cur, Catch::Matchers::WithinRel(st.x_pre, 1e-12));

  Eigen::MatrixXd d1(1, 1), r1(1, 1);
  d1 << 1.0;
  r1 << 1.0;
  CHECK_THROWS_AS(ages(d1, r1, 0.5), std::invalid_argument);
  Eigen::MatrixXd rbad = r;
  rbad(2, 0) = 0.0;
  CHECK_THROWS_AS(ages(d, rbad, 0.5), std::domain_error);
}

TEST_CASE("ages gain stays inside (0, 1)") {
  Rng rng(13);
  for (int i = 0; i < 100000; ++i) {
    const int k = 2 + static_cast<int>(rng.uniform() * 6);
    std::vector<double> d(k), r(k);
    for (int j = 0; j < k; ++j) {
      d[j] = rng.uniform(-100.0, 100.0);
      r[j] = std::exp(rng.uniform(-12.0, 12.0));  // spans ~1e-5 .. 1e5
    }
    const AgesState st = ages_column(d, r, rng.uniform(0.05, 1.0));
    REQUIRE(st.k_gain > 0.0);
    REQUIRE(st.k_gain < 1.0);
  }
}

TEST_CASE("ages quality dominance") {
  // Holding d fixed, inflating the latest reported variance pulls the output
  // strictly toward the prediction.
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 3 + static_cast<int>(rng.uniform() * 5);
    std::vector<double> d(k), r(k);
    for (int j = 0; j < k; ++j) {
      d[j] = rng.uniform(0.0, 50.0);
      r[j] = rng.uniform(0.1, 5.0);
    }
    d[k - 1] += 10.0;  // ensure the latest sample disagrees with the prediction
    const AgesState a = ages_column(d, r, 0.7);
    r[k - 1] *= rng.uniform(1.5, 20.0);
    const AgesState b = ages_column(d, r, 0.7);
    CHECK(std::abs(b.x_cur - b.x_pre) < std::abs(a.x_cur - a.x_pre));
    CHECK(b.x_pre == a.x_pre);
  }
}

TEST_CASE("shift and scale equivariance of all filters") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 3 + static_cast<int>(rng.uniform() * 8);  // 3..10
    const auto seq = random_seq(rng, k);
    std::vector<double> var(k);
    for (double& v : var) v = rng.uniform(0.2, 4.0);
    const double shift = rng.uniform(-300.0, 300.0);
    const double scale = rng.uniform(0.1, 50.0);

    std::vector<FilterSpec> specs;
    specs.push_back(FilterSpec{FilterKind::exp_smooth, 0.7});
    specs.push_back(FilterSpec{FilterKind::double_exp, 0.5, 0.3});
    FilterSpec med{FilterKind::median};
    med.window = largest_odd_leq(std::min(k, 5));
    specs.push_back(med);
    FilterSpec sg{FilterKind::savgol};
    sg.window = largest_odd_leq(k);
    sg.poly_order = std::min(2, sg.window - 1);
    specs.push_back(sg);
    FilterSpec ag{FilterKind::ages, 0.7};
    ag.ages_mode = AgesMode::normalized;
    specs.push_back(ag);

    for (const FilterSpec& spec : specs) {
      const double base = apply_seq_filter(spec, seq, var);

      std::vector<double> shifted = seq;
      for (double& v : shifted) v += shift;
      const double shifted_out = apply_seq_filter(spec, shifted, var);
      CHECK_THAT(shifted_out - shift,
                 Catch::Matchers::WithinAbs(base, 1e-9 * std::max(1.0, std::abs(base))));

      std::vector<double> scaled = seq;
      for (double& v : scaled) v *= scale;
      const double scaled_out = apply_seq_filter(spec, scaled, var);
      CHECK_THAT(scaled_out, Catch::Matchers::WithinAbs(
                                 scale * base, 1e-9 * std::max(1.0, std::abs(scale * base))));
    }

    // Verbatim-mode prediction scales but does not shift (the printed weight
    // sum is not normalized), so only scale equivariance applies to it.
    FilterSpec agv{FilterKind::ages, 0.7};
    agv.ages_mode = AgesMode::verbatim;
    const double base = apply_seq_filter(agv, seq, var);
    std::vector<double> scaled = seq;
    for (double& v : scaled) v *= scale;
    CHECK_THAT(apply_seq_filter(agv, scaled, var),
               Catch::Matchers::WithinAbs(scale * base, 1e-9 * std::max(1.0, std::abs(scale * base))));
  }
}

TEST_CASE("ages normalized mode is unbiased on constant truth, verbatim is not") {
  Rng rng(33);
  const double truth = 50.0;
  const double sigma = 2.0;
  const int k = 5;
  const int runs = 10000;
  double sum_norm = 0.0, sum_verb = 0.0;
  for (int run = 0; run < runs; ++run) {
    std::vector<double> d(k), r(k, sigma * sigma);
    for (double& v : d) v = truth + sigma * rng.normal();
    sum_norm += ages_column(d, r, 0.7, AgesMode::normalized).x_cur;
    sum_verb += ages_column(d, r, 0.7, AgesMode::verbatim).x_cur;
  }
  const double mean_norm = sum_norm / runs;
  const double mean_verb = sum_verb / runs;
  // Output std is below sigma; 3 standard errors with a cushion.
  const double three_se = 3.0 * sigma / std::sqrt(static_cast<double>(runs));
  CHECK(std::abs(mean_norm - truth) < three_se);
  // Verbatim x_pre scales the constant by sum(w)/(K-1) != 1 at alpha != 1;
  // the bias must be visible far beyond sampling noise.
  CHECK(std::abs(mean_verb - truth) > 10.0 * three_se);
}

TEST_CASE("apply_filter dispatch") {
  Rng rng(41);
  const int k = 6, n = 5;
  Eigen::MatrixXd d(k, n), r(k, n);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j) {
      d(i, j) = 100.0 + 10.0 * rng.normal();
      r(i, j) = rng.uniform(0.5, 2.0);
    }

  // kind = none returns the latest row.
  const Eigen::VectorXd none_out = apply_filter(FilterSpec{}, d, r);
  CHECK((none_out.transpose() - d.row(k - 1)).cwiseAbs().maxCoeff() == 0.0);

  // Column permutation permutes the output.
  FilterSpec ag{FilterKind::ages, 0.7};
  const Eigen::VectorXd base = apply_filter(ag, d, r);
  Eigen::MatrixXd dp(k, n), rp(k, n);
  const int perm[5] = {3, 0, 4, 1, 2};
  for (int j = 0; j < n; ++j) {
    dp.col(j) = d.col(perm[j]);
    rp.col(j) = r.col(perm[j]);
  }
  const Eigen::VectorXd permuted = apply_filter(ag, dp, rp);
  for (int j = 0; j < n; ++j) CHECK(permuted(j) == base(perm[j]));
}

TEST_CASE("filter spec resolution") {
  FilterSpec med{FilterKind::median};
  CHECK(med.resolve_for_k(2).window == 1);
  CHECK(med.resolve_for_k(3).window == 3);
  CHECK(med.resolve_for_k(4).window == 3);
  CHECK(med.resolve_for_k(12).window == 11);

  FilterSpec sg{FilterKind::savgol};
  sg.poly_order = 2;
  CHECK(sg.resolve_for_k(2).window == 1);
  CHECK(sg.resolve_for_k(2).poly_order == 0);
  CHECK(sg.resolve_for_k(4).window == 3);
  CHECK(sg.resolve_for_k(4).poly_order == 2);
  CHECK(sg.resolve_for_k(12).window == 11);

  FilterSpec des{FilterKind::double_exp, 0.5, 0.3};
  CHECK(des.resolve_for_k(2).des_output == DesOutput::level_only);
  CHECK(des.resolve_for_k(3).des_output == DesOutput::level_plus_trend);

  FilterSpec med_fixed{FilterKind::median};
  med_fixed.window = 7;
  CHECK_THROWS_AS(med_fixed.resolve_for_k(5), std::domain_error);
}
