#pragma once

#include <cstdint>
#include <vector>

namespace froglab::stats {

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Wilson score interval for a binomial proportion (z = 3 for the 3-sigma
// checks used throughout).
Interval wilson_interval(std::uint64_t successes, std::uint64_t total, double z = 3.0);

// One-sided Dvoretzky–Kiefer–Wolfowitz band for sup_t(F1(t) - F2(t)) between
// two empirical CDFs, at confidence 1 - alpha.
double dkw_two_sample_band(std::uint64_t n1, std::uint64_t n2, double alpha = 0.01);

// sup_t (F_a(t) - F_b(t)) over the pooled support (signed; positive when a
// sits "to the left" of b somewhere).
double ecdf_sup_difference(std::vector<double> a, std::vector<double> b);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // 95%
  std::uint32_t points = 0;
};

// Weighted least squares y = a + b x with a t-based 95% CI on b.
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& weights = {});

// Least squares y = a + b*u + s*t (used for log return-probability fits with
// u = log n, t = 2n); returns (a, b, s) and the residual rms.
struct ThreeParamFit {
  double a = 0.0, b = 0.0, s = 0.0;
  double residual_rms = 0.0;
  bool ok = false;
};
ThreeParamFit fit_three_param(const std::vector<double>& u, const std::vector<double>& t,
                              const std::vector<double>& y);

// Total variation distance between two empirical distributions given as
// aligned count vectors, plus the null band E[TV] + z*sd[TV] estimated from
// the pooled frequencies.
struct TvResult {
  double tv = 0.0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  double band(double z = 3.0) const { return null_mean + z * null_sd; }
};
TvResult tv_distance(const std::vector<std::uint64_t>& counts1, const std::vector<std::uint64_t>& counts2);

double t_quantile_975(std::uint32_t df);

}  // namespace froglab::stats
