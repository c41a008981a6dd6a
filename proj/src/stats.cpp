#include "froglab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "froglab/common.hpp"

namespace froglab::stats {

Interval wilson_interval(std::uint64_t successes, std::uint64_t total, double z) {
  if (total == 0) fail(Status::InvalidArgument, "wilson_interval: empty sample");
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double dkw_two_sample_band(std::uint64_t n1, std::uint64_t n2, double alpha) {
  if (n1 == 0 || n2 == 0) fail(Status::InvalidArgument, "dkw band: empty sample");
  auto one = [&](std::uint64_t n) { return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n))); };
  return one(n1) + one(n2);
}

double ecdf_sup_difference(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double sup = -kInf;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() || ib < b.size()) {
    double t = kInf;
    if (ia < a.size()) t = a[ia];
    if (ib < b.size()) t = std::min(t, b[ib]);
    while (ia < a.size() && a[ia] <= t) ++ia;
    while (ib < b.size() && b[ib] <= t) ++ib;
    sup = std::max(sup, static_cast<double>(ia) / na - static_cast<double>(ib) / nb);
  }
  return sup;
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& weights) {
  if (x.size() != y.size() || x.size() < 3) fail(Status::InvalidArgument, "fit_slope: need >= 3 points");
  const std::size_t n = x.size();
  std::vector<double> w = weights.empty() ? std::vector<double>(n, 1.0) : weights;
  if (w.size() != n) fail(Status::InvalidArgument, "fit_slope: weight size mismatch");
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  const double xbar = swx / sw, ybar = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
  }
  if (sxx <= 0) fail(Status::InvalidArgument, "fit_slope: degenerate x");
  SlopeFit fit;
  fit.points = static_cast<std::uint32_t>(n);
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += w[i] * r * r;
  }
  const double sigma2 = rss / static_cast<double>(n - 2);
  fit.stderr_slope = std::sqrt(sigma2 / sxx);
  const double t = t_quantile_975(static_cast<std::uint32_t>(n - 2));
  fit.ci_lo = fit.slope - t * fit.stderr_slope;
  fit.ci_hi = fit.slope + t * fit.stderr_slope;
  return fit;
}

ThreeParamFit fit_three_param(const std::vector<double>& u, const std::vector<double>& t,
                              const std::vector<double>& y) {
  ThreeParamFit fit;
  const std::size_t n = y.size();
  if (u.size() != n || t.size() != n || n < 4) return fit;
  // Normal equations for columns (1, u, t).
  double m[3][3] = {};
  double rhs[3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const double row[3] = {1.0, u[i], t[i]};
    for (int a = 0; a < 3; ++a) {
      rhs[a] += row[a] * y[i];
      for (int b = 0; b < 3; ++b) m[a][b] += row[a] * row[b];
    }
  }
  // Gaussian elimination with partial pivoting.
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::fabs(m[perm[r]][col]) > std::fabs(m[perm[piv]][col])) piv = r;
    std::swap(perm[col], perm[piv]);
    const double d = m[perm[col]][col];
    if (std::fabs(d) < 1e-30) return fit;
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[perm[r]][col] / d;
      for (int c = col; c < 3; ++c) m[perm[r]][c] -= f * m[perm[col]][c];
      rhs[perm[r]] -= f * rhs[perm[col]];
    }
  }
  double sol[3];
  for (int col = 2; col >= 0; --col) {
    double acc = rhs[perm[col]];
    for (int c = col + 1; c < 3; ++c) acc -= m[perm[col]][c] * sol[c];
    sol[col] = acc / m[perm[col]][col];
  }
  fit.a = sol[0];
  fit.b = sol[1];
  fit.s = sol[2];
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.a - fit.b * u[i] - fit.s * t[i];
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / static_cast<double>(n));
  fit.ok = true;
  return fit;
}

TvResult tv_distance(const std::vector<std::uint64_t>& counts1, const std::vector<std::uint64_t>& counts2) {
  if (counts1.size() != counts2.size()) fail(Status::InvalidArgument, "tv_distance: size mismatch");
  double n1 = 0, n2 = 0;
  for (auto c : counts1) n1 += static_cast<double>(c);
  for (auto c : counts2) n2 += static_cast<double>(c);
  if (n1 == 0 || n2 == 0) fail(Status::InvalidArgument, "tv_distance: empty sample");
  TvResult res;
  double mean = 0, var = 0;
  for (std::size_t k = 0; k < counts1.size(); ++k) {
    const double p1 = static_cast<double>(counts1[k]) / n1;
    const double p2 = static_cast<double>(counts2[k]) / n2;
    res.tv += 0.5 * std::fabs(p1 - p2);
    // Under the null both samples draw from the pooled frequency q; the
    // difference p1-p2 is approximately normal with this variance.
    const double q = (static_cast<double>(counts1[k]) + static_cast<double>(counts2[k])) / (n1 + n2);
    const double s2 = q * (1.0 - q) * (1.0 / n1 + 1.0 / n2);
    mean += 0.5 * std::sqrt(2.0 * s2 / M_PI);  // E|N(0,s2)|
    var += 0.25 * s2 * (1.0 - 2.0 / M_PI);
  }
  res.null_mean = mean;
  res.null_sd = std::sqrt(var);
  return res;
}

double t_quantile_975(std::uint32_t df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) fail(Status::InvalidArgument, "t quantile: df must be positive");
  if (df <= 30) return table[df - 1];
  return 1.96;
}

}  // namespace froglab::stats
