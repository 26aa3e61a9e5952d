#include "penalab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "penalab/errors.hpp"

namespace penalab {

MeanSE mean_se(const std::vector<double>& xs) {
  MeanSE r;
  r.n = xs.size();
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / (n - 1.0) / n);
  return r;
}

MeanSE ratio_se(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw ConfigError("ratio estimator needs paired samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  MeanSE r;
  r.n = a.size();
  if (mb == 0.0) return r;
  r.mean = ma / mb;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - r.mean * b[i];
    ss += d * d;
  }
  r.se = a.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) / std::abs(mb) : 0.0;
  return r;
}

double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw ConfigError("KS statistic needs at least one sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

struct Point {
  double x;
  double w;
  int side;
};

}  // namespace

double ks_two_sample(const std::vector<double>& a, const std::vector<double>& wa,
                     const std::vector<double>& b, const std::vector<double>& wb) {
  if (a.empty() || b.empty()) throw ConfigError("KS statistic needs samples on both sides");
  if ((!wa.empty() && wa.size() != a.size()) || (!wb.empty() && wb.size() != b.size())) {
    throw ConfigError("KS weights do not match the samples");
  }
  std::vector<Point> pts;
  pts.reserve(a.size() + b.size());
  double ta = 0.0, tb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = wa.empty() ? 1.0 : wa[i];
    pts.push_back({a[i], w, 0});
    ta += w;
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double w = wb.empty() ? 1.0 : wb[i];
    pts.push_back({b[i], w, 1});
    tb += w;
  }
  if (!(ta > 0.0) || !(tb > 0.0)) throw ConfigError("KS weights sum to zero");
  std::sort(pts.begin(), pts.end(), [](const Point& p, const Point& q) { return p.x < q.x; });
  double fa = 0.0, fb = 0.0, d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    (pts[i].side == 0 ? fa : fb) += pts[i].w;
    if (i + 1 < pts.size() && pts[i + 1].x == pts[i].x) continue;
    d = std::max(d, std::abs(fa / ta - fb / tb));
  }
  return d;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw FitError("linear fit needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw FitError("linear fit abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

}  // namespace penalab
