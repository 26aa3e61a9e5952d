#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace penalab {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanSE mean_se(const std::vector<double>& xs);

// Ratio of means sum(a)/sum(b) with a delta-method standard error.
MeanSE ratio_se(const std::vector<double>& a, const std::vector<double>& b);

double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);

// Sup distance between two weighted empirical CDFs; empty weights mean equal weights.
double ks_two_sample(const std::vector<double>& a, const std::vector<double>& wa,
                     const std::vector<double>& b, const std::vector<double>& wb);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace penalab
