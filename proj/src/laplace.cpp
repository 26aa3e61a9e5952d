#include "penalab/laplace.hpp"

#include <cmath>
#include <numbers>

#include "penalab/errors.hpp"

namespace penalab {

TalbotResult invert_talbot(const LaplaceTransform& F, double t, int nodes, double contour_scale) {
  if (!(t > 0.0)) throw ConfigError("inversion time must be positive");
  if (nodes < 4) throw ConfigError("inversion needs at least 4 nodes");
  if (!(contour_scale > 0.0)) throw ConfigError("contour scale must be positive");
  const double M = nodes;
  const double r = contour_scale * M / t;
  const std::complex<double> f0 = F({r, 0.0});
  double sum = 0.5 * std::exp(r * t) * f0.real();
  double abs_sum = std::abs(sum);
  for (int k = 1; k < nodes; ++k) {
    const double theta = k * std::numbers::pi / M;
    const double cot = std::cos(theta) / std::sin(theta);
    const std::complex<double> s(r * theta * cot, r * theta);
    const double sigma = theta + (theta * cot - 1.0) * cot;
    const std::complex<double> term = std::exp(t * s) * F(s) * std::complex<double>(1.0, sigma);
    sum += term.real();
    abs_sum += std::abs(term.real());
  }
  const double value = r / M * sum;
  const double scaled_abs = r / M * abs_sum;
  const double condition = scaled_abs / std::max(std::abs(value), 1e-300);
  if (!std::isfinite(value)) throw InversionError("Talbot inversion produced a non-finite value", condition);
  return {value, condition};
}

}  // namespace penalab
