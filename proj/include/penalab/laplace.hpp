#pragma once

#include <complex>
#include <functional>

namespace penalab {

struct TalbotResult {
  double value = 0.0;
  // Sum of absolute node contributions over |value|; large means cancellation.
  double condition = 0.0;
};

using LaplaceTransform = std::function<std::complex<double>(std::complex<double>)>;

// Fixed-Talbot inversion of F at time t > 0. The contour radius is
// contour_scale * nodes / t (0.4 is the classical choice).
TalbotResult invert_talbot(const LaplaceTransform& F, double t, int nodes, double contour_scale);

}  // namespace penalab
