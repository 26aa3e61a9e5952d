#pragma once

#include <cmath>

#include "penalab/analytic.hpp"

// Mean band local time at 0 up to t for a path started at 0, sampled every dt.
// The continuum value int_0^t p_s(0) ds loses (1/2eps) int_{-eps}^{eps} h, all of
// it within ~eps^alpha of the start, and the left sum over steps adds dt/(4 eps).
inline double band_local_time_mean(const penalab::AlphaModel& m, double t, double dt, double eps) {
  const double a = m.alpha();
  const double continuum = m.p1_0() * a / (a - 1.0) * std::pow(t, 1.0 - 1.0 / a);
  return continuum - m.h1() * std::pow(eps, a - 1.0) / a + dt / (4.0 * eps);
}
