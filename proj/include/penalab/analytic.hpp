#pragma once

#include <complex>
#include <vector>

#include "penalab/quadrature.hpp"

namespace penalab {

struct QuadratureConfig {
  // Cap on any finite integration range that stands in for infinity.
  double truncation = 1e6;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_subdivisions = 20000;
  // At alpha = 2 use the Gaussian closed forms instead of quadrature.
  bool gaussian_fast_path = true;

  void validate() const;
  quad::Tolerance tolerance() const { return {abs_tol, rel_tol, max_subdivisions}; }
};

struct LaplaceInversionConfig {
  int node_count = 32;
  double contour_scale = 0.4;
  // Used for the transforms evaluated on the contour; must be tight because
  // the inversion amplifies their error.
  QuadratureConfig quad{1e6, 1e-14, 1e-12, 20000, true};

  void validate() const;
};

// Symmetric alpha-stable model with characteristic exponent |lambda|^alpha.
class AlphaModel {
 public:
  explicit AlphaModel(double alpha, const QuadratureConfig& qc = {});

  double alpha() const { return alpha_; }
  bool gaussian() const { return alpha_ == 2.0; }

  double p1_0() const { return p1_0_; }
  double u1_0() const { return u1_0_; }
  double nR1() const { return nR1_; }
  // Quadrature value of the harmonic-function constant.
  double h1() const { return h1_; }
  double h1_gamma_form() const;
  double h1_cosine_form() const;

  // Scaled form h1 |x|^(alpha-1); the Monte Carlo paths use this.
  double h(double x) const;

 private:
  double alpha_;
  double p1_0_, u1_0_, nR1_, h1_;
};

double transition_density(const AlphaModel& m, double t, double x, const QuadratureConfig& qc = {});
double resolvent_density(const AlphaModel& m, double q, double x, const QuadratureConfig& qc = {});
// Direct quadrature of (1/pi) int (1 - cos x l) / l^alpha dl.
double harmonic_h(const AlphaModel& m, double x, const QuadratureConfig& qc = {});
double excursion_tail(const AlphaModel& m, double t);
double entrance_density(const AlphaModel& m, double t, double x,
                        const LaplaceInversionConfig& lc = {});
// P_x(T_0 > t).
double hitting_tail(const AlphaModel& m, double t, double x, const LaplaceInversionConfig& lc = {});
// Y(t, x) = P_x(T_0 > t) / (h(x) n(R > t)).
double hitting_ratio(const AlphaModel& m, double t, double x, const LaplaceInversionConfig& lc = {});

// u_q(0) on the principal branch.
std::complex<double> resolvent_at_zero(const AlphaModel& m, std::complex<double> q);
// (1/pi) int (1 - cos x l) / (q + l^alpha) dl = u_q(0) - u_q(x).
std::complex<double> resolvent_gap(const AlphaModel& m, std::complex<double> q, double x,
                                   const QuadratureConfig& qc);

// Y(t, x) through Y(t, x) = Y(|x|^-alpha t, 1), tabulated on a log grid in
// the scaled time and interpolated in log-log coordinates.
class HittingRatioTable {
 public:
  explicit HittingRatioTable(const AlphaModel& m, const LaplaceInversionConfig& lc = {});
  double operator()(double t, double x) const;

 private:
  const AlphaModel* model_;
  bool closed_form_;
  std::vector<double> log_u_, log_y_;
};

// Killed Green function h(x) + h(y) - h(x - y), scaled h.
double killed_green(const AlphaModel& m, double y, double x);

}  // namespace penalab
