#pragma once

#include <functional>
#include <string>
#include <vector>

#include "penalab/analytic.hpp"
#include "penalab/report.hpp"

namespace penalab {

struct PsiFunction {
  std::function<double(double)> eval;
  std::string description;
  // Points in (a, b) where psi jumps or kinks; quadrature splits there.
  std::function<std::vector<double>(double, double)> breakpoints;
  // sup of psi over (t, inf) when known in closed form.
  std::function<double(double)> sup_above;

  double operator()(double u) const { return eval(u); }

  static PsiFunction zero();
  static PsiFunction exponential(double rate = 1.0);
  // Linear interpolation through (xs, ys); beyond the last node the value is
  // held constant or dropped to zero.
  static PsiFunction tabulated(std::vector<double> xs, std::vector<double> ys, std::string description,
                               bool hold_last = false);
};

struct IntegralEstimate {
  double value = 0.0;
  double error = 0.0;
};

// I(psi, t) = int_0^t [(1 - u/t)^(gamma-1) - 1] psi(u) du.
IntegralEstimate eval_I_detailed(const PsiFunction& psi, double t, double gamma, const QuadratureConfig& qc = {});
double eval_I(const PsiFunction& psi, double t, double gamma, const QuadratureConfig& qc = {});

// Spikes of height n^((2+g)/(1-g)) on (n - n^(-(4-g)/(1-g)), n), n >= 1.
PsiFunction counterexample_psi(double gamma);

// int_0^inf psi for the spike sum, truncated after n_max spikes; the bound
// on the omitted mass is returned through tail_bound when non-null.
double counterexample_mass(double gamma, int n_max, double* tail_bound = nullptr);

std::vector<double> default_lemma_grid();

VerificationReport check_sup_condition(const PsiFunction& psi, double gamma, const std::vector<double>& t_grid,
                                       const QuadratureConfig& qc = {});

VerificationReport check_product_form(const PsiFunction& psi1, const PsiFunction& psi2, double gamma,
                                      const std::vector<double>& t_grid, const QuadratureConfig& qc = {});

}  // namespace penalab
