#include "penalab/quadlemmas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

#include "penalab/errors.hpp"
#include "penalab/quadrature.hpp"

namespace penalab {
namespace {

std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
}

double spike_height(double gamma, double n) { return std::pow(n, (2.0 + gamma) / (1.0 - gamma)); }
double spike_width(double gamma, double n) { return std::pow(n, -(4.0 - gamma) / (1.0 - gamma)); }

std::vector<double> split_points(const PsiFunction& psi, double a, double b) {
  std::vector<double> pts{a, b};
  if (psi.breakpoints) {
    for (double p : psi.breakpoints(a, b)) {
      if (p > a && p < b) pts.push_back(p);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Windowed sup over (t, 2t]: closed form when supplied, else sampled.
double sup_window(const PsiFunction& psi, double t) {
  if (psi.sup_above) return psi.sup_above(t);
  double best = 0.0;
  constexpr int n = 2000;
  for (int i = 1; i <= n; ++i) best = std::max(best, psi(t + t * i / n));
  for (double p : split_points(psi, t, 2.0 * t)) {
    for (double q : {p * (1 - 1e-12), p * (1 + 1e-12)}) {
      if (q > t && q <= 2.0 * t) best = std::max(best, psi(q));
    }
  }
  return best;
}

// Non-increasing along the grid and small at the end.
bool vanishes(const std::vector<double>& col, double last_tol) {
  for (std::size_t i = 1; i < col.size(); ++i) {
    if (col[i] > col[i - 1] + 1e-12 * std::max(1.0, std::abs(col[i - 1]))) return false;
  }
  return !col.empty() && std::abs(col.back()) <= last_tol;
}

constexpr double kVanishTol = 0.05;

}  // namespace

PsiFunction PsiFunction::zero() {
  PsiFunction p;
  p.eval = [](double) { return 0.0; };
  p.description = "zero";
  p.sup_above = [](double) { return 0.0; };
  return p;
}

PsiFunction PsiFunction::exponential(double rate) {
  PsiFunction p;
  p.eval = [rate](double u) { return u > 0.0 ? std::exp(-rate * u) : 0.0; };
  p.description = "exp(-" + fmt_rate(rate) + " u)";
  p.sup_above = [rate](double t) { return std::exp(-rate * t); };
  return p;
}

PsiFunction PsiFunction::tabulated(std::vector<double> xs, std::vector<double> ys, std::string description,
                                   bool hold_last) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ConfigError("tabulated psi needs matching nodes");
  if (!std::is_sorted(xs.begin(), xs.end())) throw ConfigError("tabulated psi nodes must increase");
  PsiFunction p;
  p.description = std::move(description);
  auto X = std::make_shared<std::vector<double>>(std::move(xs));
  auto Y = std::make_shared<std::vector<double>>(std::move(ys));
  p.eval = [X, Y, hold_last](double u) {
    const auto& x = *X;
    const auto& y = *Y;
    if (u <= x.front()) return y.front();
    if (u >= x.back()) return hold_last ? y.back() : 0.0;
    const auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), u) - x.begin());
    const double w = (u - x[k - 1]) / (x[k] - x[k - 1]);
    return (1.0 - w) * y[k - 1] + w * y[k];
  };
  p.breakpoints = [X](double a, double b) {
    std::vector<double> out;
    for (double v : *X) {
      if (v > a && v < b) out.push_back(v);
    }
    return out;
  };
  return p;
}

IntegralEstimate eval_I_detailed(const PsiFunction& psi, double t, double gamma, const QuadratureConfig& qc) {
  check_gamma(gamma);
  if (!(t > 0.0)) throw ConfigError("eval_I needs t > 0");
  qc.validate();
  const auto tol = qc.tolerance();
  IntegralEstimate out;
  const auto pts = split_points(psi, 0.0, t);
  // With s = (1 - u/t)^gamma the singular weight becomes the constant t / gamma.
  auto s_of = [&](double u) { return std::pow(std::max(0.0, 1.0 - u / t), gamma); };
  auto pulled = [&](double s) { return psi(t * (1.0 - std::pow(s, 1.0 / gamma))); };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    const auto w = quad::gauss_kronrod<double>(pulled, s_of(b), s_of(a), tol);
    const auto p = quad::gauss_kronrod<double>([&](double u) { return psi(u); }, a, b, tol);
    out.value += t / gamma * w.value - p.value;
    out.error += t / gamma * w.error + p.error;
  }
  return out;
}

double eval_I(const PsiFunction& psi, double t, double gamma, const QuadratureConfig& qc) {
  return eval_I_detailed(psi, t, gamma, qc).value;
}

PsiFunction counterexample_psi(double gamma) {
  check_gamma(gamma);
  PsiFunction p;
  p.description = "spike sum, gamma=" + fmt_rate(gamma);
  p.eval = [gamma](double u) {
    if (!(u > 0.0)) return 0.0;
    const double n = std::ceil(u);
    if (u < n && u > n - spike_width(gamma, n)) return spike_height(gamma, n);
    return 0.0;
  };
  p.breakpoints = [gamma](double a, double b) {
    std::vector<double> out;
    const double lo = std::max(1.0, std::floor(a));
    for (double n = lo; n <= std::ceil(b) + 1.0; n += 1.0) {
      for (double v : {n - spike_width(gamma, n), n}) {
        if (v > a && v < b) out.push_back(v);
      }
    }
    return out;
  };
  p.sup_above = [gamma](double t) {
    // Largest spike meeting (t, 2t].
    const double n = std::floor(2.0 * t);
    return n > t ? spike_height(gamma, n) : 0.0;
  };
  return p;
}

double counterexample_mass(double gamma, int n_max, double* tail_bound) {
  check_gamma(gamma);
  double s = 0.0;
  for (int n = n_max; n >= 1; --n) s += spike_height(gamma, n) * spike_width(gamma, n);
  if (tail_bound) *tail_bound = 1.0 / n_max;
  return s;
}

std::vector<double> default_lemma_grid() { return {5.0, 10.0, 20.0, 40.0, 80.0}; }

VerificationReport check_sup_condition(const PsiFunction& psi, double gamma, const std::vector<double>& t_grid,
                                       const QuadratureConfig& qc) {
  check_gamma(gamma);
  if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw ConfigError("t_grid must be non-empty and increasing");
  }
  VerificationReport r;
  r.test_name = "sup-condition";
  r.target = 0.0;
  r.tolerance = kVanishTol;
  r.meta["psi"] = psi.description;
  r.meta["gamma"] = gamma;
  r.meta["stochastic"] = false;
  r.meta["sup_window"] = "(t, 2t]";
  std::vector<double> sups, Is;
  Json rows = Json::array();
  for (double t : t_grid) {
    const double ts = t * sup_window(psi, t);
    const auto I = eval_I_detailed(psi, t, gamma, qc);
    sups.push_back(ts);
    Is.push_back(I.value);
    rows.push_back({{"t", t}, {"t_sup", ts}, {"I", I.value}, {"I_error", I.error}});
  }
  r.meta["rows"] = rows;
  r.meta["conditions"] = {{"sup_column_vanishes", vanishes(sups, kVanishTol)},
                          {"I_column_vanishes", vanishes(Is, kVanishTol)}};
  r.estimate = Is.back();
  r.settle();
  return r;
}

VerificationReport check_product_form(const PsiFunction& psi1, const PsiFunction& psi2, double gamma,
                                      const std::vector<double>& t_grid, const QuadratureConfig& qc) {
  check_gamma(gamma);
  if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw ConfigError("t_grid must be non-empty and increasing");
  }
  const double far = std::max(1e6, 10.0 * t_grid.back());
  if (!(psi2(far) > 0.0)) throw ConfigError("psi2 must have a positive limit at infinity");
  VerificationReport r;
  r.test_name = "product-form";
  r.target = 0.0;
  r.tolerance = kVanishTol;
  r.meta["psi1"] = psi1.description;
  r.meta["psi2"] = psi2.description;
  r.meta["gamma"] = gamma;
  r.meta["stochastic"] = false;
  std::vector<double> Is;
  Json rows = Json::array();
  for (double t : t_grid) {
    PsiFunction pt;
    pt.description = "product";
    pt.eval = [&, t](double u) { return psi1(u) * psi2(t - u); };
    pt.breakpoints = [&, t](double a, double b) {
      std::vector<double> out;
      if (psi1.breakpoints) out = psi1.breakpoints(a, b);
      if (psi2.breakpoints) {
        for (double v : psi2.breakpoints(t - b, t - a)) out.push_back(t - v);
      }
      return out;
    };
    const auto I = eval_I_detailed(pt, t, gamma, qc);
    const auto tol = qc.tolerance();
    double plain = 0.0;
    const auto pts = split_points(pt, 0.0, t);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      plain += quad::gauss_kronrod<double>([&](double u) { return pt(u); }, pts[i], pts[i + 1], tol).value;
    }
    Is.push_back(I.value);
    rows.push_back({{"t", t}, {"weighted", I.value + plain}, {"plain", plain}, {"I", I.value}});
  }
  r.meta["rows"] = rows;
  r.meta["conditions"] = {{"I_column_vanishes", vanishes(Is, kVanishTol)}};
  r.estimate = Is.back();
  r.settle();
  return r;
}

}  // namespace penalab
