#include "penalab/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "penalab/errors.hpp"
#include "penalab/laplace.hpp"

namespace penalab {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

void check_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("alpha must lie in (1, 2]");
}

bool fast(double alpha, const QuadratureConfig& qc) { return alpha == 2.0 && qc.gaussian_fast_path; }

// First zero of cos(omega l) at or beyond `from`.
double cosine_zero_after(double omega, double from) {
  const double k = std::max(0.0, std::ceil(from * omega / kPi - 0.5));
  return (k + 0.5) * kPi / omega;
}

// int_L^inf dl / (q + l^alpha), valid when |q| < L^alpha.
cplx power_tail(double alpha, cplx q, double L) {
  cplx sum = 0.0;
  cplx qk = 1.0;
  const double ratio = std::abs(q) / std::pow(L, alpha);
  for (int k = 0; k < 200; ++k) {
    const double p = alpha * (k + 1) - 1.0;
    const cplx term = qk * std::pow(L, -p) / p;
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    qk *= -q;
    if (ratio * std::abs(qk) == 0.0) break;
  }
  return sum;
}

double harmonic_integral(double alpha, double x, const QuadratureConfig& qc) {
  x = std::abs(x);
  if (x == 0.0) return 0.0;
  if (fast(alpha, qc)) return 0.5 * x;
  const auto tol = qc.tolerance();
  const double knee = std::min(cosine_zero_after(x, 6.0 * kPi / x), qc.truncation);
  auto body = [&](double l) {
    const double s = std::sin(0.5 * x * l);
    return 2.0 * s * s * std::pow(l, -alpha);
  };
  const double head = quad::gauss_kronrod<double>(body, 0.0, knee, tol).value;
  const double flat = std::pow(knee, 1.0 - alpha) / (alpha - 1.0);
  const double wave =
      quad::fourier_cos_tail<double>([&](double l) { return std::pow(l, -alpha); }, x, knee, tol)
          .value;
  return (head + flat - wave) / kPi;
}

}  // namespace

void QuadratureConfig::validate() const {
  if (!(truncation > 0.0)) throw ConfigError("quadrature truncation must be positive");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ConfigError("quadrature tolerances must be positive");
  if (!(abs_tol < 1.0)) throw ConfigError("abs_tol must be below 1");
  if (max_subdivisions < 1) throw ConfigError("max_subdivisions must be positive");
}

void LaplaceInversionConfig::validate() const {
  if (node_count < 8) throw ConfigError("node_count must be at least 8");
  if (!(contour_scale > 0.0)) throw ConfigError("contour_scale must be positive");
  quad.validate();
}

AlphaModel::AlphaModel(double alpha, const QuadratureConfig& qc) : alpha_(alpha) {
  check_alpha(alpha);
  qc.validate();
  const double g = std::tgamma(1.0 / alpha);
  const double g1 = std::tgamma(1.0 - 1.0 / alpha);
  p1_0_ = g / (alpha * kPi);
  u1_0_ = g1 * g / (alpha * kPi);
  nR1_ = alpha * kPi / (g1 * g * g);
  h1_ = harmonic_integral(alpha, 1.0, qc);
}

double AlphaModel::h1_gamma_form() const {
  if (alpha_ == 2.0) return 0.5;
  const double e = 2.0 - alpha_;
  return std::tgamma(e) * std::sin(0.5 * kPi * e) / ((alpha_ - 1.0) * kPi);
}

double AlphaModel::h1_cosine_form() const { return 2.0 * std::cos((2.0 - alpha_) * kPi / 2.0); }

double AlphaModel::h(double x) const { return h1_ * std::pow(std::abs(x), alpha_ - 1.0); }

double transition_density(const AlphaModel& m, double t, double x, const QuadratureConfig& qc) {
  if (!(t > 0.0)) throw ConfigError("transition density needs t > 0");
  qc.validate();
  const double a = m.alpha();
  if (fast(a, qc)) return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
  // Integrate in mu = t^(1/alpha) lambda.
  const double scale = std::pow(t, 1.0 / a);
  const double X = std::abs(x) / scale;
  const double eps = std::min(0.1, kPi * qc.abs_tol * scale / 10.0);
  double L = std::pow(std::log(1.0 / eps), 1.0 / a);
  for (int i = 0; i < 4; ++i) {
    const double arg = std::log(1.0 / (eps * a * std::pow(L, a - 1.0)));
    L = std::pow(std::max(arg, 1.0), 1.0 / a);
  }
  if (L > qc.truncation) throw QuadratureError("truncation cap below the required range", L);
  quad::Tolerance tol = qc.tolerance();
  tol.abs_tol = kPi * qc.abs_tol * scale / 2.0;
  auto f = [&](double mu) { return std::cos(X * mu) * std::exp(-std::pow(mu, a)); };
  const double J = quad::gauss_kronrod<double>(f, 0.0, L, tol).value;
  return std::max(0.0, J / (kPi * scale));
}

double resolvent_density(const AlphaModel& m, double q, double x, const QuadratureConfig& qc) {
  if (!(q > 0.0)) throw ConfigError("resolvent needs q > 0");
  qc.validate();
  const double a = m.alpha();
  x = std::abs(x);
  if (fast(a, qc)) return std::exp(-std::sqrt(q) * x) / (2.0 * std::sqrt(q));
  const auto tol = qc.tolerance();
  auto g = [&](double l) { return 1.0 / (q + std::pow(l, a)); };
  const double base = std::pow(4.0 * q, 1.0 / a) + 1.0;
  if (x == 0.0) {
    const double head = quad::gauss_kronrod<double>(g, 0.0, base, tol).value;
    return (head + power_tail(a, q, base).real()) / kPi;
  }
  const double knee = cosine_zero_after(x, std::max(base, 2.0 * kPi / x));
  if (knee > qc.truncation) throw QuadratureError("truncation cap below the required range", knee);
  auto f = [&](double l) { return std::cos(x * l) * g(l); };
  const double head = quad::gauss_kronrod<double>(f, 0.0, knee, tol).value;
  const double tail = quad::fourier_cos_tail<double>(g, x, knee, tol).value;
  return (head + tail) / kPi;
}

double harmonic_h(const AlphaModel& m, double x, const QuadratureConfig& qc) {
  qc.validate();
  return harmonic_integral(m.alpha(), x, qc);
}

double excursion_tail(const AlphaModel& m, double t) {
  if (!(t > 0.0)) throw ConfigError("excursion tail needs t > 0");
  return m.nR1() * std::pow(t, 1.0 / m.alpha() - 1.0);
}

cplx resolvent_at_zero(const AlphaModel& m, cplx q) {
  const double a = m.alpha();
  return std::pow(q, 1.0 / a - 1.0) / (a * std::sin(kPi / a));
}

cplx resolvent_gap(const AlphaModel& m, cplx q, double x, const QuadratureConfig& qc) {
  const double a = m.alpha();
  x = std::abs(x);
  if (x == 0.0) return 0.0;
  const auto tol = qc.tolerance();
  const double base = std::pow(4.0 * std::abs(q), 1.0 / a) + 1.0;
  const double knee = cosine_zero_after(x, std::max(base, 2.0 * kPi / x));
  if (knee > qc.truncation) throw QuadratureError("truncation cap below the required range", knee);
  auto g = [&](double l) { return 1.0 / (q + std::pow(l, a)); };
  auto body = [&](double l) {
    const double s = std::sin(0.5 * x * l);
    return 2.0 * s * s * g(l);
  };
  const cplx head = quad::gauss_kronrod<cplx>(body, 0.0, knee, tol).value;
  const cplx wave = quad::fourier_cos_tail<cplx>(g, x, knee, tol).value;
  return (head + power_tail(a, q, knee) - wave) / kPi;
}

namespace {

void check_inversion(const TalbotResult& r) {
  if (r.condition > 1e9) throw InversionError("Talbot partial sums cancel too strongly", r.condition);
}

}  // namespace

double entrance_density(const AlphaModel& m, double t, double x, const LaplaceInversionConfig& lc) {
  if (!(t > 0.0)) throw ConfigError("entrance density needs t > 0");
  if (std::abs(x) < 1e-8) throw RangeError("entrance density is singular at x = 0");
  lc.validate();
  x = std::abs(x);
  if (fast(m.alpha(), lc.quad)) {
    return x * std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * kPi * t * t * t);
  }
  auto F = [&](cplx q) { return 1.0 - resolvent_gap(m, q, x, lc.quad) / resolvent_at_zero(m, q); };
  const auto r = invert_talbot(F, t, lc.node_count, lc.contour_scale);
  check_inversion(r);
  return std::max(0.0, r.value);
}

double hitting_tail(const AlphaModel& m, double t, double x, const LaplaceInversionConfig& lc) {
  if (!(t > 0.0)) throw ConfigError("hitting tail needs t > 0");
  lc.validate();
  x = std::abs(x);
  if (x == 0.0) return 0.0;
  if (fast(m.alpha(), lc.quad)) return std::erf(x / (2.0 * std::sqrt(t)));
  auto G = [&](cplx q) { return resolvent_gap(m, q, x, lc.quad) / (q * resolvent_at_zero(m, q)); };
  const auto r = invert_talbot(G, t, lc.node_count, lc.contour_scale);
  check_inversion(r);
  return std::clamp(r.value, 0.0, 1.0);
}

double hitting_ratio(const AlphaModel& m, double t, double x, const LaplaceInversionConfig& lc) {
  if (x == 0.0) throw RangeError("hitting ratio is undefined at x = 0");
  return hitting_tail(m, t, x, lc) / (m.h(x) * excursion_tail(m, t));
}

HittingRatioTable::HittingRatioTable(const AlphaModel& m, const LaplaceInversionConfig& lc)
    : model_(&m), closed_form_(m.gaussian() && lc.quad.gaussian_fast_path) {
  if (closed_form_) return;
  for (double lu = -3.0; lu <= 8.0 + 1e-9; lu += 0.1) {
    const double u = std::pow(10.0, lu);
    log_u_.push_back(std::log(u));
    log_y_.push_back(std::log(hitting_ratio(m, u, 1.0, lc)));
  }
}

double HittingRatioTable::operator()(double t, double x) const {
  if (closed_form_) return hitting_ratio(*model_, t, x);
  if (x == 0.0) throw RangeError("hitting ratio is undefined at x = 0");
  const double u = std::pow(std::abs(x), -model_->alpha()) * t;
  const double lu = std::log(u);
  if (lu <= log_u_.front()) {
    // P_1(T_0 > u) = 1 - O(u) this early.
    return 1.0 / (model_->h1() * excursion_tail(*model_, u));
  }
  if (lu >= log_u_.back()) return std::exp(log_y_.back());
  const auto k = static_cast<std::size_t>(std::upper_bound(log_u_.begin(), log_u_.end(), lu) - log_u_.begin());
  const double w = (lu - log_u_[k - 1]) / (log_u_[k] - log_u_[k - 1]);
  return std::exp((1.0 - w) * log_y_[k - 1] + w * log_y_[k]);
}

double killed_green(const AlphaModel& m, double y, double x) { return m.h(x) + m.h(y) - m.h(x - y); }

}  // namespace penalab
