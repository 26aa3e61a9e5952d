#pragma once

// Adaptive Gauss-Kronrod (7/15) and an accelerated Fourier tail.
// Templated on the value type so complex integrands share the code.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "penalab/errors.hpp"

namespace penalab::quad {

struct Tolerance {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_subdivisions = 20000;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  int intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <class T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class T, class F>
Segment<T> kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T kron = fc * kWk[7];
  T gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXk[j];
    const T s = f(c - dx) + f(c + dx);
    kron += s * kWk[j];
    if (j % 2 == 1) gauss += s * kWg[j / 2];
  }
  kron *= h;
  gauss *= h;
  return {a, b, kron, magnitude(kron - gauss)};
}

}  // namespace detail

// Integrates f over [a, b]. Throws QuadratureError when the error budget
// cannot be met within max_subdivisions.
template <class T, class F>
Result<T> gauss_kronrod(F&& f, double a, double b, const Tolerance& tol) {
  if (a == b) return {};
  if (b < a) {
    auto r = gauss_kronrod<T>(f, b, a, tol);
    r.value = -r.value;
    return r;
  }
  std::vector<detail::Segment<T>> heap;
  heap.push_back(detail::kronrod15<T>(f, a, b));
  std::vector<detail::Segment<T>> frozen;
  T total = heap.front().value;
  double err = heap.front().error;
  int count = 1;
  auto budget = [&] { return std::max(tol.abs_tol, tol.rel_tol * detail::magnitude(total)); };
  // Exact re-sum, so running-update drift cannot decide convergence.
  auto resum = [&] {
    total = T{};
    err = 0.0;
    for (const auto* v : {&heap, &frozen}) {
      for (const auto& s : *v) {
        total += s.value;
        err += s.error;
      }
    }
  };
  while (true) {
    if (err <= budget()) {
      resum();
      if (err <= budget()) break;
    }
    if (heap.empty()) break;
    if (count >= tol.max_subdivisions) {
      throw QuadratureError("adaptive quadrature did not converge", err);
    }
    std::pop_heap(heap.begin(), heap.end());
    const auto worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        (worst.b - worst.a) < 64.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(1.0, std::abs(mid))) {
      frozen.push_back(worst);
      continue;
    }
    auto left = detail::kronrod15<T>(f, worst.a, mid);
    auto right = detail::kronrod15<T>(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
    ++count;
  }
  resum();
  double mass = 0.0;
  for (const auto& s : frozen) mass += detail::magnitude(s.value);
  // Frozen segments cannot beat rounding of their own |f| mass.
  const double floor = heap.empty() ? 1e3 * std::numeric_limits<double>::epsilon() * mass : 0.0;
  if (err > std::max(budget(), floor)) {
    throw QuadratureError("adaptive quadrature stalled at machine resolution", err);
  }
  return {total, err, count};
}

// Wynn epsilon acceleration of a sequence of partial sums.
template <class T>
class WynnEpsilon {
 public:
  // Feeds the next partial sum; returns the current best extrapolation.
  T push(T partial) {
    std::vector<T> cur;
    cur.reserve(prev_.size() + 1);
    cur.push_back(partial);
    for (std::size_t k = 0; k < prev_.size(); ++k) {
      const T diff = cur[k] - prev_[k];
      if (detail::magnitude(diff) == 0.0) break;
      const T below = k >= 1 ? prev_[k - 1] : T{};
      cur.push_back(below + T(1.0) / diff);
    }
    if (cur.size() > kMaxWidth) cur.resize(kMaxWidth);
    prev_ = std::move(cur);
    const std::size_t even = (prev_.size() - 1) & ~std::size_t{1};
    return prev_[even];
  }

 private:
  static constexpr std::size_t kMaxWidth = 31;
  std::vector<T> prev_;
};

// Integral of g(x) cos(omega x) over [start, inf) for an amplitude g that
// decays to zero. Integrates between consecutive zeros of the cosine and
// extrapolates the alternating partial sums.
template <class T, class G>
Result<T> fourier_cos_tail(G&& g, double omega, double start, const Tolerance& tol,
                           int max_terms = 400) {
  const double pi = std::numbers::pi;
  omega = std::abs(omega);
  // First cosine zero at or beyond start.
  double k0 = std::ceil(start * omega / pi - 0.5);
  if (k0 < 0) k0 = 0;
  double z = (k0 + 0.5) * pi / omega;
  auto integrand = [&](double x) -> T { return g(x) * std::cos(omega * x); };
  const double half = pi / omega;
  // Pieces only need to resolve relative to the leading piece size.
  Tolerance inner = tol;
  inner.abs_tol = std::max(tol.abs_tol, tol.rel_tol * detail::magnitude(g(start)) * half) * 1e-2;
  auto head = gauss_kronrod<T>(integrand, start, z, inner);
  T partial{};
  WynnEpsilon<T> wynn;
  T est{}, last_est{};
  double err_used = head.error;
  int stable = 0;
  for (int n = 0; n < max_terms; ++n) {
    auto piece = gauss_kronrod<T>(integrand, z, z + half, inner);
    err_used += piece.error;
    z += half;
    partial += piece.value;
    est = wynn.push(partial);
    if (n >= 6) {
      const double change = detail::magnitude(est - last_est);
      if (change <= std::max(tol.abs_tol, tol.rel_tol * detail::magnitude(est))) {
        if (++stable >= 3) return {head.value + est, change + err_used, n + 1};
      } else {
        stable = 0;
      }
    }
    last_est = est;
  }
  throw QuadratureError("oscillatory tail extrapolation did not settle",
                        detail::magnitude(est - last_est));
}

}  // namespace penalab::quad
