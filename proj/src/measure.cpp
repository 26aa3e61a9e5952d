#include "penalab/measure.hpp"

#include <cmath>

#include "penalab/errors.hpp"
#include "penalab/quadrature.hpp"

namespace penalab {

MeasureSpec MeasureSpec::dirac(double mass, double location) {
  MeasureSpec v;
  v.atoms.push_back({location, mass});
  v.name = "dirac";
  return v;
}

namespace {

double density_integral(const MeasureSpec& v, const std::function<double(double)>& w) {
  if (!v.density || !(v.support > 0.0)) return 0.0;
  auto f = [&](double y) { return w(y) * v.density(y); };
  return quad::gauss_kronrod<double>(f, -v.support, v.support, {1e-10, 1e-8, 2000}).value;
}

}  // namespace

double MeasureSpec::total_mass() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.mass;
  return s + density_integral(*this, [](double) { return 1.0; });
}

double MeasureSpec::weighted_mass(double alpha) const {
  auto w = [alpha](double y) { return 1.0 + std::pow(std::abs(y), alpha - 1.0); };
  double s = 0.0;
  for (const auto& a : atoms) s += a.mass * w(a.location);
  return s + density_integral(*this, w);
}

void MeasureSpec::validate(double alpha) const {
  for (const auto& a : atoms) {
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass) || !std::isfinite(a.location)) {
      throw ConfigError("measure atoms need finite non-negative mass");
    }
  }
  if (density && !(support > 0.0)) throw ConfigError("measure density needs a positive support bound");
  const double mass = weighted_mass(alpha);
  if (!std::isfinite(mass)) throw ConfigError("measure has infinite weighted mass");
  if (!(mass > 0.0)) throw ConfigError("measure is zero");
}

}  // namespace penalab
