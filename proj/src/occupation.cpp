#include "penalab/occupation.hpp"

#include <algorithm>
#include <cmath>

#include "penalab/errors.hpp"
#include "penalab/io.hpp"

namespace penalab {

double LocalTimeCurve::at_time(double t) const {
  if (t <= 0.0) return 0.0;
  const auto k = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
  return values[std::min(k, values.size() - 1)];
}

LocalTimeCurve local_time_curve(const PathGrid& path, double level, double eps) {
  if (!(eps > 0.0)) throw ConfigError("band half-width must be positive");
  LocalTimeCurve c{level, eps, path.dt, {}};
  c.values.resize(path.size());
  const double unit = path.dt / (2.0 * eps);
  std::size_t count = 0;
  c.values[0] = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (std::abs(path.values[k - 1] - level) <= eps) ++count;
    c.values[k] = unit * static_cast<double>(count);
  }
  return c;
}

double inverse_local_time(const LocalTimeCurve& curve, double l) {
  if (!(l >= 0.0)) throw RangeError("local time level must be non-negative");
  if (l >= curve.final_value()) throw RangeError("local time level is never reached on this path");
  const auto it = std::upper_bound(curve.values.begin(), curve.values.end(), l);
  const auto k = static_cast<std::size_t>(it - curve.values.begin());
  return curve.dt * static_cast<double>(k - 1);
}

ExcursionSet excursion_decompose(const PathGrid& path, double eps0) {
  if (!(eps0 > 0.0)) throw ConfigError("band half-width must be positive");
  ExcursionSet set{path.dt, eps0, {}};
  bool seen = false;
  std::size_t last_in = 0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (std::abs(path.values[k]) > eps0) continue;
    if (seen && k > last_in + 1) set.intervals.push_back({last_in, k, true});
    seen = true;
    last_in = k;
  }
  if (seen && last_in + 1 < path.size()) set.intervals.push_back({last_in, path.size() - 1, false});
  return set;
}

double last_exit(const PathGrid& path, double t, double eps0) {
  const std::size_t top = path.index_at(t);
  for (std::size_t k = top + 1; k-- > 0;) {
    if (std::abs(path.values[k]) > eps0) continue;
    // Back to the entry of this in-band run.
    while (k > 0 && std::abs(path.values[k - 1]) <= eps0) --k;
    return path.time(k);
  }
  return 0.0;
}

std::vector<double> occupation_curve(const PathGrid& path, const MeasureSpec& v, double eps) {
  if (!(eps > 0.0)) throw ConfigError("band half-width must be positive");
  std::vector<double> out(path.size(), 0.0);
  const double unit = path.dt / (2.0 * eps);
  double acc = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double x = path.values[k - 1];
    for (const auto& a : v.atoms) {
      if (std::abs(x - a.location) <= eps) acc += a.mass * unit;
    }
    if (v.density && std::abs(x) <= v.support) acc += v.density(x) * path.dt;
    out[k] = acc;
  }
  return out;
}

double occupation_integral(const PathGrid& path, const MeasureSpec& v, double t, double eps) {
  return occupation_curve(path, v, eps)[path.index_at(t)];
}

void write_excursions_csv(std::ostream& os, const ExcursionSet& set, const PathGrid& path) {
  write_csv_row(os, {"start_t", "end_t", "lifetime", "max_abs"});
  for (std::size_t i = 0; i < set.intervals.size(); ++i) {
    const auto& e = set.intervals[i];
    double peak = 0.0;
    for (std::size_t k = e.start; k <= e.end; ++k) peak = std::max(peak, std::abs(path.values[k]));
    write_csv_row(os, {fmt17(path.time(e.start)), fmt17(path.time(e.end)), fmt17(set.lifetime(i)), fmt17(peak)});
  }
}

}  // namespace penalab
