#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "penalab/measure.hpp"
#include "penalab/sampling.hpp"

namespace penalab {

// values[k] = (dt / 2 eps) #{j < k : |X_j - level| <= eps}; values[0] = 0.
struct LocalTimeCurve {
  double level = 0.0;
  double eps = 0.0;
  double dt = 0.0;
  std::vector<double> values;

  double final_value() const { return values.back(); }
  double at_time(double t) const;
};

LocalTimeCurve local_time_curve(const PathGrid& path, double level, double eps);

// Grid time of the band sample that lifts the curve above l.
double inverse_local_time(const LocalTimeCurve& curve, double l);

struct ExcursionInterval {
  std::size_t start = 0;  // last band sample before the excursion
  std::size_t end = 0;    // next band sample, or the final index
  bool complete = true;   // false when the path ends mid-excursion
};

struct ExcursionSet {
  double dt = 0.0;
  double eps0 = 0.0;
  std::vector<ExcursionInterval> intervals;

  double lifetime(std::size_t i) const {
    return dt * static_cast<double>(intervals[i].end - intervals[i].start);
  }
};

ExcursionSet excursion_decompose(const PathGrid& path, double eps0);

// Entry time of the last in-band run at or before t; 0 when the band is never
// visited.
double last_exit(const PathGrid& path, double t, double eps0);

// Cumulative int_0^{t_k} V-occupation, indexed like a local-time curve.
std::vector<double> occupation_curve(const PathGrid& path, const MeasureSpec& v, double eps);
double occupation_integral(const PathGrid& path, const MeasureSpec& v, double t, double eps);

void write_excursions_csv(std::ostream& os, const ExcursionSet& set, const PathGrid& path);

}  // namespace penalab
