#pragma once

#include <functional>
#include <string>
#include <vector>

namespace penalab {

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

// Non-negative measure V = sum of atoms + density on [-support, support].
struct MeasureSpec {
  std::vector<Atom> atoms;
  std::function<double(double)> density;
  double support = 0.0;
  std::string name;

  static MeasureSpec dirac(double mass = 1.0, double location = 0.0);

  double total_mass() const;
  // int (1 + |y|^(alpha-1)) V(dy)
  double weighted_mass(double alpha) const;
  void validate(double alpha) const;
};

}  // namespace penalab
