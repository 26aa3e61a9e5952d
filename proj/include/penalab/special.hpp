#pragma once

namespace penalab {

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double x, double a, double b);

}  // namespace penalab
