#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "penalab/analytic.hpp"
#include "penalab/measure.hpp"
#include "penalab/occupation.hpp"
#include "penalab/quadlemmas.hpp"
#include "penalab/report.hpp"
#include "penalab/sampling.hpp"

namespace penalab {

// f on [0, inf) with I(f) = int f; tail(l) = int_l^inf f.
struct LocalTimeFunction {
  std::function<double(double)> f;
  std::string name;
  double integral = 0.0;
  std::function<double(double)> tail_fn;

  static LocalTimeFunction exponential(double c = 1.0);
  static LocalTimeFunction zero();
  // I(f) and tails by quadrature; throws ConfigError when I(f) is not finite.
  static LocalTimeFunction from(std::function<double(double)> f, std::string name);

  double operator()(double l) const { return f(l); }
  double tail(double l) const { return tail_fn(l); }
};

struct WeightSpec {
  std::variant<LocalTimeFunction, MeasureSpec> kind;

  // Requires 0 < I(f) < inf, or a valid measure.
  void validate(double alpha) const;
};

// Bounded F_s functionals used to probe convergence along F_s.
struct ZFunctional {
  std::string name;
  std::function<double(const PathGrid&, std::size_t s_index, double local_time_s)> eval;
};
inline constexpr const char* kZLibraryVersion = "z5.1";
// 1, min(X_s^2, 1), min(L_s, 1), 1{sup_{r<=s} |X_r| <= 1}, min(L_s, 1)^2.
std::vector<ZFunctional> z_library();

// ---------------------------------------------------------------------------
// Mixture measure: P_0[dL_u] Q^(u) then the h-path.

struct GluedPath {
  double g = 0.0;
  // P_0 path whose prefix [0, g_index] plays the bridge.
  const PathGrid* bridge = nullptr;
  std::size_t g_index = 0;
  // Local time at 0 up to g, counting half of the glue sample.
  double local_time = 0.0;
  // h-path continuation of length g_cutoff; null when the cutoff is 0.
  const PathGrid* continuation = nullptr;
};

struct PathFunctional {
  std::string name;
  // F may look this far past g.
  double g_cutoff = 0.0;
  std::function<double(const GluedPath&)> eval;
};

struct MixtureOptions {
  double eps_scale = 3.0;
  std::size_t pool_size = 256;
  HPathOptions hpath{};
  // psi bins used for the power-law tail fit (0: last half of u_grid).
  std::size_t tail_fit_bins = 0;
};

struct MixtureResult {
  double estimate = 0.0;  // includes the extrapolated tail
  double mc_error = 0.0;
  double tail = 0.0;
  double decay_exponent = 0.0;
  std::vector<double> u_grid;
  std::vector<double> psi;  // bin averages of P_0[F dL_u] / du
};

MixtureResult sP_expectation(const AlphaModel& m, const PathFunctional& F, const std::vector<double>& u_grid,
                             const SimConfig& cfg, const MixtureOptions& opts = {});

// ---------------------------------------------------------------------------
// Local-time penalisation.

struct LtOptions {
  double eps_scale = 3.0;
  double tolerance = 0.03;
};

VerificationReport lt_martingale_check(const AlphaModel& m, const LocalTimeFunction& f,
                                       const std::vector<double>& t_grid, const SimConfig& cfg,
                                       const LtOptions& opts = {});

struct LtPenalisationOptions {
  double eps_scale = 3.0;
  // Relative to I(f) for the headline and to each RHS for the gap.
  double tolerance = 0.1;
  std::size_t psi_bins = 48;
};

VerificationReport lt_penalisation_check(const AlphaModel& m, const LocalTimeFunction& f, double s,
                                         const std::vector<double>& t_grid, const SimConfig& cfg,
                                         const LtPenalisationOptions& opts = {});

// Tabulated psi rows of an lt-penalisation report as a PsiFunction.
PsiFunction psi_from_report(const VerificationReport& r);

// ---------------------------------------------------------------------------
// Last exit.

struct BetaLawOptions {
  // Zero band for g_t. Narrower than the local-time band: false zeros near
  // the band edge bias g_t upward like eps^(alpha-1).
  double eps_scale = 1.0;
  double ks_tolerance = 0.02;
  double mean_tolerance = 0.02;
  // Fewer grid steps than this over [0, t] is flagged as low resolution.
  std::size_t min_steps = 1000;
};

// g_t / t with t = cfg.horizon against Beta(1 - 1/alpha, 1/alpha).
VerificationReport beta_law_check(const AlphaModel& m, const SimConfig& cfg, const BetaLawOptions& opts = {});

// ---------------------------------------------------------------------------
// Feynman-Kac.

struct FKOptions {
  double eps_scale = 3.0;
  std::vector<double> s_grid{0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
  double k_horizon = 10.0;
  std::size_t k_paths = 2000;
  // Finite horizon standing in for infinity in phi1, phi2 and C_V.
  double phi_horizon = 2.0;
  std::size_t phi_paths = 1000;
  HPathOptions hpath{};
  // Time of the direct P_x[E_t] / n(R > t) residual column (0: skip).
  double direct_t = 2.0;
};

struct FKConstants {
  double K_V = 0.0;
  double K_fit_r2 = 0.0;
  double C_V = 0.0;
  double C_V_stderr = 0.0;
  std::vector<double> x_grid, phi1, phi2, phi, stderr, residual;

  // Linear interpolation (phi1 via phi1 / h); RangeError outside the grid.
  double phi1_at(const AlphaModel& m, double x) const;
  double phi2_at(double x) const;
  double phi_at(const AlphaModel& m, double x) const { return phi1_at(m, x) + phi2_at(x); }
};

FKConstants fk_constants(const AlphaModel& m, const MeasureSpec& V, const std::vector<double>& x_grid,
                         const SimConfig& cfg, const FKOptions& opts = {});

// Symmetric grid containing 0, geometric away from the zero band up to max_abs.
std::vector<double> fk_grid(double max_abs, double inner, std::size_t per_side);

// Largest |X_t| over t_grid on the paths fk_martingale_check will draw.
double visited_range(const AlphaModel& m, double x, const std::vector<double>& t_grid, const SimConfig& cfg);

struct FkMartingaleOptions {
  double eps_scale = 3.0;
  double tolerance = 0.05;
};

VerificationReport fk_martingale_check(const AlphaModel& m, const MeasureSpec& V, double x,
                                       const std::vector<double>& t_grid, const FKConstants& consts,
                                       const SimConfig& cfg, const FkMartingaleOptions& opts = {});

void write_fk_csv(std::ostream& os, const FKConstants& c);

// ---------------------------------------------------------------------------
// Meander convergence and excursion local times.

struct MeanderCheckOptions {
  std::size_t samples_per_side = 1000;
  double eps_scale = 3.0;
  double tolerance = 0.05;
  bool identity_rows = true;
  // Optional multiplicative weight E^V applied on both sides.
  const MeasureSpec* weight = nullptr;
  HarvestOptions harvest{};
};

VerificationReport meander_convergence_check(const AlphaModel& m, double s, const std::vector<double>& t_grid,
                                             const SimConfig& cfg, const MeanderCheckOptions& opts = {});

struct ExcursionLtOptions {
  double eps_scale = 3.0;
  double tolerance = 0.1;
  double hpath_tolerance = 0.15;  // relative to h(x)
  HPathOptions hpath{3.0, 0.5, {}};
};

// Horizon cfg.horizon; rows for n[L(R, x)] = 1 and P+_0[L(inf, x)] = h(x).
VerificationReport excursion_lt_check(const AlphaModel& m, double x, const SimConfig& cfg,
                                      const ExcursionLtOptions& opts = {});

Json base_meta(const AlphaModel& m, const SimConfig& cfg);

}  // namespace penalab
