#include "penalab/penalise.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "penalab/errors.hpp"
#include "penalab/io.hpp"
#include "penalab/parallel.hpp"
#include "penalab/quadrature.hpp"
#include "penalab/special.hpp"
#include "penalab/stats.hpp"

namespace penalab {
namespace {

void check_grid(const std::vector<double>& g, const char* what, bool allow_zero) {
  if (g.empty()) throw ConfigError(std::string(what) + " must not be empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(allow_zero ? g[i] >= 0.0 : g[i] > 0.0)) throw ConfigError(std::string(what) + " has an invalid entry");
    if (i && !(g[i] > g[i - 1])) throw ConfigError(std::string(what) + " must be strictly increasing");
  }
}

// Strictly monotone sequences whose end-to-end change exceeds 3 paired SEs.
bool monotone_trend(const std::vector<double>& est, double paired_se) {
  if (est.size() < 3) return false;
  bool up = true, down = true;
  for (std::size_t i = 1; i < est.size(); ++i) {
    up = up && est[i] > est[i - 1];
    down = down && est[i] < est[i - 1];
  }
  return (up || down) && std::abs(est.back() - est.front()) > 3.0 * paired_se;
}

double paired_se(const std::vector<double>& vals, std::size_t stride, std::size_t a, std::size_t b) {
  std::vector<double> d;
  d.reserve(vals.size() / stride);
  for (std::size_t i = 0; i * stride < vals.size(); ++i) d.push_back(vals[i * stride + b] - vals[i * stride + a]);
  return mean_se(d).se;
}

MeanSE column(const std::vector<double>& vals, std::size_t stride, std::size_t k) {
  std::vector<double> c;
  c.reserve(vals.size() / stride);
  for (std::size_t i = 0; i * stride < vals.size(); ++i) c.push_back(vals[i * stride + k]);
  return mean_se(c);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

// V-occupation rate of a single grid sample.
double occupation_rate(const MeasureSpec& v, double x, double eps) {
  double r = 0.0;
  for (const auto& a : v.atoms) {
    if (std::abs(x - a.location) <= eps) r += a.mass / (2.0 * eps);
  }
  if (v.density && std::abs(x) <= v.support) r += v.density(x);
  return r;
}

double atoms_at_zero(const MeasureSpec& v) {
  double c = 0.0;
  for (const auto& a : v.atoms) {
    if (a.location == 0.0) c += a.mass;
  }
  return c;
}

std::uint64_t stream_id(std::uint64_t tag, std::uint64_t group, std::uint64_t i) {
  return (tag << 48) ^ (group << 32) ^ i;
}

}  // namespace

Json base_meta(const AlphaModel& m, const SimConfig& cfg) {
  Json j = Json::object();
  j["alpha"] = m.alpha();
  j["dt"] = cfg.dt;
  j["n_paths"] = cfg.n_paths;
  j["seed"] = cfg.seed;
  j["stochastic"] = true;
  return j;
}

// ---------------------------------------------------------------------------

LocalTimeFunction LocalTimeFunction::exponential(double c) {
  if (!(c > 0.0)) throw ConfigError("exponential rate must be positive");
  LocalTimeFunction f;
  f.f = [c](double l) { return std::exp(-c * l); };
  f.tail_fn = [c](double l) { return std::exp(-c * l) / c; };
  f.integral = 1.0 / c;
  char buf[48];
  std::snprintf(buf, sizeof buf, "exp(-%g l)", c);
  f.name = buf;
  return f;
}

LocalTimeFunction LocalTimeFunction::zero() {
  LocalTimeFunction f;
  f.f = [](double) { return 0.0; };
  f.tail_fn = [](double) { return 0.0; };
  f.integral = 0.0;
  f.name = "zero";
  return f;
}

LocalTimeFunction LocalTimeFunction::from(std::function<double(double)> fn, std::string name) {
  LocalTimeFunction f;
  f.name = std::move(name);
  auto g = std::make_shared<std::function<double(double)>>(std::move(fn));
  f.f = [g](double l) { return (*g)(l); };
  f.tail_fn = [g](double l) {
    // int_l^inf via l + v / (1 - v)
    auto h = [&](double v) {
      const double w = 1.0 - v;
      return (*g)(l + v / w) / (w * w);
    };
    return quad::gauss_kronrod<double>(h, 0.0, 1.0 - 1e-12, {1e-12, 1e-10, 4000}).value;
  };
  try {
    f.integral = f.tail_fn(0.0);
  } catch (const QuadratureError& e) {
    throw ConfigError(std::string("I(f) could not be evaluated: ") + e.what());
  }
  // The mapped quadrature cannot return infinity; a huge value means f does not decay.
  if (!std::isfinite(f.integral) || f.integral > 1e9) throw ConfigError("I(f) is not finite");
  return f;
}

void WeightSpec::validate(double alpha) const {
  if (const auto* f = std::get_if<LocalTimeFunction>(&kind)) {
    if (!(f->integral > 0.0) || !std::isfinite(f->integral)) throw ConfigError("I(f) must lie in (0, inf)");
  } else {
    std::get<MeasureSpec>(kind).validate(alpha);
  }
}

std::vector<ZFunctional> z_library() {
  return {
      {"one", [](const PathGrid&, std::size_t, double) { return 1.0; }},
      {"min_x2_1", [](const PathGrid& p, std::size_t k, double) { return std::min(p.values[k] * p.values[k], 1.0); }},
      {"min_l_1", [](const PathGrid&, std::size_t, double l) { return std::min(l, 1.0); }},
      {"sup_abs_le_1",
       [](const PathGrid& p, std::size_t k, double) {
         for (std::size_t j = 0; j <= k; ++j) {
           if (std::abs(p.values[j]) > 1.0) return 0.0;
         }
         return 1.0;
       }},
      {"min_l_1_sq", [](const PathGrid&, std::size_t, double l) { return std::min(l, 1.0) * std::min(l, 1.0); }},
  };
}

// ---------------------------------------------------------------------------

MixtureResult sP_expectation(const AlphaModel& m, const PathFunctional& F, const std::vector<double>& u_grid,
                             const SimConfig& cfg, const MixtureOptions& opts) {
  check_grid(u_grid, "u_grid", false);
  if (!F.eval) throw ConfigError("path functional has no evaluator");
  if (!(F.g_cutoff >= 0.0)) throw ConfigError("g-cutoff must be non-negative");
  SimConfig c = cfg;
  c.horizon = u_grid.back();
  c.validate();
  const double eps = band_width(m, c.dt, opts.eps_scale);
  const double unit = c.dt / (2.0 * eps);

  WeightedEnsemble pool;
  if (F.g_cutoff > 0.0) {
    SimConfig cp = c;
    cp.n_paths = std::max<std::size_t>(1, opts.pool_size);
    cp.seed = derive_seed(cfg.seed, 0x6c7565);
    HPathOptions ho = opts.hpath;
    ho.eps_scale = opts.eps_scale;
    pool = sample_hpath(m, 0.0, F.g_cutoff, cp, ho);
  }

  const std::size_t nb = u_grid.size();
  std::vector<double> totals(c.n_paths, 0.0);
  std::vector<double> bins(c.n_paths * nb, 0.0);
  for_each_path(m, 0.0, c, [&](std::size_t i, const PathGrid& p) {
    const auto L = local_time_curve(p, 0.0, eps);
    double* mine = &bins[i * nb];
    double total = 0.0;
    std::size_t b = 0;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      if (std::abs(p.values[j]) > eps) continue;
      const double u = p.time(j);
      while (b + 1 < nb && u > u_grid[b]) ++b;
      GluedPath gp;
      gp.g = u;
      gp.bridge = &p;
      gp.g_index = j;
      gp.local_time = L.values[j] + 0.5 * unit;
      double w = 1.0;
      if (F.g_cutoff > 0.0) {
        const std::size_t k = derive_seed(i, j) % pool.attempts;
        if (k >= pool.paths.size()) continue;
        gp.continuation = &pool.paths[k];
        w = pool.weights[k] * static_cast<double>(pool.attempts) / static_cast<double>(pool.attempts);
      }
      const double contrib = unit * w * F.eval(gp);
      total += contrib;
      mine[b] += contrib;
    }
    totals[i] = total;
  });

  MixtureResult r;
  r.u_grid = u_grid;
  r.psi.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.n_paths; ++i) s += bins[i * nb + b];
    const double width = u_grid[b] - (b ? u_grid[b - 1] : 0.0);
    r.psi[b] = s / (static_cast<double>(c.n_paths) * width);
  }
  const auto head = mean_se(totals);
  r.mc_error = head.se;

  // Power-law tail past the last grid point.
  if (r.psi.back() != 0.0) {
    const std::size_t nfit = opts.tail_fit_bins ? std::min(opts.tail_fit_bins, nb) : std::max<std::size_t>(3, nb / 2);
    if (nfit < 2 || nb < 2) throw FitError("need at least two psi bins for the tail fit");
    std::vector<double> lx, ly;
    for (std::size_t b = nb - std::min(nfit, nb); b < nb; ++b) {
      if (b == 0) continue;
      if (!(r.psi[b] > 0.0)) throw FitError("psi changes sign in the tail fit window");
      lx.push_back(std::log(0.5 * (u_grid[b] + u_grid[b - 1])));
      ly.push_back(std::log(r.psi[b]));
    }
    const auto fit = linear_fit(lx, ly);
    r.decay_exponent = -fit.slope;
    if (r.decay_exponent <= 1.0) {
      throw Error("mixture integral diverges: psi decays like u^-" + fmt17(r.decay_exponent) +
                  " along u_grid, not faster than 1/u");
    }
    const double U = u_grid.back();
    r.tail = std::exp(fit.intercept) * std::pow(U, 1.0 - r.decay_exponent) / (r.decay_exponent - 1.0);
  }
  r.estimate = head.mean + r.tail;
  return r;
}

// ---------------------------------------------------------------------------

VerificationReport lt_martingale_check(const AlphaModel& m, const LocalTimeFunction& f,
                                       const std::vector<double>& t_grid, const SimConfig& cfg,
                                       const LtOptions& opts) {
  check_grid(t_grid, "t_grid", true);
  SimConfig c = cfg;
  c.horizon = std::max(t_grid.back(), cfg.dt);
  c.validate();
  const double eps = band_width(m, c.dt, opts.eps_scale);
  const std::size_t T = t_grid.size();
  std::vector<double> vals(c.n_paths * T);
  for_each_path(m, 0.0, c, [&](std::size_t i, const PathGrid& p) {
    const auto L = local_time_curve(p, 0.0, eps);
    for (std::size_t k = 0; k < T; ++k) {
      const std::size_t idx = p.index_at(t_grid[k]);
      const double l = L.values[idx];
      vals[i * T + k] = m.h(p.values[idx]) * f(l) + f.tail(l);
    }
  });

  VerificationReport r;
  r.test_name = "lt-martingale";
  r.meta = base_meta(m, c);
  r.meta["f"] = f.name;
  r.meta["eps"] = eps;
  r.target = f.integral;
  r.tolerance = opts.tolerance;
  Json rows = Json::array();
  std::vector<double> est;
  double worst = -1.0;
  for (std::size_t k = 0; k < T; ++k) {
    const auto ms = column(vals, T, k);
    est.push_back(ms.mean);
    rows.push_back({{"t", t_grid[k]}, {"estimate", ms.mean}, {"mc_error", ms.se}});
    if (std::abs(ms.mean - r.target) > worst) {
      worst = std::abs(ms.mean - r.target);
      r.estimate = ms.mean;
      r.mc_error = ms.se;
    }
  }
  const double pse = T > 1 ? paired_se(vals, T, 0, T - 1) : 0.0;
  r.meta["rows"] = rows;
  r.meta["trend_paired_se"] = pse;
  r.meta["conditions"] = {{"no_monotone_trend", !monotone_trend(est, pse)}};
  r.settle();
  return r;
}

VerificationReport lt_penalisation_check(const AlphaModel& m, const LocalTimeFunction& f, double s,
                                         const std::vector<double>& t_grid, const SimConfig& cfg,
                                         const LtPenalisationOptions& opts) {
  check_grid(t_grid, "t_grid", false);
  if (!(s >= 0.0) || !(s < t_grid.front())) throw ConfigError("s must satisfy 0 <= s < min(t_grid)");
  SimConfig c = cfg;
  c.horizon = t_grid.back();
  c.validate();
  const double eps = band_width(m, c.dt, opts.eps_scale);
  const double unit = c.dt / (2.0 * eps);
  const auto Z = z_library();
  const std::size_t T = t_grid.size(), NZ = Z.size();
  // Per path: Z values, Z * M_s, then Z * f(L_t) for each t.
  const std::size_t stride = NZ * (2 + T);
  std::vector<double> vals(c.n_paths * stride);

  const std::size_t nb = std::max<std::size_t>(4, opts.psi_bins);
  const double u_lo = std::max(10.0 * c.dt, 1e-3 * c.horizon);
  std::vector<double> edges(nb + 1);
  for (std::size_t b = 0; b <= nb; ++b) edges[b] = u_lo * std::pow(c.horizon / u_lo, static_cast<double>(b) / nb);
  std::vector<double> psi_bins(c.n_paths * nb, 0.0);

  for_each_path(m, 0.0, c, [&](std::size_t i, const PathGrid& p) {
    const auto L = local_time_curve(p, 0.0, eps);
    const std::size_t si = p.index_at(s);
    const double ls = L.values[si];
    const double Ms = m.h(p.values[si]) * f(ls) + f.tail(ls);
    double* v = &vals[i * stride];
    for (std::size_t z = 0; z < NZ; ++z) {
      const double zv = Z[z].eval(p, si, ls);
      v[z] = zv;
      v[NZ + z] = zv * Ms;
      for (std::size_t k = 0; k < T; ++k) v[NZ * (2 + k) + z] = zv * f(L.values[p.index_at(t_grid[k])]);
    }
    double* pb = &psi_bins[i * nb];
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      if (std::abs(p.values[j]) > eps) continue;
      const double u = p.time(j);
      if (u < edges[0] || u >= edges[nb]) continue;
      const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), u) - edges.begin()) - 1;
      pb[b] += unit * f(L.values[j] + 0.5 * unit);
    }
  });

  VerificationReport r;
  r.test_name = "lt-penalisation";
  r.meta = base_meta(m, c);
  r.meta["f"] = f.name;
  r.meta["s"] = s;
  r.meta["eps"] = eps;
  r.meta["z_library"] = kZLibraryVersion;
  std::vector<MeanSE> rhs(NZ);
  for (std::size_t z = 0; z < NZ; ++z) rhs[z] = column(vals, stride, NZ + z);
  Json rows = Json::array();
  std::vector<double> gaps;
  for (std::size_t k = 0; k < T; ++k) {
    const double tail = excursion_tail(m, t_grid[k]);
    Json zr = Json::array();
    double gap = 0.0;
    for (std::size_t z = 0; z < NZ; ++z) {
      const auto lhs = column(vals, stride, NZ * (2 + k) + z);
      const double l = lhs.mean / tail;
      if (std::abs(rhs[z].mean) > 1e-12) gap = std::max(gap, std::abs(l - rhs[z].mean) / std::abs(rhs[z].mean));
      zr.push_back({{"z", Z[z].name},
                    {"lhs", l},
                    {"lhs_se", lhs.se / tail},
                    {"rhs", rhs[z].mean},
                    {"rhs_se", rhs[z].se}});
    }
    gaps.push_back(gap);
    rows.push_back({{"t", t_grid[k]}, {"gap", gap}, {"z", zr}});
    if (k + 1 == T) {
      const auto one = column(vals, stride, NZ * (2 + k));
      r.estimate = one.mean / tail;
      r.mc_error = one.se / tail;
    }
  }
  Json psi = Json::array();
  for (std::size_t b = 0; b < nb; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.n_paths; ++i) sum += psi_bins[i * nb + b];
    const double u = std::sqrt(edges[b] * edges[b + 1]);
    const double val = sum / (static_cast<double>(c.n_paths) * (edges[b + 1] - edges[b]));
    psi.push_back({{"u", u}, {"psi", val}, {"u_psi", u * val}});
  }
  r.target = f.integral;
  r.tolerance = opts.tolerance * std::max(f.integral, 1e-300);
  r.meta["rows"] = rows;
  r.meta["psi"] = psi;
  r.meta["conditions"] = {{"gap_shrinks", strictly_decreasing(gaps)},
                          {"final_gap_within", gaps.back() <= opts.tolerance}};
  r.settle();
  return r;
}

PsiFunction psi_from_report(const VerificationReport& r) {
  if (!r.meta.contains("psi")) throw ConfigError("report carries no psi table");
  std::vector<double> u, y;
  for (const auto& row : r.meta["psi"]) {
    u.push_back(row.at("u").get<double>());
    y.push_back(row.at("psi").get<double>());
  }
  return PsiFunction::tabulated(std::move(u), std::move(y), "psi tabulated from lt-penalisation");
}

// ---------------------------------------------------------------------------

VerificationReport beta_law_check(const AlphaModel& m, const SimConfig& cfg, const BetaLawOptions& opts) {
  cfg.validate();
  const double t = cfg.horizon;
  const double eps0 = band_width(m, cfg.dt, opts.eps_scale);
  std::vector<double> g(cfg.n_paths);
  for_each_path(m, 0.0, cfg, [&](std::size_t i, const PathGrid& p) { g[i] = last_exit(p, t, eps0) / t; });
  const double a = 1.0 - 1.0 / m.alpha(), b = 1.0 / m.alpha();
  const double ks = ks_one_sample(g, [&](double x) { return incomplete_beta(x, a, b); });
  const auto mean = mean_se(g);
  const bool resolved = cfg.n_steps() >= opts.min_steps;

  VerificationReport r;
  r.test_name = "beta-law";
  r.meta = base_meta(m, cfg);
  r.meta["stochastic"] = false;
  r.meta["t"] = t;
  r.meta["eps0"] = eps0;
  r.meta["beta_a"] = a;
  r.meta["beta_b"] = b;
  r.meta["mean"] = mean.mean;
  r.meta["mean_se"] = mean.se;
  r.meta["mean_target"] = a;
  r.meta["mean_tolerance"] = opts.mean_tolerance;
  r.meta["steps"] = cfg.n_steps();
  if (!resolved) r.meta["warning"] = "low effective resolution: fewer than " + std::to_string(opts.min_steps) + " steps";
  r.meta["conditions"] = {{"mean_within", std::abs(mean.mean - a) <= opts.mean_tolerance},
                          {"resolution_ok", resolved}};
  r.estimate = ks;
  r.mc_error = mean.se;
  r.target = 0.0;
  r.tolerance = opts.ks_tolerance;
  r.settle();
  return r;
}

// ---------------------------------------------------------------------------

double FKConstants::phi1_at(const AlphaModel& m, double x) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(x));
  if (x < x_grid.front() - slack || x > x_grid.back() + slack) {
    throw RangeError("phi requested at " + fmt17(x) + ", outside the tabulated range");
  }
  if (x == 0.0) return 0.0;
  // phi1 / h is smooth and bounded; interpolate that ratio on the same side of 0.
  const auto ratio = [&](std::size_t k) { return phi1[k] / m.h(x_grid[k]); };
  std::vector<std::size_t> side;
  for (std::size_t k = 0; k < x_grid.size(); ++k) {
    if (x_grid[k] != 0.0 && (x_grid[k] > 0.0) == (x > 0.0)) side.push_back(k);
  }
  if (side.empty()) throw RangeError("no tabulated phi on this side of 0");
  const double ax = std::abs(x);
  auto at = [&](std::size_t q) { return std::abs(x_grid[side[q]]); };
  std::sort(side.begin(), side.end(), [&](std::size_t p, std::size_t q) { return std::abs(x_grid[p]) < std::abs(x_grid[q]); });
  if (ax <= at(0)) return m.h(x) * ratio(side[0]);
  if (ax >= at(side.size() - 1)) return m.h(x) * ratio(side.back());
  std::size_t q = 1;
  while (at(q) < ax) ++q;
  const double w = (ax - at(q - 1)) / (at(q) - at(q - 1));
  return m.h(x) * ((1.0 - w) * ratio(side[q - 1]) + w * ratio(side[q]));
}

double FKConstants::phi2_at(double x) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(x));
  if (x < x_grid.front() - slack || x > x_grid.back() + slack) {
    throw RangeError("phi requested at " + fmt17(x) + ", outside the tabulated range");
  }
  x = std::clamp(x, x_grid.front(), x_grid.back());
  const auto k = static_cast<std::size_t>(std::upper_bound(x_grid.begin(), x_grid.end(), x) - x_grid.begin());
  if (k == 0) return phi2.front();
  if (k >= x_grid.size()) return phi2.back();
  const double w = (x - x_grid[k - 1]) / (x_grid[k] - x_grid[k - 1]);
  return (1.0 - w) * phi2[k - 1] + w * phi2[k];
}

std::vector<double> fk_grid(double max_abs, double inner, std::size_t per_side) {
  if (!(max_abs > inner) || !(inner > 0.0) || per_side < 1) throw ConfigError("invalid phi grid request");
  std::vector<double> pos;
  for (std::size_t k = 0; k < per_side; ++k) {
    const double w = per_side == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(per_side - 1);
    pos.push_back(inner * std::pow(max_abs / inner, w));
  }
  std::vector<double> g;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) g.push_back(-*it);
  g.push_back(0.0);
  for (double v : pos) g.push_back(v);
  return g;
}

FKConstants fk_constants(const AlphaModel& m, const MeasureSpec& V, const std::vector<double>& x_grid,
                         const SimConfig& cfg, const FKOptions& opts) {
  V.validate(m.alpha());
  check_grid(opts.s_grid, "s_grid", false);
  if (x_grid.empty() || !std::is_sorted(x_grid.begin(), x_grid.end())) throw ConfigError("x_grid must increase");
  cfg.validate();
  const double eps = band_width(m, cfg.dt, opts.eps_scale);
  const double c0 = atoms_at_zero(V);
  const std::size_t workers = worker_count(cfg.n_streams);
  FKConstants out;

  // K_V from the exponential decay of s -> E_0[E_{tau_s}].
  {
    SimConfig ck = cfg;
    ck.horizon = opts.k_horizon;
    ck.n_paths = opts.k_paths;
    ck.validate();
    const std::size_t S = opts.s_grid.size();
    std::vector<double> e(ck.n_paths * S);
    std::vector<unsigned char> censored(ck.n_paths * S, 0);
    for_each_path(m, 0.0, ck, [&](std::size_t i, const PathGrid& p) {
      const auto L = local_time_curve(p, 0.0, eps);
      const auto occ = occupation_curve(p, V, eps);
      for (std::size_t k = 0; k < S; ++k) {
        const double s = opts.s_grid[k];
        if (s < L.final_value()) {
          const auto j = static_cast<std::size_t>(std::llround(inverse_local_time(L, s) / p.dt));
          e[i * S + k] = std::exp(-occ[j]);
        } else {
          // Censored: the atom at 0 still collects the missing local time exactly.
          e[i * S + k] = std::exp(-occ.back() - c0 * (s - L.final_value()));
          censored[i * S + k] = 1;
        }
      }
    });
    std::vector<double> ls;
    for (std::size_t k = 0; k < S; ++k) {
      const double mean = column(e, S, k).mean;
      if (!(mean > 0.0)) throw FitError("E_0[E_tau_s] vanished; cannot fit K_V");
      ls.push_back(std::log(mean));
    }
    const auto fit = linear_fit(opts.s_grid, ls);
    out.K_V = -fit.slope;
    out.K_fit_r2 = fit.r2;
    if (fit.r2 < 0.99) throw FitError("K_V fit is not exponential (R^2 = " + fmt17(fit.r2) + ")");
    if (!(out.K_V > 0.0)) throw FitError("K_V fit gave a non-positive rate");
  }

  SimConfig cp = cfg;
  cp.horizon = opts.phi_horizon;
  cp.n_paths = opts.phi_paths;
  cp.validate();
  HPathOptions ho = opts.hpath;
  ho.eps_scale = opts.eps_scale;
  const std::size_t total = cp.n_steps() + 1;

  // P+_x[E_H], normalised by the ensemble's own P+_x[1]. The band biases the
  // raw weights (killing too early, meanders starting off 0) by a common factor.
  auto hpath_energy = [&](double x, bool skip_anchor) {
    std::vector<double> num(cp.n_paths, 0.0), den(cp.n_paths, 0.0);
    std::size_t survivors = 0;
    std::mutex mu;
    for_each_hpath(m, x, cp.horizon, cp, ho, [&](std::size_t i, const PathGrid& p, double w) {
      const auto occ = occupation_curve(p, V, eps);
      const double start = skip_anchor ? occ[1] : 0.0;
      num[i] = w * std::exp(-(occ.back() - start));
      den[i] = w;
      std::lock_guard<std::mutex> lock(mu);
      ++survivors;
    });
    if (survivors == 0) throw SamplingError("all h-path attempts from " + fmt17(x) + " were absorbed", cp.n_paths);
    return ratio_se(num, den);
  };

  // The anchor sample of a meander belongs to the zero set that precedes it.
  const auto dag0 = hpath_energy(0.0, true);
  out.C_V = dag0.mean / out.K_V;
  out.C_V_stderr = dag0.se / out.K_V;

  const StableStepper step(m.alpha(), cp.dt);
  const std::uint64_t seed = domain_seed(cfg.seed, Domain::aux);
  for (std::size_t g = 0; g < x_grid.size(); ++g) {
    const double x = x_grid[g];
    MeanSE d1{0.0, 0.0, 0};
    if (x != 0.0) d1 = hpath_energy(x, false);
    // P_x[E_{T_0}] with the horizon as a censoring proxy.
    std::vector<double> e2(cp.n_paths, 1.0);
    if (std::abs(x) > eps) {
      parallel_for(cp.n_paths, workers, [&](std::size_t i) {
        StreamRng rng(seed, stream_id(1, g, i));
        double y = x, acc = 0.0;
        for (std::size_t k = 1; k < total; ++k) {
          acc += occupation_rate(V, y, eps) * cp.dt;
          y += step(rng);
          if (std::abs(y) <= eps) break;
        }
        e2[i] = std::exp(-acc);
      });
    }
    const auto d2 = mean_se(e2);
    const double p1 = x == 0.0 ? 0.0 : m.h(x) * d1.mean;
    const double p2 = out.C_V * d2.mean;
    out.x_grid.push_back(x);
    out.phi1.push_back(p1);
    out.phi2.push_back(p2);
    out.phi.push_back(p1 + p2);
    const double se1 = x == 0.0 ? 0.0 : m.h(x) * d1.se;
    out.stderr.push_back(std::sqrt(se1 * se1 + std::pow(out.C_V * d2.se, 2) + std::pow(d2.mean * out.C_V_stderr, 2)));

    double resid = std::numeric_limits<double>::quiet_NaN();
    if (opts.direct_t > 0.0) {
      SimConfig cd = cp;
      cd.horizon = opts.direct_t;
      const std::size_t nd = cd.n_steps();
      std::vector<double> e3(cd.n_paths);
      parallel_for(cd.n_paths, workers, [&](std::size_t i) {
        StreamRng rng(seed, stream_id(2, g, i));
        double y = x, acc = 0.0;
        for (std::size_t k = 0; k < nd; ++k) {
          acc += occupation_rate(V, y, eps) * cd.dt;
          y += step(rng);
        }
        e3[i] = std::exp(-acc);
      });
      resid = mean_se(e3).mean / excursion_tail(m, opts.direct_t) - (p1 + p2);
    }
    out.residual.push_back(resid);
  }
  return out;
}

double visited_range(const AlphaModel& m, double x, const std::vector<double>& t_grid, const SimConfig& cfg) {
  check_grid(t_grid, "t_grid", true);
  SimConfig c = cfg;
  c.horizon = std::max(t_grid.back(), cfg.dt);
  std::vector<double> top(c.n_paths, 0.0);
  for_each_path(m, x, c, [&](std::size_t i, const PathGrid& p) {
    for (double t : t_grid) top[i] = std::max(top[i], std::abs(p.value_at(t)));
  });
  return *std::max_element(top.begin(), top.end());
}

VerificationReport fk_martingale_check(const AlphaModel& m, const MeasureSpec& V, double x,
                                       const std::vector<double>& t_grid, const FKConstants& consts,
                                       const SimConfig& cfg, const FkMartingaleOptions& opts) {
  check_grid(t_grid, "t_grid", true);
  V.validate(m.alpha());
  SimConfig c = cfg;
  c.horizon = std::max(t_grid.back(), cfg.dt);
  c.validate();
  const double eps = band_width(m, c.dt, opts.eps_scale);
  const std::size_t T = t_grid.size();
  // Per path and t: full value, then the T_0 = inf and T_0 < inf parts.
  std::vector<double> vals(c.n_paths * T), part1(c.n_paths * T), part2(c.n_paths * T);
  for_each_path(m, x, c, [&](std::size_t i, const PathGrid& p) {
    const auto occ = occupation_curve(p, V, eps);
    std::size_t hit = p.size();
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (std::abs(p.values[k]) <= eps) {
        hit = k;
        break;
      }
    }
    for (std::size_t k = 0; k < T; ++k) {
      const std::size_t idx = p.index_at(t_grid[k]);
      const double y = p.values[idx];
      const double e = std::exp(-occ[idx]);
      const double f1 = consts.phi1_at(m, y), f2 = consts.phi2_at(y);
      const bool alive = hit > idx;
      vals[i * T + k] = (f1 + f2) * e;
      part1[i * T + k] = alive ? f1 * e : 0.0;
      part2[i * T + k] = (alive ? 0.0 : f1 * e) + f2 * e;
    }
  });
  VerificationReport r;
  r.test_name = "fk-martingale";
  r.meta = base_meta(m, c);
  r.meta["x"] = x;
  r.meta["K_V"] = consts.K_V;
  r.meta["C_V"] = consts.C_V;
  r.target = consts.phi_at(m, x);
  r.tolerance = opts.tolerance;
  Json rows = Json::array();
  std::vector<double> est;
  double worst = -1.0, decomposition = 0.0;
  for (std::size_t k = 0; k < T; ++k) {
    const auto a = column(vals, T, k), b = column(part1, T, k), d = column(part2, T, k);
    est.push_back(a.mean);
    decomposition = std::max(decomposition, std::abs(b.mean + d.mean - a.mean));
    rows.push_back({{"t", t_grid[k]},
                    {"estimate", a.mean},
                    {"mc_error", a.se},
                    {"part_no_return", b.mean},
                    {"part_return", d.mean}});
    if (std::abs(a.mean - r.target) > worst) {
      worst = std::abs(a.mean - r.target);
      r.estimate = a.mean;
      r.mc_error = a.se;
    }
  }
  const double pse = T > 1 ? paired_se(vals, T, 0, T - 1) : 0.0;
  r.meta["rows"] = rows;
  r.meta["trend_paired_se"] = pse;
  r.meta["conditions"] = {{"no_monotone_trend", !monotone_trend(est, pse)},
                          {"decomposition_adds_up", decomposition <= 1e-9 * std::max(1.0, std::abs(r.target))}};
  r.settle();
  return r;
}

void write_fk_csv(std::ostream& os, const FKConstants& c) {
  write_csv_row(os, {"x", "phi1", "phi2", "phi", "stderr"});
  for (std::size_t k = 0; k < c.x_grid.size(); ++k) {
    write_csv_row(os, {fmt17(c.x_grid[k]), fmt17(c.phi1[k]), fmt17(c.phi2[k]), fmt17(c.phi[k]), fmt17(c.stderr[k])});
  }
}

// ---------------------------------------------------------------------------

VerificationReport meander_convergence_check(const AlphaModel& m, double s, const std::vector<double>& t_grid,
                                             const SimConfig& cfg, const MeanderCheckOptions& opts) {
  check_grid(t_grid, "t_grid", false);
  if (!(s >= 0.0) || !(s < t_grid.front())) throw ConfigError("s must satisfy 0 <= s < min(t_grid)");
  if (t_grid.front() < 10.0 * cfg.dt) throw ConfigError("meander length must be at least 10 dt");
  const std::size_t N = opts.samples_per_side;
  if (N < 2) throw ConfigError("need at least two samples per side");
  const double eps = band_width(m, cfg.dt, opts.eps_scale);
  HarvestOptions ho = opts.harvest;
  ho.eps_scale = opts.eps_scale;
  if (ho.run_horizon <= 0.0) ho.run_horizon = 4.0 * t_grid.back();
  const std::size_t si = static_cast<std::size_t>(std::llround(s / cfg.dt));

  auto energy = [&](const PathGrid& p) {
    if (!opts.weight) return 1.0;
    const auto occ = occupation_curve(p, *opts.weight, eps);
    return std::exp(-(occ[si] - (si > 0 ? occ[1] : 0.0)));
  };

  // P+_0 side: meanders of length s weighted by n(R > s) h(X_s).
  std::vector<double> dag_x(N), dag_w(N);
  {
    const double len = s > 0.0 ? s : 10.0 * cfg.dt;
    const double tail = excursion_tail(m, len);
    harvest_meanders(m, len, N, cfg, ho, [&](std::size_t i, const PathGrid& p) {
      dag_x[i] = p.values[si];
      dag_w[i] = (s > 0.0 ? tail * m.h(dag_x[i]) : 1.0) * energy(p);
    });
  }
  const double dag_mass = std::accumulate(dag_w.begin(), dag_w.end(), 0.0) / static_cast<double>(N);

  VerificationReport r;
  r.test_name = "meander";
  r.meta = base_meta(m, cfg);
  r.meta["stochastic"] = false;
  r.meta["s"] = s;
  r.meta["samples_per_side"] = N;
  r.meta["eps0"] = eps;
  r.meta["hpath_mean_weight"] = dag_mass;
  if (opts.weight) r.meta["weight"] = opts.weight->name;
  std::unique_ptr<HittingRatioTable> Y;
  if (opts.identity_rows && s > 0.0) Y = std::make_unique<HittingRatioTable>(m);

  Json rows = Json::array();
  std::vector<double> ks;
  for (double t : t_grid) {
    std::vector<double> mx(N), mw(N);
    harvest_meanders(m, t, N, cfg, ho, [&](std::size_t i, const PathGrid& p) {
      mx[i] = p.values[si];
      mw[i] = energy(p);
    });
    const double d = ks_two_sample(mx, mw, dag_x, dag_w);
    ks.push_back(d);
    Json row = {{"t", t}, {"ks", d}};
    if (Y) {
      std::vector<double> terms(N);
      const double factor = std::pow(1.0 - s / t, 1.0 / m.alpha() - 1.0);
      for (std::size_t i = 0; i < N; ++i) terms[i] = dag_w[i] * (*Y)(t - s, dag_x[i]) * factor;
      const auto id = mean_se(terms);
      row["identity"] = id.mean;
      row["identity_se"] = id.se;
    }
    if (m.gaussian() && s > 0.0 && !opts.weight) {
      // Closed-form P+_0 marginal at alpha = 2: density x^2 exp(-x^2/4s) / (4 sqrt(pi) s^1.5).
      auto cdf = [s](double x) {
        const double a = std::abs(x) / (2.0 * std::sqrt(s));
        const double half = std::erf(a) - 2.0 * a * std::exp(-a * a) / std::sqrt(std::numbers::pi);
        return x >= 0.0 ? 0.5 + 0.5 * half : 0.5 - 0.5 * half;
      };
      row["ks_vs_closed_form"] = ks_one_sample(mx, cdf);
    }
    rows.push_back(row);
  }
  r.meta["rows"] = rows;
  r.meta["conditions"] = {{"ks_decreasing", strictly_decreasing(ks)}};
  r.estimate = ks.back();
  r.mc_error = 0.0;
  r.target = 0.0;
  r.tolerance = opts.tolerance;
  r.settle();
  return r;
}

VerificationReport excursion_lt_check(const AlphaModel& m, double x, const SimConfig& cfg,
                                      const ExcursionLtOptions& opts) {
  if (x == 0.0) throw ConfigError("excursion local time check needs x != 0");
  cfg.validate();
  const double eps = band_width(m, cfg.dt, opts.eps_scale);
  const std::size_t n = cfg.n_paths;

  // Excursion side: sum of L(R, x) over excursions against L(H, 0); the
  // straddling excursion is completed by the killed Green function.
  std::vector<double> a(n), b(n);
  std::vector<unsigned char> visited(n, 0);
  for_each_path(m, 0.0, cfg, [&](std::size_t i, const PathGrid& p) {
    const auto Lx = local_time_curve(p, x, eps);
    const auto L0 = local_time_curve(p, 0.0, eps);
    const double y = p.values.back();
    a[i] = Lx.final_value() + (std::abs(y) > eps ? killed_green(m, y, x) : 0.0);
    b[i] = L0.final_value();
    visited[i] = Lx.final_value() > 0.0 || std::abs(p.values.back() - x) <= eps;
  });
  const bool any = std::any_of(visited.begin(), visited.end(), [](unsigned char v) { return v != 0; });

  VerificationReport r;
  r.test_name = "excursion-lt";
  r.meta = base_meta(m, cfg);
  r.meta["x"] = x;
  r.meta["horizon"] = cfg.horizon;
  r.meta["eps"] = eps;
  r.target = 1.0;
  r.tolerance = opts.tolerance;
  if (!any) {
    r.estimate = 0.0;
    r.mc_error = 0.0;
    r.meta["insufficient_visits"] = true;
    r.meta["conditions"] = {{"visits", false}};
    r.settle();
    return r;
  }
  const auto ex = ratio_se(a, b);

  // h-path side: weighted L(H, x) plus the expected remainder G(y, x) h(x) / h(y).
  std::vector<double> c(n, 0.0);
  HPathOptions ho = opts.hpath;
  ho.eps_scale = opts.eps_scale;
  const double hx = m.h(x);
  for_each_hpath(m, 0.0, cfg.horizon, cfg, ho, [&](std::size_t i, const PathGrid& p, double w) {
    const auto Lx = local_time_curve(p, x, eps);
    const double y = p.values.back();
    c[i] = w * (Lx.final_value() + killed_green(m, y, x) * hx / m.h(y));
  });
  const auto hp = mean_se(c);

  const bool hp_ok = std::abs(hp.mean - hx) <= opts.hpath_tolerance * hx + hp.se;
  r.meta["insufficient_visits"] = false;
  r.meta["rows"] = Json::array({
      {{"name", "excursion_normalised"}, {"estimate", ex.mean}, {"mc_error", ex.se}, {"target", 1.0},
       {"tolerance", opts.tolerance}},
      {{"name", "hpath_local_time"}, {"estimate", hp.mean}, {"mc_error", hp.se}, {"target", hx},
       {"tolerance", opts.hpath_tolerance * hx}},
  });
  r.meta["conditions"] = {{"hpath_row_within", hp_ok}};
  r.estimate = ex.mean;
  r.mc_error = ex.se;
  r.settle();
  return r;
}

}  // namespace penalab
