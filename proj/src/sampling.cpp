#include "penalab/sampling.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>

#include "penalab/errors.hpp"
#include "penalab/io.hpp"
#include "penalab/parallel.hpp"

namespace penalab {

std::size_t PathGrid::index_at(double t) const {
  if (values.empty()) throw RangeError("empty path");
  if (t <= 0.0) return 0;
  const double k = std::floor(t / dt + 1e-9);
  return std::min(static_cast<std::size_t>(k), size() - 1);
}

PathGrid PathGrid::subsample(std::size_t factor) const {
  if (factor == 0) throw ConfigError("subsample factor must be positive");
  PathGrid out;
  out.dt = dt * static_cast<double>(factor);
  for (std::size_t k = 0; k < size(); k += factor) out.values.push_back(values[k]);
  return out;
}

void PathGrid::validate() const {
  if (!(dt > 0.0)) throw ConfigError("path dt must be positive");
  if (values.size() < 2) throw ConfigError("path needs at least two grid points");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("path contains a non-finite value");
  }
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (horizon / dt > 1e8) throw ConfigError("horizon / dt exceeds 1e8 steps");
  if (n_paths < 1) throw ConfigError("n_paths must be at least 1");
}

std::size_t SimConfig::n_steps() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(horizon / dt)));
}

StableStepper::StableStepper(double alpha, double dt)
    : alpha_(alpha), dt_(dt), scale_(std::pow(dt, 1.0 / alpha)) {
  if (!(dt > 0.0)) throw ConfigError("increment dt must be positive");
}

double StableStepper::operator()(StreamRng& rng) const {
  const double v = std::numbers::pi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  if (alpha_ == 2.0) return scale_ * 2.0 * std::sin(v) * std::sqrt(w);
  const double a = alpha_;
  const double x = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
                   std::pow(std::cos((1.0 - a) * v) / w, (1.0 - a) / a);
  return scale_ * x;
}

double stable_increment(const AlphaModel& m, double dt, StreamRng& rng) {
  return StableStepper(m.alpha(), dt)(rng);
}

double band_width(const AlphaModel& m, double dt, double scale) {
  if (!(scale > 0.0)) throw ConfigError("band scale must be positive");
  return scale * std::pow(dt, 1.0 / m.alpha());
}

std::uint64_t domain_seed(std::uint64_t seed, Domain d) {
  return d == Domain::plain ? seed : derive_seed(seed, static_cast<std::uint64_t>(d));
}

void simulate_into(const StableStepper& step, double x0, std::size_t n_steps, StreamRng& rng,
                   std::vector<double>& out) {
  out.resize(n_steps + 1);
  double x = x0;
  out[0] = x;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    x += step(rng);
    out[k] = x;
  }
}

PathGrid sample_path(const AlphaModel& m, double x0, const SimConfig& cfg, StreamRng& rng) {
  cfg.validate();
  PathGrid p;
  p.dt = cfg.dt;
  simulate_into(StableStepper(m.alpha(), cfg.dt), x0, cfg.n_steps(), rng, p.values);
  return p;
}

PathGrid sample_path(const AlphaModel& m, double x0, const SimConfig& cfg, std::size_t path_index) {
  StreamRng rng(cfg.seed, path_index);
  return sample_path(m, x0, cfg, rng);
}

void for_each_path(const AlphaModel& m, double x0, const SimConfig& cfg,
                   const std::function<void(std::size_t, const PathGrid&)>& visit) {
  cfg.validate();
  const StableStepper step(m.alpha(), cfg.dt);
  const std::size_t n = cfg.n_steps();
  parallel_for(cfg.n_paths, worker_count(cfg.n_streams), [&](std::size_t i) {
    StreamRng rng(cfg.seed, i);
    PathGrid p;
    p.dt = cfg.dt;
    simulate_into(step, x0, n, rng, p.values);
    visit(i, p);
  });
}

PathGrid sample_bridge(const AlphaModel& m, double u, const SimConfig& cfg, StreamRng& rng,
                       const BridgeOptions& opts) {
  if (!(u > 0.0)) throw ConfigError("bridge length must be positive");
  SimConfig c = cfg;
  c.horizon = u;
  c.validate();
  const double delta = band_width(m, cfg.dt, opts.delta_scale);
  const StableStepper step(m.alpha(), cfg.dt);
  PathGrid p;
  p.dt = cfg.dt;
  for (std::size_t attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    simulate_into(step, 0.0, c.n_steps(), rng, p.values);
    if (std::abs(p.values.back()) <= delta) {
      p.values.back() = 0.0;
      return p;
    }
  }
  throw SamplingError("bridge acceptance rate too low", opts.max_attempts);
}

std::size_t harvest_meanders(const AlphaModel& m, double t, std::size_t count, const SimConfig& cfg,
                             const HarvestOptions& opts,
                             const std::function<void(std::size_t, const PathGrid&)>& visit) {
  if (!(t > 0.0)) throw ConfigError("meander length must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  const double H = opts.run_horizon > 0.0 ? opts.run_horizon : 4.0 * t;
  if (H < t) throw ConfigError("harvest run horizon shorter than the meander");
  const std::size_t msteps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / cfg.dt)));
  const std::size_t nsteps = static_cast<std::size_t>(std::llround(H / cfg.dt));
  const double eps0 = band_width(m, cfg.dt, opts.eps_scale);
  const StableStepper step(m.alpha(), cfg.dt);
  const std::uint64_t seed = domain_seed(cfg.seed, Domain::harvest);
  const std::size_t workers = worker_count(cfg.n_streams);
  const std::size_t batch = std::max<std::size_t>(1, opts.batch);

  std::size_t found = 0;
  std::size_t runs = 0;
  std::vector<std::vector<PathGrid>> per_run(batch);
  while (found < count) {
    if (runs >= opts.max_runs) throw SamplingError("meander harvest found too few long excursions", runs);
    parallel_for(batch, workers, [&](std::size_t b) {
      StreamRng rng(seed, runs + b);
      std::vector<double> xs;
      simulate_into(step, 0.0, nsteps, rng, xs);
      auto& out = per_run[b];
      out.clear();
      std::size_t last_in = 0;
      auto take = [&](std::size_t a) {
        PathGrid p;
        p.dt = cfg.dt;
        p.values.assign(xs.begin() + static_cast<long>(a), xs.begin() + static_cast<long>(a + msteps + 1));
        out.push_back(std::move(p));
      };
      for (std::size_t j = 1; j <= nsteps; ++j) {
        if (std::abs(xs[j]) <= eps0) {
          if (j - last_in - 1 >= msteps) take(last_in);
          last_in = j;
        }
      }
      if (nsteps - last_in >= msteps) take(last_in);
    });
    runs += batch;
    std::vector<const PathGrid*> ready;
    for (auto& list : per_run) {
      for (auto& p : list) {
        if (found + ready.size() < count) ready.push_back(&p);
      }
    }
    const std::size_t base = found;
    parallel_for(ready.size(), workers, [&](std::size_t i) { visit(base + i, *ready[i]); });
    found += ready.size();
  }
  return runs;
}

std::vector<PathGrid> sample_meanders(const AlphaModel& m, double t, std::size_t count,
                                      const SimConfig& cfg, const HarvestOptions& opts) {
  std::vector<PathGrid> out(count);
  harvest_meanders(m, t, count, cfg, opts, [&](std::size_t i, const PathGrid& p) { out[i] = p; });
  return out;
}

void WeightedEnsemble::validate() const {
  if (paths.size() != weights.size()) throw ConfigError("ensemble paths and weights differ in length");
  if (attempts < paths.size()) throw ConfigError("ensemble attempt count below path count");
  bool any = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("ensemble weights must be finite and non-negative");
    any = any || w > 0.0;
  }
  if (!any) throw SamplingError("all ensemble paths were absorbed", attempts);
}

double WeightedEnsemble::expectation(const std::function<double(const PathGrid&)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) s += weights[i] * f(paths[i]);
  return s / static_cast<double>(attempts);
}

double WeightedEnsemble::mean_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s / static_cast<double>(attempts);
}

namespace {

// Continues `path` from its last value until it enters the zero band or
// reaches `total` points. Returns false when killed.
bool continue_killed(const StableStepper& step, std::size_t total, double eps0, StreamRng& rng,
                     std::vector<double>& path) {
  double x = path.back();
  path.reserve(total);
  while (path.size() < total) {
    x += step(rng);
    path.push_back(x);
    if (std::abs(x) <= eps0) return false;
  }
  return true;
}

}  // namespace

std::size_t for_each_hpath(const AlphaModel& m, double x, double t, const SimConfig& cfg,
                           const HPathOptions& opts,
                           const std::function<void(std::size_t, const PathGrid&, double)>& visit) {
  if (!(t > 0.0)) throw ConfigError("h-path horizon must be positive");
  SimConfig c = cfg;
  c.horizon = t;
  c.validate();
  const std::size_t total = c.n_steps() + 1;
  const double eps0 = band_width(m, cfg.dt, opts.eps_scale);
  const StableStepper step(m.alpha(), cfg.dt);
  const std::size_t workers = worker_count(cfg.n_streams);

  if (x == 0.0) {
    const double s0 = std::min(t, opts.meander_length);
    const double tail = excursion_tail(m, s0);
    const std::uint64_t seed = domain_seed(cfg.seed, Domain::continuation);
    HarvestOptions ho = opts.harvest;
    ho.eps_scale = opts.eps_scale;
    harvest_meanders(m, s0, cfg.n_paths, c, ho, [&](std::size_t i, const PathGrid& meander) {
      PathGrid p = meander;
      if (p.values.size() < total) {
        StreamRng rng(seed, i);
        if (!continue_killed(step, total, eps0, rng, p.values)) return;
      }
      p.values.resize(total);
      visit(i, p, tail * m.h(p.values.back()));
    });
    return cfg.n_paths;
  }

  const double hx = m.h(x);
  const std::uint64_t seed = domain_seed(cfg.seed, Domain::killed);
  parallel_for(cfg.n_paths, workers, [&](std::size_t i) {
    StreamRng rng(seed, i);
    PathGrid p;
    p.dt = cfg.dt;
    p.values.push_back(x);
    if (std::abs(x) <= eps0) return;
    if (!continue_killed(step, total, eps0, rng, p.values)) return;
    visit(i, p, m.h(p.values.back()) / hx);
  });
  return cfg.n_paths;
}

WeightedEnsemble sample_hpath(const AlphaModel& m, double x, double t, const SimConfig& cfg,
                              const HPathOptions& opts) {
  std::vector<std::optional<std::pair<PathGrid, double>>> slots(cfg.n_paths);
  const std::size_t attempts = for_each_hpath(m, x, t, cfg, opts, [&](std::size_t i, const PathGrid& p, double w) {
    slots[i].emplace(p, w);
  });
  WeightedEnsemble ens;
  ens.attempts = attempts;
  for (auto& s : slots) {
    if (!s) continue;
    ens.paths.push_back(std::move(s->first));
    ens.weights.push_back(s->second);
  }
  ens.validate();
  return ens;
}

void write_path_csv(std::ostream& os, const PathGrid& path) {
  write_csv_row(os, {"t", "x"});
  for (std::size_t k = 0; k < path.size(); ++k) write_csv_row(os, {fmt17(path.time(k)), fmt17(path.values[k])});
}

void write_paths_csv(std::ostream& os, const std::vector<PathGrid>& paths) {
  write_csv_row(os, {"t", "x"});
  for (const auto& p : paths) {
    for (std::size_t k = 0; k < p.size(); ++k) write_csv_row(os, {fmt17(p.time(k)), fmt17(p.values[k])});
  }
}

void write_ensemble_csv(std::ostream& os, const WeightedEnsemble& ens) {
  write_csv_row(os, {"t", "x", "weight"});
  for (std::size_t i = 0; i < ens.paths.size(); ++i) {
    const auto& p = ens.paths[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      write_csv_row(os, {fmt17(p.time(k)), fmt17(p.values[k]), k == 0 ? fmt17(ens.weights[i]) : ""});
    }
  }
}

}  // namespace penalab
