#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "penalab/analytic.hpp"
#include "penalab/rng.hpp"

namespace penalab {

// Values on the uniform grid k * dt, k = 0 .. size() - 1.
struct PathGrid {
  double dt = 0.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double horizon() const { return dt * static_cast<double>(size() - 1); }
  double time(std::size_t k) const { return dt * static_cast<double>(k); }
  // Largest k with k * dt <= t (grid times within 1e-9 dt count as equal).
  std::size_t index_at(double t) const;
  double value_at(double t) const { return values[index_at(t)]; }
  // Every `factor`-th sample; a coarser path on the same randomness.
  PathGrid subsample(std::size_t factor) const;
  void validate() const;
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  // Upper bound on worker threads (0: hardware). Streams are keyed by path
  // index, so this never changes results.
  std::size_t n_streams = 0;

  void validate() const;
  std::size_t n_steps() const;
};

// Chambers-Mallows-Stuck increments with E exp(i l X) = exp(-dt |l|^alpha).
class StableStepper {
 public:
  StableStepper(double alpha, double dt);
  double operator()(StreamRng& rng) const;
  double dt() const { return dt_; }

 private:
  double alpha_, dt_, scale_;
};

double stable_increment(const AlphaModel& m, double dt, StreamRng& rng);

// Zero band half-width scale * dt^(1/alpha).
double band_width(const AlphaModel& m, double dt, double scale = 3.0);

// Stream domains; each sampler draws from its own family of streams.
enum class Domain : std::uint64_t { plain = 0, harvest = 1, continuation = 2, bridge = 3, killed = 4, aux = 5 };
std::uint64_t domain_seed(std::uint64_t seed, Domain d);

void simulate_into(const StableStepper& step, double x0, std::size_t n_steps, StreamRng& rng,
                   std::vector<double>& out);

PathGrid sample_path(const AlphaModel& m, double x0, const SimConfig& cfg, StreamRng& rng);
// Path number `path_index` of the run described by cfg.
PathGrid sample_path(const AlphaModel& m, double x0, const SimConfig& cfg, std::size_t path_index);

// Visits cfg.n_paths plain paths from x0 in parallel.
void for_each_path(const AlphaModel& m, double x0, const SimConfig& cfg,
                   const std::function<void(std::size_t, const PathGrid&)>& visit);

struct BridgeOptions {
  double delta_scale = 3.0;
  std::size_t max_attempts = 200000;
};

// Rejection bridge from 0 to 0 over [0, u]: accept when |X_u| <= delta,
// then clamp the endpoint to 0.
PathGrid sample_bridge(const AlphaModel& m, double u, const SimConfig& cfg, StreamRng& rng,
                       const BridgeOptions& opts = {});

struct HarvestOptions {
  double eps_scale = 3.0;
  // Length of each P_0 run scanned for long excursions (0: 4 t).
  double run_horizon = 0.0;
  std::size_t max_runs = 4'000'000;
  std::size_t batch = 64;
};

// Cuts the first t of every excursion longer than t out of P_0 runs until
// `count` meanders are found. visit(i, path) may run concurrently for
// distinct i. Returns the number of runs used.
std::size_t harvest_meanders(const AlphaModel& m, double t, std::size_t count, const SimConfig& cfg,
                             const HarvestOptions& opts,
                             const std::function<void(std::size_t, const PathGrid&)>& visit);

std::vector<PathGrid> sample_meanders(const AlphaModel& m, double t, std::size_t count,
                                      const SimConfig& cfg, const HarvestOptions& opts = {});

struct WeightedEnsemble {
  std::vector<PathGrid> paths;
  std::vector<double> weights;
  // Number of attempts, killed ones included; expectations divide by it.
  std::size_t attempts = 0;

  void validate() const;
  double expectation(const std::function<double(const PathGrid&)>& f) const;
  double mean_weight() const;
};

struct HPathOptions {
  double eps_scale = 3.0;
  // From 0: meander up to min(t, meander_length), then a killed continuation.
  double meander_length = 1.0;
  HarvestOptions harvest{};
};

// Streams cfg.n_paths attempts of the h-transformed process on [0, t];
// survivors are visited with their weight. Returns the attempt count.
std::size_t for_each_hpath(const AlphaModel& m, double x, double t, const SimConfig& cfg,
                           const HPathOptions& opts,
                           const std::function<void(std::size_t, const PathGrid&, double)>& visit);

WeightedEnsemble sample_hpath(const AlphaModel& m, double x, double t, const SimConfig& cfg,
                              const HPathOptions& opts = {});

void write_path_csv(std::ostream& os, const PathGrid& path);
void write_paths_csv(std::ostream& os, const std::vector<PathGrid>& paths);
void write_ensemble_csv(std::ostream& os, const WeightedEnsemble& ens);

}  // namespace penalab
