#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "penalab/analytic.hpp"
#include "penalab/report.hpp"
#include "penalab/sampling.hpp"

namespace penalab {

struct RunConfig {
  double alpha = 1.5;
  double dt = 1e-4;
  double horizon = 1.0;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  double eps_scale = 3.0;
  // Zero band multiplier for last-exit times.
  double zero_band_scale = 1.0;
  double quad_abs_tol = 1e-10;
  std::string out_dir = ".";

  void validate() const;
  SimConfig sim() const;
  QuadratureConfig quad() const;
};

// Flat key=value lines; '#' starts a comment. Unknown keys are a ConfigError.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});

const std::vector<std::string>& suite_names();

// One suite under cfg. Numeric failures come back as failed reports.
std::vector<VerificationReport> run_suite(const std::string& suite, const RunConfig& cfg);

// Rows of the `analytic` table as (name, value).
std::vector<std::pair<std::string, double>> analytic_table(const RunConfig& cfg);

// argv excludes the program name. 0: all checks pass, 1: a check failed,
// 2: usage or configuration error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace penalab
