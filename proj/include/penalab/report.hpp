#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace penalab {

using Json = nlohmann::ordered_json;

struct VerificationReport {
  std::string test_name;
  double estimate = 0.0;
  double mc_error = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  // alpha, dt, n_paths, seed, "stochastic", "conditions", tables under "rows".
  Json meta = Json::object();

  bool stochastic() const;
  bool within_tolerance() const;
  // pass = within_tolerance() and every entry of meta["conditions"] holds.
  void settle();

  bool operator==(const VerificationReport& o) const;
};

std::string toolkit_version();
std::string iso8601_now();

Json report_to_json(const VerificationReport& r, const std::string& timestamp);
VerificationReport report_from_json(const Json& j);

// Writes a JSON array; throws IoError when the path is unwritable.
void emit_report(const std::vector<VerificationReport>& reports, const std::string& path);
std::vector<VerificationReport> read_reports(const std::string& path);

// Summary object with "overall_pass" and every report in file order.
Json merge_reports(const std::vector<std::string>& paths);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace penalab
