#include "penalab/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>

#include "penalab/io.hpp"

namespace penalab {

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << fields[i];
  }
  os << '\n';
}

bool VerificationReport::stochastic() const {
  return meta.is_object() && meta.contains("stochastic") && meta["stochastic"].is_boolean() &&
         meta["stochastic"].get<bool>();
}

bool VerificationReport::within_tolerance() const {
  if (!std::isfinite(estimate)) return false;
  const double slack = stochastic() ? mc_error : 0.0;
  return std::abs(estimate - target) <= tolerance + slack;
}

void VerificationReport::settle() {
  bool ok = within_tolerance();
  if (meta.contains("conditions")) {
    for (const auto& [name, value] : meta["conditions"].items()) ok = ok && value.get<bool>();
  }
  pass = ok;
}

bool VerificationReport::operator==(const VerificationReport& o) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  return test_name == o.test_name && same(estimate, o.estimate) && same(mc_error, o.mc_error) &&
         same(target, o.target) && same(tolerance, o.tolerance) && pass == o.pass && meta == o.meta;
}

std::string toolkit_version() { return PENALAB_VERSION; }

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double read_number(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

Json report_to_json(const VerificationReport& r, const std::string& timestamp) {
  Json j = Json::object();
  j["test_name"] = r.test_name;
  j["estimate"] = number(r.estimate);
  j["mc_error"] = number(r.mc_error);
  j["target"] = number(r.target);
  j["tolerance"] = number(r.tolerance);
  j["pass"] = r.pass;
  j["meta"] = r.meta;
  j["timestamp"] = timestamp;
  j["version"] = toolkit_version();
  return j;
}

VerificationReport report_from_json(const Json& j) {
  VerificationReport r;
  r.test_name = j.at("test_name").get<std::string>();
  r.estimate = read_number(j.at("estimate"));
  r.mc_error = read_number(j.at("mc_error"));
  r.target = read_number(j.at("target"));
  r.tolerance = read_number(j.at("tolerance"));
  r.pass = j.at("pass").get<bool>();
  r.meta = j.at("meta");
  return r;
}

void emit_report(const std::vector<VerificationReport>& reports, const std::string& path) {
  if (reports.empty()) throw std::invalid_argument("emit_report needs at least one report");
  const std::string stamp = iso8601_now();
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r, stamp));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report to " + path);
  out << arr.dump(2) << '\n';
  if (!out) throw IoError("failed writing report to " + path);
}

std::vector<VerificationReport> read_reports(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read report " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError("malformed report " + path + ": " + e.what());
  }
  std::vector<VerificationReport> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(report_from_json(item));
  } else if (j.is_object() && j.contains("reports")) {
    for (const auto& item : j["reports"]) out.push_back(report_from_json(item));
  } else {
    throw IoError("report file " + path + " holds neither an array nor a summary");
  }
  return out;
}

Json merge_reports(const std::vector<std::string>& paths) {
  Json all = Json::array();
  bool overall = true;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read report " + p);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw IoError("malformed report " + p + ": " + e.what());
    }
    const Json& items = j.is_array() ? j : j.at("reports");
    for (const auto& item : items) {
      overall = overall && item.at("pass").get<bool>();
      all.push_back(item);
    }
  }
  Json summary = Json::object();
  summary["overall_pass"] = overall;
  summary["n_reports"] = all.size();
  summary["timestamp"] = iso8601_now();
  summary["version"] = toolkit_version();
  summary["reports"] = all;
  return summary;
}

}  // namespace penalab
