#include "penalab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "penalab/errors.hpp"
#include "penalab/io.hpp"
#include "penalab/penalise.hpp"
#include "penalab/quadlemmas.hpp"

namespace penalab {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: " + v);
  }
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config key " + key + ": not an unsigned integer: " + v);
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": out of range: " + v);
  }
}

VerificationReport failed_report(const std::string& name, const RunConfig& cfg, const std::exception& e) {
  VerificationReport r;
  r.test_name = name;
  r.estimate = std::numeric_limits<double>::quiet_NaN();
  r.mc_error = std::numeric_limits<double>::quiet_NaN();
  r.meta = Json::object();
  r.meta["alpha"] = cfg.alpha;
  r.meta["dt"] = cfg.dt;
  r.meta["n_paths"] = cfg.n_paths;
  r.meta["seed"] = cfg.seed;
  r.meta["error"] = e.what();
  r.pass = false;
  return r;
}

PsiFunction unit_indicator() {
  PsiFunction p;
  p.description = "1 on (0, 1)";
  p.eval = [](double u) { return u > 0.0 && u < 1.0 ? 1.0 : 0.0; };
  p.breakpoints = [](double a, double b) {
    return a < 1.0 && 1.0 < b ? std::vector<double>{1.0} : std::vector<double>{};
  };
  p.sup_above = [](double t) { return t < 1.0 ? 1.0 : 0.0; };
  return p;
}

std::vector<VerificationReport> lemma_suite(const RunConfig& cfg) {
  const QuadratureConfig qc = cfg.quad();
  std::vector<VerificationReport> out;
  {
    VerificationReport r;
    r.test_name = "lemma6-closed-form";
    r.estimate = eval_I(unit_indicator(), 2.0, 0.5, qc);
    r.target = 3.0 - 2.0 * std::numbers::sqrt2;
    r.tolerance = 1e-8;
    r.meta["stochastic"] = false;
    r.meta["psi"] = "1 on (0, 1)";
    r.meta["t"] = 2.0;
    r.meta["gamma"] = 0.5;
    r.settle();
    out.push_back(r);
  }
  {
    const double g = 0.5;
    const auto psi = counterexample_psi(g);
    VerificationReport r;
    r.test_name = "lemma6-counterexample";
    r.meta["stochastic"] = false;
    r.meta["gamma"] = g;
    double tail = 0.0;
    r.meta["mass"] = counterexample_mass(g, 100000, &tail);
    r.meta["mass_tail_bound"] = tail;
    Json rows = Json::array();
    int violated = 0;
    for (double n : {5.0, 10.0, 20.0}) {
      const double I = eval_I(psi, n, g, qc);
      const double bound = std::pow(n, 3.0 - 2.0 * g) / g - 1.0 / (n * n);
      violated += I < bound;
      rows.push_back({{"n", n}, {"I", I}, {"lower_bound", bound}});
    }
    r.meta["rows"] = rows;
    // Number of n at which the lower bound fails.
    r.estimate = violated;
    r.target = 0.0;
    r.tolerance = 0.0;
    r.settle();
    out.push_back(r);
  }
  {
    auto r = check_sup_condition(PsiFunction::exponential(1.0), 0.5, default_lemma_grid(), qc);
    r.test_name = "lemma6-sup-exponential";
    out.push_back(r);
  }
  {
    // The counterexample must be rejected; this row passes when it is.
    const auto inner = check_sup_condition(counterexample_psi(0.5), 0.5, {5.0, 10.0, 20.0}, qc);
    VerificationReport r = inner;
    r.test_name = "lemma6-sup-counterexample-rejected";
    r.meta["inner_pass"] = inner.pass;
    r.meta["conditions"] = {{"rejected", !inner.pass}};
    r.estimate = 0.0;
    r.target = 0.0;
    r.tolerance = 0.0;
    r.settle();
    out.push_back(r);
  }
  {
    auto r = check_product_form(PsiFunction::exponential(1.0), PsiFunction::tabulated({0.0, 1.0}, {1.0, 1.0}, "1", true),
                                0.5, default_lemma_grid(), qc);
    r.test_name = "lemma6-product-form";
    out.push_back(r);
  }
  return out;
}

std::vector<VerificationReport> fk_suite(const RunConfig& cfg) {
  const AlphaModel m(cfg.alpha, cfg.quad());
  const SimConfig sim = cfg.sim();
  const auto V = MeasureSpec::dirac(1.0);
  const std::vector<double> t_grid{0.5, 1.0, 2.0};
  FKOptions fo;
  fo.eps_scale = cfg.eps_scale;
  SimConfig fsim = sim;
  fsim.dt = std::max(sim.dt, 1e-3);
  const double reach = visited_range(m, 0.0, t_grid, sim);
  const auto grid = fk_grid(reach * 1.01 + 1e-9, 0.05, 12);
  const auto consts = fk_constants(m, V, grid, fsim, fo);
  {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(std::filesystem::path(cfg.out_dir) / "fk_phi.csv");
    if (!os) throw IoError("cannot write fk_phi.csv");
    write_fk_csv(os, consts);
  }
  std::vector<VerificationReport> out;
  VerificationReport k;
  k.test_name = "fk-constants";
  k.meta = base_meta(m, fsim);
  k.meta["V"] = "dirac(0)";
  k.meta["C_V"] = consts.C_V;
  k.meta["C_V_stderr"] = consts.C_V_stderr;
  k.meta["K_fit_r2"] = consts.K_fit_r2;
  k.meta["phi_0"] = consts.phi_at(m, 0.0);
  k.meta["stochastic"] = false;
  k.estimate = consts.K_V;
  k.target = 1.0;
  k.tolerance = 0.05;
  k.meta["conditions"] = {{"log_fit_r2", consts.K_fit_r2 > 0.99},
                          {"phi_0_within", std::abs(consts.phi_at(m, 0.0) - 1.0) <= 0.1}};
  k.settle();
  out.push_back(k);
  FkMartingaleOptions mo;
  mo.eps_scale = cfg.eps_scale;
  out.push_back(fk_martingale_check(m, V, 0.0, t_grid, consts, sim, mo));
  return out;
}

std::vector<VerificationReport> dispatch(const std::string& suite, const RunConfig& cfg) {
  const AlphaModel m(cfg.alpha, cfg.quad());
  SimConfig sim = cfg.sim();
  if (suite == "lt-martingale") {
    LtOptions o;
    o.eps_scale = cfg.eps_scale;
    return {lt_martingale_check(m, LocalTimeFunction::exponential(1.0), {0.5, 1.0, 2.0}, sim, o)};
  }
  if (suite == "lt-penalisation") {
    LtPenalisationOptions o;
    o.eps_scale = cfg.eps_scale;
    return {lt_penalisation_check(m, LocalTimeFunction::exponential(1.0), 0.5, {2.0, 4.0, 8.0}, sim, o)};
  }
  if (suite == "beta-law") {
    BetaLawOptions o;
    o.eps_scale = cfg.zero_band_scale;
    return {beta_law_check(m, sim, o)};
  }
  if (suite == "fk") return fk_suite(cfg);
  if (suite == "meander") {
    MeanderCheckOptions o;
    o.eps_scale = cfg.eps_scale;
    return {meander_convergence_check(m, 0.5, {2.0, 4.0, 8.0}, sim, o)};
  }
  if (suite == "lemma6") return lemma_suite(cfg);
  if (suite == "excursion-lt") {
    ExcursionLtOptions o;
    o.eps_scale = cfg.eps_scale;
    return {excursion_lt_check(m, 0.5, sim, o)};
  }
  throw ConfigError("unknown suite: " + suite);
}

}  // namespace

void RunConfig::validate() const {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("alpha must lie in (1, 2]");
  if (!(eps_scale > 0.0)) throw ConfigError("eps_scale must be positive");
  if (!(zero_band_scale > 0.0)) throw ConfigError("zero_band_scale must be positive");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  sim().validate();
  quad().validate();
}

SimConfig RunConfig::sim() const {
  SimConfig s;
  s.dt = dt;
  s.horizon = horizon;
  s.n_paths = n_paths;
  s.seed = seed;
  return s;
}

QuadratureConfig RunConfig::quad() const {
  QuadratureConfig q;
  q.abs_tol = quad_abs_tol;
  return q;
}

RunConfig parse_config_text(const std::string& text, RunConfig c) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "alpha") c.alpha = to_real(key, val);
    else if (key == "dt") c.dt = to_real(key, val);
    else if (key == "horizon") c.horizon = to_real(key, val);
    else if (key == "n_paths") c.n_paths = to_unsigned(key, val);
    else if (key == "seed") c.seed = to_unsigned(key, val);
    else if (key == "eps_scale") c.eps_scale = to_real(key, val);
    else if (key == "zero_band_scale") c.zero_band_scale = to_real(key, val);
    else if (key == "quad_abs_tol") c.quad_abs_tol = to_real(key, val);
    else if (key == "out_dir" || key == "out") c.out_dir = val;
    else throw ConfigError("unknown config key: " + key);
  }
  return c;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lt-martingale", "lt-penalisation", "beta-law", "fk",
                                              "meander",       "lemma6",          "excursion-lt"};
  return names;
}

std::vector<VerificationReport> run_suite(const std::string& suite, const RunConfig& cfg) {
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end()) {
    throw ConfigError("unknown suite: " + suite);
  }
  try {
    return dispatch(suite, cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    return {failed_report(suite, cfg, e)};
  }
}

std::vector<std::pair<std::string, double>> analytic_table(const RunConfig& cfg) {
  const AlphaModel m(cfg.alpha, cfg.quad());
  std::vector<std::pair<std::string, double>> rows{
      {"alpha", m.alpha()},
      {"p1_0", m.p1_0()},
      {"u1_0", m.u1_0()},
      {"nR1", m.nR1()},
      {"h1", m.h1()},
      {"h1_gamma_form", m.h1_gamma_form()},
      {"h1_cosine_form", m.h1_cosine_form()},
      {"h(1)", m.h(1.0)},
      {"harmonic_h(1)", harmonic_h(m, 1.0, cfg.quad())},
      {"p_1(0.5)", transition_density(m, 1.0, 0.5, cfg.quad())},
      {"u_1(0.5)", resolvent_density(m, 1.0, 0.5, cfg.quad())},
      {"n(R>2)", excursion_tail(m, 2.0)},
      {"rho(1,1)", entrance_density(m, 1.0, 1.0)},
      {"P_1(T0>1)", hitting_tail(m, 1.0, 1.0)},
      {"Y(1,1)", hitting_ratio(m, 1.0, 1.0)},
  };
  return rows;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo and quadrature checks for penalisations of symmetric stable processes", "penalab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<double> alpha, dt, horizon, eps_scale, zero_band_scale, quad_abs_tol;
  std::optional<std::size_t> n_paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "flat key=value configuration file");
  app.add_option("--alpha", alpha, "stability index in (1, 2]");
  app.add_option("--dt", dt, "grid step");
  app.add_option("--horizon", horizon, "path horizon");
  app.add_option("--n-paths", n_paths, "number of Monte Carlo paths");
  app.add_option("--seed", seed, "64-bit seed");
  app.add_option("--eps-scale", eps_scale, "zero band multiplier");
  app.add_option("--zero-band-scale", zero_band_scale, "zero band multiplier for last-exit times");
  app.add_option("--quad-abs-tol", quad_abs_tol, "absolute quadrature tolerance");
  app.add_option("--out", out_dir, "output directory (report: output file)");

  auto* analytic = app.add_subcommand("analytic", "print constants and function values");
  auto* simulate = app.add_subcommand("simulate", "write sample paths as CSV");
  std::string kind = "path";
  simulate->add_option("--kind", kind, "path | bridge | meander | hpath")
      ->check(CLI::IsMember({"path", "bridge", "meander", "hpath"}));
  auto* verify = app.add_subcommand("verify", "run one verification suite");
  std::string suite;
  verify->add_option("suite", suite, "lt-martingale | lt-penalisation | beta-law | fk | meander | lemma6 | excursion-lt")
      ->required();
  auto* report = app.add_subcommand("report", "merge JSON reports");
  std::vector<std::string> inputs;
  report->add_option("files", inputs, "report files")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    if (alpha) cfg.alpha = *alpha;
    if (dt) cfg.dt = *dt;
    if (horizon) cfg.horizon = *horizon;
    if (n_paths) cfg.n_paths = *n_paths;
    if (seed) cfg.seed = *seed;
    if (eps_scale) cfg.eps_scale = *eps_scale;
    if (zero_band_scale) cfg.zero_band_scale = *zero_band_scale;
    if (quad_abs_tol) cfg.quad_abs_tol = *quad_abs_tol;
    if (out_dir) cfg.out_dir = *out_dir;
    if (!report->parsed()) cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (analytic->parsed()) {
      out << "name,value\n";
      for (const auto& [name, value] : analytic_table(cfg)) write_csv_row(out, {name, fmt17(value)});
      return 0;
    }
    if (simulate->parsed()) {
      const AlphaModel m(cfg.alpha, cfg.quad());
      const SimConfig sim = cfg.sim();
      std::filesystem::create_directories(cfg.out_dir);
      const auto path = std::filesystem::path(cfg.out_dir) / (kind + "s.csv");
      std::ofstream os(path);
      if (!os) throw IoError("cannot write " + path.string());
      if (kind == "path") {
        std::vector<PathGrid> paths(sim.n_paths);
        for_each_path(m, 0.0, sim, [&](std::size_t i, const PathGrid& p) { paths[i] = p; });
        write_paths_csv(os, paths);
      } else if (kind == "bridge") {
        std::vector<PathGrid> paths;
        const std::uint64_t s = domain_seed(sim.seed, Domain::bridge);
        for (std::size_t i = 0; i < sim.n_paths; ++i) {
          StreamRng rng(s, i);
          paths.push_back(sample_bridge(m, sim.horizon, sim, rng));
        }
        write_paths_csv(os, paths);
      } else if (kind == "meander") {
        HarvestOptions ho;
        ho.eps_scale = cfg.eps_scale;
        write_paths_csv(os, sample_meanders(m, sim.horizon, sim.n_paths, sim, ho));
      } else {
        HPathOptions ho;
        ho.eps_scale = cfg.eps_scale;
        write_ensemble_csv(os, sample_hpath(m, 0.0, sim.horizon, sim, ho));
      }
      out << "wrote " << path.string() << "\n";
      return 0;
    }
    if (verify->parsed()) {
      if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end()) {
        err << "error: unknown suite '" << suite << "'\n" << verify->help();
        return 2;
      }
      const auto reports = run_suite(suite, cfg);
      std::filesystem::create_directories(cfg.out_dir);
      const auto path = (std::filesystem::path(cfg.out_dir) / (suite + ".json")).string();
      emit_report(reports, path);
      bool ok = true;
      for (const auto& r : reports) {
        out << (r.pass ? "PASS " : "FAIL ") << r.test_name << " estimate=" << fmt17(r.estimate)
            << " target=" << fmt17(r.target) << " tolerance=" << fmt17(r.tolerance) << "\n";
        ok = ok && r.pass;
      }
      out << "wrote " << path << "\n";
      return ok ? 0 : 1;
    }
    // report
    const Json merged = merge_reports(inputs);
    const std::string text = merged.dump(2);
    if (out_dir) {
      std::ofstream os(*out_dir);
      if (!os) throw IoError("cannot write " + *out_dir);
      os << text << "\n";
    } else {
      out << text << "\n";
    }
    return merged["overall_pass"].get<bool>() ? 0 : 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    err << "bad report file: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace penalab
