// Copyright 2026 The OQST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

#include "oqst/errors.hpp"
#include "oqst/verification.hpp"

namespace oqst::cli {

using nlohmann::json;

// --- configuration -----------------------------------------------------------

namespace {

const char* method_name(PropagationMethod m) {
  return m == PropagationMethod::exact ? "exact" : "first_order";
}

const char* damping_name(DampingConvention d) {
  return d == DampingConvention::master_equation ? "master_equation" : "lifetime";
}

template <class T>
T read_unsigned(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    // Large uint64 values parse as unsigned and fail the signed read above.
    if (!v.is_number_unsigned()) throw ConfigError("config: '" + key + "' must be a nonnegative integer");
  }
  return static_cast<T>(v.get<std::uint64_t>());
}

double read_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return v.get<double>();
}

std::string read_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

bool read_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config: '" + key + "' must be true or false");
  return v.get<bool>();
}

using Setter = std::function<void(RunConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"scenario", [](RunConfig& c, const json& v) { c.scenario = read_string(v, "scenario"); }},
      {"seed", [](RunConfig& c, const json& v) { c.seed = read_unsigned<std::uint64_t>(v, "seed"); }},
      {"out", [](RunConfig& c, const json& v) { c.out = read_string(v, "out"); }},
      {"workers", [](RunConfig& c, const json& v) { c.workers = read_unsigned<int>(v, "workers"); }},
      {"steps", [](RunConfig& c, const json& v) { c.steps = read_unsigned<std::size_t>(v, "steps"); }},
      {"trajectories",
       [](RunConfig& c, const json& v) { c.trajectories = read_unsigned<std::size_t>(v, "trajectories"); }},
      {"target_nt", [](RunConfig& c, const json& v) { c.cavity.target_nt = read_unsigned<int>(v, "target_nt"); }},
      {"delay", [](RunConfig& c, const json& v) { c.cavity.delay = read_unsigned<std::size_t>(v, "delay"); }},
      {"cutoff", [](RunConfig& c, const json& v) { c.cavity.cutoff = read_unsigned<std::size_t>(v, "cutoff"); }},
      {"omega_c", [](RunConfig& c, const json& v) { c.cavity.omega_c = read_number(v, "omega_c"); }},
      {"temperature", [](RunConfig& c, const json& v) { c.cavity.temperature = read_number(v, "temperature"); }},
      {"lifetime_tc", [](RunConfig& c, const json& v) { c.cavity.lifetime_tc = read_number(v, "lifetime_tc"); }},
      {"step_ta", [](RunConfig& c, const json& v) { c.cavity.step_ta = read_number(v, "step_ta"); }},
      {"leak_tolerance",
       [](RunConfig& c, const json& v) { c.cavity.leak_tolerance = read_number(v, "leak_tolerance"); }},
      {"propagator",
       [](RunConfig& c, const json& v) {
         const std::string s = read_string(v, "propagator");
         if (s == "exact") c.cavity.method = PropagationMethod::exact;
         else if (s == "first_order") c.cavity.method = PropagationMethod::first_order;
         else throw ConfigError("config: propagator must be 'exact' or 'first_order'");
       }},
      {"damping",
       [](RunConfig& c, const json& v) {
         const std::string s = read_string(v, "damping");
         if (s == "master_equation") c.cavity.damping = DampingConvention::master_equation;
         else if (s == "lifetime") c.cavity.damping = DampingConvention::lifetime;
         else throw ConfigError("config: damping must be 'master_equation' or 'lifetime'");
       }},
      {"omega", [](RunConfig& c, const json& v) { c.omega = read_number(v, "omega"); }},
      {"theta", [](RunConfig& c, const json& v) { c.theta = read_number(v, "theta"); }},
      {"beta", [](RunConfig& c, const json& v) { c.beta = read_number(v, "beta"); }},
      {"model", [](RunConfig& c, const json& v) { c.model = read_string(v, "model"); }},
      {"mode", [](RunConfig& c, const json& v) { c.mode = read_string(v, "mode"); }},
      {"dt", [](RunConfig& c, const json& v) { c.dt = read_number(v, "dt"); }},
      {"gamma", [](RunConfig& c, const json& v) { c.gamma = read_number(v, "gamma"); }},
      {"gap", [](RunConfig& c, const json& v) { c.gap = read_number(v, "gap"); }},
      {"acceptance", [](RunConfig& c, const json& v) { c.acceptance = read_bool(v, "acceptance"); }},
      {"random_cases",
       [](RunConfig& c, const json& v) { c.random_cases = read_unsigned<std::size_t>(v, "random_cases"); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  static const std::vector<std::string> scenarios{"cavity", "projective", "tpm", "classical", "verify"};
  if (std::find(scenarios.begin(), scenarios.end(), scenario) == scenarios.end()) {
    throw ConfigError("config: unknown scenario '" + scenario + "'");
  }
  if (steps && *steps == 0) throw ConfigError("config: steps must be positive");
  if (trajectories && *trajectories == 0) throw ConfigError("config: trajectories must be positive");
  if (workers < 0) throw ConfigError("config: workers must be nonnegative");
  if (scenario == "cavity") {
    try {
      resolved_cavity().validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if ((scenario == "tpm" || scenario == "classical") && !(beta > 0.0 && std::isfinite(beta))) {
    throw ConfigError("config: beta must be positive");
  }
  if (scenario == "classical") {
    if (model != "two" && model != "three") throw ConfigError("config: model must be 'two' or 'three'");
    if (mode != "enumerate" && mode != "gillespie") {
      throw ConfigError("config: mode must be 'enumerate' or 'gillespie'");
    }
    if (!(dt > 0.0) || !(gamma >= 0.0) || !(gap > 0.0)) {
      throw ConfigError("config: dt and gap must be positive, gamma nonnegative");
    }
  }
}

CavityConfig RunConfig::resolved_cavity() const {
  CavityConfig c = cavity;
  c.steps = steps.value_or(300);
  c.trajectories = trajectories.value_or(2000);
  c.seed = seed;
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["workers"] = c.workers;
  if (c.steps) j["steps"] = *c.steps;
  if (c.trajectories) j["trajectories"] = *c.trajectories;
  j["target_nt"] = c.cavity.target_nt;
  j["delay"] = c.cavity.delay;
  j["cutoff"] = c.cavity.cutoff;
  j["omega_c"] = c.cavity.omega_c;
  j["temperature"] = c.cavity.temperature;
  j["lifetime_tc"] = c.cavity.lifetime_tc;
  j["step_ta"] = c.cavity.step_ta;
  j["leak_tolerance"] = c.cavity.leak_tolerance;
  j["propagator"] = method_name(c.cavity.method);
  j["damping"] = damping_name(c.cavity.damping);
  j["omega"] = c.omega;
  j["theta"] = c.theta;
  j["beta"] = c.beta;
  j["model"] = c.model;
  j["mode"] = c.mode;
  j["dt"] = c.dt;
  j["gamma"] = c.gamma;
  j["gap"] = c.gap;
  j["acceptance"] = c.acceptance;
  j["random_cases"] = c.random_cases;
  return j;
}

RunConfig from_json(const json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(base, value);
  }
  // Scenario-independent values are left to the caller's seed handling.
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_json(j, std::move(base));
}

std::string format_number(double x) {
  if (x == 0.0) return "0";  // folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// --- output helpers ----------------------------------------------------------

namespace {

// Rounded to 12 significant digits so JSON and CSV agree.
double rounded(double x) { return std::strtod(format_number(x).c_str(), nullptr); }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  ~CsvWriter() = default;
  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

int report_checks(const json& checks, std::ostream& log) {
  bool ok = true;
  for (const auto& [name, pass] : checks.items()) {
    log << "check " << name << ": " << (pass.get<bool>() ? "PASS" : "FAIL") << '\n';
    ok = ok && pass.get<bool>();
  }
  return ok ? kExitOk : kExitInvariant;
}

// --- scenarios ---------------------------------------------------------------

int run_cavity_scenario(const RunConfig& rc, std::ostream& log) {
  const CavityConfig c = rc.resolved_cavity();
  const CavityReport r = run_cavity(c, Execution::parallel, rc.workers);
  const auto dir = prepare_dir(rc.out);

  {
    CsvWriter w(dir / "trajectory.csv", {"step", "time", "atom_kind", "outcome", "mean_n", "var_n", "W_ctrl",
                                         "Q_ctrl", "W_seg", "Q_seg", "Sigma_ctrl", "Sigma_seg", "logp_increment"});
    const CavityTrajectory& t = r.example;
    for (std::size_t s = 0; s < t.ledgers.size(); ++s) {
      const StepLedger& l = t.ledgers[s];
      w.row({num(s + 1), num(static_cast<double>(s + 1) * c.step_ta), atom_kind_name(t.kinds[s]), num(l.outcome),
             num(t.mean_n(s)), num(t.var_n(s)), num(l.w_ctrl_system + l.w_ctrl_unit), num(l.q_ctrl_system),
             num(l.w_seg), num(l.q_seg), num(l.sigma_ctrl), num(l.sigma_seg), num(l.logp_increment)});
    }
    w.close();
  }
  {
    CsvWriter w(dir / "ensemble.csv", {"step", "p0", "p1", "p2", "p3", "Sigma_ctrl_avg", "Sigma_ctrl_se",
                                       "Sigma_seg_avg", "efficiency"});
    for (std::size_t s = 0; s < c.steps; ++s) {
      const auto& p = r.stats.populations[s];
      w.row({num(s + 1), num(p[0]), num(p[1]), num(p[2]), num(p[3]), num(r.stats.sigma_ctrl_mean[s]),
             num(r.stats.sigma_ctrl_se[s]), num(r.stats.sigma_seg_mean[s]), num(r.efficiency[s + 1])});
    }
    w.close();
  }

  const std::size_t h = r.preparation_horizon;
  std::vector<double> pt(c.steps);
  for (std::size_t s = 0; s < c.steps; ++s) pt[s] = r.stats.populations[s][static_cast<std::size_t>(c.target_nt)];
  double work = 0.0;
  double prep = 0.0;
  double q_sum = 0.0;
  double q_var = 0.0;
  for (std::size_t s = 0; s < c.steps; ++s) {
    work += r.stats.w_ctrl_mean[s] + r.stats.w_seg_mean[s];
    prep += r.stats.prep_work_mean[s];
    q_sum += r.stats.q_ctrl_mean[s];
    q_var += r.stats.q_ctrl_se[s] * r.stats.q_ctrl_se[s];
  }
  double peak = 0.0;
  for (double e : r.efficiency) peak = std::max(peak, e);
  bool bounded = true;
  for (double e : r.efficiency) bounded = bounded && e >= 0.0 && e <= 1.0 + 1e-9;

  json checks;
  checks["first_law"] = r.max_first_law_residual <= kFirstLawTolerance;
  checks["segment_second_law"] = r.min_sigma_seg >= -kSecondLawTolerance;
  checks["control_heat_zero_mean"] = q_var == 0.0 || std::abs(q_sum) <= 4.0 * std::sqrt(q_var);
  checks["efficiency_bounded"] = bounded;
  checks["truncation"] = r.max_truncation_leak <= c.leak_tolerance;

  json s;
  s["scenario"] = "cavity";
  s["config"] = to_json(rc);
  s["seed"] = rc.seed;
  s["beta"] = rounded(r.beta);
  s["thermal_occupation"] = rounded(r.thermal_occupation);
  s["preparation_horizon"] = h;
  s["totals"] = {
      {"stabilized_p_target", rounded(window_mean(pt, h))},
      {"stabilized_sigma_ctrl", rounded(window_mean(r.stats.sigma_ctrl_mean, h))},
      {"stabilized_var_below_0_1", rounded(window_mean(r.stats.var_n_below, h))},
      {"peak_efficiency", rounded(peak)},
      {"final_efficiency", rounded(r.efficiency.back())},
      {"total_work", rounded(work)},
      {"atom_preparation_work", rounded(prep)},
      {"max_first_law_residual", rounded(r.max_first_law_residual)},
      {"min_sigma_seg", rounded(r.min_sigma_seg)},
      {"max_truncation_leak", rounded(r.max_truncation_leak)},
  };
  s["law_checks"] = checks;
  write_json(dir / "summary.json", s);
  log << "cavity: " << c.trajectories << " trajectories x " << c.steps << " steps, stabilized p"
      << c.target_nt << " = " << format_number(window_mean(pt, h)) << '\n';
  return report_checks(checks, log);
}

int run_projective_scenario(const RunConfig& rc, std::ostream& log) {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = rc.omega / 2.0;
  h(1, 1) = -rc.omega / 2.0;
  Vector psi(2);
  psi << std::cos(rc.theta / 2.0), std::sin(rc.theta / 2.0);
  const ProjectiveReport r = run_projective_example(h, DensityOperator::pure(psi), computational_basis(2));
  const auto dir = prepare_dir(rc.out);
  CsvWriter w(dir / "outcomes.csv", {"outcome", "probability", "Q_ctrl", "Q_closed_form"});
  for (std::size_t i = 0; i < r.probabilities.size(); ++i) {
    w.row({num(i), num(r.probabilities[i]), num(r.q_ctrl[i]), num(r.q_closed_form[i])});
  }
  w.close();
  double closed = std::abs(r.w_ctrl - r.w_closed_form);
  for (std::size_t i = 0; i < r.q_ctrl.size(); ++i) closed = std::max(closed, std::abs(r.q_ctrl[i] - r.q_closed_form[i]));
  json checks;
  checks["zero_average_heat"] = std::abs(r.average_q) <= 1e-10;
  checks["closed_forms"] = closed <= 1e-10;
  checks["entropy_inequality"] = r.entropy_inequality;
  json s;
  s["scenario"] = "projective";
  s["config"] = to_json(rc);
  s["W_ctrl"] = rounded(r.w_ctrl);
  s["W_closed_form"] = rounded(r.w_closed_form);
  s["average_Q_ctrl"] = rounded(r.average_q);
  s["outcome_entropy"] = rounded(r.outcome_entropy);
  s["state_entropy"] = rounded(r.state_entropy);
  s["law_checks"] = checks;
  write_json(dir / "summary.json", s);
  return report_checks(checks, log);
}

int run_tpm_scenario(const RunConfig& rc, std::ostream& log) {
  Matrix h0 = Matrix::Zero(2, 2);
  h0(0, 0) = 0.5;
  h0(1, 1) = -0.5;
  const Matrix h1 = 2.0 * h0;
  Matrix u(2, 2);
  u << 1.0, 1.0, 1.0, -1.0;
  u /= std::numbers::sqrt2;
  const TpmReport r = run_tpm_jarzynski(h0, h1, u, rc.beta);
  const auto dir = prepare_dir(rc.out);
  CsvWriter w(dir / "leaves.csv", {"r0", "r1", "eps0", "eps1", "probability", "W_drive", "W_ctrl", "Q_ctrl"});
  for (const auto& l : r.leaves) {
    w.row({num(l.r0), num(l.r1), num(l.eps0), num(l.eps1), num(l.probability), num(l.w_drive), num(l.w_ctrl),
           num(l.q_ctrl)});
  }
  w.close();
  const double dev = std::abs(r.exp_average - r.z_ratio);
  json checks;
  checks["jarzynski"] = dev <= 1e-10;
  checks["decomposition"] = r.max_decomposition_residual <= 1e-10;
  checks["engine_cross_check"] = r.engine_max_deviation <= 1e-9;
  json s;
  s["scenario"] = "tpm";
  s["config"] = to_json(rc);
  s["exp_average"] = rounded(r.exp_average);
  s["z_ratio"] = rounded(r.z_ratio);
  s["jarzynski_deviation"] = rounded(dev);
  s["total_probability"] = rounded(r.total_probability);
  s["law_checks"] = checks;
  write_json(dir / "summary.json", s);
  log << "tpm: <exp(-beta de)> = " << format_number(r.exp_average) << ", Z1/Z0 = " << format_number(r.z_ratio)
      << '\n';
  return report_checks(checks, log);
}

int run_classical_scenario(const RunConfig& rc, std::ostream& log) {
  const RateModel m = rc.model == "two" ? two_state_model(rc.gap, rc.gamma, rc.beta)
                                        : three_state_model({0.0, 0.5 * rc.gap, rc.gap}, rc.gamma, rc.beta);
  const ClassicalMode mode = rc.mode == "gillespie" ? ClassicalMode::gillespie : ClassicalMode::enumerate;
  const ClassicalReport r =
      run_classical_limit(m, rc.steps.value_or(10), rc.dt, mode, {}, rc.trajectories.value_or(20000), rc.seed);
  const auto dir = prepare_dir(rc.out);
  CsvWriter w(dir / "steps.csv", {"step", "Sigma_operational", "Sigma_standard", "backward_entropy",
                                  "forward_entropy", "heat", "redefined_sigma", "sampled_sigma", "sampled_sigma_se"});
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const ClassicalStep& s = r.steps[i];
    w.row({num(i + 1), num(s.sigma_operational), num(s.sigma_standard), num(s.backward_entropy),
           num(s.forward_entropy), num(s.heat), num(s.redefined_sigma), num(s.sampled_sigma),
           num(s.sampled_sigma_se)});
  }
  w.close();
  json checks;
  checks["difference_identity"] = r.max_identity_residual <= 1e-8;
  checks["entropy_redefinition"] = r.max_redefinition_residual <= 1e-8;
  if (mode == ClassicalMode::gillespie) checks["sampling"] = r.max_sampling_z <= 4.0;
  json s;
  s["scenario"] = "classical";
  s["config"] = to_json(rc);
  s["max_identity_residual"] = rounded(r.max_identity_residual);
  s["max_redefinition_residual"] = rounded(r.max_redefinition_residual);
  s["max_sampling_z"] = rounded(r.max_sampling_z);
  s["law_checks"] = checks;
  write_json(dir / "summary.json", s);
  return report_checks(checks, log);
}

int run_verify(const RunConfig& rc, std::ostream& log) {
  SuiteOptions o;
  o.seed = rc.seed;
  o.workers = rc.workers;
  o.random_cases = rc.random_cases;
  std::vector<CheckResult> results = property_suite(o);
  if (rc.acceptance) {
    for (auto& r : acceptance_suite(o)) results.push_back(std::move(r));
  }
  bool ok = true;
  json checks = json::array();
  for (const auto& r : results) {
    log << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    checks.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    ok = ok && r.pass;
  }
  json s;
  s["scenario"] = "verify";
  s["config"] = to_json(rc);
  s["checks"] = checks;
  s["all_pass"] = ok;
  write_json(prepare_dir(rc.out) / "verify.json", s);
  return ok ? kExitOk : kExitInvariant;
}

}  // namespace

int execute(const RunConfig& config, std::ostream& log) {
  try {
    config.validate();
    if (config.scenario == "cavity") return run_cavity_scenario(config, log);
    if (config.scenario == "projective") return run_projective_scenario(config, log);
    if (config.scenario == "tpm") return run_tpm_scenario(config, log);
    if (config.scenario == "classical") return run_classical_scenario(config, log);
    return run_verify(config, log);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InvariantViolation& e) {
    log << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const DomainError& e) {
    // Parameters that passed the config checks but not the model's own.
    log << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace oqst::cli
