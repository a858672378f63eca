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

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "run_config.hpp"

using oqst::cli::RunConfig;

namespace {

int default_workers() {
  const char* env = std::getenv("OQST_WORKERS");
  if (env == nullptr) return 0;
  try {
    return std::max(0, std::stoi(env));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operational quantum stochastic thermodynamics simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  int workers = default_workers();
  std::size_t steps = 0, traj = 0, cutoff = 0, delay = 0, random_cases = 0;
  int target = 0;
  std::string damping, model, mode;
  double beta = 0.0, omega = 0.0, theta = 0.0;
  bool exact = false, acceptance = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override its values");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--workers", workers, "OpenMP threads, 0 = runtime default (env OQST_WORKERS)");
  };

  std::string scenario;
  CLI::App* run = app.add_subcommand("run", "run a scenario and write results");
  run->add_option("scenario", scenario, "cavity | projective | tpm | classical")
      ->required()
      ->check(CLI::IsMember({"cavity", "projective", "tpm", "classical"}));
  add_common(run);
  run->add_option("--steps", steps, "number of steps");
  run->add_option("--traj", traj, "number of trajectories");
  run->add_option("--target", target, "cavity target photon number");
  run->add_option("--delay", delay, "cavity feedback delay");
  run->add_option("--cutoff", cutoff, "cavity Fock cutoff");
  run->add_flag("--exact-propagator", exact, "exact segment propagator instead of first order");
  run->add_option("--damping", damping, "master_equation | lifetime");
  run->add_option("--beta", beta, "inverse temperature (tpm, classical)");
  run->add_option("--omega", omega, "projective qubit splitting");
  run->add_option("--theta", theta, "projective Bloch angle");
  run->add_option("--model", model, "classical: two | three");
  run->add_option("--mode", mode, "classical: enumerate | gillespie");

  CLI::App* verify = app.add_subcommand("verify", "run the property suite");
  add_common(verify);
  verify->add_flag("--acceptance", acceptance, "also run the acceptance criteria");
  verify->add_option("--random-cases", random_cases, "random cases per property");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return oqst::cli::kExitParse;
  }

  CLI::App* sub = run->parsed() ? run : verify;
  RunConfig c;
  try {
    if (!config_path.empty()) c = oqst::cli::load_config(config_path);
  } catch (const oqst::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return oqst::cli::kExitParse;
  } catch (const oqst::cli::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return oqst::cli::kExitIo;
  }

  auto given = [&](const char* name) { return sub->count(name) > 0; };
  c.scenario = run->parsed() ? scenario : "verify";
  if (given("--seed")) c.seed = seed;
  if (given("--out")) c.out = out;
  // The environment default counts as a flag; the config file sits below both.
  if (given("--workers") || std::getenv("OQST_WORKERS") != nullptr) c.workers = workers;
  if (run->parsed()) {
    if (given("--steps")) c.steps = steps;
    if (given("--traj")) c.trajectories = traj;
    if (given("--target")) c.cavity.target_nt = target;
    if (given("--delay")) c.cavity.delay = delay;
    if (given("--cutoff")) c.cavity.cutoff = cutoff;
    if (exact) c.cavity.method = oqst::PropagationMethod::exact;
    if (given("--damping")) {
      if (damping == "master_equation") c.cavity.damping = oqst::DampingConvention::master_equation;
      else if (damping == "lifetime") c.cavity.damping = oqst::DampingConvention::lifetime;
      else {
        std::cerr << "error: --damping must be master_equation or lifetime\n";
        return oqst::cli::kExitParse;
      }
    }
    if (given("--beta")) c.beta = beta;
    if (given("--omega")) c.omega = omega;
    if (given("--theta")) c.theta = theta;
    if (given("--model")) c.model = model;
    if (given("--mode")) c.mode = mode;
  } else {
    if (acceptance) c.acceptance = true;
    if (given("--random-cases")) c.random_cases = random_cases;
  }

  return oqst::cli::execute(c, std::cout);
}
