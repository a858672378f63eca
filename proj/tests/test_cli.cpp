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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace oqst::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oqst_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

RunConfig small_cavity(const fs::path& out) {
  RunConfig c;
  c.scenario = "cavity";
  c.out = out.string();
  c.steps = 40;
  c.trajectories = 60;
  c.seed = 11;
  return c;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(OQST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round trip through JSON") {
  RunConfig c;
  c.scenario = "classical";
  c.seed = 123456789012345ULL;
  c.steps = 17;
  c.cavity.cutoff = 11;
  c.cavity.damping = oqst::DampingConvention::lifetime;
  c.cavity.method = oqst::PropagationMethod::exact;
  c.mode = "gillespie";
  c.beta = 0.37;
  const RunConfig back = from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(back == c);
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("config rejects unknown keys and bad types") {
  CHECK_THROWS_AS(from_json(nlohmann::json::parse(R"({"stpes": 3})")), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json::parse(R"({"steps": -3})")), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json::parse(R"({"beta": "hot"})")), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json::parse(R"({"damping": "weird"})")), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json::parse("[1]")), ConfigError);
}

TEST_CASE("file values sit under the base and validation catches bad scenarios") {
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"scenario": "tpm", "beta": 2.5})";
  const RunConfig c = load_config(dir / "c.json");
  CHECK(c.scenario == "tpm");
  CHECK(c.beta == 2.5);
  CHECK(c.seed == 42);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);

  RunConfig bad;
  bad.scenario = "nope";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("number formatting uses 12 significant digits") {
  CHECK(format_number(0.1 + 0.2) == "0.3");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("cavity run writes one row per step") {
  const fs::path out = scratch("rows");
  std::ostringstream log;
  REQUIRE(execute(small_cavity(out), log) == kExitOk);
  CHECK(line_count(out / "trajectory.csv") == 41);
  CHECK(line_count(out / "ensemble.csv") == 41);
  const auto s = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(s["law_checks"]["first_law"].get<bool>());
  CHECK(s["config"]["steps"] == 40);
}

TEST_CASE("outputs are byte identical across workers and repeats") {
  const fs::path a = scratch("w1"), b = scratch("w4"), c = scratch("w1again");
  std::ostringstream log;
  RunConfig ca = small_cavity(a), cb = small_cavity(b), cc = small_cavity(c);
  ca.workers = 1;
  cb.workers = 4;
  cc.workers = 1;
  REQUIRE(execute(ca, log) == kExitOk);
  REQUIRE(execute(cb, log) == kExitOk);
  REQUIRE(execute(cc, log) == kExitOk);
  for (const char* f : {"trajectory.csv", "ensemble.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
  // summary.json echoes the out path, so compare it without that key.
  auto strip = [](const fs::path& p) {
    auto j = nlohmann::json::parse(slurp(p / "summary.json"));
    j["config"].erase("out");
    j["config"].erase("workers");
    return j.dump();
  };
  CHECK(strip(a) == strip(b));
  CHECK(strip(a) == strip(c));
}

TEST_CASE("other scenarios pass their law checks") {
  std::ostringstream log;
  for (const char* s : {"projective", "tpm", "classical"}) {
    RunConfig c;
    c.scenario = s;
    c.out = scratch(s).string();
    CHECK_MESSAGE(execute(c, log) == kExitOk, s);
    CHECK(fs::exists(fs::path(c.out) / "summary.json"));
  }
  RunConfig g;
  g.scenario = "classical";
  g.mode = "gillespie";
  g.trajectories = 4000;
  g.out = scratch("gillespie").string();
  CHECK(execute(g, log) == kExitOk);
}

TEST_CASE("execute maps failures to exit codes") {
  std::ostringstream log;
  RunConfig c = small_cavity(scratch("codes"));
  c.cavity.cutoff = 3;  // below target + 4
  CHECK(execute(c, log) == kExitParse);

  // A file where the output directory should go.
  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "x";
  RunConfig io;
  io.scenario = "projective";
  io.out = (blocker / "sub").string();
  CHECK(execute(io, log) == kExitIo);

  // A truncation leak beyond tolerance is an invariant violation.
  RunConfig leak = small_cavity(scratch("leak"));
  leak.cavity.target_nt = 1;
  leak.cavity.cutoff = 5;
  leak.cavity.delay = 0;
  leak.cavity.leak_tolerance = 1e-12;
  CHECK(execute(leak, log) == kExitInvariant);
}

TEST_CASE("command line exit codes") {
  const std::string out = scratch("bin").string();
  CHECK(run_binary("run tpm --out " + out) == 0);
  CHECK(run_binary("run cavity --steps 30 --traj 20 --workers 2 --out " + out) == 0);
  CHECK(line_count(fs::path(out) / "trajectory.csv") == 31);
  CHECK(run_binary("run nonsense") == 2);
  CHECK(run_binary("run cavity --steps abc") == 2);
  CHECK(run_binary("run cavity --damping bogus --out " + out) == 2);
  CHECK(run_binary("run cavity --config /nonexistent/c.json") == 4);
  CHECK(run_binary("") == 2);
  CHECK(run_binary("verify --seed 7 --random-cases 20 --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "verify.json"));
}
