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

// Serial reference vs OpenMP timings for the two ensemble kernels.
// Usage: bench [trajectories] [workers]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "oqst/scenarios.hpp"
#include "oqst/trajectory.hpp"

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-16s serial %8.3f s  parallel %8.3f s  speedup %5.2fx  identical %s\n", name, serial, parallel,
              serial / parallel, same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t traj = argc > 1 ? std::stoul(argv[1]) : 2000;
  const int workers = argc > 2 ? std::stoi(argv[2]) : 0;

  oqst::CavityConfig c;
  c.trajectories = traj;
  oqst::CavityReport rs, rp;
  const double cs = seconds([&] { rs = oqst::run_cavity(c, oqst::Execution::serial); });
  const double cp = seconds([&] { rp = oqst::run_cavity(c, oqst::Execution::parallel, workers); });
  report("run_cavity", cs, cp, rs.stats.sigma_ctrl_mean == rp.stats.sigma_ctrl_mean && rs.efficiency == rp.efficiency);

  // Density-matrix engine on a short cavity run at a small cutoff.
  oqst::CavityConfig small = c;
  small.target_nt = 1;
  small.cutoff = 5;
  small.delay = 0;
  small.steps = 20;
  small.leak_tolerance = 1e-3;
  const oqst::CavityModel m(small);
  const std::size_t n = traj / 20 + 1;
  std::vector<oqst::TrajectoryRecord> es, ep;
  auto run = [&](oqst::Execution e, int w) {
    return oqst::sample_ensemble(m.generator(), m.schedule(), m.policy(), m.initial_state(), small.seed, n,
                                 m.engine_options(), e, w);
  };
  const double ss = seconds([&] { es = run(oqst::Execution::serial, 0); });
  const double sp = seconds([&] { ep = run(oqst::Execution::parallel, workers); });
  bool same = es.size() == ep.size();
  for (std::size_t i = 0; same && i < es.size(); ++i) same = es[i].log_prob == ep[i].log_prob;
  report("sample_ensemble", ss, sp, same);
  return 0;
}
