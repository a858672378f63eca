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

// Acceptance driver: one PASS/FAIL line per criterion. Exit status is
// nonzero if any criterion fails.

#include <cstdio>
#include <cstdlib>
#include <exception>

#include "oqst/verification.hpp"

int main(int argc, char** argv) {
  oqst::SuiteOptions options;
  if (argc > 1) options.seed = std::strtoull(argv[1], nullptr, 10);
  if (const char* w = std::getenv("OQST_WORKERS")) options.workers = std::atoi(w);
  try {
    const auto results = oqst::acceptance_suite(options);
    int failed = 0;
    for (const auto& r : results) {
      std::printf("%s: %s (%s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
      if (!r.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed,
                results.size());
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
}
