#include <cstdio>
#include <cstring>
#include <exception>
#include <string>

#include "meanfield/experiments.hpp"

// Runs every acceptance experiment and prints one verdict line per criterion.
// Optional arguments restrict the run to the named experiments.
int main(int argc, char** argv) {
  using namespace meanfield::experiments;
  int failures = 0;
  for (const auto& info : registry()) {
    if (argc > 1) {
      bool wanted = false;
      for (int i = 1; i < argc; ++i) wanted = wanted || info.name == argv[i];
      if (!wanted) continue;
    }
    try {
      const auto result = run(info, ExperimentOptions{});
      for (const auto& c : result.checks) {
        std::printf("    %s %s: %s\n", c.informational ? "info" : (c.passed ? "ok  " : "FAIL"), c.label.c_str(),
                    c.detail.c_str());
      }
      const bool ok = result.passed();
      failures += ok ? 0 : 1;
      std::printf("criterion %d (%s): %s [%.1f s]\n", info.criterion, info.name.c_str(), ok ? "PASS" : "FAIL",
                  result.seconds);
    } catch (const std::exception& e) {
      ++failures;
      std::printf("criterion %d (%s): FAIL [error: %s]\n", info.criterion, info.name.c_str(), e.what());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
