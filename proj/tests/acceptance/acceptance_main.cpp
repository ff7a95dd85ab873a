// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "criteria.hpp"

namespace {

using namespace docingest::acceptance;

struct Criterion {
  const char* name;
  Outcome (*run)(const Options&);
  /// Wall-clock budget in seconds; 0 for none.
  double budget;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"region_combination", region_combination, 60.0},
      {"grid_reconstruction", grid_reconstruction, 0.0},
      {"metric_fixtures", metric_fixtures, 0.0},
      {"gradient_checks", gradient_checks, 30.0},
      {"anti_forgetting", anti_forgetting, 300.0},
      {"head_comparison", head_comparison, 0.0},
      {"determinism", determinism, 0.0},
      {"structuring_speed", structuring_speed, 0.0},
      {"service_end_to_end", service_end_to_end, 0.0},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"docingest acceptance checks"};
  Options opt;
  std::vector<std::string> only;
  app.add_option("--cli", opt.cli, "docingest CLI binary for the determinism check");
  app.add_option("--golden", opt.golden, "Golden layout file for the determinism check")
      ->required();
  app.add_flag("--write-golden", opt.write_golden, "Rewrite the golden file instead of comparing");
  app.add_option("--only", only, "Run only the named criteria");
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  for (const Criterion& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(opt);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget > 0.0 && secs >= c.budget) {
      out.pass = false;
      out.detail += "; over the " + std::to_string(static_cast<int>(c.budget)) + " s budget";
    }
    std::printf("%s %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str(),
                secs);
    std::fflush(stdout);
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
