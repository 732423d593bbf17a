// One PASS/FAIL line per acceptance criterion. Optional argv[1] selects a
// single criterion number.
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "pablo/checks.hpp"
#include "pablo/harness.hpp"

using namespace pablo;

namespace {

CheckResult timed(const std::string& name, double budget_s, const std::function<CheckResult()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r = fn();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream os;
  os << r.detail << " [" << secs << " s, budget " << budget_s << " s]";
  return {name, r.passed && secs < budget_s, os.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// `run` twice through the CLI binary, then `check`.
CheckResult cli_determinism(const std::string& cli) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pablo_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto cfg = checks::lower_bound_config(2, true, 3);
  cfg.horizons = {128, 256};
  std::ofstream(dir / "config.json") << config_to_json(cfg);
  const std::string base = "\"" + cli + "\" run --config \"" + (dir / "config.json").string() + "\" --out ";
  const int a = std::system((base + "\"" + (dir / "a").string() + "\" 2>/dev/null").c_str());
  const int b = std::system((base + "\"" + (dir / "b").string() + "\" 2>/dev/null").c_str());
  const std::string ca = slurp(dir / "a" / "trials.csv");
  const std::string cb = slurp(dir / "b" / "trials.csv");
  const bool same = a == 0 && b == 0 && !ca.empty() && ca == cb;
  const int check = std::system(("\"" + cli + "\" check >/dev/null").c_str());
  std::ostringstream os;
  os << "run exit " << a << "/" << b << ", csv " << (same ? "byte-identical" : "differs") << " (" << ca.size()
     << " bytes), check exit " << check;
  return {"determinism", same && check == 0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::string cli = argc > 2 ? argv[2] : "pablo";
  checks::ExperimentScale single{64, 1};

  const std::array<std::function<CheckResult()>, 10> criteria = {
      [] { return timed("unbiasedness", 1.0, [] { return checks::unbiasedness(1000, 11); }); },
      [] { return checks::second_moment(1000, 11); },
      [] { return checks::estimator_norm_bounds(10000, 13); },
      [] { return checks::base_certificate(200, 256, 14); },
      [] { return checks::composite_suite(500, 100, 15); },
      [&] { return timed("static_scaling", 300.0, [&] { return checks::static_scaling(single); }); },
      [&] { return timed("path_length_scaling", 600.0, [&] { return checks::path_length_scaling(single); }); },
      [] {
        return checks::highprob_quantiles(checks::ExperimentScale{400, default_thread_count()});
      },
      [&] { return checks::lower_bound_health(single); },
      [&] { return cli_determinism(cli); },
  };

  bool all = true;
  for (int i = 0; i < 10; ++i) {
    if (only != 0 && only != i + 1) continue;
    CheckResult r;
    try {
      r = criteria[i]();
    } catch (const std::exception& e) {
      r = {"error", false, e.what()};
    }
    all = all && r.passed;
    std::cout << (r.passed ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << r.name << "): " << r.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
