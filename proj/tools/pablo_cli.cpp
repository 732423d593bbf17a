#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pablo/harness.hpp"
#include "pablo/perturbation.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_csv_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw pablo::Error("cli", "bad number '" + item + "'");
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pablo::Error("cli", "cannot write " + path.string());
  out << content;
}

fs::path output_dir(const std::string& flag, const pablo::ExperimentConfig& cfg) {
  const std::string dir = flag.empty() ? cfg.output : flag;
  if (dir.empty()) return {};
  fs::create_directories(dir);
  return dir;
}

int cmd_run(const std::string& config_path, const std::string& out_flag, bool log_rounds) {
  const auto cfg = pablo::load_config(config_path);
  const auto dir = output_dir(out_flag, cfg);
  std::ostringstream trials_csv;
  std::ostringstream rounds_csv;
  std::vector<pablo::TrialSummary> trials;
  if (log_rounds) {
    // Serial so every round log lands in config order.
    for (auto T : cfg.horizons)
      for (std::size_t i = 0; i < cfg.seed_count; ++i) {
        const auto rec = pablo::run_trial(cfg, T, pablo::trial_seed(cfg, i), true);
        trials.push_back(rec.summary);
        rounds_csv << "# T=" << T << " seed=" << rec.summary.seed << '\n';
        pablo::write_rounds_csv(rounds_csv, rec);
      }
  } else {
    trials = pablo::run_all(cfg, pablo::default_thread_count());
  }
  pablo::write_trials_csv(trials_csv, trials);
  if (dir.empty()) {
    std::cout << trials_csv.str();
    if (log_rounds) std::cout << rounds_csv.str();
    return 0;
  }
  write_file(dir / "trials.csv", trials_csv.str());
  if (log_rounds) write_file(dir / "rounds.csv", rounds_csv.str());
  write_file(dir / "run.json", pablo::sidecar_json(cfg, "run"));
  std::cerr << "wrote " << (dir / "trials.csv").string() << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_flag) {
  const auto cfg = pablo::load_config(config_path);
  const auto dir = output_dir(out_flag, cfg);
  const auto r = pablo::sweep(cfg, pablo::default_thread_count());
  std::ostringstream trials_csv, agg_csv;
  pablo::write_trials_csv(trials_csv, r.trials);
  pablo::write_aggregate_csv(agg_csv, r.aggregates);
  write_file(dir / "trials.csv", trials_csv.str());
  write_file(dir / "aggregate.csv", agg_csv.str());
  write_file(dir / "sweep.json", pablo::sidecar_json(cfg, "sweep", &r.fit));
  std::cout << agg_csv.str();
  if (r.fit.degenerate)
    std::cout << "fit: degenerate (" << r.fit.reason << ")\n";
  else
    std::cout << "fit: slope " << r.fit.slope << " intercept " << r.fit.intercept << " r2 " << r.fit.r2 << '\n';
  return 0;
}

int cmd_check() {
  bool all = true;
  for (const auto& c : pablo::run_check_suite()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  std::cout << (all ? "all checks passed" : "some checks failed") << '\n';
  return all ? 0 : 1;
}

int cmd_enumerate(std::size_t d, const std::string& w_s, const std::string& ell_s, double eps) {
  const pablo::Vector w(parse_csv_numbers(w_s));
  const pablo::Vector ell(parse_csv_numbers(ell_s));
  if (w.dim() != d || ell.dim() != d) throw pablo::Error("cli", "--w and --ell need d components");
  const auto table = pablo::enumerate_estimates(w, ell, {d, eps, 1.0});
  std::cout << "axis,sign,probability,estimate\n";
  for (const auto& e : table) {
    std::cout << e.draw.axis << ',' << (e.draw.sign > 0 ? "+1" : "-1") << ',' << pablo::format_double(e.probability)
              << ',';
    for (std::size_t i = 0; i < d; ++i) std::cout << (i ? ";" : "") << pablo::format_double(e.estimate[i]);
    std::cout << '\n';
  }
  const auto mean = pablo::enumeration_mean(table);
  std::cout << "mean,";
  for (std::size_t i = 0; i < d; ++i) std::cout << (i ? ";" : "") << pablo::format_double(mean[i]);
  std::cout << "\nsecond_moment," << pablo::format_double(pablo::enumeration_second_moment(table)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PABLO bandit-to-OLO simulator"};
  app.require_subcommand(1);

  std::string config, out;
  bool log_rounds = false;
  auto* run = app.add_subcommand("run", "run every (T, seed) trial of a config");
  run->add_option("--config", config, "JSON config")->required();
  run->add_option("--out", out, "output directory (stdout when absent)");
  run->add_flag("--log-rounds", log_rounds, "also write per-round rows");

  auto* sw = app.add_subcommand("sweep", "aggregate over seeds and fit ln regret vs ln T");
  sw->add_option("--config", config, "JSON config")->required();
  sw->add_option("--out", out, "output directory")->required();

  auto* check = app.add_subcommand("check", "run the invariant and certificate suite");

  std::size_t d = 1;
  std::string w_s, ell_s;
  double eps = 1.0;
  auto* en = app.add_subcommand("enumerate", "print the 2d-outcome estimator table");
  en->add_option("--d", d, "dimension")->required()->check(CLI::PositiveNumber);
  en->add_option("--w", w_s, "iterate, comma separated")->required();
  en->add_option("--ell", ell_s, "loss, comma separated")->required();
  en->add_option("--eps", eps, "eps floor")->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every real parse error is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config, out, log_rounds);
    if (*sw) return cmd_sweep(config, out);
    if (*check) return cmd_check();
    if (*en) return cmd_enumerate(d, w_s, ell_s, eps);
  } catch (const pablo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.module() == "harness" || e.module() == "cli" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
