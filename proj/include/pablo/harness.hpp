#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pablo/core.hpp"
#include "pablo/perturbation.hpp"

namespace pablo {

inline constexpr const char* kVersion = "0.1.0";

enum class EnvKind { Zero, Fixed, Stochastic, Hypercube, ClippedHypercube, PiecewiseHypercube, AdaptiveSign, RandomBounded };
enum class LearnerKind { DynamicBase, DynamicMeta, HighProbMeta };
enum class FeedbackMode { Bandit, Full };
enum class ComparatorKind { Zero, Static, Switching, Aligned, Fenchel };

struct EnvConfig {
  EnvKind kind = EnvKind::Zero;
  std::size_t d = 1;
  std::vector<Vector> losses;       // fixed
  std::optional<Vector> theta;      // stochastic, piecewise (defaults to a hypercube draw)
  std::optional<double> sigma;      // stochastic, piecewise; hypercube kinds fix their own
  std::optional<double> clip;       // stochastic, piecewise
  std::size_t segments = 1;         // piecewise
  double G = 1.0;                   // adaptive_sign, random_bounded
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::DynamicMeta;
  FeedbackMode feedback = FeedbackMode::Bandit;
  double eps_budget = 1.0;
  double G = 1.0;                        // bound on ||l_t||
  double delta = 0.05;                   // highprob_meta
  std::optional<double> omega;           // highprob_meta; eps/sqrt(ln(16/delta)) when absent
  std::optional<double> eps_floor;       // perturbation floor; 0.5, or omega/sqrt(T) for highprob_meta
  std::optional<double> eta;             // dynamic_base; 1/G_olo when absent
};

struct SwitchPoint {
  std::size_t start = 0;  // first round (0-based) of this segment
  Vector u;
};

struct ComparatorConfig {
  ComparatorKind kind = ComparatorKind::Zero;
  Vector u;                          // static
  std::vector<SwitchPoint> segments; // switching
  double norm = 1.0;                 // aligned: scale of the unit u_theta
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvConfig env;
  LearnerConfig learner;
  ComparatorConfig comparator;
  std::vector<std::size_t> horizons{64};
  std::size_t seed_count = 1;
  std::uint64_t base_seed = 1;
  std::string output;  // directory; empty means stdout
};

/// Parses the JSON document. Errors carry module "harness" and a
/// "line N:" prefix pointing at the offending key or syntax error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);
void validate(const ExperimentConfig& cfg);

struct TrialRow {
  std::size_t t = 0;
  Vector w;
  Vector played;
  std::optional<PerturbationDraw> draw;  // empty in full-information mode
  double observed = 0.0;
  Vector estimate;
  Vector loss;
  Vector u;
};

struct TrialSummary {
  std::string env;
  std::string learner;
  std::size_t d = 0;
  std::size_t T = 0;
  std::uint64_t seed = 0;
  double regret_static = 0.0;   // against the constant u_T
  double regret_dynamic = 0.0;  // against u_{1:T}
  double P_T = 0.0;
  std::size_t S_T = 0;
  double Phi_T = 0.0;
  double P_T_Phi = 0.0;
  double max_u = 0.0;
  double sum_l2u = 0.0;
  // learner diagnostics, not part of the CSV
  double max_iterate_norm = 0.0;
  double max_penalty_gradient = 0.0;
  double penalty_bound_H = 0.0;
  double max_fixed_point_residual = 0.0;
  std::size_t clip_count = 0;
};

struct TrialRecord {
  std::vector<TrialRow> rows;  // filled only when requested
  TrialSummary summary;
};

std::string env_name(EnvKind kind);
std::string learner_name(LearnerKind kind, FeedbackMode mode);

/// Deterministic in (cfg, T, seed). The environment draws from
/// RngStream(seed).child("env"), PABLO from .child("pablo").
TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t horizon, std::uint64_t seed, bool keep_rows = false);

// Seeds used for trial i: base_seed + i.
std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t index);

// PABLO_THREADS, else hardware concurrency, at least 1.
std::size_t default_thread_count();

/// Runs fn(i) for i in [0, n) on a pool; results land by index so the
/// output is independent of scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// All (T, seed) trials of the config, ordered by horizon then seed.
std::vector<TrialSummary> run_all(const ExperimentConfig& cfg, std::size_t threads);

// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct HorizonAggregate {
  std::size_t T = 0;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double stderr_ = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
};

struct ScalingFit {
  bool degenerate = true;
  std::string reason;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of ln y on ln x. Needs >= 4 points, all positive.
ScalingFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

struct SweepResult {
  std::vector<TrialSummary> trials;
  std::vector<HorizonAggregate> aggregates;
  ScalingFit fit;
};

// Aggregates regret_dynamic per horizon and fits ln mean vs ln T.
SweepResult sweep(const ExperimentConfig& cfg, std::size_t threads);
std::vector<HorizonAggregate> aggregate(const std::vector<TrialSummary>& trials);

struct CertificateViolation {
  std::uint64_t seed = 0;
  std::size_t round = 0;  // 1-based prefix length where the bound failed
  double regret = 0.0;
  double bound = 0.0;
};

struct CertificateReport {
  std::size_t trials = 0;
  std::vector<CertificateViolation> violations;
  bool passed() const { return violations.empty(); }
};

/// Full-information dynamic_base / dynamic_meta runs checked against the
/// matching certificate at every prefix (general form for the base, the
/// meta display at the final round).
CertificateReport certify(const ExperimentConfig& cfg, std::size_t threads);

// CSV with header env,learner,d,T,seed,regret_static,... and %.17g numbers.
extern const char* const kTrialCsvHeader;
void write_trials_csv(std::ostream& os, const std::vector<TrialSummary>& trials);
std::vector<TrialSummary> read_trials_csv(std::istream& is);
void write_rounds_csv(std::ostream& os, const TrialRecord& record);
void write_aggregate_csv(std::ostream& os, const std::vector<HorizonAggregate>& aggs);
std::string format_double(double v);

// Sidecar: resolved config, version and optional extras (fit).
std::string sidecar_json(const ExperimentConfig& cfg, const std::string& command, const ScalingFit* fit = nullptr);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Invariant and certificate suite behind `check`.
std::vector<CheckResult> run_check_suite();

}  // namespace pablo
