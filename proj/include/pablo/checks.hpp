#pragma once

#include <cstddef>
#include <cstdint>

#include "pablo/harness.hpp"

// Invariant and experiment checks shared by `pablo check` and the
// acceptance binary. Each returns a named pass/fail with a short detail.
namespace pablo::checks {

CheckResult unbiasedness(std::size_t instances, std::uint64_t seed);
CheckResult second_moment(std::size_t instances, std::uint64_t seed);
CheckResult estimator_norm_bounds(std::size_t instances, std::uint64_t seed);

// Base-learner certificate on random streams and switching comparators,
// iterate growth, and adaptive-sign origin regret.
CheckResult base_certificate(std::size_t trials, std::size_t horizon, std::uint64_t seed);
CheckResult meta_certificate(std::size_t trials, std::size_t horizon, std::uint64_t seed);

// Huber inequalities, comparator penalty bound, fixed-point residuals,
// penalty-gradient bound and the zero-penalty reduction.
CheckResult composite_suite(std::size_t sequences, std::size_t learner_trials, std::uint64_t seed);

// sum a_t / (sum_{s<=t} a_s)^{1-1/p} <= p (sum a)^{1/p} and the log bound.
CheckResult sum_inequalities(std::size_t sequences, std::uint64_t seed);

// Clipped hypercube losses never exceed norm 1.
CheckResult clipped_env_bound(std::size_t draws, std::uint64_t seed);

CheckResult run_determinism();
CheckResult csv_round_trip();

struct ExperimentScale {
  std::size_t seeds = 64;
  std::size_t threads = 1;
};

// Empirical scaling and health experiments.
CheckResult static_scaling(const ExperimentScale& scale);
CheckResult path_length_scaling(const ExperimentScale& scale);
CheckResult highprob_quantiles(const ExperimentScale& scale);
CheckResult lower_bound_health(const ExperimentScale& scale);

// Configs behind the experiments, exposed so the CLI and tests can reuse them.
ExperimentConfig static_scaling_config(std::size_t seeds);
ExperimentConfig path_length_config(std::size_t switches, std::size_t seeds);
ExperimentConfig highprob_config(std::size_t seeds);
ExperimentConfig lower_bound_config(std::size_t d, bool clipped, std::size_t seeds);

}  // namespace pablo::checks
