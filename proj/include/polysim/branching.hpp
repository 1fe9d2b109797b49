#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polysim/fragmentation.hpp"
#include "polysim/rng.hpp"

namespace polysim {

/// Parameters of the stable-polymer branching process: every polymer
/// grows by one at rate alpha and fragments at rate mu; fragments below
/// the nucleus size are discarded.
struct BranchingParams {
    double alpha = 1.0;
    double mu = 1.0;
    int n_c = 4;
    FragmentationSpec fragmentation;
    std::int64_t initial_size = 4;  // m >= n_c

    void validate() const;
};

struct BranchingRecord {
    std::vector<std::pair<double, std::int64_t>> population_curve;  // (t, ||Z||_c)
    bool extinct = false;
    std::optional<double> extinction_time;
    std::optional<double> growth_rate_estimate;  // least-squares slope of log ||Z||_c
    bool capped = false;
    double end_time = 0.0;
    std::uint64_t event_count = 0;
    std::uint64_t seed = 0;
};

BranchingRecord run_branching(const BranchingParams& params, double horizon,
                              std::int64_t population_cap, std::uint64_t seed,
                              int curve_points = 256);

/// The paper's lower bound on the mean number of stable fragments,
/// (1+eps) * (alpha/(alpha+mu))^(k0 - n_c).
double offspring_mean_bound(const BranchingParams& params, double epsilon, std::int64_t k0);

struct SurvivalEstimate {
    double survival_prob = 0.0;
    double survival_ci_low = 0.0;
    double survival_ci_high = 0.0;
    std::optional<double> growth_rate;
    double growth_ci_low = 0.0;
    double growth_ci_high = 0.0;
    std::int64_t replications = 0;
    std::int64_t survivors = 0;
    std::int64_t capped_runs = 0;
};

/// Monte Carlo survival probability and exponential growth rate with
/// normal-approximation confidence intervals. Capped runs count as
/// survivors; growth rates are fitted on the last half of each surviving
/// run's observed span.
SurvivalEstimate estimate_survival(const BranchingParams& params, std::int64_t replications,
                                   double horizon, std::int64_t cap, std::uint64_t seed);

struct CriticalRatioEstimate {
    double kappa_hat = 0.0;   // smallest alpha/mu whose survival CI excludes 0
    double bracket_low = 0.0;
    double bracket_high = 0.0;
    double survival_at_high = 0.0;
};

/// Empirical stand-in for the existential threshold ratio: bisection on
/// alpha/mu for the smallest ratio whose survival CI excludes zero.
CriticalRatioEstimate find_critical_ratio(const BranchingParams& base, std::int64_t replications,
                                          double horizon, std::int64_t cap, std::uint64_t seed,
                                          int iterations = 10);

}  // namespace polysim
