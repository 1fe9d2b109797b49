#include "polysim/branching.hpp"

#include <algorithm>
#include <cmath>

#include "polysim/errors.hpp"

namespace polysim {

void BranchingParams::validate() const {
    if (n_c <= 2) throw config_error("n_c must exceed 2");
    if (!(alpha >= 0.0) || !(mu >= 0.0) || !(alpha + mu > 0.0))
        throw config_error("branching rates must be non-negative with alpha + mu > 0");
    if (initial_size < n_c) throw config_error("initial polymer size must be at least n_c");
    fragmentation.validate();
}

namespace {

std::optional<double> slope_of_log_population(
    const std::vector<std::pair<double, std::int64_t>>& curve, double span_end) {
    // Fit on the last half of the observed span, only where the population
    // is alive.
    const double window_start = span_end / 2.0;
    double sum_t = 0.0, sum_y = 0.0, sum_tt = 0.0, sum_ty = 0.0;
    std::int64_t n = 0;
    for (const auto& [t, population] : curve) {
        if (t < window_start || population <= 0) continue;
        const double y = std::log(static_cast<double>(population));
        sum_t += t;
        sum_y += y;
        sum_tt += t * t;
        sum_ty += t * y;
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double denom = static_cast<double>(n) * sum_tt - sum_t * sum_t;
    if (denom <= 0.0) return std::nullopt;
    return (static_cast<double>(n) * sum_ty - sum_t * sum_y) / denom;
}

}  // namespace

BranchingRecord run_branching(const BranchingParams& params, double horizon,
                              std::int64_t population_cap, std::uint64_t seed, int curve_points) {
    params.validate();
    if (!(horizon > 0.0)) throw config_error("branching horizon must be positive");
    if (population_cap < 1) throw config_error("population cap must be >= 1");
    if (curve_points < 2) throw config_error("curve_points must be >= 2");

    Rng rng(seed);
    BranchingRecord record;
    record.seed = seed;
    record.population_curve.reserve(static_cast<std::size_t>(curve_points));

    std::vector<std::int64_t> sizes{params.initial_size};
    std::vector<std::pair<std::int64_t, std::int64_t>> pieces;

    const double grid_step = horizon / static_cast<double>(curve_points - 1);
    int grid_next = 0;
    const auto fill_curve = [&](double up_to, bool inclusive) {
        while (grid_next < curve_points) {
            const double grid_t = grid_step * static_cast<double>(grid_next);
            const bool covered = inclusive ? grid_t <= up_to + grid_step * 1e-9 : grid_t < up_to;
            if (!covered) break;
            record.population_curve.push_back({grid_t, static_cast<std::int64_t>(sizes.size())});
            ++grid_next;
        }
    };

    const double grow_prob = params.alpha / (params.alpha + params.mu);
    double t = 0.0;
    while (true) {
        const auto population = static_cast<std::int64_t>(sizes.size());
        if (population == 0) {
            record.extinct = true;
            record.extinction_time = t;
            fill_curve(horizon, true);  // dead forever after
            t = horizon;
            break;
        }
        if (population >= population_cap) {
            record.capped = true;
            fill_curve(t, true);
            break;
        }
        const double total = (params.alpha + params.mu) * static_cast<double>(population);
        const double dt = rng.exponential(total);
        if (t + dt >= horizon) {
            fill_curve(horizon, true);
            t = horizon;
            break;
        }
        fill_curve(t + dt, false);
        t += dt;
        ++record.event_count;

        const auto idx = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(population)));
        if (rng.bernoulli(grow_prob)) {
            sizes[idx] += 1;
        } else {
            const std::int64_t k = sizes[idx];
            sample_pieces(params.fragmentation, k, rng, pieces);
            sizes[idx] = sizes.back();
            sizes.pop_back();
            for (const auto& [size, count] : pieces) {
                if (size < params.n_c) continue;
                for (std::int64_t c = 0; c < count; ++c) sizes.push_back(size);
            }
        }
    }
    record.end_time = t;
    record.growth_rate_estimate = slope_of_log_population(record.population_curve, record.end_time);
    return record;
}

double offspring_mean_bound(const BranchingParams& params, double epsilon, std::int64_t k0) {
    if (!(epsilon > 0.0) || epsilon >= 1.0) throw config_error("epsilon must lie in (0,1)");
    if (k0 < params.n_c) throw config_error("k0 must be at least n_c");
    const double reach = params.alpha / (params.alpha + params.mu);
    return (1.0 + epsilon) * std::pow(reach, static_cast<double>(k0 - params.n_c));
}

SurvivalEstimate estimate_survival(const BranchingParams& params, std::int64_t replications,
                                   double horizon, std::int64_t cap, std::uint64_t seed) {
    if (replications < 1) throw config_error("replications must be >= 1");
    SurvivalEstimate estimate;
    estimate.replications = replications;
    std::vector<double> slopes;
    for (std::int64_t rep = 0; rep < replications; ++rep) {
        const auto record =
            run_branching(params, horizon, cap, mix_seed(seed, static_cast<std::uint64_t>(rep)));
        if (record.capped) ++estimate.capped_runs;
        if (!record.extinct) {
            ++estimate.survivors;
            if (record.growth_rate_estimate) slopes.push_back(*record.growth_rate_estimate);
        }
    }
    const double n = static_cast<double>(replications);
    const double p_hat = static_cast<double>(estimate.survivors) / n;
    const double half_width = 1.96 * std::sqrt(p_hat * (1.0 - p_hat) / n);
    estimate.survival_prob = p_hat;
    estimate.survival_ci_low = std::max(0.0, p_hat - half_width);
    estimate.survival_ci_high = std::min(1.0, p_hat + half_width);

    if (!slopes.empty()) {
        double mean = 0.0;
        for (double s : slopes) mean += s;
        mean /= static_cast<double>(slopes.size());
        double var = 0.0;
        for (double s : slopes) var += (s - mean) * (s - mean);
        var = slopes.size() > 1 ? var / static_cast<double>(slopes.size() - 1) : 0.0;
        const double se = std::sqrt(var / static_cast<double>(slopes.size()));
        estimate.growth_rate = mean;
        estimate.growth_ci_low = mean - 1.96 * se;
        estimate.growth_ci_high = mean + 1.96 * se;
    }
    return estimate;
}

CriticalRatioEstimate find_critical_ratio(const BranchingParams& base, std::int64_t replications,
                                          double horizon, std::int64_t cap, std::uint64_t seed,
                                          int iterations) {
    const auto survives = [&](double ratio) {
        BranchingParams probe = base;
        probe.mu = 1.0;
        probe.alpha = ratio;
        const auto estimate = estimate_survival(probe, replications, horizon, cap, seed);
        return std::pair{estimate.survival_ci_low > 0.0, estimate.survival_prob};
    };

    double lo = 0.0;
    double hi = 1.0;
    double survival_hi = 0.0;
    for (int expansion = 0; expansion < 24; ++expansion) {
        const auto [alive, prob] = survives(hi);
        survival_hi = prob;
        if (alive) break;
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < iterations; ++it) {
        const double mid = (lo + hi) / 2.0;
        const auto [alive, prob] = survives(mid);
        if (alive) {
            hi = mid;
            survival_hi = prob;
        } else {
            lo = mid;
        }
    }
    return CriticalRatioEstimate{hi, lo, hi, survival_hi};
}

}  // namespace polysim
