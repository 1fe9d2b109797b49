#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polysim/model.hpp"
#include "polysim/rng.hpp"
#include "polysim/simulator.hpp"

namespace polysim {

/// Per-replication scalar outputs, the row format of the summary CSV.
struct ReplicationSummary {
    std::int64_t replication_id = 0;
    std::uint64_t seed = 0;
    std::int64_t N = 0;
    std::optional<double> T_N;              // first nucleation time
    std::optional<double> T_scaled;         // T^N / Psi(N)
    std::optional<double> L_delta;          // lag time
    std::optional<double> L_scaled;         // L_delta^N / Psi(N)
    std::optional<double> half_time;
    std::optional<double> explosion_span;   // (L - T) / log N
    std::uint64_t event_count = 0;
    bool truncated = false;

    static ReplicationSummary from(const TrajectoryRecord& record, const ModelParams& params,
                                   std::int64_t N, std::int64_t replication_id);
};

double mean(const std::vector<double>& samples);
double sample_sd(const std::vector<double>& samples);
double median(std::vector<double> samples);
/// Linear-interpolation quantile on a sorted copy (type-7).
double quantile(std::vector<double> samples, double p);

/// Coefficient of variation, sample sd / mean.
double cv(const std::vector<double>& samples);

struct KsResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    bool pass = false;
    std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov distance against Exp(rate), with the
/// asymptotic critical value c(level)/sqrt(n), c(a) = sqrt(-ln(a/2)/2).
KsResult ks_exponential(const std::vector<double>& samples, double rate, double level = 0.05);

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level = 0.05);

struct PoissonStreamResult {
    double dispersion_ratio = 0.0;  // variance/mean of per-replication counts
    KsResult interarrival_ks;       // pooled complete gaps vs Exp(rate)
    std::size_t replications = 0;
    std::size_t total_events = 0;
};

/// Tests a replicated event stream against a Poisson process of the given
/// rate on [0, horizon]: count dispersion plus a KS fit of the pooled
/// inter-arrival gaps. A gap is pooled iff it starts inside the window,
/// so streams should extend one event past the horizon (the poisson_window
/// stop rule produces exactly that); gaps pooled this way are free of
/// right-censoring bias. horizon <= 0 pools everything.
PoissonStreamResult poisson_stream_test(const std::vector<std::vector<double>>& event_times,
                                        double rate, double horizon, double level = 0.05);

struct MMInfParams {
    double arrival = 1.0;
    double service = 1.0;
    std::int64_t level = 1;    // hitting level n
    std::int64_t initial = 0;
    std::int64_t batch = 1;    // simultaneous arrivals a_0
};

/// Closed form for E[exp(-service * xi * T_n)] when starting from 0:
/// 1/D(xi) with D(xi) = sum_k C(n,k) beta^-k prod_{i<k}(xi+i), where
/// beta = arrival/service. The rising-product form never touches Gamma
/// directly, so it stays exact for the n <= 60 range offered.
double mm_infinity_laplace(const MMInfParams& params, double xi);

/// Exact birth-death path until the level is first reached; returns T_n.
double mm_infinity_simulate(const MMInfParams& params, Rng& rng);
double mm_infinity_simulate(const MMInfParams& params, std::uint64_t seed);

struct LagScalingReport {
    struct Group {
        std::int64_t N = 0;
        std::size_t replications = 0;
        std::size_t with_lag = 0;
        double retained_fraction = 0.0;  // fraction of L_scaled inside [k1, k2]
        std::optional<double> median_span;
        std::optional<double> median_l_scaled;
    };
    double k1 = 0.0;  // 2.5% quantile of L_scaled at the smallest N
    double k2 = 0.0;  // 97.5% quantile
    std::vector<Group> groups;  // ascending N
};

/// Scaling check of the lag time across N: an empirical bracket [K1, K2]
/// calibrated at the smallest N, with the retained mass at larger N.
LagScalingReport lag_scaling_report(const std::vector<ReplicationSummary>& summaries,
                                    std::size_t min_replications = 50);

struct SharpnessResult {
    double t10 = 0.0;
    double t50 = 0.0;
    double t90 = 0.0;
    double sharpness = 0.0;  // (t90 - t10) / t50
    bool complete = false;   // curve reached 90% polymerized mass
};

/// Crossing times of the polymerized-mass fraction (sizes >= 2) at
/// 10/50/90% and their sharpness ratio. Crossings are first sample times,
/// not interpolated.
SharpnessResult sigmoid_sharpness(const std::vector<CurvePoint>& curve, std::int64_t N);

}  // namespace polysim
