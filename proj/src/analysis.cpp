#include "polysim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "polysim/errors.hpp"

namespace polysim {

ReplicationSummary ReplicationSummary::from(const TrajectoryRecord& record,
                                            const ModelParams& params, std::int64_t N,
                                            std::int64_t replication_id) {
    ReplicationSummary summary;
    summary.replication_id = replication_id;
    summary.seed = record.seed;
    summary.N = N;
    const double psi_N = psi(params, N);
    if (record.first_nucleation_time) {
        summary.T_N = *record.first_nucleation_time;
        summary.T_scaled = *record.first_nucleation_time / psi_N;
    }
    if (record.lag_time) {
        summary.L_delta = *record.lag_time;
        summary.L_scaled = *record.lag_time / psi_N;
        if (record.first_nucleation_time)
            summary.explosion_span = (*record.lag_time - *record.first_nucleation_time) /
                                     std::log(static_cast<double>(N));
    }
    summary.half_time = record.half_time;
    summary.event_count = record.event_count;
    summary.truncated = record.truncated;
    return summary;
}

double mean(const std::vector<double>& samples) {
    if (samples.empty()) throw insufficient_data("mean of an empty sample");
    double total = 0.0;
    for (double x : samples) total += x;
    return total / static_cast<double>(samples.size());
}

double sample_sd(const std::vector<double>& samples) {
    if (samples.size() < 2) throw insufficient_data("sample sd needs >= 2 samples");
    const double m = mean(samples);
    double ss = 0.0;
    for (double x : samples) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

double quantile(std::vector<double> samples, double p) {
    if (samples.empty()) throw insufficient_data("quantile of an empty sample");
    if (p < 0.0 || p > 1.0) throw config_error("quantile level must lie in [0,1]");
    std::sort(samples.begin(), samples.end());
    const double h = p * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= samples.size()) return samples.back();
    const double frac = h - static_cast<double>(lo);
    return samples[lo] + frac * (samples[lo + 1] - samples[lo]);
}

double median(std::vector<double> samples) { return quantile(std::move(samples), 0.5); }

double cv(const std::vector<double>& samples) {
    if (samples.size() < 2) throw insufficient_data("cv needs >= 2 samples");
    const double m = mean(samples);
    if (m == 0.0) throw undefined_statistic("cv of a zero-mean sample");
    return sample_sd(samples) / m;
}

namespace {

double ks_coefficient(double level) { return std::sqrt(-std::log(level / 2.0) / 2.0); }

}  // namespace

KsResult ks_exponential(const std::vector<double>& samples, double rate, double level) {
    if (samples.size() < 20) throw insufficient_data("ks_exponential needs >= 20 samples");
    if (!(rate > 0.0)) throw config_error("ks_exponential needs a positive rate");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = 1.0 - std::exp(-rate * sorted[i]);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - f;
        const double lo = f - static_cast<double>(i) / static_cast<double>(n);
        d = std::max({d, hi, lo});
    }
    KsResult result;
    result.statistic = d;
    result.n = n;
    result.critical_value = ks_coefficient(level) / std::sqrt(static_cast<double>(n));
    result.pass = d < result.critical_value;
    return result;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level) {
    if (a.size() < 2 || b.size() < 2) throw insufficient_data("ks_two_sample needs both samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    KsResult result;
    result.statistic = d;
    result.n = std::min(a.size(), b.size());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    result.critical_value = ks_coefficient(level) * std::sqrt((na + nb) / (na * nb));
    result.pass = d < result.critical_value;
    return result;
}

PoissonStreamResult poisson_stream_test(const std::vector<std::vector<double>>& event_times,
                                        double rate, double horizon, double level) {
    if (event_times.size() < 2) throw insufficient_data("poisson_stream_test needs >= 2 replications");
    PoissonStreamResult result;
    result.replications = event_times.size();
    std::vector<double> counts;
    counts.reserve(event_times.size());
    std::vector<double> gaps;
    const bool windowed = horizon > 0.0;
    for (const auto& times : event_times) {
        std::size_t in_window = 0;
        // A gap enters the pool iff it starts inside the window; this keeps
        // the pooled law exactly exponential, with no right-censoring bias.
        // Streams should therefore extend one event past the horizon.
        double previous = 0.0;
        for (double t : times) {
            if (windowed && t <= horizon) ++in_window;
            if (!windowed || previous < horizon) gaps.push_back(t - previous);
            previous = t;
        }
        counts.push_back(static_cast<double>(windowed ? in_window : times.size()));
        result.total_events += windowed ? in_window : times.size();
    }
    if (result.total_events == 0) throw insufficient_data("poisson_stream_test saw no events");
    const double count_mean = mean(counts);
    if (count_mean == 0.0) throw insufficient_data("poisson_stream_test saw no events");
    const double sd = sample_sd(counts);
    result.dispersion_ratio = sd * sd / count_mean;
    if (gaps.size() >= 20) result.interarrival_ks = ks_exponential(gaps, rate, level);
    return result;
}

double mm_infinity_laplace(const MMInfParams& params, double xi) {
    if (!(params.arrival > 0.0) || !(params.service > 0.0))
        throw config_error("mm_infinity_laplace needs positive rates");
    if (params.initial != 0)
        throw unsupported_config("closed ratio form requires initial state 0");
    if (params.level < 1 || params.level > 60)
        throw unsupported_config("mm_infinity_laplace supports 1 <= n <= 60");
    if (!(xi >= 0.0)) throw config_error("xi must be non-negative");
    const double beta = params.arrival / params.service;
    const auto n = params.level;
    double d = 1.0;          // k = 0 term
    double binom = 1.0;      // C(n, k)
    double beta_pow = 1.0;   // beta^-k
    double rising = 1.0;     // prod_{i<k} (xi + i)
    for (std::int64_t k = 1; k <= n; ++k) {
        binom *= static_cast<double>(n - k + 1) / static_cast<double>(k);
        beta_pow /= beta;
        rising *= xi + static_cast<double>(k - 1);
        d += binom * beta_pow * rising;
        if (!std::isfinite(d)) throw precision_error("mm_infinity_laplace series overflowed; reduce n");
    }
    return 1.0 / d;
}

double mm_infinity_simulate(const MMInfParams& params, Rng& rng) {
    if (!(params.arrival > 0.0)) throw config_error("mm_infinity_simulate needs a positive arrival rate");
    if (params.service < 0.0) throw config_error("service rate must be non-negative");
    if (params.batch < 1) throw config_error("batch size must be >= 1");
    if (params.initial < 0) throw config_error("initial state must be non-negative");
    std::int64_t x = params.initial;
    double t = 0.0;
    while (x < params.level) {
        const double total = params.arrival + params.service * static_cast<double>(x);
        t += rng.exponential(total);
        if (rng.uniform() * total < params.arrival)
            x += params.batch;
        else
            x -= 1;
    }
    return t;
}

double mm_infinity_simulate(const MMInfParams& params, std::uint64_t seed) {
    Rng rng(seed);
    return mm_infinity_simulate(params, rng);
}

LagScalingReport lag_scaling_report(const std::vector<ReplicationSummary>& summaries,
                                    std::size_t min_replications) {
    std::map<std::int64_t, std::vector<const ReplicationSummary*>> groups;
    for (const auto& summary : summaries) groups[summary.N].push_back(&summary);
    if (groups.size() < 2) throw insufficient_data("lag_scaling_report needs >= 2 distinct N");
    for (const auto& [N, rows] : groups)
        if (rows.size() < min_replications)
            throw insufficient_data("lag_scaling_report needs >= " + std::to_string(min_replications) +
                                    " replications at N=" + std::to_string(N));

    LagScalingReport report;
    bool bracket_set = false;
    for (const auto& [N, rows] : groups) {
        LagScalingReport::Group group;
        group.N = N;
        group.replications = rows.size();
        std::vector<double> l_scaled;
        std::vector<double> spans;
        for (const auto* row : rows) {
            if (row->L_scaled) l_scaled.push_back(*row->L_scaled);
            if (row->explosion_span) spans.push_back(*row->explosion_span);
        }
        group.with_lag = l_scaled.size();
        if (!bracket_set) {
            // Calibration group: the smallest N (map iterates ascending).
            if (l_scaled.empty())
                throw insufficient_data("no lag times observed at the calibration N");
            report.k1 = quantile(l_scaled, 0.025);
            report.k2 = quantile(l_scaled, 0.975);
            bracket_set = true;
        }
        if (!l_scaled.empty()) {
            std::size_t inside = 0;
            for (double value : l_scaled)
                if (value >= report.k1 && value <= report.k2) ++inside;
            group.retained_fraction =
                static_cast<double>(inside) / static_cast<double>(l_scaled.size());
            group.median_l_scaled = median(l_scaled);
        }
        if (!spans.empty()) group.median_span = median(spans);
        report.groups.push_back(group);
    }
    return report;
}

SharpnessResult sigmoid_sharpness(const std::vector<CurvePoint>& curve, std::int64_t N) {
    if (curve.empty()) throw insufficient_data("sigmoid_sharpness needs a non-empty curve");
    SharpnessResult result;
    const auto crossing = [&](double threshold, double& out) {
        for (const auto& point : curve) {
            if (static_cast<double>(point.poly_mass) >= threshold * static_cast<double>(N)) {
                out = point.t;
                return true;
            }
        }
        return false;
    };
    const bool c10 = crossing(0.1, result.t10);
    const bool c50 = crossing(0.5, result.t50);
    const bool c90 = crossing(0.9, result.t90);
    result.complete = c10 && c50 && c90;
    if (result.complete && result.t50 > 0.0)
        result.sharpness = (result.t90 - result.t10) / result.t50;
    return result;
}

}  // namespace polysim
