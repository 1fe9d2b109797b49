#include <doctest.h>

#include <cmath>

#include "polysim/analysis.hpp"
#include "polysim/errors.hpp"

using namespace polysim;

TEST_CASE("ks_exponential on plug-in quantiles is near zero") {
    const double rate = 2.5;
    const std::size_t n = 200;
    std::vector<double> samples;
    for (std::size_t i = 1; i <= n; ++i)
        samples.push_back(-std::log(1.0 - static_cast<double>(i) / (n + 1)) / rate);
    const auto result = ks_exponential(samples, rate);
    CHECK(result.statistic <= 1.0 / (n + 1) + 1e-12);
    CHECK(result.pass);
}

TEST_CASE("ks_exponential rejects a degenerate sample") {
    std::vector<double> zeros(50, 0.0);
    const auto result = ks_exponential(zeros, 1.0);
    CHECK(result.statistic == doctest::Approx(1.0));
    CHECK_FALSE(result.pass);
}

TEST_CASE("ks_exponential is scale equivariant") {
    Rng rng(8);
    std::vector<double> samples;
    for (int i = 0; i < 100; ++i) samples.push_back(rng.exponential(0.7));
    const auto base = ks_exponential(samples, 0.7);
    const double c = 13.37;
    std::vector<double> scaled = samples;
    for (double& x : scaled) x *= c;
    const auto rescaled = ks_exponential(scaled, 0.7 / c);
    CHECK(base.statistic == doctest::Approx(rescaled.statistic).epsilon(1e-12));
}

TEST_CASE("ks_exponential needs enough samples") {
    std::vector<double> tiny(10, 1.0);
    CHECK_THROWS_AS(ks_exponential(tiny, 1.0), insufficient_data);
}

TEST_CASE("poisson_stream_test accepts synthetic Poisson input") {
    Rng rng(314);
    const double rate = 1.0;
    const double horizon = 3.0;
    std::vector<std::vector<double>> streams;
    for (int rep = 0; rep < 200; ++rep) {
        // extend one event past the horizon, as the poisson_window stop does
        std::vector<double> times;
        double t = 0.0;
        while (t <= horizon) {
            t += rng.exponential(rate);
            times.push_back(t);
        }
        streams.push_back(std::move(times));
    }
    const auto result = poisson_stream_test(streams, rate, horizon);
    CHECK(result.dispersion_ratio > 0.8);
    CHECK(result.dispersion_ratio < 1.2);
    CHECK(result.interarrival_ks.pass);
}

TEST_CASE("poisson_stream_test false-positive budget on the target law") {
    // meta-test: 20 independent synthetic batches at the 5% level should
    // rarely fail; allow 3 failures across gap-KS and dispersion each
    Rng rng(2718);
    int ks_failures = 0;
    int dispersion_failures = 0;
    for (int batch = 0; batch < 20; ++batch) {
        std::vector<std::vector<double>> streams;
        for (int rep = 0; rep < 150; ++rep) {
            std::vector<double> times;
            double t = 0.0;
            while (t <= 3.0) {
                t += rng.exponential(1.0);
                times.push_back(t);
            }
            streams.push_back(std::move(times));
        }
        const auto result = poisson_stream_test(streams, 1.0, 3.0);
        if (!result.interarrival_ks.pass) ++ks_failures;
        if (result.dispersion_ratio < 0.8 || result.dispersion_ratio > 1.2) ++dispersion_failures;
    }
    CHECK(ks_failures <= 3);
    CHECK(dispersion_failures <= 3);
}

TEST_CASE("poisson_stream_test rejects a deterministic stream") {
    std::vector<std::vector<double>> streams;
    for (int rep = 0; rep < 100; ++rep) streams.push_back({1.0, 2.0, 3.0, 4.0, 5.0});
    const auto result = poisson_stream_test(streams, 1.0, 6.0);
    CHECK(result.dispersion_ratio == doctest::Approx(0.0));
    CHECK_FALSE(result.interarrival_ks.pass);
}

TEST_CASE("cv basics") {
    CHECK(cv({3.0, 3.0, 3.0, 3.0}) == doctest::Approx(0.0));
    Rng rng(5);
    std::vector<double> exponential;
    for (int i = 0; i < 20000; ++i) exponential.push_back(rng.exponential(3.0));
    CHECK(cv(exponential) == doctest::Approx(1.0).epsilon(0.05));
    CHECK_THROWS_AS(cv({1.0, -1.0}), undefined_statistic);
    CHECK_THROWS_AS(cv({1.0}), insufficient_data);
}

TEST_CASE("mm_infinity_laplace closed forms for small levels") {
    MMInfParams params;
    params.arrival = 2.0;
    params.service = 1.0;
    const double beta = params.arrival / params.service;

    params.level = 1;
    for (double xi : {0.0, 0.3, 1.0, 4.0})
        CHECK(mm_infinity_laplace(params, xi) == doctest::Approx(1.0 / (1.0 + xi / beta)).epsilon(1e-14));

    params.level = 2;
    for (double xi : {0.0, 0.3, 1.0, 4.0}) {
        const double expected = 1.0 / (1.0 + 2.0 * xi / beta + xi * (xi + 1.0) / (beta * beta));
        CHECK(mm_infinity_laplace(params, xi) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("mm_infinity_laplace is a Laplace transform in xi") {
    MMInfParams params;
    params.arrival = 1.5;
    params.service = 2.0;
    params.level = 7;
    double previous = 1.0;
    CHECK(mm_infinity_laplace(params, 0.0) == doctest::Approx(1.0));
    for (double xi = 0.25; xi <= 8.0; xi += 0.25) {
        const double value = mm_infinity_laplace(params, xi);
        CHECK(value > 0.0);
        CHECK(value < previous);
        previous = value;
    }
}

TEST_CASE("mm_infinity_simulate edge behavior") {
    MMInfParams params;
    params.arrival = 2.0;
    params.service = 1.0;

    SUBCASE("level at or below the initial state is hit at time zero") {
        params.level = 3;
        params.initial = 3;
        Rng rng(4);
        CHECK(mm_infinity_simulate(params, rng) == 0.0);
    }

    SUBCASE("pure birth process has Gamma hitting times") {
        params.service = 0.0;
        params.level = 6;
        params.initial = 0;
        double sum = 0.0;
        const int paths = 20000;
        for (int i = 0; i < paths; ++i)
            sum += mm_infinity_simulate(params, mix_seed(99, static_cast<std::uint64_t>(i)));
        const double mean_t = sum / paths;
        const double expected = 6.0 / 2.0;  // n/arrival
        CHECK(std::abs(mean_t - expected) < 3.5 * expected / std::sqrt(6.0 * paths));
    }

    SUBCASE("batch arrivals reach the level in one epoch") {
        params.batch = 3;
        params.level = 3;
        params.initial = 0;
        params.service = 1.0;
        double sum = 0.0;
        const int paths = 20000;
        for (int i = 0; i < paths; ++i)
            sum += mm_infinity_simulate(params, mix_seed(7, static_cast<std::uint64_t>(i)));
        const double mean_t = sum / paths;  // Exp(arrival) mean 1/2
        CHECK(std::abs(mean_t - 0.5) < 3.5 * 0.5 / std::sqrt(static_cast<double>(paths)));
    }
}

TEST_CASE("mm_infinity closed form matches Monte Carlo") {
    MMInfParams params;
    params.arrival = 2.0;
    params.service = 1.0;
    params.level = 4;
    const double xi = 0.5;
    const double closed = mm_infinity_laplace(params, xi);
    double sum = 0.0, sum_sq = 0.0;
    const int paths = 20000;
    for (int i = 0; i < paths; ++i) {
        const double t = mm_infinity_simulate(params, mix_seed(55, static_cast<std::uint64_t>(i)));
        const double value = std::exp(-params.service * xi * t);
        sum += value;
        sum_sq += value * value;
    }
    const double mc = sum / paths;
    const double se = std::sqrt((sum_sq / paths - mc * mc) / paths);
    CHECK(std::abs(mc - closed) < 3.0 * se);
}

TEST_CASE("lag_scaling_report calibration and retention") {
    const auto make_summary = [](std::int64_t N, std::int64_t id, double l_scaled, double span) {
        ReplicationSummary summary;
        summary.replication_id = id;
        summary.N = N;
        summary.L_scaled = l_scaled;
        summary.explosion_span = span;
        return summary;
    };

    SUBCASE("identical laws retain about 95 percent") {
        Rng rng(17);
        std::vector<ReplicationSummary> rows;
        for (std::int64_t N : {100, 200, 400})
            for (std::int64_t i = 0; i < 400; ++i)
                rows.push_back(make_summary(N, i, rng.exponential(1.0), 1.0));
        const auto report = lag_scaling_report(rows);
        REQUIRE(report.groups.size() == 3);
        CHECK(report.groups[0].retained_fraction == doctest::Approx(0.95).epsilon(0.02));
        for (std::size_t i = 1; i < report.groups.size(); ++i)
            CHECK(report.groups[i].retained_fraction > 0.9);
    }

    SUBCASE("drifting scale collapses retention") {
        Rng rng(18);
        std::vector<ReplicationSummary> rows;
        double scale = 1.0;
        for (std::int64_t N : {100, 200, 400}) {
            for (std::int64_t i = 0; i < 200; ++i)
                rows.push_back(make_summary(N, i, scale * (1.0 + rng.uniform()), 1.0));
            scale *= 100.0;
        }
        const auto report = lag_scaling_report(rows);
        CHECK(report.groups.back().retained_fraction == doctest::Approx(0.0));
    }

    SUBCASE("order of rows does not matter") {
        Rng rng(19);
        std::vector<ReplicationSummary> rows;
        for (std::int64_t N : {100, 200})
            for (std::int64_t i = 0; i < 100; ++i)
                rows.push_back(make_summary(N, i, rng.exponential(1.0), 1.0));
        auto shuffled = rows;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
        const auto a = lag_scaling_report(rows);
        const auto b = lag_scaling_report(shuffled);
        CHECK(a.k1 == doctest::Approx(b.k1));
        CHECK(a.k2 == doctest::Approx(b.k2));
        for (std::size_t i = 0; i < a.groups.size(); ++i)
            CHECK(a.groups[i].retained_fraction == doctest::Approx(b.groups[i].retained_fraction));
    }

    SUBCASE("insufficient replications raise") {
        std::vector<ReplicationSummary> rows;
        for (std::int64_t i = 0; i < 10; ++i) {
            rows.push_back(make_summary(100, i, 1.0, 1.0));
            rows.push_back(make_summary(200, i, 1.0, 1.0));
        }
        CHECK_THROWS_AS(lag_scaling_report(rows), insufficient_data);
    }
}

TEST_CASE("sigmoid_sharpness crossings") {
    const std::int64_t N = 1000;

    SUBCASE("step function has zero sharpness") {
        std::vector<CurvePoint> curve;
        for (int i = 0; i <= 100; ++i) {
            const double t = static_cast<double>(i) / 100.0;
            curve.push_back({t, 0, t < 0.6 ? 0 : N});
        }
        const auto result = sigmoid_sharpness(curve, N);
        REQUIRE(result.complete);
        CHECK(result.t10 == doctest::Approx(0.6));
        CHECK(result.t90 == doctest::Approx(0.6));
        CHECK(result.sharpness == doctest::Approx(0.0));
    }

    SUBCASE("linear ramp gives 1.6") {
        std::vector<CurvePoint> curve;
        for (int i = 0; i <= 1000; ++i) {
            const double t = static_cast<double>(i) / 1000.0;
            curve.push_back({t, 0, static_cast<std::int64_t>(std::llround(t * N))});
        }
        const auto result = sigmoid_sharpness(curve, N);
        REQUIRE(result.complete);
        CHECK(result.t10 == doctest::Approx(0.1));
        CHECK(result.t50 == doctest::Approx(0.5));
        CHECK(result.t90 == doctest::Approx(0.9));
        CHECK(result.sharpness == doctest::Approx(1.6));
    }

    SUBCASE("incomplete curve is flagged") {
        std::vector<CurvePoint> curve = {{0.0, 0, 0}, {1.0, 0, N / 2}};
        const auto result = sigmoid_sharpness(curve, N);
        CHECK_FALSE(result.complete);
    }
}

TEST_CASE("quantile and median helpers") {
    std::vector<double> values{5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(median(values) == doctest::Approx(3.0));
    CHECK(quantile(values, 0.0) == doctest::Approx(1.0));
    CHECK(quantile(values, 1.0) == doctest::Approx(5.0));
    CHECK(quantile(values, 0.25) == doctest::Approx(2.0));
    CHECK(quantile({1.0, 2.0}, 0.75) == doctest::Approx(1.75));
}
