#include <doctest.h>

#include <cmath>
#include <map>

#include "polysim/errors.hpp"
#include "polysim/fragmentation.hpp"

using namespace polysim;

namespace {

double factorial(std::int64_t n) {
    double f = 1.0;
    for (std::int64_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f;
}

// Independent oracle for MF: place k-m balls into m urns, probability of
// an ordered tuple is the multinomial pmf via factorials; fold tuples
// into compositions of the piece sizes n_i + 1.
void mf_oracle_rec(const std::vector<double>& weights, std::size_t urn, std::int64_t remaining,
                   std::vector<std::int64_t>& balls, std::map<Composition, double>& acc,
                   std::int64_t total_balls) {
    if (urn + 1 == weights.size()) {
        balls[urn] = remaining;
        double prob = factorial(total_balls);
        std::vector<std::pair<std::int64_t, std::int64_t>> pieces;
        for (std::size_t i = 0; i < balls.size(); ++i) {
            prob /= factorial(balls[i]);
            prob *= std::pow(weights[i], static_cast<double>(balls[i]));
            pieces.push_back({balls[i] + 1, 1});
        }
        acc[Composition::from_pieces(pieces)] += prob;
        return;
    }
    for (std::int64_t n = 0; n <= remaining; ++n) {
        balls[urn] = n;
        mf_oracle_rec(weights, urn + 1, remaining - n, balls, acc, total_balls);
    }
}

std::map<Composition, double> mf_oracle(int m, const std::vector<double>& weights, std::int64_t k) {
    std::map<Composition, double> acc;
    std::vector<std::int64_t> balls(static_cast<std::size_t>(m), 0);
    mf_oracle_rec(weights, 0, k - m, balls, acc, k - m);
    return acc;
}

double total_variation(const std::map<Composition, double>& a,
                       const std::map<Composition, double>& b) {
    double tv = 0.0;
    auto keys = a;
    for (const auto& [key, value] : b) keys.try_emplace(key, 0.0);
    for (const auto& [key, unused] : keys) {
        const auto ita = a.find(key);
        const auto itb = b.find(key);
        tv += std::abs((ita != a.end() ? ita->second : 0.0) - (itb != b.end() ? itb->second : 0.0));
    }
    return tv / 2.0;
}

}  // namespace

TEST_CASE("UF pmf matches the display") {
    const auto spec = FragmentationSpec::uf();

    // k=2: the only split
    const auto support2 = enumerate_outcomes(spec, 2);
    REQUIRE(support2.size() == 1);
    CHECK(support2[0].first == Composition::single(1, 2));
    CHECK(support2[0].second == doctest::Approx(1.0));

    CHECK(pmf(spec, 3, Composition::from_pieces({{1, 1}, {2, 1}})) == doctest::Approx(1.0));
    CHECK(pmf(spec, 4, Composition::from_pieces({{1, 1}, {3, 1}})) == doctest::Approx(2.0 / 3.0));
    CHECK(pmf(spec, 4, Composition::single(2, 2)) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("BF(1/2) pmf") {
    const auto spec = FragmentationSpec::bf(0.5);
    CHECK(pmf(spec, 3, Composition::from_pieces({{1, 1}, {2, 1}})) == doctest::Approx(1.0));
    // k=4: weights C(4,1)=4 (doubled pair) and C(4,2)=6 (middle, halved)
    CHECK(pmf(spec, 4, Composition::from_pieces({{1, 1}, {3, 1}})) == doctest::Approx(8.0 / 14.0));
    CHECK(pmf(spec, 4, Composition::single(2, 2)) == doctest::Approx(6.0 / 14.0));
}

TEST_CASE("MF pmf agrees with the balls-in-urns oracle") {
    const auto spec = FragmentationSpec::mf(2, {0.5, 0.5});
    CHECK(pmf(spec, 4, Composition::from_pieces({{1, 1}, {3, 1}})) == doctest::Approx(0.5));
    CHECK(pmf(spec, 4, Composition::single(2, 2)) == doctest::Approx(0.5));

    for (std::int64_t k : {2, 3, 4, 7, 11}) {
        const auto oracle = mf_oracle(2, {0.5, 0.5}, k);
        for (const auto& [outcome, prob] : enumerate_outcomes(spec, k))
            CHECK(prob == doctest::Approx(oracle.at(outcome)).epsilon(1e-12));
    }
    const auto spec3 = FragmentationSpec::mf(3, {0.2, 0.3, 0.5});
    for (std::int64_t k : {3, 5, 9}) {
        const auto oracle = mf_oracle(3, {0.2, 0.3, 0.5}, k);
        for (const auto& [outcome, prob] : enumerate_outcomes(spec3, k))
            CHECK(prob == doctest::Approx(oracle.at(outcome)).epsilon(1e-12));
    }
}

TEST_CASE("MF below m collapses to monomers") {
    const auto spec = FragmentationSpec::mf(4, {0.25, 0.25, 0.25, 0.25});
    const auto support = enumerate_outcomes(spec, 3);
    REQUIRE(support.size() == 1);
    CHECK(support[0].first == Composition::single(1, 3));
    Rng rng(5);
    CHECK(sample(spec, 3, rng) == Composition::single(1, 3));
}

TEST_CASE("pmf sums to one over the support") {
    const auto check_sum = [](const FragmentationSpec& spec, std::int64_t k) {
        double total = 0.0;
        for (const auto& [outcome, prob] : enumerate_outcomes(spec, k)) {
            CHECK(outcome.mass() == k);
            total += prob;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    };
    for (std::int64_t k : {2, 3, 5, 12, 33, 64}) {
        check_sum(FragmentationSpec::uf(), k);
        check_sum(FragmentationSpec::bf(0.5), k);
        check_sum(FragmentationSpec::bf(0.23), k);
        check_sum(FragmentationSpec::mf(2, {0.5, 0.5}), k);
    }
    check_sum(FragmentationSpec::mf(3, {0.2, 0.3, 0.5}), 20);
}

TEST_CASE("moments by enumeration and the mass identity") {
    const auto uf = FragmentationSpec::uf();
    CHECK(moment(uf, 4, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(moment(uf, 4, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(moment(uf, 4, 3) == doctest::Approx(2.0 / 3.0));
    CHECK(moment(uf, 2, 1) == doctest::Approx(2.0));

    const std::vector<FragmentationSpec> specs = {
        FragmentationSpec::uf(), FragmentationSpec::bf(0.5), FragmentationSpec::bf(0.7),
        FragmentationSpec::mf(2, {0.5, 0.5}), FragmentationSpec::mf(3, {0.2, 0.3, 0.5})};
    for (const auto& spec : specs) {
        for (std::int64_t k = 2; k <= 16; ++k) {
            double identity = 0.0;
            for (std::int64_t p = 1; p < k; ++p)
                identity += static_cast<double>(p) * moment(spec, k, p);
            CHECK(identity == doctest::Approx(static_cast<double>(k)).epsilon(1e-9));
        }
    }
}

TEST_CASE("sampled law matches the enumerated pmf") {
    Rng rng(97);
    const std::vector<FragmentationSpec> specs = {FragmentationSpec::uf(),
                                                  FragmentationSpec::bf(0.5),
                                                  FragmentationSpec::mf(2, {0.5, 0.5})};
    for (const auto& spec : specs) {
        for (std::int64_t k : {2, 5, 9, 12}) {
            std::map<Composition, double> expected;
            for (const auto& [outcome, prob] : enumerate_outcomes(spec, k)) expected[outcome] = prob;
            std::map<Composition, double> empirical;
            const int n = 100000;
            for (int i = 0; i < n; ++i) {
                const auto outcome = sample(spec, k, rng);
                REQUIRE(outcome.mass() == k);  // every draw mass-exact
                empirical[outcome] += 1.0 / n;
            }
            CHECK(total_variation(expected, empirical) < 0.02);
        }
    }
}

TEST_CASE("UF and BF(1/2) are symmetric in the split point") {
    for (std::int64_t k : {5, 6, 9, 12}) {
        for (std::int64_t l = 1; l < k; ++l) {
            const auto outcome = Composition::from_pieces({{l, 1}, {k - l, 1}});
            const auto mirrored = Composition::from_pieces({{k - l, 1}, {l, 1}});
            CHECK(pmf(FragmentationSpec::uf(), k, outcome) ==
                  doctest::Approx(pmf(FragmentationSpec::uf(), k, mirrored)));
            CHECK(pmf(FragmentationSpec::bf(0.5), k, outcome) ==
                  doctest::Approx(pmf(FragmentationSpec::bf(0.5), k, mirrored)));
        }
    }
}

TEST_CASE("check_A3 reports the expected fragment statistics") {
    Rng rng(31);

    SUBCASE("MF(2) never yields more than two small fragments") {
        const auto report =
            check_A3(FragmentationSpec::mf(2, {0.5, 0.5}), 4, 20, 40, 2000, rng);
        CHECK(report.c0_hat <= 2);
        CHECK_FALSE(report.growth_flag);
    }

    SUBCASE("UF two-stable fraction at k=100 matches the exact count") {
        const auto report = check_A3(FragmentationSpec::uf(), 4, 100, 100, 10000, rng);
        REQUIRE(report.rows.size() == 1);
        // both pieces >= 4 iff the split point lies in [4, 96]: 93 of 99
        const double exact = 93.0 / 99.0;
        const double se = std::sqrt(exact * (1 - exact) / 10000.0);
        CHECK(std::abs(report.rows[0].two_stable_fraction - exact) < 3 * se);
    }

    SUBCASE("below the nucleus size nothing is stable") {
        const auto report = check_A3(FragmentationSpec::uf(), 4, 2, 3, 500, rng);
        for (const auto& row : report.rows) CHECK(row.two_stable_fraction == 0.0);
    }
}

TEST_CASE("check_A4 exact monotonicity") {
    SUBCASE("MF(2,(1/2,1/2)) has no violations") {
        const auto spec = FragmentationSpec::mf(2, {0.5, 0.5});
        CHECK(check_A4(spec, 6, 8).passed());
        for (std::int64_t k = 2; k <= 12; ++k)
            for (std::int64_t kp = k + 1; kp <= 12; ++kp) CHECK(check_A4(spec, k, kp).passed());
    }

    SUBCASE("equal sizes are vacuously monotone") {
        CHECK(check_A4(FragmentationSpec::uf(), 7, 7).passed());
    }

    SUBCASE("report covers the full threshold/count table") {
        const auto report = check_A4(FragmentationSpec::uf(), 4, 5);
        CHECK(report.threshold_max == 5);
        CHECK(report.count_max == 2);
    }
}

TEST_CASE("fragmentation error paths") {
    CHECK_THROWS_AS(enumerate_outcomes(FragmentationSpec::uf(), 65), unsupported_config);
    CHECK_THROWS_AS(pmf(FragmentationSpec::uf(), 4, Composition::single(2, 1)), invalid_composition);
    CHECK_THROWS_AS(moment(FragmentationSpec::uf(), 4, 4), config_error);
    CHECK_THROWS_AS(FragmentationSpec::bf(1.0), config_error);
    CHECK_THROWS_AS(FragmentationSpec::mf(2, {0.5, 0.4}), config_error);
    CHECK_THROWS_AS(FragmentationSpec::mf(1, {1.0}), config_error);
}
