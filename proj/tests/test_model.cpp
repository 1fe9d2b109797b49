#include <doctest.h>

#include <cmath>

#include "polysim/errors.hpp"
#include "polysim/model.hpp"
#include "polysim/rng.hpp"

using namespace polysim;

namespace {

ModelParams make_params(int n_c, std::vector<double> lambda, std::vector<double> mu,
                        ScalingFunction phi = ScalingFunction::power(1.0)) {
    ModelParams params;
    params.n_c = n_c;
    params.lambda = std::move(lambda);
    params.mu = std::move(mu);
    params.phi = phi;
    params.fragmentation = FragmentationSpec::uf();
    params.validate();
    return params;
}

SystemState state_from(std::vector<std::int64_t> counts_by_size) {
    SystemState state;
    state.counts.assign(counts_by_size.size() + 1, 0);
    for (std::size_t i = 0; i < counts_by_size.size(); ++i) {
        state.counts[i + 1] = counts_by_size[i];
        if (counts_by_size[i] > 0) state.max_size = static_cast<std::int64_t>(i + 1);
    }
    state.total_mass = state.recompute_mass();
    return state;
}

}  // namespace

TEST_CASE("mu_k_N follows the accelerated-below-nucleus rule") {
    auto params = make_params(4, {1, 1, 1}, {0.5, 1, 0.3});
    CHECK(mu_k_N(params, 2, 100) == doctest::Approx(50.0));   // Phi(100)*0.5
    CHECK(mu_k_N(params, 7, 100) == doctest::Approx(0.3));    // stable rate
    auto sqrt_params = make_params(3, {1, 1}, {1, 1}, ScalingFunction::power(0.5));
    CHECK(mu_k_N(sqrt_params, 2, 10000) == doctest::Approx(100.0));
    CHECK_THROWS_AS(mu_k_N(params, 1, 100), invalid_transition);
}

TEST_CASE("psi is Phi^(n_c-2)/N") {
    auto linear = make_params(4, {1, 1, 1}, {1, 1, 1});
    CHECK(psi(linear, 1000) == doctest::Approx(1000.0));
    auto sqrt5 = make_params(5, {1, 1, 1, 1}, {1, 1, 1, 1}, ScalingFunction::power(0.5));
    CHECK(psi(sqrt5, 10000) == doctest::Approx(100.0));
    // power form: psi(N) = N^{gamma(n_c-2)-1}
    auto power = make_params(5, {1, 1, 1, 1}, {1, 1, 1, 1}, ScalingFunction::power(0.7));
    for (std::int64_t N : {100, 1000, 50000}) {
        const double expected = std::pow(static_cast<double>(N), 0.7 * 3 - 1.0);
        CHECK(psi(power, N) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("psi times N equals Phi^(n_c-2) exactly") {
    auto params = make_params(5, {1, 2, 3, 1}, {1, 1, 2, 1}, ScalingFunction::power(0.8));
    for (std::int64_t N : {7, 123, 4096, 1000000}) {
        const double lhs = psi(params, N) * static_cast<double>(N);
        const double rhs = std::pow(params.phi(N), params.n_c - 2);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("k_c closed form for power scaling") {
    CHECK(k_c(make_params(4, {1, 1, 1}, {1, 1, 1}, ScalingFunction::power(1.0))) == 1);
    CHECK(k_c(make_params(6, {1}, {1, 1, 1, 1, 1}, ScalingFunction::power(0.4))) == 3);
    CHECK(k_c(make_params(5, {1}, {1, 1, 1, 1}, ScalingFunction::power(0.5))) == 2);
    // border case gamma = 1/3: N/Phi^3 converges to 1, not infinity
    CHECK(k_c(make_params(6, {1}, {1, 1, 1, 1, 1}, ScalingFunction::power(1.0 / 3.0))) == 3);
    auto table = make_params(4, {1}, {1, 1, 1},
                             ScalingFunction::from_table({{100, 10.0}, {200, 14.0}}, 2));
    CHECK(k_c(table) == 2);
    auto no_kc = make_params(4, {1}, {1, 1, 1}, ScalingFunction::from_table({{100, 10.0}}));
    CHECK_THROWS_AS(k_c(no_kc), unsupported_config);
}

TEST_CASE("k_c bound under admissible scaling") {
    for (double gamma : {0.6, 0.75, 0.9, 1.0}) {
        auto params = make_params(4, {1}, {1, 1, 1}, ScalingFunction::power(gamma));
        if (scaling_admissible(params)) CHECK(k_c(params) <= params.n_c - 2);
    }
}

TEST_CASE("rho_bar is lambda_1 times the ratio chain") {
    CHECK(rho_bar(make_params(4, {1, 1, 1}, {1, 1, 1})) == doctest::Approx(1.0));
    CHECK(rho_bar(make_params(4, {2, 1, 3}, {2, 4, 1})) == doctest::Approx(0.75));
    CHECK(rho_bar(make_params(3, {5, 2}, {4, 1})) == doctest::Approx(2.5));
}

TEST_CASE("rho_bar invariant under joint rate scaling") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> lambda{1 + rng.uniform(), 1 + rng.uniform(), 1 + rng.uniform()};
        std::vector<double> mu{0.5 + rng.uniform(), 0.5 + rng.uniform(), 0.5 + rng.uniform()};
        auto params = make_params(4, lambda, mu);
        const double c = 0.1 + 5.0 * rng.uniform();
        auto scaled = params;
        for (std::size_t k = 1; k < scaled.lambda.size(); ++k) scaled.lambda[k] *= c;  // lambda_2, lambda_3
        for (std::size_t k = 0; k + 1 < scaled.mu.size(); ++k) scaled.mu[k] *= c;      // mu_2, mu_3
        CHECK(rho_bar(scaled) == doctest::Approx(rho_bar(params)).epsilon(1e-12));
    }
}

TEST_CASE("enumerate_transitions matches the generator by hand") {
    auto params = make_params(4, {1, 1, 1}, {1, 1, 1});

    SUBCASE("pure monomers: dimerization only") {
        auto state = state_from({10});
        const auto table = enumerate_transitions(state, params);
        REQUIRE(table.size() == 1);
        CHECK(table[0].kind == Transition::Kind::Growth);
        CHECK(table[0].k == 1);
        CHECK(table[0].rate == doctest::Approx(10.0));  // 1 * 10^2 / 10
    }

    SUBCASE("hand-enumerated mixed state") {
        auto state = state_from({8, 1, 0, 0});
        const auto table = enumerate_transitions(state, params);
        REQUIRE(table.size() == 3);
        double grow1 = 0, grow2 = 0, frag2 = 0;
        for (const auto& t : table) {
            if (t.kind == Transition::Kind::Growth && t.k == 1) grow1 = t.rate;
            if (t.kind == Transition::Kind::Growth && t.k == 2) grow2 = t.rate;
            if (t.kind == Transition::Kind::Fragmentation && t.k == 2) frag2 = t.rate;
        }
        CHECK(grow1 == doctest::Approx(6.4));
        CHECK(grow2 == doctest::Approx(0.8));
        CHECK(frag2 == doctest::Approx(10.0));
        CHECK(total_rate(table) == doctest::Approx(17.2));
    }

    SUBCASE("single monomer is absorbing") {
        auto state = state_from({1});
        CHECK(enumerate_transitions(state, params).empty());
    }
}

TEST_CASE("rate table consistency on random states") {
    auto params = make_params(4, {1.5, 0.7, 2.0, 1.1}, {0.9, 1.3, 0.4});
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::int64_t N = 50 + static_cast<std::int64_t>(rng.below(200));
        SystemState state = SystemState::pure_monomers(N);
        for (std::int64_t k = 2; k <= 8; ++k) {
            const auto available = state.count(1) / k;
            if (available <= 0) continue;
            const auto uk = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(
                std::min<std::int64_t>(available, 4) + 1)));
            if (uk == 0) continue;
            state.set_count(k, uk);
            state.set_count(1, state.count(1) - k * uk);
        }
        REQUIRE(state.recompute_mass() == N);

        // independent re-derivation of the total rate
        double expected = 0.0;
        const auto u1 = state.count(1);
        for (std::int64_t k = 1; k <= state.max_size; ++k) {
            const auto uk = state.count(k);
            if (uk == 0) continue;
            if (k == 1 && u1 >= 2)
                expected += params.lambda_at(1) * static_cast<double>(u1) * static_cast<double>(u1) /
                            static_cast<double>(N);
            if (k >= 2 && u1 >= 1)
                expected += params.lambda_at(k) * static_cast<double>(uk) * static_cast<double>(u1) /
                            static_cast<double>(N);
            if (k >= 2) expected += mu_k_N(params, k, N) * static_cast<double>(uk);
        }
        CHECK(total_rate(enumerate_transitions(state, params)) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("apply_growth moves one monomer up") {
    auto state = state_from({10});
    apply_growth(state, 1);
    CHECK(state.count(1) == 8);
    CHECK(state.count(2) == 1);

    auto mixed = state_from({3, 1});
    apply_growth(mixed, 2);
    CHECK(mixed.count(1) == 2);
    CHECK(mixed.count(2) == 0);
    CHECK(mixed.count(3) == 1);

    auto blocked = state_from({1, 1});
    CHECK_THROWS_AS(apply_growth(blocked, 1), invalid_transition);
}

TEST_CASE("apply_fragmentation applies the outcome") {
    auto state = state_from({0, 0, 0, 1});
    apply_fragmentation(state, 4, Composition::from_pieces({{1, 1}, {3, 1}}));
    CHECK(state.count(1) == 1);
    CHECK(state.count(3) == 1);
    CHECK(state.count(4) == 0);

    auto other = state_from({5, 0, 1});
    apply_fragmentation(other, 3, Composition::from_pieces({{1, 1}, {2, 1}}));
    CHECK(other.count(1) == 6);
    CHECK(other.count(2) == 1);
    CHECK(other.count(3) == 0);

    auto bad = state_from({0, 0, 0, 1});
    CHECK_THROWS_AS(apply_fragmentation(bad, 4, Composition::from_pieces({{1, 1}, {2, 1}})),
                    invalid_composition);
}

TEST_CASE("mass is conserved under arbitrary transition sequences") {
    auto params = make_params(4, {1, 1, 1}, {1, 1, 1});
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        const std::int64_t N = 30 + static_cast<std::int64_t>(rng.below(40));
        SystemState state = SystemState::pure_monomers(N);
        for (int step_i = 0; step_i < 300; ++step_i) {
            const auto table = enumerate_transitions(state, params);
            if (table.empty()) break;
            const auto& choice = table[rng.below(table.size())];
            if (choice.kind == Transition::Kind::Growth) {
                apply_growth(state, choice.k);
            } else {
                apply_fragmentation(state, choice.k,
                                    sample(params.fragmentation, choice.k, rng));
            }
            REQUIRE(state.recompute_mass() == N);
        }
    }
}

TEST_CASE("model parameter validation") {
    CHECK_THROWS_AS(make_params(2, {1}, {1}), config_error);
    CHECK_THROWS_AS(make_params(4, {}, {1, 1, 1}), config_error);
    CHECK_THROWS_AS(make_params(4, {1}, {1, 1}), config_error);  // mu must cover 2..n_c
    CHECK_THROWS_AS(make_params(4, {1, -1}, {1, 1, 1}), config_error);
    CHECK_THROWS_AS(make_params(4, {1}, {1, 1, 1}, ScalingFunction::power(1.5)), config_error);
    CHECK(scaling_admissible(make_params(4, {1}, {1, 1, 1}, ScalingFunction::power(1.0))));
    CHECK_FALSE(scaling_admissible(make_params(4, {1}, {1, 1, 1}, ScalingFunction::power(0.4))));
}

TEST_CASE("lambda table extends by its last entry") {
    auto params = make_params(4, {1.0, 2.0, 3.5}, {1, 1, 1});
    CHECK(params.lambda_at(3) == doctest::Approx(3.5));
    CHECK(params.lambda_at(100) == doctest::Approx(3.5));
    CHECK(DerivedScales::from(params, 100).rho_bar == doctest::Approx(rho_bar(params)));
}
