#include "polysim/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polysim/errors.hpp"

namespace polysim {

double ScalingFunction::operator()(std::int64_t N) const {
    if (N < 1) throw config_error("scaling function evaluated at N < 1");
    if (kind == Kind::Power) return std::pow(static_cast<double>(N), gamma);
    auto it = std::lower_bound(table.begin(), table.end(), N,
                               [](const auto& entry, std::int64_t n) { return entry.first < n; });
    if (it == table.end() || it->first != N)
        throw unsupported_config("table scaling has no entry for N=" + std::to_string(N));
    return it->second;
}

void ScalingFunction::validate() const {
    if (kind == Kind::Power) {
        if (!(gamma > 0.0) || gamma > 1.0) throw config_error("phi.gamma must lie in (0,1]");
        return;
    }
    if (table.empty()) throw config_error("phi.table must not be empty");
    double prev = 0.0;
    std::int64_t prev_n = 0;
    for (const auto& [n, value] : table) {
        if (n <= prev_n) throw config_error("phi.table N values must be strictly increasing");
        if (!(value > 0.0) || value < prev) throw config_error("phi.table must be positive and non-decreasing");
        prev_n = n;
        prev = value;
    }
}

ScalingFunction ScalingFunction::power(double gamma) {
    ScalingFunction phi;
    phi.kind = Kind::Power;
    phi.gamma = gamma;
    return phi;
}

ScalingFunction ScalingFunction::from_table(std::vector<std::pair<std::int64_t, double>> points,
                                            std::optional<int> k_c) {
    ScalingFunction phi;
    phi.kind = Kind::Table;
    phi.table = std::move(points);
    phi.table_k_c = k_c;
    std::sort(phi.table.begin(), phi.table.end());
    return phi;
}

void ModelParams::validate() const {
    if (n_c <= 2) throw config_error("n_c must exceed 2");
    if (lambda.empty()) throw config_error("lambda table must not be empty");
    for (double value : lambda)
        if (!(value > 0.0)) throw config_error("lambda entries must be positive");
    if (static_cast<int>(mu.size()) != n_c - 1)
        throw config_error("mu must list exactly the rates for sizes 2..n_c");
    for (double value : mu)
        if (!(value > 0.0)) throw config_error("mu entries must be positive");
    phi.validate();
    fragmentation.validate();
    if (k_max_tracked < n_c) throw config_error("k_max_tracked must be at least n_c");
}

double ModelParams::lambda_at(std::int64_t k) const {
    if (k < 1) throw config_error("lambda index must be >= 1");
    const auto idx = static_cast<std::size_t>(k - 1);
    return idx < lambda.size() ? lambda[idx] : lambda.back();
}

double ModelParams::mu_at(std::int64_t k) const {
    if (k < 2 || k > n_c) throw config_error("mu index must lie in [2, n_c]");
    return mu[static_cast<std::size_t>(k - 2)];
}

double ModelParams::lambda_inf() const {
    return *std::min_element(lambda.begin(), lambda.end());
}

double mu_k_N(const ModelParams& params, std::int64_t k, std::int64_t N) {
    if (k < 2) throw invalid_transition("fragmentation rate queried for k < 2");
    if (N < 1) throw config_error("mu_k_N needs N >= 1");
    if (k < params.n_c) return params.phi(N) * params.mu_at(k);
    return params.mu_stable();
}

double psi(const ModelParams& params, std::int64_t N) {
    return std::pow(params.phi(N), params.n_c - 2) / static_cast<double>(N);
}

int k_c(const ModelParams& params) {
    if (params.phi.kind == ScalingFunction::Kind::Table) {
        if (!params.phi.table_k_c)
            throw unsupported_config("table scaling requires an explicit k_c");
        return *params.phi.table_k_c;
    }
    // Largest k with gamma*(k-1) < 1. The small slack keeps exact border
    // cases like gamma = 1/3, k = 4 out, where gamma*(k-1) rounds below 1.
    const double gamma = params.phi.gamma;
    int k = 1;
    while (gamma * static_cast<double>(k) < 1.0 - 1e-9) ++k;
    return k;
}

double rho_bar(const ModelParams& params) {
    double value = params.lambda_at(1);
    for (std::int64_t k = 2; k <= params.n_c - 1; ++k) value *= params.lambda_at(k) / params.mu_at(k);
    return value;
}

bool scaling_admissible(const ModelParams& params) {
    if (params.phi.kind == ScalingFunction::Kind::Table) return true;  // caller's assertion via k_c
    return params.phi.gamma * static_cast<double>(params.n_c - 2) > 1.0;
}

DerivedScales DerivedScales::from(const ModelParams& params, std::int64_t N) {
    return DerivedScales{polysim::psi(params, N), polysim::k_c(params), polysim::rho_bar(params)};
}

SystemState SystemState::pure_monomers(std::int64_t N) {
    SystemState state;
    state.counts.assign(2, 0);
    state.counts[1] = N;
    state.total_mass = N;
    state.max_size = 1;
    return state;
}

void SystemState::set_count(std::int64_t k, std::int64_t value) {
    if (k < 1) throw config_error("polymer size must be >= 1");
    if (k >= static_cast<std::int64_t>(counts.size())) counts.resize(static_cast<std::size_t>(k) + 1, 0);
    counts[static_cast<std::size_t>(k)] = value;
    if (value > 0) max_size = std::max(max_size, k);
}

std::int64_t SystemState::recompute_mass() const {
    std::int64_t mass = 0;
    for (std::int64_t k = 1; k < static_cast<std::int64_t>(counts.size()); ++k)
        mass += k * counts[static_cast<std::size_t>(k)];
    return mass;
}

std::vector<Transition> enumerate_transitions(const SystemState& state, const ModelParams& params) {
    std::vector<Transition> out;
    const std::int64_t N = state.total_mass;
    const auto u1 = state.count(1);
    const double monomer_factor = static_cast<double>(u1) / static_cast<double>(N);
    for (std::int64_t k = 1; k <= state.max_size; ++k) {
        const auto uk = state.count(k);
        if (uk == 0) continue;
        const bool enabled = (k == 1) ? (u1 >= 2) : (u1 >= 1);
        if (enabled)
            out.push_back({Transition::Kind::Growth, k,
                           params.lambda_at(k) * static_cast<double>(uk) * monomer_factor});
    }
    for (std::int64_t k = 2; k <= state.max_size; ++k) {
        const auto uk = state.count(k);
        if (uk == 0) continue;
        out.push_back({Transition::Kind::Fragmentation, k,
                       mu_k_N(params, k, N) * static_cast<double>(uk)});
    }
    return out;
}

double total_rate(const std::vector<Transition>& transitions) {
    double total = 0.0;
    for (const auto& t : transitions) total += t.rate;
    return total;
}

void apply_growth(SystemState& state, std::int64_t k) {
    if (k < 1) throw invalid_transition("growth size must be >= 1");
    const auto u1 = state.count(1);
    const auto uk = state.count(k);
    if (uk < 1 || u1 < 1 || (k == 1 && u1 < 2))
        throw invalid_transition("growth needs a size-k polymer and a free monomer");
    state.set_count(1, state.count(1) - 1);
    state.set_count(k, state.count(k) - 1);
    state.set_count(k + 1, state.count(k + 1) + 1);
}

void apply_fragmentation(SystemState& state, std::int64_t k, const Composition& outcome) {
    if (state.count(k) < 1) throw invalid_transition("no size-k polymer to fragment");
    if (outcome.mass() != k) throw invalid_composition("fragmentation outcome mass differs from k");
    state.set_count(k, state.count(k) - 1);
    for (const auto& [size, count] : outcome.parts) state.set_count(size, state.count(size) + count);
}

}  // namespace polysim
