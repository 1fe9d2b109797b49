#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polysim/fragmentation.hpp"

namespace polysim {

/// The fragmentation speed-up Phi. Power kind is Phi(N) = N^gamma; table
/// kind carries explicit (N, Phi(N)) points and must be given its k_c by
/// hand since the defining limit cannot be read off finitely many samples.
struct ScalingFunction {
    enum class Kind { Power, Table };

    Kind kind = Kind::Power;
    double gamma = 1.0;
    std::vector<std::pair<std::int64_t, double>> table;  // sorted by N
    std::optional<int> table_k_c;

    double operator()(std::int64_t N) const;
    void validate() const;

    static ScalingFunction power(double gamma);
    static ScalingFunction from_table(std::vector<std::pair<std::int64_t, double>> points,
                                      std::optional<int> k_c = std::nullopt);
};

struct ModelParams {
    int n_c = 4;
    std::vector<double> lambda;  // growth rates λ_1.., extended by the last entry
    std::vector<double> mu;      // fragmentation constants μ_2..μ_{n_c}
    ScalingFunction phi;
    FragmentationSpec fragmentation;
    int k_max_tracked = 16;      // initial dense span; storage grows on demand

    void validate() const;

    double lambda_at(std::int64_t k) const;
    /// μ_k for 2 <= k <= n_c.
    double mu_at(std::int64_t k) const;
    double mu_stable() const { return mu_at(n_c); }
    double lambda_inf() const;
};

/// Size-dependent fragmentation rate: Phi(N)·μ_k below the nucleus size,
/// the constant μ_{n_c} at or above it.
double mu_k_N(const ModelParams& params, std::int64_t k, std::int64_t N);

/// The nucleation time scale Psi(N) = Phi(N)^{n_c-2}/N.
double psi(const ModelParams& params, std::int64_t N);

/// Largest k with N/Phi(N)^{k-1} -> infinity. Closed form for the power
/// kind; table kind requires the user-supplied value.
int k_c(const ModelParams& params);

/// Limiting nucleation rate λ_1 · prod_{k=2}^{n_c-1} λ_k/μ_k.
double rho_bar(const ModelParams& params);

/// For power scaling, whether Psi(N)/log N -> infinity, i.e. γ(n_c-2) > 1.
bool scaling_admissible(const ModelParams& params);

struct DerivedScales {
    double psi = 0.0;
    int k_c = 0;
    double rho_bar = 0.0;

    static DerivedScales from(const ModelParams& params, std::int64_t N);
};

struct SystemState {
    // counts[k] = number of polymers of size k; index 0 unused.
    std::vector<std::int64_t> counts;
    std::int64_t total_mass = 0;
    std::int64_t max_size = 1;  // upper bound on the largest occupied size

    static SystemState pure_monomers(std::int64_t N);

    std::int64_t count(std::int64_t k) const {
        return (k >= 1 && k < static_cast<std::int64_t>(counts.size())) ? counts[k] : 0;
    }
    void set_count(std::int64_t k, std::int64_t value);
    std::int64_t recompute_mass() const;
};

struct Transition {
    enum class Kind { Growth, Fragmentation };
    Kind kind = Kind::Growth;
    std::int64_t k = 0;
    double rate = 0.0;
};

/// Reference enumeration of the full-process generator: one growth entry
/// per enabled size (dimerization needs u_1 >= 2), one fragmentation
/// entry per occupied size k >= 2.
std::vector<Transition> enumerate_transitions(const SystemState& state, const ModelParams& params);

double total_rate(const std::vector<Transition>& transitions);

/// u_1 -= 1, u_k -= 1, u_{k+1} += 1; throws invalid_transition when the
/// counts cannot support it.
void apply_growth(SystemState& state, std::int64_t k);

/// u_k -= 1, u_i += y_i; throws invalid_composition when the outcome mass
/// is not k.
void apply_fragmentation(SystemState& state, std::int64_t k, const Composition& outcome);

}  // namespace polysim
