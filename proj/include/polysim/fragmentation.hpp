#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "polysim/rng.hpp"

namespace polysim {

/// An element of S_k: fragment counts y_i keyed by size, with
/// sum_i i*y_i equal to the mass k of the broken polymer.
struct Composition {
    // (size, count) pairs, sorted by size, counts > 0.
    std::vector<std::pair<std::int64_t, std::int64_t>> parts;

    std::int64_t mass() const;
    std::int64_t count_of(std::int64_t size) const;
    std::int64_t total_pieces() const;

    /// Canonicalizes an arbitrary piece list (merges duplicates, sorts).
    static Composition from_pieces(const std::vector<std::pair<std::int64_t, std::int64_t>>& pieces);
    static Composition single(std::int64_t size, std::int64_t count = 1);

    bool operator==(const Composition&) const = default;
    auto operator<=>(const Composition&) const = default;
};

struct FragmentationSpec {
    enum class Kind { UF, BF, MF };

    Kind kind = Kind::UF;
    double p = 0.5;               // BF split bias
    int m = 2;                    // MF piece count
    std::vector<double> weights;  // MF urn weights, strictly positive, sum 1

    void validate() const;

    static FragmentationSpec uf();
    static FragmentationSpec bf(double p);
    static FragmentationSpec mf(int m, std::vector<double> weights);
};

/// Largest k for which exact pmf enumeration is offered.
inline constexpr std::int64_t kEnumerationCap = 64;

/// Draws raw pieces of a nu_k outcome into `pieces` (not canonicalized,
/// duplicates possible). This is the simulator's hot path.
void sample_pieces(const FragmentationSpec& spec, std::int64_t k, Rng& rng,
                   std::vector<std::pair<std::int64_t, std::int64_t>>& pieces);

Composition sample(const FragmentationSpec& spec, std::int64_t k, Rng& rng);

/// Full support of nu_k with probabilities, sorted by outcome.
std::vector<std::pair<Composition, double>> enumerate_outcomes(const FragmentationSpec& spec,
                                                               std::int64_t k);

double pmf(const FragmentationSpec& spec, std::int64_t k, const Composition& outcome);

/// <nu_k, I_p>: mean number of size-p fragments, by exact enumeration.
double moment(const FragmentationSpec& spec, std::int64_t k, std::int64_t p);

struct A3Report {
    struct Row {
        std::int64_t k = 0;
        std::int64_t max_small_fragments = 0;   // max over samples of sum_{i<n_c} y_i
        double two_stable_fraction = 0.0;       // fraction with sum_{i>=n_c} y_i >= 2
    };
    std::vector<Row> rows;
    std::int64_t c0_hat = 0;    // overall max of small-fragment counts
    bool growth_flag = false;   // small-fragment count appears to grow with k
    int n_c = 0;
    std::int64_t samples_per_k = 0;
};

/// Empirical probe of Assumption A-3 over k in [k_lo, k_hi]. A report,
/// not a proof: C0_hat is an observed maximum.
A3Report check_A3(const FragmentationSpec& spec, int n_c, std::int64_t k_lo, std::int64_t k_hi,
                  std::int64_t samples, Rng& rng);

struct A4Report {
    struct Violation {
        std::int64_t threshold = 0;  // piece-size threshold l
        std::int64_t count = 0;      // piece count a
        double prob_k = 0.0;
        double prob_k_prime = 0.0;
    };
    std::int64_t k = 0;
    std::int64_t k_prime = 0;
    std::int64_t threshold_max = 0;
    std::int64_t count_max = 0;
    std::vector<Violation> violations;

    bool passed() const { return violations.empty(); }
};

/// Exact enumeration check of the A-4 monotonicity
///   nu_k(#{pieces >= l} >= a)  <=  nu_k'(#{pieces >= l} >= a)
/// over all thresholds l and counts a reachable by either measure.
A4Report check_A4(const FragmentationSpec& spec, std::int64_t k, std::int64_t k_prime);

}  // namespace polysim
