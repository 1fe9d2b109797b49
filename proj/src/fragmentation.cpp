#include "polysim/fragmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "polysim/errors.hpp"

namespace polysim {

std::int64_t Composition::mass() const {
    std::int64_t total = 0;
    for (const auto& [size, count] : parts) total += size * count;
    return total;
}

std::int64_t Composition::count_of(std::int64_t size) const {
    for (const auto& [s, c] : parts)
        if (s == size) return c;
    return 0;
}

std::int64_t Composition::total_pieces() const {
    std::int64_t total = 0;
    for (const auto& [size, count] : parts) total += count;
    return total;
}

Composition Composition::from_pieces(const std::vector<std::pair<std::int64_t, std::int64_t>>& pieces) {
    std::map<std::int64_t, std::int64_t> merged;
    for (const auto& [size, count] : pieces)
        if (count != 0) merged[size] += count;
    Composition out;
    out.parts.assign(merged.begin(), merged.end());
    return out;
}

Composition Composition::single(std::int64_t size, std::int64_t count) {
    Composition out;
    out.parts = {{size, count}};
    return out;
}

void FragmentationSpec::validate() const {
    switch (kind) {
        case Kind::UF:
            return;
        case Kind::BF:
            if (!(p > 0.0) || !(p < 1.0)) throw config_error("fragmentation.p must lie in (0,1)");
            return;
        case Kind::MF: {
            if (m < 2) throw config_error("fragmentation.m must be >= 2");
            if (static_cast<int>(weights.size()) != m)
                throw config_error("fragmentation.weights must have m entries");
            double sum = 0.0;
            for (double w : weights) {
                if (!(w > 0.0)) throw config_error("fragmentation.weights must be strictly positive");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw config_error("fragmentation.weights must sum to 1");
            return;
        }
    }
}

FragmentationSpec FragmentationSpec::uf() { return FragmentationSpec{}; }

FragmentationSpec FragmentationSpec::bf(double p) {
    FragmentationSpec spec;
    spec.kind = Kind::BF;
    spec.p = p;
    spec.validate();
    return spec;
}

FragmentationSpec FragmentationSpec::mf(int m, std::vector<double> weights) {
    FragmentationSpec spec;
    spec.kind = Kind::MF;
    spec.m = m;
    spec.weights = std::move(weights);
    spec.validate();
    return spec;
}

namespace {

void require_fragmentable(std::int64_t k) {
    if (k < 2) throw config_error("nu_k is defined for k >= 2, got k=" + std::to_string(k));
}

void require_enumerable(std::int64_t k) {
    require_fragmentable(k);
    if (k > kEnumerationCap)
        throw unsupported_config("exact enumeration capped at k=" + std::to_string(kEnumerationCap));
}

// Binomial weights b(l) = C(k,l) p^l q^{k-l} for 0 < l < k, by the
// multiplicative recurrence; normalized by the caller.
std::vector<double> interior_binomial_weights(std::int64_t k, double p) {
    const double q = 1.0 - p;
    std::vector<double> w(static_cast<std::size_t>(k) + 1, 0.0);
    double b = std::pow(q, static_cast<double>(k));  // b(0)
    for (std::int64_t l = 1; l < k; ++l) {
        b *= static_cast<double>(k - l + 1) / static_cast<double>(l) * (p / q);
        w[static_cast<std::size_t>(l)] = b;
    }
    return w;
}

void mf_enumerate_rec(const std::vector<double>& weights, std::size_t urn, std::int64_t remaining,
                      double prob, std::vector<std::int64_t>& balls,
                      std::map<Composition, double>& acc) {
    if (urn + 1 == weights.size()) {
        balls[urn] = remaining;
        double total = prob * std::pow(weights[urn], static_cast<double>(remaining));
        std::vector<std::pair<std::int64_t, std::int64_t>> pieces;
        pieces.reserve(balls.size());
        for (std::int64_t b : balls) pieces.push_back({b + 1, 1});
        acc[Composition::from_pieces(pieces)] += total;
        return;
    }
    // Running factor: C(remaining, n) * w^n, built incrementally over n.
    double factor = 1.0;
    for (std::int64_t n = 0; n <= remaining; ++n) {
        balls[urn] = n;
        mf_enumerate_rec(weights, urn + 1, remaining - n, prob * factor, balls, acc);
        factor *= static_cast<double>(remaining - n) / static_cast<double>(n + 1) * weights[urn];
    }
}

double mf_tuple_count(std::int64_t balls, int urns) {
    double count = 1.0;
    for (int i = 1; i < urns; ++i) count *= static_cast<double>(balls + i) / static_cast<double>(i);
    return count;
}

}  // namespace

void sample_pieces(const FragmentationSpec& spec, std::int64_t k, Rng& rng,
                   std::vector<std::pair<std::int64_t, std::int64_t>>& pieces) {
    require_fragmentable(k);
    pieces.clear();
    switch (spec.kind) {
        case FragmentationSpec::Kind::UF: {
            const std::int64_t l = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k - 1)));
            pieces.push_back({l, 1});
            pieces.push_back({k - l, 1});
            return;
        }
        case FragmentationSpec::Kind::BF: {
            // Binomial split conditioned on both pieces being non-empty.
            std::int64_t l = 0;
            do {
                l = static_cast<std::int64_t>(rng.binomial(static_cast<std::uint64_t>(k), spec.p));
            } while (l == 0 || l == k);
            pieces.push_back({l, 1});
            pieces.push_back({k - l, 1});
            return;
        }
        case FragmentationSpec::Kind::MF: {
            if (k < spec.m) {
                pieces.push_back({1, k});
                return;
            }
            std::int64_t remaining = k - spec.m;
            double weight_left = 1.0;
            for (int urn = 0; urn < spec.m; ++urn) {
                std::int64_t balls = remaining;
                if (urn + 1 < spec.m) {
                    const double p_urn = std::min(1.0, spec.weights[static_cast<std::size_t>(urn)] / weight_left);
                    balls = static_cast<std::int64_t>(
                        rng.binomial(static_cast<std::uint64_t>(remaining), p_urn));
                    weight_left -= spec.weights[static_cast<std::size_t>(urn)];
                }
                pieces.push_back({balls + 1, 1});
                remaining -= balls;
            }
            return;
        }
    }
}

Composition sample(const FragmentationSpec& spec, std::int64_t k, Rng& rng) {
    std::vector<std::pair<std::int64_t, std::int64_t>> pieces;
    sample_pieces(spec, k, rng, pieces);
    return Composition::from_pieces(pieces);
}

std::vector<std::pair<Composition, double>> enumerate_outcomes(const FragmentationSpec& spec,
                                                               std::int64_t k) {
    require_enumerable(k);
    std::map<Composition, double> acc;
    switch (spec.kind) {
        case FragmentationSpec::Kind::UF: {
            const double w = 1.0 / static_cast<double>(k - 1);
            for (std::int64_t l = 1; l < k; ++l)
                acc[Composition::from_pieces({{l, 1}, {k - l, 1}})] += w;
            break;
        }
        case FragmentationSpec::Kind::BF: {
            const auto weights = interior_binomial_weights(k, spec.p);
            double norm = 0.0;
            for (std::int64_t l = 1; l < k; ++l) norm += weights[static_cast<std::size_t>(l)];
            for (std::int64_t l = 1; l < k; ++l)
                acc[Composition::from_pieces({{l, 1}, {k - l, 1}})] +=
                    weights[static_cast<std::size_t>(l)] / norm;
            break;
        }
        case FragmentationSpec::Kind::MF: {
            if (k < spec.m) {
                acc[Composition::single(1, k)] = 1.0;
                break;
            }
            if (mf_tuple_count(k - spec.m, spec.m) > 2e6)
                throw unsupported_config("MF enumeration too large for m=" + std::to_string(spec.m));
            std::vector<std::int64_t> balls(static_cast<std::size_t>(spec.m), 0);
            mf_enumerate_rec(spec.weights, 0, k - spec.m, 1.0, balls, acc);
            break;
        }
    }
    return {acc.begin(), acc.end()};
}

double pmf(const FragmentationSpec& spec, std::int64_t k, const Composition& outcome) {
    if (outcome.mass() != k) throw invalid_composition("pmf queried with outcome off S_k");
    const auto support = enumerate_outcomes(spec, k);
    const auto it = std::lower_bound(support.begin(), support.end(), outcome,
                                     [](const auto& entry, const Composition& key) { return entry.first < key; });
    if (it == support.end() || !(it->first == outcome)) return 0.0;
    return it->second;
}

double moment(const FragmentationSpec& spec, std::int64_t k, std::int64_t p) {
    if (p < 1 || p >= k) throw config_error("moment needs 1 <= p < k");
    double value = 0.0;
    for (const auto& [outcome, prob] : enumerate_outcomes(spec, k))
        value += prob * static_cast<double>(outcome.count_of(p));
    return value;
}

A3Report check_A3(const FragmentationSpec& spec, int n_c, std::int64_t k_lo, std::int64_t k_hi,
                  std::int64_t samples, Rng& rng) {
    if (k_lo < 2 || k_hi < k_lo) throw config_error("check_A3 needs 2 <= k_lo <= k_hi");
    if (samples < 1) throw config_error("check_A3 needs samples >= 1");
    A3Report report;
    report.n_c = n_c;
    report.samples_per_k = samples;
    std::vector<std::pair<std::int64_t, std::int64_t>> pieces;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        A3Report::Row row;
        row.k = k;
        std::int64_t two_stable = 0;
        for (std::int64_t s = 0; s < samples; ++s) {
            sample_pieces(spec, k, rng, pieces);
            std::int64_t small = 0;
            std::int64_t stable = 0;
            for (const auto& [size, count] : pieces)
                (size < n_c ? small : stable) += count;
            row.max_small_fragments = std::max(row.max_small_fragments, small);
            if (stable >= 2) ++two_stable;
        }
        row.two_stable_fraction = static_cast<double>(two_stable) / static_cast<double>(samples);
        report.c0_hat = std::max(report.c0_hat, row.max_small_fragments);
        report.rows.push_back(row);
    }
    // Least-squares slope of max small-fragment count against k; a clearly
    // positive slope means the family cannot satisfy Relation A-3.
    if (report.rows.size() >= 2) {
        double mean_k = 0.0, mean_v = 0.0;
        for (const auto& row : report.rows) {
            mean_k += static_cast<double>(row.k);
            mean_v += static_cast<double>(row.max_small_fragments);
        }
        mean_k /= static_cast<double>(report.rows.size());
        mean_v /= static_cast<double>(report.rows.size());
        double cov = 0.0, var = 0.0;
        for (const auto& row : report.rows) {
            const double dk = static_cast<double>(row.k) - mean_k;
            cov += dk * (static_cast<double>(row.max_small_fragments) - mean_v);
            var += dk * dk;
        }
        report.growth_flag = var > 0.0 && cov / var > 0.05;
    }
    return report;
}

A4Report check_A4(const FragmentationSpec& spec, std::int64_t k, std::int64_t k_prime) {
    if (k > k_prime) throw config_error("check_A4 needs k <= k'");
    A4Report report;
    report.k = k;
    report.k_prime = k_prime;
    const auto support_k = enumerate_outcomes(spec, k);
    const auto support_kp = enumerate_outcomes(spec, k_prime);
    report.threshold_max = k_prime;
    for (const auto& [outcome, prob] : support_k)
        report.count_max = std::max(report.count_max, outcome.total_pieces());
    for (const auto& [outcome, prob] : support_kp)
        report.count_max = std::max(report.count_max, outcome.total_pieces());

    const auto tail_prob = [](const std::vector<std::pair<Composition, double>>& support,
                              std::int64_t threshold, std::int64_t count) {
        double total = 0.0;
        for (const auto& [outcome, prob] : support) {
            std::int64_t big_pieces = 0;
            for (const auto& [size, c] : outcome.parts)
                if (size >= threshold) big_pieces += c;
            if (big_pieces >= count) total += prob;
        }
        return total;
    };

    for (std::int64_t threshold = 1; threshold <= report.threshold_max; ++threshold) {
        for (std::int64_t count = 1; count <= report.count_max; ++count) {
            const double lhs = tail_prob(support_k, threshold, count);
            const double rhs = tail_prob(support_kp, threshold, count);
            if (lhs > rhs + 1e-12)
                report.violations.push_back({threshold, count, lhs, rhs});
        }
    }
    return report;
}

}  // namespace polysim
