#pragma once

#include <cstddef>
#include <vector>

namespace polysim {

/// Binary-indexed tree over per-index weights with prefix-sum selection.
/// Point updates and weighted draws are O(log n); exact per-index values
/// are kept alongside so the tree can be rebuilt to shed float drift.
class FenwickTree {
public:
    explicit FenwickTree(std::size_t size = 0) { reset(size); }

    void reset(std::size_t size) {
        n_ = size;
        values_.assign(size + 1, 0.0);
        tree_.assign(size + 1, 0.0);
        mask_ = 1;
        while (mask_ * 2 <= n_) mask_ *= 2;
    }

    std::size_t size() const { return n_; }

    double get(std::size_t i) const { return values_[i]; }

    void set(std::size_t i, double value) {
        const double delta = value - values_[i];
        if (delta == 0.0) return;
        values_[i] = value;
        for (std::size_t pos = i; pos <= n_; pos += pos & (~pos + 1)) tree_[pos] += delta;
    }

    double prefix(std::size_t i) const {
        double sum = 0.0;
        for (std::size_t pos = i; pos > 0; pos -= pos & (~pos + 1)) sum += tree_[pos];
        return sum;
    }

    double total() const { return prefix(n_); }

    /// Smallest index i with prefix(i) > target. Caller guarantees
    /// target < total(); float slack may still land on a zero-weight
    /// index, which callers must skip.
    std::size_t find(double target) const {
        std::size_t pos = 0;
        for (std::size_t step = mask_; step > 0; step /= 2) {
            const std::size_t next = pos + step;
            if (next <= n_ && tree_[next] <= target) {
                pos = next;
                target -= tree_[next];
            }
        }
        return pos + 1;
    }

    void rebuild() {
        std::fill(tree_.begin(), tree_.end(), 0.0);
        for (std::size_t i = 1; i <= n_; ++i) {
            if (values_[i] == 0.0) continue;
            for (std::size_t pos = i; pos <= n_; pos += pos & (~pos + 1)) tree_[pos] += values_[i];
        }
    }

private:
    std::size_t n_ = 0;
    std::size_t mask_ = 1;
    std::vector<double> values_;
    std::vector<double> tree_;
};

}  // namespace polysim
