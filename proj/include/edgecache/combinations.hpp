#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgecache {

using ContentId = std::size_t;
using ServerId = std::size_t;
using ArmIndex = std::size_t;

// C(n, k) with C(n, k) = 0 for k < 0 or k > n. Throws on uint64 overflow.
constexpr std::uint64_t binomial(long long n, long long k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (long long i = 1; i <= k; ++i) {
        const auto num = static_cast<std::uint64_t>(n - k + i);
        if (result > std::numeric_limits<std::uint64_t>::max() / num) {
            throw std::overflow_error("binomial coefficient overflows 64 bits");
        }
        result = result * num / static_cast<std::uint64_t>(i);
    }
    return result;
}

// Saturating integer power; returns max() on overflow so callers can compare against caps.
constexpr std::uint64_t saturating_pow(std::uint64_t base, std::size_t exp) noexcept {
    std::uint64_t result = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && result > std::numeric_limits<std::uint64_t>::max() / base) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        result *= base;
    }
    return result;
}

/// The set of contents one server caches. Always sorted, duplicate-free.
struct CacheCombination {
    std::vector<ContentId> contents;

    bool contains(ContentId n) const { return std::binary_search(contents.begin(), contents.end(), n); }
    std::size_t size() const { return contents.size(); }

    friend bool operator==(const CacheCombination&, const CacheCombination&) = default;
    friend auto operator<=>(const CacheCombination& a, const CacheCombination& b) {
        return a.contents <=> b.contents;
    }
};

/// All size-K subsets of {0..N-1} in lexicographic order, with O(K) ranking.
class CombinationSpace {
public:
    CombinationSpace(std::size_t num_contents, std::size_t cache_size)
        : n_(num_contents), k_(cache_size) {
        if (k_ == 0 || k_ > n_) {
            throw std::invalid_argument("cache_size must satisfy 1 <= K <= N (got K=" + std::to_string(k_) +
                                        ", N=" + std::to_string(n_) + ")");
        }
        const auto count = binomial(static_cast<long long>(n_), static_cast<long long>(k_));
        combos_.reserve(count);
        std::vector<ContentId> current(k_);
        for (std::size_t i = 0; i < k_; ++i) current[i] = i;
        while (true) {
            combos_.push_back(CacheCombination{current});
            // advance to the next lexicographic subset
            std::size_t i = k_;
            while (i > 0 && current[i - 1] == n_ - k_ + (i - 1)) --i;
            if (i == 0) break;
            ++current[i - 1];
            for (std::size_t j = i; j < k_; ++j) current[j] = current[j - 1] + 1;
        }
        containing_.assign(n_, {});
        for (ArmIndex c = 0; c < combos_.size(); ++c) {
            for (ContentId n : combos_[c].contents) containing_[n].push_back(c);
        }
    }

    std::size_t num_contents() const noexcept { return n_; }
    std::size_t cache_size() const noexcept { return k_; }
    std::size_t size() const noexcept { return combos_.size(); }

    const CacheCombination& operator[](ArmIndex c) const { return combos_[c]; }
    const std::vector<CacheCombination>& all() const noexcept { return combos_; }

    /// Indices of the C(N-1, K-1) combinations that cache content n.
    const std::vector<ArmIndex>& containing(ContentId n) const { return containing_.at(n); }

    ArmIndex index_of(const CacheCombination& combo) const {
        if (combo.size() != k_) throw std::invalid_argument("combination has wrong cardinality");
        std::uint64_t rank = 0;
        long long prev = -1;
        for (std::size_t i = 0; i < k_; ++i) {
            const auto ci = static_cast<long long>(combo.contents[i]);
            if (ci <= prev || ci >= static_cast<long long>(n_)) {
                throw std::invalid_argument("combination must be strictly increasing content ids below N");
            }
            for (long long j = prev + 1; j < ci; ++j) {
                rank += binomial(static_cast<long long>(n_) - 1 - j, static_cast<long long>(k_ - 1 - i));
            }
            prev = ci;
        }
        return static_cast<ArmIndex>(rank);
    }

private:
    std::size_t n_;
    std::size_t k_;
    std::vector<CacheCombination> combos_;
    std::vector<std::vector<ArmIndex>> containing_;
};

inline std::vector<CacheCombination> enumerate_combinations(std::size_t num_contents, std::size_t cache_size) {
    return CombinationSpace(num_contents, cache_size).all();
}

/// Build a combination from an arbitrary list of distinct content ids.
inline CacheCombination make_combination(std::vector<ContentId> contents) {
    std::sort(contents.begin(), contents.end());
    if (std::adjacent_find(contents.begin(), contents.end()) != contents.end()) {
        throw std::invalid_argument("combination contains duplicate contents");
    }
    return CacheCombination{std::move(contents)};
}

} // namespace edgecache
