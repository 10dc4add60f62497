#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgecache/combinations.hpp"
#include "edgecache/environment.hpp"
#include "edgecache/extended_mab.hpp"
#include "edgecache/rng.hpp"

namespace edgecache {

/// Running mean reward per arm, averaged over individual environment steps.
class ArmTable {
public:
    explicit ArmTable(std::size_t arms) : means_(arms, 0.0), steps_(arms, 0), pulls_(arms, 0) {
        if (arms == 0) throw std::invalid_argument("at least one arm required");
    }

    std::size_t size() const noexcept { return means_.size(); }

    void update(ArmIndex arm, std::span<const double> rewards) {
        for (double r : rewards) {
            const double n = static_cast<double>(steps_.at(arm));
            means_[arm] = (n * means_[arm] + r) / (n + 1.0);
            ++steps_[arm];
            max_reward_ = std::max(max_reward_, r);
        }
        ++pulls_[arm];
        ++total_pulls_;
    }

    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<std::uint64_t>& pulls() const noexcept { return pulls_; }
    std::uint64_t total_pulls() const noexcept { return total_pulls_; }
    double max_reward() const noexcept { return max_reward_; }

private:
    std::vector<double> means_;
    std::vector<std::uint64_t> steps_;
    std::vector<std::uint64_t> pulls_;
    std::uint64_t total_pulls_ = 0;
    double max_reward_ = 0.0;
};

/// With probability epsilon play the empirically best arm, otherwise a uniform arm.
class EpsilonGreedy {
public:
    EpsilonGreedy(std::size_t arms, double epsilon) : table_(arms), epsilon_(epsilon) {
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
    }

    ArmIndex select(Rng& rng) const {
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon_) {
            return argmax_random_tie(table_.means(), rng);
        }
        return uniform_index(rng, table_.size());
    }

    void update(ArmIndex arm, std::span<const double> rewards) { table_.update(arm, rewards); }
    const ArmTable& table() const noexcept { return table_; }
    double epsilon() const noexcept { return epsilon_; }

private:
    ArmTable table_;
    double epsilon_;
};

/// UCB1 with the exploration bonus scaled by the largest reward seen so far, since
/// rewards here are unbounded counts rather than values in [0, 1].
class Ucb1 {
public:
    explicit Ucb1(std::size_t arms, double c_explore = 1.0) : table_(arms), c_(c_explore) {
        if (!(c_explore > 0.0)) throw std::invalid_argument("c_explore must be positive");
    }

    ArmIndex select(Rng& rng) const {
        const auto& pulls = table_.pulls();
        std::size_t unplayed = 0;
        for (auto p : pulls) unplayed += (p == 0);
        if (unplayed > 0) {
            // uniform among the unplayed arms
            std::size_t pick = uniform_index(rng, unplayed);
            for (ArmIndex a = 0; a < pulls.size(); ++a) {
                if (pulls[a] == 0 && pick-- == 0) return a;
            }
        }
        const double scale = table_.max_reward() > 0.0 ? table_.max_reward() : 1.0;
        const double log_t = std::log(static_cast<double>(table_.total_pulls()));
        std::vector<double> index(table_.size());
        for (ArmIndex a = 0; a < index.size(); ++a) {
            index[a] = table_.means()[a] + c_ * scale * std::sqrt(2.0 * log_t / static_cast<double>(pulls[a]));
        }
        return argmax_random_tie(index, rng);
    }

    void update(ArmIndex arm, std::span<const double> rewards) { table_.update(arm, rewards); }
    const ArmTable& table() const noexcept { return table_; }

private:
    ArmTable table_;
    double c_;
};

/// Caches the K contents with the largest cumulative request counts (ties: lower id).
class Lfu {
public:
    Lfu(std::size_t num_contents, std::size_t cache_size) : counters_(num_contents, 0), k_(cache_size) {
        if (cache_size == 0 || cache_size > num_contents) throw std::invalid_argument("need 1 <= K <= N");
    }

    void observe(std::span<const RequestEvent> trace) {
        for (const auto& e : trace) ++counters_.at(e.content);
    }

    CacheCombination placement() const {
        std::vector<ContentId> order(counters_.size());
        std::iota(order.begin(), order.end(), ContentId{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](ContentId a, ContentId b) { return counters_[a] > counters_[b]; });
        order.resize(k_);
        return make_combination(std::move(order));
    }

    const std::vector<std::uint64_t>& counters() const noexcept { return counters_; }

private:
    std::vector<std::uint64_t> counters_;
    std::size_t k_;
};

/// Caches the K most recently requested contents; never-requested contents rank last,
/// ties by lower id.
class Lru {
public:
    Lru(std::size_t num_contents, std::size_t cache_size) : last_seen_(num_contents, 0), k_(cache_size) {
        if (cache_size == 0 || cache_size > num_contents) throw std::invalid_argument("need 1 <= K <= N");
    }

    void observe(std::span<const RequestEvent> trace) {
        for (const auto& e : trace) last_seen_.at(e.content) = ++clock_;
    }

    CacheCombination placement() const {
        std::vector<ContentId> order(last_seen_.size());
        std::iota(order.begin(), order.end(), ContentId{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](ContentId a, ContentId b) { return last_seen_[a] > last_seen_[b]; });
        order.resize(k_);
        return make_combination(std::move(order));
    }

    const std::vector<std::uint64_t>& last_seen() const noexcept { return last_seen_; }

private:
    std::vector<std::uint64_t> last_seen_; // 0 = never requested
    std::uint64_t clock_ = 0;
    std::size_t k_;
};

} // namespace edgecache
