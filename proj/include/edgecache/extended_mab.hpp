#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "edgecache/combinations.hpp"
#include "edgecache/rng.hpp"
#include "edgecache/scenario.hpp"

namespace edgecache {

constexpr bool is_power_of_two(std::uint64_t x) noexcept { return x != 0 && (x & (x - 1)) == 0; }

enum class ExploreRule {
    batch_counter,   // explore when log2(t) is a natural number, t = batch index
    scaled_by_batch, // explore when log2(t * B) is a natural number
};

inline ExploreRule parse_explore_rule(const std::string& s) {
    if (s == "alg1") return ExploreRule::batch_counter;
    if (s == "prose") return ExploreRule::scaled_by_batch;
    throw std::invalid_argument("unknown explore rule '" + s + "' (expected alg1 or prose)");
}

struct ExplorationSchedule {
    ExploreRule rule = ExploreRule::batch_counter;
    std::size_t batch_size = 1;

    bool fires(std::uint64_t t) const noexcept {
        return rule == ExploreRule::batch_counter ? is_power_of_two(t) : is_power_of_two(t * batch_size);
    }
};

/// Arms for the next batch, one per environment step. Exploration batches draw a fresh
/// uniform arm every step; exploitation batches repeat the chosen arm.
struct BatchDecision {
    bool explore = false;
    std::vector<ArmIndex> arms;

    ArmIndex arm_at(std::size_t step) const { return arms.at(step); }
    ArmIndex last() const { return arms.back(); }
};

/// Index of a maximal element; ties broken uniformly using rng.
inline std::size_t argmax_random_tie(std::span<const double> values, Rng& rng) {
    if (values.empty()) throw std::invalid_argument("argmax of an empty range");
    std::size_t best = 0;
    std::size_t ties = 1;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
            ties = 1;
        } else if (values[i] == values[best]) {
            ++ties;
            if (uniform_index(rng, ties) == 0) best = i;
        }
    }
    return best;
}

/// Per-arm running means coupled through a shared density parameter: the sum of all
/// arm means equals `divisor * mu(theta)` in expectation, which pins down theta.
class GlobalArmEstimates {
public:
    GlobalArmEstimates(std::size_t num_arms, double divisor, DensityModel model)
        : means_(num_arms, 0.0), counts_(num_arms, 0), divisor_(divisor), model_(model) {
        if (num_arms == 0) throw std::invalid_argument("at least one arm required");
        if (!(divisor > 0.0)) throw std::invalid_argument("density divisor must be positive");
        refresh();
    }

    std::size_t size() const noexcept { return means_.size(); }

    /// Running-mean update for one observed reward, then re-estimate theta.
    void record(ArmIndex arm, double reward) {
        const double n = static_cast<double>(counts_.at(arm));
        const double updated = (n * means_[arm] + reward) / (n + 1.0);
        sum_ += updated - means_[arm];
        means_[arm] = updated;
        ++counts_[arm];
        refresh();
    }

    /// Replace the whole table (e.g. checkpoint restore) and recompute derived values.
    void load(std::vector<double> means, std::vector<std::uint64_t> counts) {
        if (means.size() != means_.size() || counts.size() != counts_.size()) {
            throw std::invalid_argument("estimate table size mismatch");
        }
        means_ = std::move(means);
        counts_ = std::move(counts);
        sum_ = 0.0;
        for (double m : means_) sum_ += m;
        refresh();
    }

    double mean(ArmIndex c) const { return means_.at(c); }
    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
    double reward_sum() const noexcept { return sum_; }
    double divisor() const noexcept { return divisor_; }
    const DensityModel& model() const noexcept { return model_; }

    double theta_hat() const noexcept { return theta_hat_; }
    double density_hat() const noexcept { return density_hat_; }

    /// Popularity of an arm under the current density estimate.
    double popularity(ArmIndex c) const { return density_hat_ > 0.0 ? means_.at(c) / density_hat_ : 0.0; }

    std::vector<double> popularities() const {
        std::vector<double> out(means_.size());
        for (ArmIndex c = 0; c < means_.size(); ++c) out[c] = popularity(c);
        return out;
    }

private:
    void refresh() {
        theta_hat_ = model_.inverse_clamped(sum_ / divisor_);
        density_hat_ = model_.mu(theta_hat_);
    }

    std::vector<double> means_;
    std::vector<std::uint64_t> counts_;
    double sum_ = 0.0;
    double divisor_;
    DensityModel model_;
    double theta_hat_ = 0.0;
    double density_hat_ = 0.0;
};

/// Extended MAB over a finite arm set with a shared density parameter.
///
/// Rewards passed to update() are already normalised per unit area, so an arm's mean
/// estimates mu(theta) times its popularity.
class ExtendedMab {
public:
    ExtendedMab(std::size_t num_arms, double density_divisor, DensityModel model, std::size_t batch_size,
                ExploreRule rule = ExploreRule::batch_counter)
        : estimates_(num_arms, density_divisor, model), schedule_{rule, batch_size}, batch_size_(batch_size) {
        if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    }

    /// Agent for one server choosing among the C(N, K) cache combinations.
    static ExtendedMab for_combinations(const CombinationSpace& space, DensityModel model, std::size_t batch_size,
                                        ExploreRule rule = ExploreRule::batch_counter) {
        const auto divisor = binomial(static_cast<long long>(space.num_contents()) - 1,
                                      static_cast<long long>(space.cache_size()) - 1);
        return ExtendedMab(space.size(), static_cast<double>(divisor), model, batch_size, rule);
    }

    /// Batch index t of the next decision (1-based).
    std::uint64_t batch_index() const noexcept { return batches_ + 1; }
    std::size_t batch_size() const noexcept { return batch_size_; }
    const ExplorationSchedule& schedule() const noexcept { return schedule_; }
    const GlobalArmEstimates& estimates() const noexcept { return estimates_; }
    double theta_hat() const noexcept { return estimates_.theta_hat(); }

    /// Arm maximising p_hat_c * mu(theta_hat).
    ArmIndex best_arm(Rng& rng) const {
        std::vector<double> score(estimates_.size());
        const double mu = estimates_.density_hat();
        for (ArmIndex c = 0; c < score.size(); ++c) score[c] = estimates_.popularity(c) * mu;
        return argmax_random_tie(score, rng);
    }

    BatchDecision select(Rng& rng) const {
        BatchDecision d;
        d.explore = schedule_.fires(batch_index());
        d.arms.resize(batch_size_);
        if (d.explore) {
            for (auto& a : d.arms) a = uniform_index(rng, estimates_.size());
        } else {
            std::fill(d.arms.begin(), d.arms.end(), best_arm(rng));
        }
        return d;
    }

    /// One reward per played step (a short final batch may carry fewer than B).
    void update(const BatchDecision& decision, std::span<const double> rewards) {
        if (rewards.size() > decision.arms.size()) throw std::invalid_argument("more rewards than planned steps");
        for (std::size_t b = 0; b < rewards.size(); ++b) {
            if (rewards[b] < 0.0) throw std::invalid_argument("rewards must be non-negative");
            estimates_.record(decision.arms[b], rewards[b]);
        }
        ++batches_;
    }

    nlohmann::json snapshot() const {
        return {{"t", batch_index()},
                {"theta_hat", estimates_.theta_hat()},
                {"mean_rewards", estimates_.means()},
                {"play_counts", estimates_.counts()}};
    }

    void restore(const nlohmann::json& j) {
        const auto t = j.at("t").get<std::uint64_t>();
        if (t == 0) throw std::invalid_argument("snapshot batch index must be >= 1");
        estimates_.load(j.at("mean_rewards").get<std::vector<double>>(),
                        j.at("play_counts").get<std::vector<std::uint64_t>>());
        batches_ = t - 1;
    }

    /// Overwrite the mean table directly; used to feed known expectations.
    void load_means(std::vector<double> means) {
        std::vector<std::uint64_t> counts(means.size(), 1);
        estimates_.load(std::move(means), std::move(counts));
    }

private:
    GlobalArmEstimates estimates_;
    ExplorationSchedule schedule_;
    std::size_t batch_size_;
    std::uint64_t batches_ = 0;
};

} // namespace edgecache
