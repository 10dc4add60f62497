#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgecache/combinations.hpp"
#include "edgecache/environment.hpp"
#include "edgecache/extended_mab.hpp"
#include "edgecache/rng.hpp"
#include "edgecache/scenario.hpp"

namespace edgecache {

inline constexpr std::uint64_t default_action_cap = 1'000'000;

struct ActionSpaceTooLarge : std::runtime_error {
    std::uint64_t size;
    std::uint64_t cap;
    ActionSpaceTooLarge(std::uint64_t size_, std::uint64_t cap_, const std::string& hint)
        : std::runtime_error("action space of " + std::to_string(size_) + " exceeds cap " + std::to_string(cap_) +
                             "; " + hint),
          size(size_), cap(cap_) {}
};

// ---------------------------------------------------------------------------
// Macro-combinations (one combination per server)
// ---------------------------------------------------------------------------

/// Mixed-radix index over C(N,K)^M tuples; server 0 is the most significant digit,
/// so index order is lexicographic in the per-server combination indices.
class MacroSpace {
public:
    MacroSpace(std::size_t combinations_per_server, std::size_t num_servers, std::uint64_t cap = default_action_cap)
        : per_server_(combinations_per_server), servers_(num_servers) {
        const auto total = saturating_pow(per_server_, servers_);
        if (total > cap) throw ActionSpaceTooLarge(total, cap, "use the decentralized algorithm");
        size_ = static_cast<std::size_t>(total);
    }

    std::size_t size() const noexcept { return size_; }
    std::size_t servers() const noexcept { return servers_; }

    std::vector<ArmIndex> decode(std::size_t macro) const {
        std::vector<ArmIndex> arms(servers_);
        for (std::size_t m = servers_; m-- > 0;) {
            arms[m] = macro % per_server_;
            macro /= per_server_;
        }
        return arms;
    }

    std::size_t encode(std::span<const ArmIndex> arms) const {
        std::size_t macro = 0;
        for (ArmIndex a : arms) macro = macro * per_server_ + a;
        return macro;
    }

private:
    std::size_t per_server_;
    std::size_t servers_;
    std::size_t size_ = 0;
};

/// Number of macro-combinations in which at least one server caches a fixed content:
/// C(N,K)^M - C(N-1,K)^M.
inline std::uint64_t macro_combinations_containing(std::size_t n, std::size_t k, std::size_t m) {
    const auto all = binomial(static_cast<long long>(n), static_cast<long long>(k));
    const auto without = binomial(static_cast<long long>(n) - 1, static_cast<long long>(k));
    return saturating_pow(all, m) - saturating_pow(without, m);
}

/// Divisor that maps the sum of all macro arm means (global reward per unit of total
/// area) onto mu(theta). A sub-region covered by j of the M servers is served for a
/// fixed content in C^M - C(N-1,K)^j * C^(M-j) macro arms; when every sub-region is
/// covered by all servers this is exactly C(N,K)^M - C(N-1,K)^M.
inline double macro_density_divisor(const Scenario& s) {
    const double all = static_cast<double>(binomial(static_cast<long long>(s.contents()), static_cast<long long>(s.cache_size())));
    const double without =
        static_cast<double>(binomial(static_cast<long long>(s.contents()) - 1, static_cast<long long>(s.cache_size())));
    const auto M = static_cast<double>(s.servers());
    double weighted = 0.0;
    for (const auto& r : s.sub_regions()) {
        const auto j = static_cast<double>(r.owners.size());
        weighted += r.area * (std::pow(all, M) - std::pow(without, j) * std::pow(all, M - j));
    }
    return weighted / s.total_area();
}

/// Centralised Extended MAB: one agent choosing a whole macro-combination, rewarded by
/// global satisfied users per unit of total area.
class CentralizedMab {
public:
    CentralizedMab(const Scenario& s, const CombinationSpace& space, ExploreRule rule = ExploreRule::batch_counter,
                   std::uint64_t cap = default_action_cap)
        : space_(&space), macro_(space.size(), s.servers(), cap),
          core_(macro_.size(), macro_density_divisor(s), s.density(), s.batch_size(), rule),
          total_area_(s.total_area()) {}

    const MacroSpace& macro_space() const noexcept { return macro_; }
    const ExtendedMab& core() const noexcept { return core_; }
    double theta_hat() const noexcept { return core_.theta_hat(); }

    BatchDecision select(Rng& rng) const { return core_.select(rng); }

    std::vector<CacheCombination> placements(std::size_t macro) const {
        std::vector<CacheCombination> out;
        for (ArmIndex a : macro_.decode(macro)) out.push_back((*space_)[a]);
        return out;
    }

    /// `global_satisfied` holds the raw global satisfied count for every played step.
    void update(const BatchDecision& d, std::span<const double> global_satisfied) {
        std::vector<double> x(global_satisfied.begin(), global_satisfied.end());
        for (auto& v : x) v /= total_area_;
        core_.update(d, x);
    }

    void load_means(std::vector<double> means) { core_.load_means(std::move(means)); }

private:
    const CombinationSpace* space_;
    MacroSpace macro_;
    ExtendedMab core_;
    double total_area_;
};

// ---------------------------------------------------------------------------
// Content popularity from combination popularity
// ---------------------------------------------------------------------------

namespace detail {

inline std::pair<double, double> recovery_constants(std::size_t n, std::size_t k) {
    const auto N = static_cast<long long>(n);
    const auto K = static_cast<long long>(k);
    const double with_n = static_cast<double>(binomial(N - 1, K - 1));
    const double with_pair = static_cast<double>(binomial(N - 2, K - 2)); // 0 when K == 1
    if (with_n == with_pair) throw std::domain_error("degenerate scenario: popularity recovery denominator is zero");
    return {with_n, with_pair};
}

} // namespace detail

/// Given s_n (summed popularity of combinations containing n), invert
/// s_n = C(N-1,K-1) p_n + C(N-2,K-2) (1 - p_n).
inline std::vector<double> content_popularity_from_sums(std::span<const double> sums, std::size_t n, std::size_t k) {
    const auto [with_n, with_pair] = detail::recovery_constants(n, k);
    std::vector<double> p(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) p[i] = (sums[i] - with_pair) / (with_n - with_pair);
    return p;
}

inline std::vector<double> recover_content_popularity(const CombinationSpace& space,
                                                      std::span<const double> combination_popularity) {
    if (combination_popularity.size() != space.size()) throw std::invalid_argument("one popularity per combination required");
    std::vector<double> sums(space.num_contents(), 0.0);
    for (ContentId n = 0; n < space.num_contents(); ++n) {
        for (ArmIndex c : space.containing(n)) sums[n] += combination_popularity[c];
    }
    return content_popularity_from_sums(sums, space.num_contents(), space.cache_size());
}

/// Contents ordered by descending score, ties in random order; first `count` returned.
inline std::vector<ContentId> top_contents(std::span<const double> score, std::vector<ContentId> candidates,
                                           std::size_t count, Rng& rng) {
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](ContentId a, ContentId b) { return score[a] > score[b]; });
    candidates.resize(std::min(count, candidates.size()));
    return candidates;
}

/// The min(M*K, N) contents with the highest estimated popularity.
inline std::vector<ContentId> best_set(std::span<const double> popularity, std::size_t servers, std::size_t cache_size,
                                       Rng& rng) {
    std::vector<ContentId> all(popularity.size());
    std::iota(all.begin(), all.end(), ContentId{0});
    auto s = top_contents(popularity, std::move(all), servers * cache_size, rng);
    std::sort(s.begin(), s.end());
    return s;
}

/// Expected reward for server m of caching content n: each of m's sub-regions
/// contributes area * mu * p_n split among the servers there that would cache n
/// (m itself plus neighbours whose announced placement holds n).
inline double expected_content_reward(const Scenario& s, ServerId m, ContentId n, double popularity, double density,
                                      const std::map<ServerId, CacheCombination>& neighbor_placements) {
    double reward = 0.0;
    for (const auto& region : s.sub_regions()) {
        if (!region.owned_by(m)) continue;
        std::size_t sharing = 1;
        for (ServerId o : region.owners) {
            if (o == m) continue;
            auto it = neighbor_placements.find(o);
            if (it != neighbor_placements.end() && it->second.contains(n)) ++sharing;
        }
        reward += region.area * density * popularity / static_cast<double>(sharing);
    }
    return reward;
}

// ---------------------------------------------------------------------------
// Decentralised multi-agent Extended MAB
// ---------------------------------------------------------------------------

/// Windows of B steps grouped M at a time; window w (0-based) belongs to server w mod M.
struct TimeDivision {
    std::size_t group_length = 1;
    std::size_t window_length = 1;

    ServerId primary(std::size_t window) const noexcept { return window % group_length; }
};

struct Broadcast {
    ServerId server_id;
    std::size_t window_index;
    CacheCombination combination;
};

class DecentralizedAgent {
public:
    DecentralizedAgent(const Scenario& s, const CombinationSpace& space, ServerId self, Rng& rng,
                       ExploreRule rule = ExploreRule::batch_counter, bool prune = true)
        : scenario_(&s), space_(&space), self_(self),
          core_(ExtendedMab::for_combinations(space, s.density(), s.batch_size(), rule)), prune_(prune),
          content_sums_(space.num_contents(), 0.0), area_(s.server_area(self)) {
        current_ = uniform_index(rng, space.size());
    }

    ServerId id() const noexcept { return self_; }
    ArmIndex placement_arm() const noexcept { return current_; }
    const CacheCombination& placement() const { return (*space_)[current_]; }
    const ExtendedMab& core() const noexcept { return core_; }
    double theta_hat() const noexcept { return core_.theta_hat(); }
    std::uint64_t primary_windows() const noexcept { return core_.batch_index() - 1; }
    const std::map<ServerId, CacheCombination>& neighbor_placements() const noexcept { return neighbors_; }

    /// Estimated popularity p_hat_n of every content.
    std::vector<double> content_popularity() const {
        const double mu = core_.estimates().density_hat();
        std::vector<double> s(content_sums_.size(), 0.0);
        if (mu > 0.0) {
            for (std::size_t n = 0; n < s.size(); ++n) s[n] = content_sums_[n] / mu;
        }
        return content_popularity_from_sums(s, space_->num_contents(), space_->cache_size());
    }

    /// Estimated reward of caching n given the latest neighbour announcements. Popularity
    /// estimates are projected onto [0, 1] first.
    double expected_reward(ContentId n, std::span<const double> popularity) const {
        const double p = std::clamp(popularity[n], 0.0, 1.0);
        return expected_content_reward(*scenario_, self_, n, p, core_.estimates().density_hat(), neighbors_);
    }

    /// Decision for this agent's next primary window.
    BatchDecision select(Rng& rng) const {
        if (core_.schedule().fires(core_.batch_index())) return core_.select(rng);
        const auto pop = content_popularity();
        std::vector<ContentId> candidates;
        if (prune_) {
            candidates = best_set(pop, scenario_->servers(), space_->cache_size(), rng);
        } else {
            candidates.resize(space_->num_contents());
            std::iota(candidates.begin(), candidates.end(), ContentId{0});
        }
        std::vector<double> reward(space_->num_contents(), 0.0);
        for (ContentId n : candidates) reward[n] = expected_reward(n, pop);
        auto chosen = top_contents(reward, std::move(candidates), space_->cache_size(), rng);
        BatchDecision d;
        d.arms.assign(core_.batch_size(), space_->index_of(make_combination(std::move(chosen))));
        return d;
    }

    /// Rewards are this server's raw satisfied counts, one per step of its primary window.
    void update(const BatchDecision& d, std::span<const double> satisfied) {
        std::vector<ArmIndex> touched(d.arms.begin(), d.arms.begin() + static_cast<std::ptrdiff_t>(satisfied.size()));
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        std::vector<double> before;
        for (ArmIndex c : touched) before.push_back(core_.estimates().mean(c));

        std::vector<double> x(satisfied.begin(), satisfied.end());
        for (auto& v : x) v /= area_;
        core_.update(d, x);

        for (std::size_t i = 0; i < touched.size(); ++i) {
            const double delta = core_.estimates().mean(touched[i]) - before[i];
            for (ContentId n : (*space_)[touched[i]].contents) content_sums_[n] += delta;
        }
        if (!satisfied.empty()) current_ = d.arms[satisfied.size() - 1];
    }

    Broadcast broadcast(std::size_t window) const { return {self_, window, placement()}; }

    void receive(const Broadcast& msg) {
        if (msg.server_id != self_) neighbors_[msg.server_id] = msg.combination;
    }

    /// Overwrite the mean table directly (exact-expectation feeding, checkpoint restore).
    void load_means(std::vector<double> means) {
        core_.load_means(std::move(means));
        std::fill(content_sums_.begin(), content_sums_.end(), 0.0);
        for (ContentId n = 0; n < space_->num_contents(); ++n) {
            for (ArmIndex c : space_->containing(n)) content_sums_[n] += core_.estimates().mean(c);
        }
    }

    void set_placement(ArmIndex arm) { current_ = arm; }

private:
    const Scenario* scenario_;
    const CombinationSpace* space_;
    ServerId self_;
    ExtendedMab core_;
    bool prune_;
    std::vector<double> content_sums_; // sum of mean rewards over combinations containing n
    double area_;
    ArmIndex current_;
    std::map<ServerId, CacheCombination> neighbors_;
};

/// The round driver: only the window's primary server decides and learns; everyone
/// else keeps serving its last placement. Messages are plain values passed here.
class DecentralizedNetwork {
public:
    DecentralizedNetwork(const Scenario& s, const CombinationSpace& space, Rng& rng,
                         ExploreRule rule = ExploreRule::batch_counter, bool prune = true)
        : scenario_(&s), space_(&space), division_{s.servers(), s.batch_size()} {
        for (ServerId m = 0; m < s.servers(); ++m) agents_.emplace_back(s, space, m, rng, rule, prune);
        for (const auto& a : agents_) deliver(a.broadcast(0));
    }

    const TimeDivision& time_division() const noexcept { return division_; }
    const std::vector<DecentralizedAgent>& agents() const noexcept { return agents_; }
    std::vector<DecentralizedAgent>& agents() noexcept { return agents_; }
    const std::vector<Broadcast>& message_log() const noexcept { return log_; }
    void enable_message_log(bool on) { logging_ = on; }

    std::vector<CacheCombination> placements() const {
        std::vector<CacheCombination> out;
        for (const auto& a : agents_) out.push_back(a.placement());
        return out;
    }

    /// Primary's decision for `window`; call finish_window() with its rewards afterwards.
    BatchDecision begin_window(std::size_t window, Rng& rng) const {
        return agents_[division_.primary(window)].select(rng);
    }

    void finish_window(std::size_t window, const BatchDecision& d, std::span<const double> primary_satisfied) {
        auto& primary = agents_[division_.primary(window)];
        primary.update(d, primary_satisfied);
        deliver(primary.broadcast(window));
    }

    /// Runs one window of `steps` environment steps with the primary holding priority.
    std::vector<SlotOutcome> run_window(Environment& env, std::size_t window, Rng& rng, std::size_t steps) {
        const auto d = begin_window(window, rng);
        const ServerId m = division_.primary(window);
        auto placed = placements();
        std::vector<SlotOutcome> outcomes;
        std::vector<double> rewards;
        for (std::size_t b = 0; b < steps && b < d.arms.size(); ++b) {
            placed[m] = (*space_)[d.arms[b]];
            outcomes.push_back(env.step(placed, Priority::of(m)));
            rewards.push_back(static_cast<double>(outcomes.back().per_server_satisfied[m]));
        }
        finish_window(window, d, rewards);
        return outcomes;
    }

private:
    void deliver(const Broadcast& msg) {
        if (logging_) log_.push_back(msg);
        for (ServerId n : scenario_->neighbors(msg.server_id)) agents_[n].receive(msg);
    }

    const Scenario* scenario_;
    const CombinationSpace* space_;
    TimeDivision division_;
    std::vector<DecentralizedAgent> agents_;
    std::vector<Broadcast> log_;
    bool logging_ = false;
};

} // namespace edgecache
