#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgecache/rng.hpp"
#include "edgecache/scenario.hpp"

namespace edgecache {

struct RequestEvent {
    ContentId content;
    bool hit;
};

/// Which server, if any, takes overlap credit this slot.
struct Priority {
    std::optional<ServerId> primary_server;

    static Priority none() { return {}; }
    static Priority of(ServerId m) { return Priority{m}; }
};

struct SlotOutcome {
    std::uint64_t total_users = 0;
    std::vector<std::uint64_t> per_content_requests;
    std::vector<std::uint64_t> per_server_satisfied;
    std::uint64_t satisfied_global = 0;
    // Present only when requested; consumed by request-driven baselines and tests.
    std::optional<std::vector<std::vector<RequestEvent>>> per_server_request_trace;
};

struct ExpectedSatisfaction {
    std::vector<double> per_server;
    double global = 0.0;
};

namespace detail {

inline void check_placements(const Scenario& s, std::span<const CacheCombination> placements) {
    if (placements.size() != s.servers()) throw std::invalid_argument("one placement per server required");
    for (const auto& c : placements) {
        if (c.size() != s.cache_size()) throw std::invalid_argument("placement must hold exactly K contents");
        if (!c.contents.empty() && c.contents.back() >= s.contents()) throw std::invalid_argument("content id out of range");
    }
}

} // namespace detail

/// Closed-form expectation of step(): the primary takes the whole overlap credit for
/// contents it caches, otherwise credit is split evenly among caching owners.
inline ExpectedSatisfaction expected_satisfied(const Scenario& s, std::span<const CacheCombination> placements,
                                               Priority priority = Priority::none()) {
    detail::check_placements(s, placements);
    const double mu = s.density().true_density();
    const auto& p = s.popularity();
    ExpectedSatisfaction out;
    out.per_server.assign(s.servers(), 0.0);
    std::vector<ServerId> caching;
    for (const auto& region : s.sub_regions()) {
        for (ContentId n = 0; n < s.contents(); ++n) {
            caching.clear();
            for (ServerId o : region.owners) {
                if (placements[o].contains(n)) caching.push_back(o);
            }
            if (caching.empty()) continue;
            const double mass = region.area * mu * p[n];
            out.global += mass;
            const auto primary = priority.primary_server;
            if (primary && std::find(caching.begin(), caching.end(), *primary) != caching.end()) {
                out.per_server[*primary] += mass;
            } else {
                for (ServerId o : caching) out.per_server[o] += mass / static_cast<double>(caching.size());
            }
        }
    }
    return out;
}

/// Per-slot stochastic world. Users in each sub-region form a Poisson process with
/// intensity mu(theta) * area; each requests one content by popularity. The demand is
/// drawn as independent Poisson(mu * area * p_n) counts per content (Poisson thinning,
/// identical in law to a Poisson total split multinomially).
///
/// Three streams keep demand independent of placements, so runs that share a seed see
/// the same users regardless of the algorithm: demand, credit tie-breaks, trace order.
class Environment {
public:
    Environment(const Scenario& scenario, std::uint64_t seed)
        : scenario_(&scenario),
          demand_(hash_combine(seed, hash_tag("demand"))),
          credit_(hash_combine(seed, hash_tag("credit"))),
          trace_(hash_combine(seed, hash_tag("trace"))) {
        const double mu = scenario.density().true_density();
        const auto& p = scenario.popularity();
        for (const auto& region : scenario.sub_regions()) {
            for (ContentId n = 0; n < scenario.contents(); ++n) {
                arrivals_.emplace_back(mu * region.area * p[n]);
            }
        }
        cached_.assign(scenario.servers() * scenario.contents(), 0);
    }

    const Scenario& scenario() const noexcept { return *scenario_; }

    SlotOutcome step(std::span<const CacheCombination> placements, Priority priority = Priority::none(),
                     bool record_trace = false) {
        const Scenario& s = *scenario_;
        detail::check_placements(s, placements);
        const std::size_t N = s.contents();
        std::fill(cached_.begin(), cached_.end(), 0);
        for (ServerId m = 0; m < s.servers(); ++m) {
            for (ContentId n : placements[m].contents) cached_[m * N + n] = 1;
        }
        if (priority.primary_server && *priority.primary_server >= s.servers()) {
            throw std::invalid_argument("primary server out of range");
        }

        SlotOutcome out;
        out.per_content_requests.assign(N, 0);
        out.per_server_satisfied.assign(s.servers(), 0);
        if (record_trace) out.per_server_request_trace.emplace(s.servers());

        std::vector<ServerId> caching;
        std::size_t slot = 0;
        for (const auto& region : s.sub_regions()) {
            for (ContentId n = 0; n < N; ++n, ++slot) {
                const std::uint64_t users = arrivals_[slot](demand_);
                if (users == 0) continue;
                out.per_content_requests[n] += users;
                out.total_users += users;

                caching.clear();
                for (ServerId o : region.owners) {
                    if (cached_[o * N + n]) caching.push_back(o);
                    if (record_trace) {
                        auto& trace = (*out.per_server_request_trace)[o];
                        trace.insert(trace.end(), users, RequestEvent{n, cached_[o * N + n] != 0});
                    }
                }
                if (caching.empty()) continue;
                out.satisfied_global += users;

                const auto primary = priority.primary_server;
                if (primary && std::find(caching.begin(), caching.end(), *primary) != caching.end()) {
                    out.per_server_satisfied[*primary] += users;
                } else if (caching.size() == 1) {
                    out.per_server_satisfied[caching.front()] += users;
                } else {
                    // each user credited to one caching owner chosen uniformly
                    std::uint64_t remaining = users;
                    for (std::size_t i = 0; i + 1 < caching.size() && remaining > 0; ++i) {
                        const double share = 1.0 / static_cast<double>(caching.size() - i);
                        const auto x = std::binomial_distribution<std::uint64_t>(remaining, share)(credit_);
                        out.per_server_satisfied[caching[i]] += x;
                        remaining -= x;
                    }
                    out.per_server_satisfied[caching.back()] += remaining;
                }
            }
        }
        if (record_trace) {
            for (auto& trace : *out.per_server_request_trace) std::shuffle(trace.begin(), trace.end(), trace_);
        }
        return out;
    }

private:
    const Scenario* scenario_;
    Rng demand_;
    Rng credit_;
    Rng trace_;
    std::vector<std::poisson_distribution<std::uint64_t>> arrivals_; // [region][content]
    std::vector<std::uint8_t> cached_;                               // [server][content]
};

} // namespace edgecache
