#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgecache/combinations.hpp"
#include "edgecache/cooperative.hpp"
#include "edgecache/environment.hpp"
#include "edgecache/scenario.hpp"

namespace edgecache {

struct OracleResult {
    std::vector<CacheCombination> optimal_placements;
    double optimal_expected_reward = 0.0; // global expected satisfied users per slot
    double worst_expected_reward = 0.0;
    double gap_max = 0.0;
    std::string method; // "exhaustive", "restricted", "capacity-dp"
};

namespace detail {

/// Global expected reward is separable by content: caching n on server set T earns
/// mu * p_n * (area covered by T). covered_area[T] is indexed by server bitmask.
inline std::vector<double> covered_area_by_mask(const Scenario& s) {
    const std::size_t M = s.servers();
    if (M > 20) throw std::invalid_argument("oracle supports at most 20 servers");
    std::vector<double> covered(std::size_t{1} << M, 0.0);
    for (std::size_t mask = 0; mask < covered.size(); ++mask) {
        for (const auto& r : s.sub_regions()) {
            const bool hit = std::any_of(r.owners.begin(), r.owners.end(),
                                         [&](ServerId o) { return (mask >> o) & 1U; });
            if (hit) covered[mask] += r.area;
        }
    }
    return covered;
}

/// Exhaustive search over `contents`-restricted macro-combinations.
inline OracleResult exhaustive(const Scenario& s, std::span<const ContentId> contents, std::uint64_t cap,
                               const std::string& method) {
    const std::size_t K = s.cache_size();
    const std::size_t M = s.servers();
    const CombinationSpace local(contents.size(), K);
    const auto total = saturating_pow(local.size(), M);
    if (total > cap) throw ActionSpaceTooLarge(total, cap, "scenario too large for exhaustive oracle search");

    const double mu = s.density().true_density();
    const auto& p = s.popularity();
    const auto& regions = s.sub_regions();
    // per-region value of every local combination held by a single server
    std::vector<std::vector<ContentId>> members(local.size());
    for (ArmIndex c = 0; c < local.size(); ++c) {
        for (ContentId i : local[c].contents) members[c].push_back(contents[i]);
    }

    std::vector<ArmIndex> digits(M, 0);
    std::vector<std::uint8_t> seen(s.contents(), 0);
    double best = -1.0;
    double worst = std::numeric_limits<double>::infinity();
    std::vector<ArmIndex> best_digits = digits;
    for (std::uint64_t iter = 0; iter < total; ++iter) {
        double value = 0.0;
        for (const auto& r : regions) {
            std::fill(seen.begin(), seen.end(), 0);
            double mass = 0.0;
            for (ServerId o : r.owners) {
                for (ContentId n : members[digits[o]]) {
                    if (!seen[n]) {
                        seen[n] = 1;
                        mass += p[n];
                    }
                }
            }
            value += r.area * mass;
        }
        value *= mu;
        if (value > best) {
            best = value;
            best_digits = digits;
        }
        worst = std::min(worst, value);
        for (std::size_t m = M; m-- > 0;) {
            if (++digits[m] < local.size()) break;
            digits[m] = 0;
        }
    }
    OracleResult out;
    out.method = method;
    out.optimal_expected_reward = best;
    out.worst_expected_reward = worst;
    for (ServerId m = 0; m < M; ++m) out.optimal_placements.push_back(CacheCombination{members[best_digits[m]]});
    for (auto& c : out.optimal_placements) std::sort(c.contents.begin(), c.contents.end());
    return out;
}

struct DpSolution {
    double value;
    std::vector<CacheCombination> placements;
};

/// Exact optimum (or minimum) over all joint placements by dynamic programming on
/// remaining per-server capacity; each content picks which servers cache it.
inline DpSolution capacity_dp(const Scenario& s, bool maximize, std::uint64_t cap) {
    const std::size_t M = s.servers();
    const std::size_t N = s.contents();
    const std::size_t K = s.cache_size();
    const auto states = saturating_pow(K + 1, M);
    if (states > cap) throw ActionSpaceTooLarge(states, cap, "capacity DP state space too large");
    const auto covered = covered_area_by_mask(s);
    const double mu = s.density().true_density();
    const auto& p = s.popularity();
    const std::size_t S = static_cast<std::size_t>(states);
    const std::size_t subsets = std::size_t{1} << M;

    auto decode = [&](std::size_t state, std::vector<std::size_t>& cap_left) {
        for (std::size_t m = 0; m < M; ++m) {
            cap_left[m] = state % (K + 1);
            state /= (K + 1);
        }
    };
    std::vector<std::size_t> stride(M, 1);
    for (std::size_t m = 1; m < M; ++m) stride[m] = stride[m - 1] * (K + 1);

    const double none = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    // value[n][state]: best value using contents n..N-1 with `state` capacity left
    std::vector<std::vector<double>> value(N + 1, std::vector<double>(S, none));
    std::vector<std::vector<std::uint32_t>> choice(N, std::vector<std::uint32_t>(S, 0));
    value[N][0] = 0.0;
    std::vector<std::size_t> cap_left(M);
    for (std::size_t n = N; n-- > 0;) {
        for (std::size_t state = 0; state < S; ++state) {
            decode(state, cap_left);
            double best = none;
            std::uint32_t best_mask = 0;
            for (std::size_t mask = 0; mask < subsets; ++mask) {
                bool ok = true;
                std::size_t next = state;
                for (std::size_t m = 0; m < M && ok; ++m) {
                    if ((mask >> m) & 1U) {
                        if (cap_left[m] == 0) ok = false;
                        else next -= stride[m];
                    }
                }
                if (!ok) continue;
                const double rest = value[n + 1][next];
                if (std::isinf(rest)) continue;
                const double v = rest + mu * p[n] * covered[mask];
                if (maximize ? v > best : v < best) {
                    best = v;
                    best_mask = static_cast<std::uint32_t>(mask);
                }
            }
            value[n][state] = best;
            choice[n][state] = best_mask;
        }
    }
    std::size_t full = 0;
    for (std::size_t m = 0; m < M; ++m) full += K * stride[m];
    DpSolution out{value[0][full], std::vector<CacheCombination>(M)};
    std::size_t state = full;
    for (ContentId n = 0; n < N; ++n) {
        const auto mask = choice[n][state];
        for (std::size_t m = 0; m < M; ++m) {
            if ((mask >> m) & 1U) {
                out.placements[m].contents.push_back(n);
                state -= stride[m];
            }
        }
    }
    return out;
}

} // namespace detail

/// Indices of the min(M*K, N) most popular contents under the true popularity.
inline std::vector<ContentId> true_best_set(const Scenario& s) {
    std::vector<ContentId> order(s.contents());
    std::iota(order.begin(), order.end(), ContentId{0});
    const auto& p = s.popularity();
    std::stable_sort(order.begin(), order.end(), [&](ContentId a, ContentId b) { return p[a] > p[b]; });
    order.resize(std::min(s.contents(), s.servers() * s.cache_size()));
    std::sort(order.begin(), order.end());
    return order;
}

/// Best joint placement under the true parameters. Exhaustive when the full macro
/// space fits under `cap`; otherwise exhaustive within the top-M*K set; otherwise the
/// exact capacity DP. gap_max always comes from the exact minimum over all placements.
inline OracleResult optimal_joint_placement(const Scenario& s, std::uint64_t cap = default_action_cap) {
    const std::size_t per_server = binomial(static_cast<long long>(s.contents()), static_cast<long long>(s.cache_size()));
    OracleResult out;
    if (saturating_pow(per_server, s.servers()) <= cap) {
        std::vector<ContentId> all(s.contents());
        std::iota(all.begin(), all.end(), ContentId{0});
        out = detail::exhaustive(s, all, cap, "exhaustive");
    } else {
        const auto best = true_best_set(s);
        const std::size_t restricted = binomial(static_cast<long long>(best.size()), static_cast<long long>(s.cache_size()));
        if (saturating_pow(restricted, s.servers()) <= cap) {
            out = detail::exhaustive(s, best, cap, "restricted");
        } else {
            auto dp = detail::capacity_dp(s, true, cap);
            out.method = "capacity-dp";
            out.optimal_expected_reward = dp.value;
            out.optimal_placements = std::move(dp.placements);
        }
        out.worst_expected_reward = detail::capacity_dp(s, false, cap).value;
    }
    out.gap_max = out.optimal_expected_reward - out.worst_expected_reward;
    return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct RunRecord {
    std::string run_id;
    std::string algorithm;
    std::uint64_t seed = 0;
    std::uint64_t t = 0;
    std::uint64_t satisfied_global = 0;
    std::vector<std::uint64_t> satisfied_per_server;
    double instantaneous_regret = 0.0;
    double cumulative_regret = 0.0;
    double average_satisfied = 0.0;
    double theta_hat = std::numeric_limits<double>::quiet_NaN();
    double theta_abs_error = std::numeric_limits<double>::quiet_NaN();
};

/// Incremental regret bookkeeping against the oracle's expected reward.
class RegretTracker {
public:
    RegretTracker(std::string run_id, std::string algorithm, std::uint64_t seed, double optimal_reward, double theta_true)
        : run_id_(std::move(run_id)), algorithm_(std::move(algorithm)), seed_(seed), optimal_(optimal_reward),
          theta_true_(theta_true) {}

    RunRecord push(const SlotOutcome& slot, std::optional<double> theta_hat) {
        RunRecord r;
        r.run_id = run_id_;
        r.algorithm = algorithm_;
        r.seed = seed_;
        r.t = ++t_;
        r.satisfied_global = slot.satisfied_global;
        r.satisfied_per_server = slot.per_server_satisfied;
        r.instantaneous_regret = optimal_ - static_cast<double>(slot.satisfied_global);
        cumulative_ += r.instantaneous_regret;
        satisfied_sum_ += static_cast<double>(slot.satisfied_global);
        r.cumulative_regret = cumulative_;
        r.average_satisfied = satisfied_sum_ / static_cast<double>(t_);
        if (theta_hat) {
            r.theta_hat = *theta_hat;
            r.theta_abs_error = std::abs(*theta_hat - theta_true_);
        }
        return r;
    }

private:
    std::string run_id_;
    std::string algorithm_;
    std::uint64_t seed_;
    double optimal_;
    double theta_true_;
    std::uint64_t t_ = 0;
    double cumulative_ = 0.0;
    double satisfied_sum_ = 0.0;
};

/// Per-slot records from a completed run; theta_hats (if given) align with outcomes.
inline std::vector<RunRecord> regret_series(std::span<const SlotOutcome> run, const OracleResult& oracle,
                                            double theta_true, std::span<const double> theta_hats = {},
                                            const std::string& run_id = "run", const std::string& algorithm = "",
                                            std::uint64_t seed = 0) {
    RegretTracker tracker(run_id, algorithm, seed, oracle.optimal_expected_reward, theta_true);
    std::vector<RunRecord> out;
    out.reserve(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) {
        std::optional<double> th;
        if (i < theta_hats.size()) th = theta_hats[i];
        out.push_back(tracker.push(run[i], th));
    }
    return out;
}

struct AccuracyRow {
    std::string algorithm;
    std::uint64_t checkpoint;
    double mean_abs_error;
    std::size_t runs;
};

/// Mean |theta_hat - theta| over runs at each checkpoint, per algorithm. Records
/// without an estimate (NaN) yield NaN.
inline std::vector<AccuracyRow> density_accuracy(std::span<const RunRecord> records,
                                                 std::span<const std::uint64_t> checkpoints) {
    std::map<std::string, std::map<std::uint64_t, std::pair<double, std::size_t>>> acc;
    std::vector<std::string> order;
    for (const auto& r : records) {
        if (!acc.contains(r.algorithm)) order.push_back(r.algorithm);
        auto& per = acc[r.algorithm];
        if (std::find(checkpoints.begin(), checkpoints.end(), r.t) == checkpoints.end()) continue;
        auto& [sum, n] = per[r.t];
        sum += r.theta_abs_error;
        ++n;
    }
    std::vector<AccuracyRow> out;
    for (const auto& algo : order) {
        for (auto cp : checkpoints) {
            const auto it = acc[algo].find(cp);
            if (it == acc[algo].end()) continue;
            out.push_back({algo, cp, it->second.first / static_cast<double>(it->second.second), it->second.second});
        }
    }
    return out;
}

} // namespace edgecache
