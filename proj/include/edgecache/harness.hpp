#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "edgecache/baselines.hpp"
#include "edgecache/combinations.hpp"
#include "edgecache/cooperative.hpp"
#include "edgecache/environment.hpp"
#include "edgecache/extended_mab.hpp"
#include "edgecache/oracle.hpp"
#include "edgecache/rng.hpp"
#include "edgecache/scenario.hpp"

namespace edgecache {

inline const std::vector<std::string>& algorithm_ids() {
    static const std::vector<std::string> ids{"extended-mab", "centralized", "decentralized", "lru",
                                              "lfu",          "eps-greedy",  "ucb"};
    return ids;
}

inline constexpr double default_epsilon = 0.95;

struct StepPlan {
    std::vector<CacheCombination> placements;
    Priority priority;
};

/// What a controller may see after a window. Bandit controllers get satisfied counts
/// only; request-driven controllers get the request trace only.
struct WindowFeedback {
    std::vector<std::vector<std::uint64_t>> satisfied;            // [step][server]
    std::vector<std::vector<std::vector<RequestEvent>>> traces;   // [step][server]
};

/// One algorithm driving all servers of a scenario, one window of B steps at a time.
class Controller {
public:
    virtual ~Controller() = default;
    virtual bool wants_trace() const { return false; }
    virtual std::vector<StepPlan> plan(std::size_t window, std::size_t steps, Rng& rng) = 0;
    virtual void observe(std::size_t window, const WindowFeedback& feedback) = 0;
    virtual std::optional<double> theta_hat() const { return std::nullopt; }
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline std::vector<double> normalised(const WindowFeedback& fb, ServerId m, double area) {
    std::vector<double> out;
    out.reserve(fb.satisfied.size());
    for (const auto& step : fb.satisfied) out.push_back(static_cast<double>(step.at(m)) / area);
    return out;
}

/// theta estimate implied by a reward table via the combination-sum identity.
inline double post_hoc_theta(const Scenario& s, const std::vector<double>& means) {
    double sum = 0.0;
    for (double x : means) sum += x;
    const auto divisor = static_cast<double>(binomial(static_cast<long long>(s.contents()) - 1,
                                                      static_cast<long long>(s.cache_size()) - 1));
    return s.density().inverse_clamped(sum / divisor);
}

} // namespace detail

/// One Extended MAB agent per server, no coordination.
class IndependentMabController : public Controller {
public:
    IndependentMabController(const Scenario& s, ExploreRule rule)
        : s_(&s), space_(std::make_unique<CombinationSpace>(s.contents(), s.cache_size())) {
        for (ServerId m = 0; m < s.servers(); ++m) {
            agents_.push_back(ExtendedMab::for_combinations(*space_, s.density(), s.batch_size(), rule));
        }
    }

    std::vector<StepPlan> plan(std::size_t, std::size_t steps, Rng& rng) override {
        decisions_.clear();
        for (const auto& a : agents_) decisions_.push_back(a.select(rng));
        std::vector<StepPlan> out(steps);
        for (std::size_t b = 0; b < steps; ++b) {
            for (const auto& d : decisions_) out[b].placements.push_back((*space_)[d.arms[b]]);
        }
        return out;
    }

    void observe(std::size_t, const WindowFeedback& fb) override {
        for (ServerId m = 0; m < agents_.size(); ++m) {
            agents_[m].update(decisions_[m], detail::normalised(fb, m, s_->server_area(m)));
        }
    }

    std::optional<double> theta_hat() const override {
        std::vector<double> t;
        for (const auto& a : agents_) t.push_back(a.theta_hat());
        return detail::mean_of(t);
    }

    const std::vector<ExtendedMab>& agents() const noexcept { return agents_; }

private:
    const Scenario* s_;
    std::unique_ptr<CombinationSpace> space_;
    std::vector<ExtendedMab> agents_;
    std::vector<BatchDecision> decisions_;
};

class CentralizedController : public Controller {
public:
    CentralizedController(const Scenario& s, ExploreRule rule, std::uint64_t cap)
        : space_(std::make_unique<CombinationSpace>(s.contents(), s.cache_size())),
          mab_(std::make_unique<CentralizedMab>(s, *space_, rule, cap)) {}

    std::vector<StepPlan> plan(std::size_t, std::size_t steps, Rng& rng) override {
        decision_ = mab_->select(rng);
        std::vector<StepPlan> out(steps);
        for (std::size_t b = 0; b < steps; ++b) out[b].placements = mab_->placements(decision_.arms[b]);
        return out;
    }

    void observe(std::size_t, const WindowFeedback& fb) override {
        std::vector<double> global;
        for (const auto& step : fb.satisfied) {
            std::uint64_t sum = 0;
            for (auto x : step) sum += x;
            global.push_back(static_cast<double>(sum));
        }
        mab_->update(decision_, global);
    }

    std::optional<double> theta_hat() const override { return mab_->theta_hat(); }

private:
    std::unique_ptr<CombinationSpace> space_;
    std::unique_ptr<CentralizedMab> mab_;
    BatchDecision decision_;
};

class DecentralizedController : public Controller {
public:
    DecentralizedController(const Scenario& s, ExploreRule rule, bool prune, Rng& rng)
        : space_(std::make_unique<CombinationSpace>(s.contents(), s.cache_size())),
          net_(std::make_unique<DecentralizedNetwork>(s, *space_, rng, rule, prune)) {}

    std::vector<StepPlan> plan(std::size_t window, std::size_t steps, Rng& rng) override {
        decision_ = net_->begin_window(window, rng);
        const ServerId primary = net_->time_division().primary(window);
        const auto base = net_->placements();
        std::vector<StepPlan> out(steps);
        for (std::size_t b = 0; b < steps; ++b) {
            out[b].placements = base;
            out[b].placements[primary] = (*space_)[decision_.arms[b]];
            out[b].priority = Priority::of(primary);
        }
        return out;
    }

    void observe(std::size_t window, const WindowFeedback& fb) override {
        const ServerId primary = net_->time_division().primary(window);
        std::vector<double> raw;
        for (const auto& step : fb.satisfied) raw.push_back(static_cast<double>(step.at(primary)));
        net_->finish_window(window, decision_, raw);
    }

    std::optional<double> theta_hat() const override {
        std::vector<double> t;
        for (const auto& a : net_->agents()) t.push_back(a.theta_hat());
        return detail::mean_of(t);
    }

    const DecentralizedNetwork& network() const noexcept { return *net_; }

private:
    std::unique_ptr<CombinationSpace> space_;
    std::unique_ptr<DecentralizedNetwork> net_;
    BatchDecision decision_;
};

/// epsilon-greedy or UCB1 per server over combinations, one arm per batch.
template <class Policy>
class ArmPolicyController : public Controller {
public:
    template <class... Args>
    explicit ArmPolicyController(const Scenario& s, Args... args)
        : s_(&s), space_(std::make_unique<CombinationSpace>(s.contents(), s.cache_size())) {
        for (ServerId m = 0; m < s.servers(); ++m) policies_.emplace_back(space_->size(), args...);
    }

    std::vector<StepPlan> plan(std::size_t, std::size_t steps, Rng& rng) override {
        arms_.clear();
        StepPlan p;
        for (const auto& pol : policies_) {
            arms_.push_back(pol.select(rng));
            p.placements.push_back((*space_)[arms_.back()]);
        }
        return std::vector<StepPlan>(steps, p);
    }

    void observe(std::size_t, const WindowFeedback& fb) override {
        for (ServerId m = 0; m < policies_.size(); ++m) {
            policies_[m].update(arms_[m], detail::normalised(fb, m, s_->server_area(m)));
        }
    }

    std::optional<double> theta_hat() const override {
        std::vector<double> t;
        for (const auto& pol : policies_) t.push_back(detail::post_hoc_theta(*s_, pol.table().means()));
        return detail::mean_of(t);
    }

    const std::vector<Policy>& policies() const noexcept { return policies_; }

private:
    const Scenario* s_;
    std::unique_ptr<CombinationSpace> space_;
    std::vector<Policy> policies_;
    std::vector<ArmIndex> arms_;
};

/// LFU or LRU per server; placement fixed within a batch, fed the server's own trace.
template <class Cache>
class TraceController : public Controller {
public:
    explicit TraceController(const Scenario& s) {
        for (ServerId m = 0; m < s.servers(); ++m) caches_.emplace_back(s.contents(), s.cache_size());
    }

    bool wants_trace() const override { return true; }

    std::vector<StepPlan> plan(std::size_t, std::size_t steps, Rng&) override {
        StepPlan p;
        for (const auto& c : caches_) p.placements.push_back(c.placement());
        return std::vector<StepPlan>(steps, p);
    }

    void observe(std::size_t, const WindowFeedback& fb) override {
        for (const auto& step : fb.traces) {
            for (ServerId m = 0; m < caches_.size(); ++m) caches_[m].observe(step.at(m));
        }
    }

    const std::vector<Cache>& caches() const noexcept { return caches_; }

private:
    std::vector<Cache> caches_;
};

struct RunOptions {
    std::size_t horizon = 0; // 0 = scenario horizon
    ExploreRule rule = ExploreRule::batch_counter;
    bool prune = true;
    std::uint64_t cap = default_action_cap;
    std::vector<std::uint64_t> checkpoints;
    bool keep_series = false;
    std::size_t plot_points = 2000;
};

inline std::unique_ptr<Controller> make_controller(const std::string& algo, const Scenario& s, const RunOptions& opt,
                                                   Rng& rng) {
    if (algo == "extended-mab") return std::make_unique<IndependentMabController>(s, opt.rule);
    if (algo == "centralized") return std::make_unique<CentralizedController>(s, opt.rule, opt.cap);
    if (algo == "decentralized") return std::make_unique<DecentralizedController>(s, opt.rule, opt.prune, rng);
    if (algo == "eps-greedy") return std::make_unique<ArmPolicyController<EpsilonGreedy>>(s, default_epsilon);
    if (algo == "ucb") return std::make_unique<ArmPolicyController<Ucb1>>(s, 1.0);
    if (algo == "lfu") return std::make_unique<TraceController<Lfu>>(s);
    if (algo == "lru") return std::make_unique<TraceController<Lru>>(s);
    throw std::invalid_argument("unknown algorithm '" + algo + "'");
}

/// Environment randomness depends only on (scenario seed, replicate), so every
/// algorithm sees the same users for a given replicate.
inline std::uint64_t environment_seed(const Scenario& s, std::uint64_t replicate) {
    return stream_seed(s.config().rng_seed, "environment", replicate);
}

inline std::uint64_t agent_seed(const Scenario& s, const std::string& algo, std::uint64_t replicate) {
    return stream_seed(hash_combine(s.config().rng_seed, hash_tag(algo)), "agent", replicate);
}

inline std::string run_id_for(const std::string& algo, std::uint64_t seed) {
    return algo + "-s" + std::to_string(seed);
}

struct PlotPoint {
    std::uint64_t t;
    double cumulative_regret;
    double average_satisfied;
};

struct RunResult {
    std::string run_id;
    std::string algorithm;
    std::uint64_t seed = 0;
    std::vector<RunRecord> series;     // only with keep_series
    std::vector<RunRecord> checkpoints; // one per requested checkpoint reached
    RunRecord final;
    std::vector<PlotPoint> plot;
};

using RecordSink = std::function<void(const RunRecord&)>;

/// One (algorithm, seed) run against precomputed oracle values.
inline RunResult run_single(const Scenario& s, const OracleResult& oracle, const std::string& algo, std::uint64_t seed,
                            const RunOptions& opt = {}, const RecordSink& sink = {}) {
    const std::size_t T = opt.horizon ? opt.horizon : s.horizon();
    Rng rng(agent_seed(s, algo, seed));
    auto ctrl = make_controller(algo, s, opt, rng);
    Environment env(s, environment_seed(s, seed));
    RunResult out;
    out.run_id = run_id_for(algo, seed);
    out.algorithm = algo;
    out.seed = seed;
    RegretTracker tracker(out.run_id, algo, seed, oracle.optimal_expected_reward, s.density().theta_true);
    const bool trace = ctrl->wants_trace();
    const std::size_t plot_every = std::max<std::size_t>(1, (T + opt.plot_points - 1) / std::max<std::size_t>(1, opt.plot_points));

    std::size_t t = 0;
    for (std::size_t window = 0; t < T; ++window) {
        const std::size_t steps = std::min(s.batch_size(), T - t);
        const auto plans = ctrl->plan(window, steps, rng);
        const auto before = ctrl->theta_hat();
        std::vector<SlotOutcome> outcomes;
        outcomes.reserve(steps);
        WindowFeedback fb;
        for (const auto& p : plans) {
            outcomes.push_back(env.step(p.placements, p.priority, trace));
            if (trace) fb.traces.push_back(std::move(*outcomes.back().per_server_request_trace));
            else fb.satisfied.push_back(outcomes.back().per_server_satisfied);
            outcomes.back().per_server_request_trace.reset();
        }
        ctrl->observe(window, fb);
        const auto after = ctrl->theta_hat();
        for (std::size_t b = 0; b < outcomes.size(); ++b) {
            auto rec = tracker.push(outcomes[b], b + 1 == outcomes.size() ? after : before);
            ++t;
            if (sink) sink(rec);
            if (std::find(opt.checkpoints.begin(), opt.checkpoints.end(), rec.t) != opt.checkpoints.end()) {
                out.checkpoints.push_back(rec);
            }
            if (rec.t % plot_every == 0 || rec.t == T) out.plot.push_back({rec.t, rec.cumulative_regret, rec.average_satisfied});
            if (rec.t == T) out.final = rec;
            if (opt.keep_series) out.series.push_back(std::move(rec));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline constexpr const char* run_csv_header =
    "run_id,algorithm,seed,t,satisfied_global,instantaneous_regret,cumulative_regret,theta_hat,theta_abs_error";

inline std::string run_csv_row(const RunRecord& r) {
    std::string line = r.run_id + "," + r.algorithm + "," + std::to_string(r.seed) + "," + std::to_string(r.t) + "," +
                       std::to_string(r.satisfied_global) + "," + format_double(r.instantaneous_regret) + "," +
                       format_double(r.cumulative_regret) + "," + format_double(r.theta_hat) + "," +
                       format_double(r.theta_abs_error);
    return line;
}

inline std::string server_csv_header(std::size_t servers) {
    std::string h = "run_id,t";
    for (std::size_t m = 1; m <= servers; ++m) h += ",server_" + std::to_string(m);
    return h;
}

inline std::string server_csv_row(const RunRecord& r) {
    std::string line = r.run_id + "," + std::to_string(r.t);
    for (auto x : r.satisfied_per_server) line += "," + std::to_string(x);
    return line;
}

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;
};

inline Stats stats_of(const std::vector<double>& v) {
    Stats s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

struct ExperimentSpec {
    std::filesystem::path scenario_path;
    std::vector<std::string> algorithms;
    std::vector<std::uint64_t> seeds;
    std::vector<std::uint64_t> checkpoints;
    std::filesystem::path out_dir;
    RunOptions options;
    std::size_t record_every = 1;

    std::vector<std::string> problems() const {
        std::vector<std::string> p;
        if (algorithms.empty()) p.push_back("at least one algorithm required");
        if (seeds.empty()) p.push_back("at least one seed required");
        if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) p.push_back("checkpoints must be ascending");
        for (const auto& a : algorithms) {
            if (std::find(algorithm_ids().begin(), algorithm_ids().end(), a) == algorithm_ids().end()) {
                p.push_back("unknown algorithm '" + a + "'");
            }
        }
        if (record_every == 0) p.push_back("record_every must be positive");
        return p;
    }
};

inline std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CACHESIM_THREADS")) {
        try {
            const auto v = std::stoul(env);
            if (v > 0) n = std::min<std::size_t>(n, v);
        } catch (const std::exception&) {
        }
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

/// Runs fn(i) for i in [0, jobs) on a small thread pool; the first exception is rethrown.
inline void parallel_for(std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const auto n = worker_count(jobs);
    for (std::size_t k = 1; k < n; ++k) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Grid of runs over already-validated scenario. Results come back in
/// (algorithm, seed) order regardless of scheduling.
inline std::vector<RunResult> run_grid(const Scenario& s, const OracleResult& oracle,
                                       const std::vector<std::string>& algorithms, const std::vector<std::uint64_t>& seeds,
                                       const RunOptions& opt,
                                       const std::function<RecordSink(const std::string&, std::uint64_t)>& sinks = {}) {
    std::vector<RunResult> results(algorithms.size() * seeds.size());
    parallel_for(results.size(), [&](std::size_t i) {
        const auto& algo = algorithms[i / seeds.size()];
        const auto seed = seeds[i % seeds.size()];
        results[i] = run_single(s, oracle, algo, seed, opt, sinks ? sinks(algo, seed) : RecordSink{});
    });
    return results;
}

inline void write_summary_csv(const std::filesystem::path& path, const std::vector<RunResult>& results,
                              const std::vector<std::string>& algorithms, const std::vector<std::uint64_t>& checkpoints,
                              std::uint64_t horizon) {
    std::ofstream f(path);
    f << "algorithm,t,runs,cumulative_regret_mean,cumulative_regret_sd,average_satisfied_mean,average_satisfied_sd\n";
    auto points = checkpoints;
    if (std::find(points.begin(), points.end(), horizon) == points.end()) points.push_back(horizon);
    for (const auto& algo : algorithms) {
        for (auto cp : points) {
            std::vector<double> regret, avg;
            for (const auto& r : results) {
                if (r.algorithm != algo) continue;
                const RunRecord* rec = nullptr;
                if (r.final.t == cp) rec = &r.final;
                for (const auto& c : r.checkpoints) {
                    if (c.t == cp) rec = &c;
                }
                if (!rec) continue;
                regret.push_back(rec->cumulative_regret);
                avg.push_back(rec->average_satisfied);
            }
            if (regret.empty()) continue;
            const auto rs = stats_of(regret);
            const auto as = stats_of(avg);
            f << algo << "," << cp << "," << regret.size() << "," << format_double(rs.mean) << ","
              << format_double(rs.stddev) << "," << format_double(as.mean) << "," << format_double(as.stddev) << "\n";
        }
    }
}

inline void write_density_accuracy_csv(const std::filesystem::path& path, const std::vector<RunResult>& results,
                                       const std::vector<std::uint64_t>& checkpoints) {
    std::vector<RunRecord> recs;
    for (const auto& r : results) recs.insert(recs.end(), r.checkpoints.begin(), r.checkpoints.end());
    std::ofstream f(path);
    f << "algorithm,t,runs,theta_mean_abs_error\n";
    for (const auto& row : density_accuracy(recs, checkpoints)) {
        f << row.algorithm << "," << row.checkpoint << "," << row.runs << "," << format_double(row.mean_abs_error) << "\n";
    }
}

inline void write_plot_csv(const std::filesystem::path& path, const RunResult& r) {
    std::ofstream f(path);
    f << "t,cumulative_regret,average_satisfied\n";
    for (const auto& p : r.plot) {
        f << p.t << "," << format_double(p.cumulative_regret) << "," << format_double(p.average_satisfied) << "\n";
    }
}

/// Full experiment: per-run CSVs (records and per-server counts), plot data, summary
/// and density-accuracy tables under spec.out_dir.
inline std::vector<RunResult> run_experiment(const Scenario& s, const OracleResult& oracle, const ExperimentSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir / "runs");
    fs::create_directories(spec.out_dir / "plots");
    const std::uint64_t horizon = spec.options.horizon ? spec.options.horizon : s.horizon();

    struct Files {
        std::ofstream records;
        std::ofstream servers;
    };
    std::vector<std::unique_ptr<Files>> files(spec.algorithms.size() * spec.seeds.size());
    std::mutex files_mutex;
    std::map<std::pair<std::string, std::uint64_t>, std::size_t> slot;
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
        for (std::size_t k = 0; k < spec.seeds.size(); ++k) slot[{spec.algorithms[a], spec.seeds[k]}] = a * spec.seeds.size() + k;
    }
    const std::size_t every = spec.record_every;
    auto sinks = [&](const std::string& algo, std::uint64_t seed) -> RecordSink {
        auto fs_ptr = std::make_unique<Files>();
        const auto id = run_id_for(algo, seed);
        fs_ptr->records.open(spec.out_dir / "runs" / (id + ".csv"));
        fs_ptr->servers.open(spec.out_dir / "runs" / (id + "_servers.csv"));
        fs_ptr->records << run_csv_header << "\n";
        fs_ptr->servers << server_csv_header(s.servers()) << "\n";
        Files* raw = fs_ptr.get();
        {
            std::lock_guard lock(files_mutex);
            files[slot.at({algo, seed})] = std::move(fs_ptr);
        }
        return [raw, every, horizon](const RunRecord& r) {
            if (r.t % every != 0 && r.t != horizon) return;
            raw->records << run_csv_row(r) << "\n";
            raw->servers << server_csv_row(r) << "\n";
        };
    };
    auto opt = spec.options;
    opt.checkpoints = spec.checkpoints;
    auto results = run_grid(s, oracle, spec.algorithms, spec.seeds, opt, sinks);
    files.clear();
    for (const auto& r : results) write_plot_csv(spec.out_dir / "plots" / (r.run_id + ".csv"), r);
    write_summary_csv(spec.out_dir / "summary.csv", results, spec.algorithms, spec.checkpoints, horizon);
    write_density_accuracy_csv(spec.out_dir / "density_accuracy.csv", results, spec.checkpoints);
    return results;
}

} // namespace edgecache
