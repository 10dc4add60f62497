// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "edgecache/harness.hpp"
#include "edgecache/scenario_json.hpp"

using namespace edgecache;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string summary;
    std::vector<std::string> details;

    void fail(const std::string& why) {
        pass = false;
        details.push_back(why);
    }
    void note(const std::string& line) { details.push_back(line); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<std::string>& bundled_names() {
    static const std::vector<std::string> names{"individual_n5_k2", "individual_n10_k2", "coop_m2_n10_k3",
                                                "coop_m2_n20_k3",   "coop_m3_n20_k3",    "coop_m3_n20_k5"};
    return names;
}

ScenarioConfig bundled_config(const std::string& name) {
    return load_scenario_config(fs::path(EDGECACHE_SOURCE_DIR) / "scenarios" / (name + ".json"));
}

// Extended MAB as evaluated: independent per-server agents without overlap, the
// decentralized time-division variant with overlap.
std::string hero_for(const Scenario& s) { return s.servers() == 1 ? "extended-mab" : "decentralized"; }

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t k = 1; k <= n; ++k) out.push_back(k);
    return out;
}

std::vector<double> random_popularity(std::size_t n, Rng& rng) {
    std::vector<double> p(n);
    double total = 0.0;
    for (auto& v : p) total += (v = std::uniform_real_distribution<double>(0.01, 1.0)(rng));
    for (auto& v : p) v /= total;
    return p;
}

ScenarioConfig small_coop(Rng& rng, std::size_t servers, std::size_t n, std::size_t k) {
    ScenarioConfig c;
    c.num_servers = servers;
    c.num_contents = n;
    c.cache_size = k;
    c.batch_size = 4;
    c.horizon = 100;
    c.zipf_exponent = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    c.density.theta_true = std::uniform_real_distribution<double>(0.5, 30.0)(rng);
    c.density.theta_min = 0.001;
    for (ServerId m = 0; m < servers; ++m) c.regions.sub_regions.push_back({std::uniform_real_distribution<double>(0.5, 10.0)(rng), {m}});
    for (std::size_t mask = 3; mask < (std::size_t{1} << servers); ++mask) {
        if (std::popcount(mask) < 2 || uniform_index(rng, 3) == 0) continue;
        std::vector<ServerId> owners;
        for (ServerId m = 0; m < servers; ++m) {
            if ((mask >> m) & 1U) owners.push_back(m);
        }
        c.regions.sub_regions.push_back({std::uniform_real_distribution<double>(0.2, 12.0)(rng), owners});
    }
    c.regions.total_area = c.regions.area_sum();
    return c;
}

// Visits every joint placement of a scenario.
void for_each_joint(const Scenario& s, const CombinationSpace& space,
                    const std::function<void(const std::vector<CacheCombination>&)>& fn) {
    std::vector<std::size_t> digits(s.servers(), 0);
    std::vector<CacheCombination> place(s.servers());
    for (;;) {
        for (std::size_t m = 0; m < digits.size(); ++m) place[m] = space[digits[m]];
        fn(place);
        std::size_t m = 0;
        while (m < digits.size() && ++digits[m] == space.size()) digits[m++] = 0;
        if (m == digits.size()) return;
    }
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 7);
        const std::size_t k = 1 + uniform_index(rng, n - 1);
        const auto p = random_popularity(n, rng);
        const CombinationSpace space(n, k);
        std::vector<double> combo(space.size(), 0.0);
        for (ArmIndex c = 0; c < space.size(); ++c) {
            for (ContentId i : space[c].contents) combo[c] += p[i];
        }
        const auto back = recover_content_popularity(space, combo);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(back[i] - p[i]));
    }
    const double secs = seconds_since(t0);
    o.summary = fmt("popularity recovery, 1000 instances, max error %.3g, %.2f s", worst, secs);
    if (worst > 1e-12) o.fail(fmt("max error %.3g exceeds 1e-12", worst));
    if (secs >= 5.0) o.fail(fmt("runtime %.2f s exceeds 5 s", secs));
    return o;
}

Outcome criterion2() {
    Outcome o;
    // Integer popularity weights keep the sum identity in exact arithmetic.
    Rng rng(1002);
    std::size_t checked = 0;
    for (std::size_t n = 1; n <= 8; ++n) {
        for (std::size_t k = 1; k <= n; ++k) {
            for (int rep = 0; rep < 5; ++rep) {
                std::vector<std::uint64_t> w(n);
                std::uint64_t total = 0;
                for (auto& x : w) total += (x = 1 + uniform_index(rng, 1000));
                const std::uint64_t mu = 1 + uniform_index(rng, 97);
                const CombinationSpace space(n, k);
                std::uint64_t sum = 0;
                for (const auto& c : space.all()) {
                    for (ContentId i : c.contents) sum += mu * w[i];
                }
                const auto want = binomial(static_cast<long long>(n) - 1, static_cast<long long>(k) - 1) * mu * total;
                if (sum != want) o.fail(fmt("sum identity broken at N=%zu K=%zu", n, k));
                ++checked;
            }
        }
    }
    std::size_t macro_checked = 0;
    for (std::size_t n = 1; n <= 5; ++n) {
        for (std::size_t k = 1; k <= n; ++k) {
            for (std::size_t m = 1; m <= 3; ++m) {
                const CombinationSpace space(n, k);
                const MacroSpace macro(space.size(), m);
                for (ContentId c = 0; c < n; ++c) {
                    std::uint64_t count = 0;
                    for (std::size_t a = 0; a < macro.size(); ++a) {
                        bool any = false;
                        for (ArmIndex arm : macro.decode(a)) any = any || space[arm].contains(c);
                        count += any;
                    }
                    if (count != macro_combinations_containing(n, k, m)) {
                        o.fail(fmt("macro count broken at N=%zu K=%zu M=%zu content %zu", n, k, m, c));
                    }
                    ++macro_checked;
                }
            }
        }
    }
    o.summary = fmt("counting identities exact on %zu sum cases and %zu macro cases", checked, macro_checked);
    return o;
}

Outcome criterion3() {
    Outcome o;
    Rng rng(1003);
    std::size_t violations = 0, tight = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t servers = 2 + uniform_index(rng, 2);
        const std::size_t n = 3 + uniform_index(rng, servers == 2 ? 5 : 3);
        const std::size_t k = 1 + uniform_index(rng, n - 1);
        const Scenario s(small_coop(rng, servers, n, k));
        const CombinationSpace space(n, k);
        double best = -1.0;
        std::vector<CacheCombination> arg;
        for_each_joint(s, space, [&](const std::vector<CacheCombination>& place) {
            const double v = expected_satisfied(s, place).global;
            if (v > best) {
                best = v;
                arg = place;
            }
        });
        const auto S = true_best_set(s);
        bool ok = true;
        for (const auto& c : arg) {
            for (ContentId i : c.contents) ok = ok && std::binary_search(S.begin(), S.end(), i);
        }
        violations += !ok;
        tight += servers * k < n;
    }
    o.summary = fmt("brute-force optimum inside top-M*K set on 500 instances (%zu with M*K < N), %zu violations",
                    tight, violations);
    if (violations > 0) o.fail(fmt("%zu violations", violations));
    return o;
}

Outcome criterion4() {
    Outcome o;
    Rng rng(1004);
    double err_ind = 0.0, err_cen = 0.0, err_dec = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 6);
        const std::size_t k = 1 + uniform_index(rng, n - 1);
        const auto p = random_popularity(n, rng);
        DensityModel model{std::uniform_real_distribution<double>(0.5, 50.0)(rng),
                           std::uniform_real_distribution<double>(0.1, 3.0)(rng),
                           std::uniform_real_distribution<double>(0.5, 2.5)(rng),
                           std::uniform_real_distribution<double>(0.0, 2.0)(rng), 0.01, 60.0};
        const CombinationSpace space(n, k);
        auto agent = ExtendedMab::for_combinations(space, model, 1);
        const double mu = model.true_density();
        std::vector<double> means(space.size(), 0.0);
        for (ArmIndex c = 0; c < space.size(); ++c) {
            for (ContentId i : space[c].contents) means[c] += mu * p[i];
        }
        agent.load_means(means);
        err_ind = std::max(err_ind, std::abs(agent.theta_hat() - model.theta_true));
        std::vector<double> sums(n, 0.0);
        const auto pc = agent.estimates().popularities();
        for (ContentId i = 0; i < n; ++i) {
            for (ArmIndex c : space.containing(i)) sums[i] += pc[c];
        }
        const auto back = content_popularity_from_sums(sums, n, k);
        for (ContentId i = 0; i < n; ++i) err_ind = std::max(err_ind, std::abs(back[i] - p[i]));
    }
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 4);
        const std::size_t k = 1 + uniform_index(rng, n - 1);
        const Scenario s(small_coop(rng, 2, n, k));
        const CombinationSpace space(n, k);
        CentralizedMab mab(s, space);
        std::vector<double> means(mab.macro_space().size());
        for (std::size_t i = 0; i < means.size(); ++i) means[i] = expected_satisfied(s, mab.placements(i)).global / s.total_area();
        mab.load_means(means);
        err_cen = std::max(err_cen, std::abs(mab.theta_hat() - s.density().theta_true));
        const double mu = s.density().true_density();
        const auto pc = mab.core().estimates().popularities();
        for (std::size_t i = 0; i < means.size(); ++i) err_cen = std::max(err_cen, std::abs(pc[i] - means[i] / mu));
    }
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t servers = 2 + uniform_index(rng, 2);
        const std::size_t n = 2 + uniform_index(rng, 6);
        const std::size_t k = 1 + uniform_index(rng, n - 1);
        const Scenario s(small_coop(rng, servers, n, k));
        const CombinationSpace space(n, k);
        const ServerId self = uniform_index(rng, servers);
        DecentralizedAgent agent(s, space, self, rng);
        // the primary takes full credit for its whole area
        const double mu = s.density().true_density();
        std::vector<double> means(space.size(), 0.0);
        for (ArmIndex c = 0; c < space.size(); ++c) {
            for (ContentId i : space[c].contents) means[c] += mu * s.popularity()[i];
        }
        agent.load_means(means);
        err_dec = std::max(err_dec, std::abs(agent.theta_hat() - s.density().theta_true));
        const auto back = agent.content_popularity();
        for (ContentId i = 0; i < n; ++i) err_dec = std::max(err_dec, std::abs(back[i] - s.popularity()[i]));
    }
    o.summary = fmt("exact feeding, max error individual %.2g, centralized %.2g, decentralized %.2g", err_ind, err_cen,
                    err_dec);
    if (err_ind > 1e-10) o.fail("individual path exceeds 1e-10");
    if (err_cen > 1e-10) o.fail("centralized path exceeds 1e-10");
    if (err_dec > 1e-10) o.fail("decentralized path exceeds 1e-10");
    return o;
}

Outcome criterion5() {
    Outcome o;
    const std::vector<std::string> names{"individual_n5_k2", "coop_m2_n10_k3", "coop_m3_n20_k3"};
    double worst = 0.0;
    for (const auto& name : names) {
        const Scenario s(bundled_config(name));
        const auto oracle = optimal_joint_placement(s);
        const CombinationSpace space(s.contents(), s.cache_size());
        Rng rng(1005);
        std::vector<CacheCombination> random_place;
        while (random_place.empty() || random_place == oracle.optimal_placements) {
            random_place.clear();
            for (ServerId m = 0; m < s.servers(); ++m) random_place.push_back(space[uniform_index(rng, space.size())]);
        }
        const std::vector<std::pair<std::vector<CacheCombination>, Priority>> cases{
            {oracle.optimal_placements, Priority::none()}, {random_place, Priority::of(0)}};
        for (const auto& [place, pri] : cases) {
            const auto e = expected_satisfied(s, place, pri);
            Environment env(s, 77);
            const int slots = 100000;
            double global = 0.0;
            std::vector<double> per(s.servers(), 0.0);
            for (int i = 0; i < slots; ++i) {
                const auto out = env.step(place, pri);
                global += static_cast<double>(out.satisfied_global);
                for (ServerId m = 0; m < s.servers(); ++m) per[m] += static_cast<double>(out.per_server_satisfied[m]);
            }
            const double rel = std::abs(global / slots - e.global) / e.global;
            worst = std::max(worst, rel);
            for (ServerId m = 0; m < s.servers(); ++m) {
                if (e.per_server[m] > 1.0) worst = std::max(worst, std::abs(per[m] / slots - e.per_server[m]) / e.per_server[m]);
            }
            o.note(fmt("%s: expected %.3f, simulated %.3f", name.c_str(), e.global, global / slots));
        }
    }
    o.summary = fmt("Monte Carlo vs expectation on 3 bundled scenarios, worst relative error %.4f", worst);
    if (worst > 0.01) o.fail("relative error above 1%");
    return o;
}

// ---------------------------------------------------------------------------
// Shared full-horizon grid for criteria 6 to 8.

struct Grid {
    std::string scenario;
    std::string hero;
    std::vector<std::string> algorithms;
    std::vector<RunResult> results;

    const RunRecord& at(const std::string& algo, std::uint64_t seed, std::uint64_t t) const {
        for (const auto& r : results) {
            if (r.algorithm != algo || r.seed != seed) continue;
            if (r.final.t == t) return r.final;
            for (const auto& c : r.checkpoints) {
                if (c.t == t) return c;
            }
        }
        throw std::runtime_error("missing record " + algo + " t=" + std::to_string(t));
    }
};

constexpr std::uint64_t seeds_per_grid = 20;
const std::vector<std::uint64_t> grid_checkpoints{2000, 8000, 20000};

const std::vector<Grid>& grids() {
    static const std::vector<Grid> all = [] {
        std::vector<Grid> out;
        for (const auto& name : bundled_names()) {
            const auto t0 = std::chrono::steady_clock::now();
            const Scenario s(bundled_config(name));
            const auto oracle = optimal_joint_placement(s);
            Grid g;
            g.scenario = name;
            g.hero = hero_for(s);
            g.algorithms = {g.hero, "ucb", "eps-greedy", "lfu", "lru"};
            RunOptions opt;
            opt.checkpoints = grid_checkpoints;
            g.results = run_grid(s, oracle, g.algorithms, seed_range(seeds_per_grid), opt);
            std::printf("  [grid %s: %zu runs, %.1f s]\n", name.c_str(), g.results.size(), seconds_since(t0));
            std::fflush(stdout);
            out.push_back(std::move(g));
        }
        return out;
    }();
    return all;
}

const Grid& grid(const std::string& name) {
    for (const auto& g : grids()) {
        if (g.scenario == name) return g;
    }
    throw std::runtime_error("no grid " + name);
}

Outcome criterion6() {
    Outcome o;
    const auto& g = grid("individual_n5_k2");
    auto mean_error = [&](const std::string& algo) {
        double sum = 0.0;
        for (std::uint64_t seed = 1; seed <= seeds_per_grid; ++seed) sum += g.at(algo, seed, 8000).theta_abs_error;
        return sum / seeds_per_grid;
    };
    const double ours = mean_error("extended-mab");
    const double eps = mean_error("eps-greedy");
    o.summary = fmt("mean |theta_hat - theta| at t=8000 over %llu seeds: extended-mab %.4f, eps-greedy %.4f (ratio %.1f)",
                    static_cast<unsigned long long>(seeds_per_grid), ours, eps, eps / ours);
    if (!(ours < 0.02)) o.fail(fmt("extended-mab error %.4f not below 0.02", ours));
    if (!(eps >= 5.0 * ours)) o.fail(fmt("eps-greedy error %.4f is less than 5x extended-mab's", eps));
    return o;
}

Outcome criterion7() {
    Outcome o;
    std::size_t comparisons = 0;
    for (const auto& g : grids()) {
        std::vector<double> hero(seeds_per_grid);
        for (std::uint64_t k = 0; k < seeds_per_grid; ++k) hero[k] = g.at(g.hero, k + 1, 20000).cumulative_regret;
        const double hero_mean = stats_of(hero).mean;
        for (std::size_t a = 1; a < g.algorithms.size(); ++a) {
            const auto& other = g.algorithms[a];
            std::vector<double> theirs(seeds_per_grid);
            std::size_t wins = 0;
            for (std::uint64_t k = 0; k < seeds_per_grid; ++k) {
                theirs[k] = g.at(other, k + 1, 20000).cumulative_regret;
                wins += hero[k] < theirs[k];
            }
            const double their_mean = stats_of(theirs).mean;
            const double rate = static_cast<double>(wins) / seeds_per_grid;
            const bool ok = hero_mean < their_mean && rate >= 0.9;
            ++comparisons;
            const auto line = fmt("%s: %s %.0f vs %s %.0f, win rate %.2f%s", g.scenario.c_str(), g.hero.c_str(), hero_mean,
                                  other.c_str(), their_mean, rate, ok ? "" : "  <-- not met");
            if (ok) o.note(line);
            else o.fail(line);
        }
    }
    std::size_t failed = 0;
    for (const auto& d : o.details) failed += d.find("not met") != std::string::npos;
    o.summary = fmt("cumulative regret at T=20000, %zu of %zu paired comparisons met", comparisons - failed, comparisons);
    return o;
}

Outcome criterion8() {
    Outcome o;
    std::size_t met = 0;
    for (const auto& g : grids()) {
        double early = 0.0, late = 0.0;
        for (std::uint64_t seed = 1; seed <= seeds_per_grid; ++seed) {
            early += g.at(g.hero, seed, 2000).cumulative_regret / 2000.0;
            late += g.at(g.hero, seed, 20000).cumulative_regret / 20000.0;
        }
        early /= seeds_per_grid;
        late /= seeds_per_grid;
        const bool ok = late <= 0.5 * early;
        met += ok;
        const auto line = fmt("%s (%s): average regret %.2f at 2000, %.2f at 20000, ratio %.2f%s", g.scenario.c_str(),
                              g.hero.c_str(), early, late, late / early, ok ? "" : "  <-- not met");
        if (ok) o.note(line);
        else o.fail(line);
    }
    o.summary = fmt("average per-slot regret halves by T=20000 on %zu of %zu scenarios", met, grids().size());
    return o;
}

Outcome criterion9() {
    Outcome o;
    const auto base = bundled_config("coop_m2_n10_k3");
    std::size_t met = 0;
    const std::vector<double> zipfs{0.0, 0.5, 1.0, 1.5};
    for (double z : zipfs) {
        const auto t0 = std::chrono::steady_clock::now();
        auto cfg = base;
        cfg.zipf_exponent = z;
        const Scenario s(cfg);
        const auto oracle = optimal_joint_placement(s);
        const auto hero = hero_for(s);
        auto algos = algorithm_ids();
        std::erase(algos, hero);
        algos.insert(algos.begin(), hero);
        const auto results = run_grid(s, oracle, algos, seed_range(seeds_per_grid), RunOptions{});
        std::map<std::string, double> avg;
        for (const auto& r : results) avg[r.algorithm] += r.final.average_satisfied / seeds_per_grid;
        std::string best = hero;
        for (const auto& a : algos) {
            if (avg[a] > avg[best]) best = a;
        }
        std::string line = fmt("zipf %.1f (oracle %.2f):", z, oracle.optimal_expected_reward);
        for (const auto& a : algos) line += fmt(" %s %.2f", a.c_str(), avg[a]);
        const bool ok = best == hero;
        met += ok;
        line += fmt(" [%.1f s]", seconds_since(t0));
        if (ok) o.note(line);
        else o.fail(line + "  <-- best is " + best);
    }
    o.summary = fmt("M=2 Zipf sweep, %s highest average satisfied at %zu of %zu points", hero_for(Scenario(base)).c_str(),
                    met, zipfs.size());
    return o;
}

Outcome criterion10() {
    Outcome o;
    const Scenario s(bundled_config("coop_m2_n10_k3"));
    const auto oracle = optimal_joint_placement(s);
    ExperimentSpec spec;
    spec.algorithms = algorithm_ids();
    spec.seeds = {1, 2, 3};
    spec.checkpoints = {500, 1000, 2000};
    spec.options.horizon = 2000;
    const auto root = fs::temp_directory_path() / "edgecache_acceptance_determinism";
    fs::remove_all(root);
    spec.out_dir = root / "a";
    run_experiment(s, oracle, spec);
    spec.out_dir = root / "b";
    run_experiment(s, oracle, spec);
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root / "a");
        ++files;
        if (!fs::exists(root / "b" / rel) || slurp(e.path()) != slurp(root / "b" / rel)) {
            ++differ;
            o.fail("differs: " + rel.string());
        }
    }
    fs::remove_all(root);
    o.summary = fmt("two identical experiments, %zu CSV files, %zu differ", files, differ);
    if (files == 0) o.fail("no output written");
    return o;
}

} // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.summary = std::string("threw: ") + e.what();
        }
        std::printf("%s criterion %zu: %s\n", o.pass ? "PASS" : "FAIL", i + 1, o.summary.c_str());
        for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
