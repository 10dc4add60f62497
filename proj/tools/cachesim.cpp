// cachesim: run cache-placement experiments from scenario files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "edgecache/harness.hpp"
#include "edgecache/oracle.hpp"
#include "edgecache/scenario.hpp"
#include "edgecache/scenario_json.hpp"

namespace ec = edgecache;

namespace {

constexpr int exit_invalid_scenario = 2;
constexpr int exit_cap_exceeded = 3;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// "1..20", "3,5,8" or any comma-separated mix of both.
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split(s, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            out.push_back(std::stoull(part));
            continue;
        }
        const auto lo = std::stoull(part.substr(0, dots));
        const auto hi = std::stoull(part.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("empty seed range '" + part + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split(s, ',')) out.push_back(std::stoull(part));
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : split(s, ',')) out.push_back(std::stod(part));
    return out;
}

// Loads and validates; prints the violation report and returns false if invalid.
bool load(const std::string& path, ec::ScenarioConfig& cfg) {
    cfg = ec::load_scenario_config(path);
    const auto problems = ec::validate(cfg);
    if (problems.empty()) return true;
    std::cerr << "invalid scenario " << path << ":\n";
    for (const auto& p : problems) std::cerr << "  - " << p << "\n";
    return false;
}

void print_placements(const ec::OracleResult& r) {
    for (std::size_t m = 0; m < r.optimal_placements.size(); ++m) {
        std::cout << "server " << m + 1 << ": {";
        const auto& c = r.optimal_placements[m].contents;
        for (std::size_t i = 0; i < c.size(); ++i) std::cout << (i ? "," : "") << c[i] + 1;
        std::cout << "}\n";
    }
}

struct RunArgs {
    std::string scenario;
    std::string algos = "extended-mab,ucb,eps-greedy,lfu,lru";
    std::string seeds = "1..20";
    std::size_t horizon = 0;
    std::string checkpoints = "2000,4000,8000,12000,20000";
    std::string out = "out";
    std::string explore_rule = "alg1";
    bool no_prune = false;
    std::uint64_t oracle_cap = ec::default_action_cap;
    std::size_t record_every = 1;
    std::string zipf = "0,0.5,1,1.5";
};

void add_run_flags(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("--scenario", a.scenario, "scenario JSON file")->required();
    cmd->add_option("--algos", a.algos, "comma-separated algorithm ids");
    cmd->add_option("--seeds", a.seeds, "seed list, e.g. 1..20 or 1,4,9");
    cmd->add_option("--horizon", a.horizon, "override the scenario horizon (environment steps)");
    cmd->add_option("--checkpoints", a.checkpoints, "comma-separated reporting steps");
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--explore-rule", a.explore_rule, "exploration schedule")->check(CLI::IsMember({"alg1", "prose"}));
    cmd->add_flag("--no-prune", a.no_prune, "decentralized: consider all contents, not only the top M*K");
    cmd->add_option("--oracle-cap", a.oracle_cap, "largest action space searched exhaustively");
    cmd->add_option("--record-every", a.record_every, "write every n-th step to the run CSVs");
}

ec::ExperimentSpec make_spec(const RunArgs& a, const std::filesystem::path& out) {
    ec::ExperimentSpec spec;
    spec.scenario_path = a.scenario;
    spec.algorithms = split(a.algos, ',');
    spec.seeds = parse_seeds(a.seeds);
    spec.checkpoints = parse_u64_list(a.checkpoints);
    spec.out_dir = out;
    spec.options.horizon = a.horizon;
    spec.options.rule = ec::parse_explore_rule(a.explore_rule);
    spec.options.prune = !a.no_prune;
    spec.options.cap = a.oracle_cap;
    spec.record_every = a.record_every;
    return spec;
}

int run_one(const ec::ScenarioConfig& cfg, const ec::ExperimentSpec& spec) {
    const auto problems = spec.problems();
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "error: " << p << "\n";
        return 1;
    }
    const ec::Scenario s(cfg);
    const auto oracle = ec::optimal_joint_placement(s, spec.options.cap);
    ec::run_experiment(s, oracle, spec);
    std::cout << "wrote " << spec.algorithms.size() * spec.seeds.size() << " runs to " << spec.out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge cache placement simulator"};
    app.require_subcommand(1);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
    validate_cmd->add_option("--scenario", validate_path, "scenario JSON file")->required();

    std::string oracle_path;
    std::uint64_t oracle_cap = ec::default_action_cap;
    auto* oracle_cmd = app.add_subcommand("oracle", "print the optimal joint placement");
    oracle_cmd->add_option("--scenario", oracle_path, "scenario JSON file")->required();
    oracle_cmd->add_option("--oracle-cap", oracle_cap, "largest action space searched exhaustively");

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "run an (algorithm x seed) grid");
    add_run_flags(run_cmd, run_args);

    RunArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "repeat a grid across Zipf exponents");
    add_run_flags(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--zipf", sweep_args.zipf, "comma-separated Zipf exponents");

    CLI11_PARSE(app, argc, argv);

    try {
        ec::ScenarioConfig cfg;
        if (*validate_cmd) {
            if (!load(validate_path, cfg)) return exit_invalid_scenario;
            std::cout << "ok: " << validate_path << "\n";
            return 0;
        }
        if (*oracle_cmd) {
            if (!load(oracle_path, cfg)) return exit_invalid_scenario;
            const ec::Scenario s(cfg);
            const auto r = ec::optimal_joint_placement(s, oracle_cap);
            std::cout << "method: " << r.method << "\n";
            print_placements(r);
            std::cout << "optimal_expected_reward: " << ec::format_double(r.optimal_expected_reward) << "\n";
            std::cout << "gap_max: " << ec::format_double(r.gap_max) << "\n";
            return 0;
        }
        if (*run_cmd) {
            if (!load(run_args.scenario, cfg)) return exit_invalid_scenario;
            return run_one(cfg, make_spec(run_args, run_args.out));
        }
        if (*sweep_cmd) {
            if (!load(sweep_args.scenario, cfg)) return exit_invalid_scenario;
            const auto zipfs = parse_double_list(sweep_args.zipf);
            const std::filesystem::path root = sweep_args.out;
            std::filesystem::create_directories(root);
            std::ofstream summary(root / "sweep_summary.csv");
            summary << "zipf,algorithm,runs,average_satisfied_mean,average_satisfied_sd\n";
            for (double z : zipfs) {
                auto variant = cfg;
                variant.zipf_exponent = z;
                const auto problems = ec::validate(variant);
                if (!problems.empty()) {
                    for (const auto& p : problems) std::cerr << "  - " << p << "\n";
                    return exit_invalid_scenario;
                }
                auto spec = make_spec(sweep_args, root / ("zipf_" + ec::format_double(z)));
                if (const auto bad = spec.problems(); !bad.empty()) {
                    for (const auto& p : bad) std::cerr << "error: " << p << "\n";
                    return 1;
                }
                const ec::Scenario s(variant);
                const auto oracle = ec::optimal_joint_placement(s, spec.options.cap);
                const auto results = ec::run_experiment(s, oracle, spec);
                for (const auto& algo : spec.algorithms) {
                    std::vector<double> avg;
                    for (const auto& r : results) {
                        if (r.algorithm == algo) avg.push_back(r.final.average_satisfied);
                    }
                    const auto st = ec::stats_of(avg);
                    summary << ec::format_double(z) << "," << algo << "," << avg.size() << ","
                            << ec::format_double(st.mean) << "," << ec::format_double(st.stddev) << "\n";
                }
            }
            std::cout << "wrote sweep over " << zipfs.size() << " Zipf exponents to " << root.string() << "\n";
            return 0;
        }
    } catch (const ec::ActionSpaceTooLarge& e) {
        std::cerr << "error: " << e.what() << " (--oracle-cap " << e.cap << ")\n";
        return exit_cap_exceeded;
    } catch (const ec::InvalidScenario& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return exit_invalid_scenario;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
