#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "edgecache/scenario.hpp"

namespace edgecache {

// Scenario documents use 1-based server ids in `owners`; everything in memory is 0-based.
// `name` and `total_area` are optional (total_area defaults to the sum of sub-region areas).

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    try {
        ScenarioConfig cfg;
        cfg.name = j.value("name", std::string("scenario"));
        cfg.num_servers = j.at("servers").get<std::size_t>();
        cfg.num_contents = j.at("contents").get<std::size_t>();
        cfg.cache_size = j.at("cache_size").get<std::size_t>();
        cfg.batch_size = j.at("batch_size").get<std::size_t>();
        cfg.horizon = j.at("horizon").get<std::size_t>();
        const auto& d = j.at("density");
        cfg.density.theta_true = d.at("theta").get<double>();
        cfg.density.w = d.at("w").get<double>();
        cfg.density.exponent = d.at("exponent").get<double>();
        cfg.density.b = d.at("b").get<double>();
        cfg.density.theta_min = d.at("theta_min").get<double>();
        cfg.density.theta_max = d.at("theta_max").get<double>();
        cfg.zipf_exponent = j.at("zipf_exponent").get<double>();
        for (const auto& r : j.at("sub_regions")) {
            SubRegion sub;
            sub.area = r.at("area").get<double>();
            for (const auto& o : r.at("owners")) {
                const auto id = o.get<long long>();
                // 0 or negative ids map to an out-of-range id so validate() reports them.
                sub.owners.push_back(id >= 1 ? static_cast<ServerId>(id - 1) : std::numeric_limits<ServerId>::max());
            }
            std::sort(sub.owners.begin(), sub.owners.end());
            cfg.regions.sub_regions.push_back(std::move(sub));
        }
        cfg.regions.total_area = j.contains("total_area") ? j.at("total_area").get<double>() : cfg.regions.area_sum();
        cfg.rng_seed = j.at("seed").get<std::uint64_t>();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed scenario document: ") + e.what());
    }
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["name"] = cfg.name;
    j["servers"] = cfg.num_servers;
    j["contents"] = cfg.num_contents;
    j["cache_size"] = cfg.cache_size;
    j["batch_size"] = cfg.batch_size;
    j["horizon"] = cfg.horizon;
    j["density"] = {{"theta", cfg.density.theta_true}, {"w", cfg.density.w},
                    {"exponent", cfg.density.exponent}, {"b", cfg.density.b},
                    {"theta_min", cfg.density.theta_min}, {"theta_max", cfg.density.theta_max}};
    j["zipf_exponent"] = cfg.zipf_exponent;
    auto regions = nlohmann::json::array();
    for (const auto& r : cfg.regions.sub_regions) {
        auto owners = nlohmann::json::array();
        for (ServerId m : r.owners) owners.push_back(m + 1);
        regions.push_back({{"area", r.area}, {"owners", owners}});
    }
    j["sub_regions"] = regions;
    j["total_area"] = cfg.regions.total_area;
    j["seed"] = cfg.rng_seed;
    return j;
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("cannot parse " + path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

} // namespace edgecache
