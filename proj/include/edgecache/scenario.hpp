#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgecache/combinations.hpp"

namespace edgecache {

/// Expected user density mu(theta) = w * theta^exponent + b over a bounded domain.
struct DensityModel {
    double theta_true = 5.0;
    double w = 1.0;
    double exponent = 1.0;
    double b = 0.0;
    double theta_min = 0.01;
    double theta_max = 100.0;

    double mu(double theta) const { return w * std::pow(theta, exponent) + b; }
    double true_density() const { return mu(theta_true); }

    double clamp(double theta) const { return std::clamp(theta, theta_min, theta_max); }

    /// argmin over the domain of |mu(theta) - density|. mu is strictly increasing,
    /// so the minimiser is the clamped inverse.
    double inverse_clamped(double density) const {
        if (!(density > b)) return theta_min;
        return clamp(std::pow((density - b) / w, 1.0 / exponent));
    }
};

struct SubRegion {
    double area = 0.0;
    std::vector<ServerId> owners; // 0-based, sorted

    bool owned_by(ServerId m) const { return std::binary_search(owners.begin(), owners.end(), m); }
};

struct RegionMap {
    std::vector<SubRegion> sub_regions;
    double total_area = 0.0;

    double server_area(ServerId m) const {
        double area = 0.0;
        for (const auto& r : sub_regions) {
            if (r.owned_by(m)) area += r.area;
        }
        return area;
    }

    double area_sum() const {
        return std::accumulate(sub_regions.begin(), sub_regions.end(), 0.0,
                               [](double acc, const SubRegion& r) { return acc + r.area; });
    }
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::size_t num_servers = 1;
    std::size_t num_contents = 1;
    std::size_t cache_size = 1;
    std::size_t batch_size = 1;
    std::size_t horizon = 1;
    DensityModel density;
    double zipf_exponent = 0.0;
    RegionMap regions;
    std::uint64_t rng_seed = 0;
};

/// p_n proportional to n^-s for ranks n = 1..N; content id 0 is the most popular.
inline std::vector<double> zipf_popularity(std::size_t num_contents, double exponent) {
    if (num_contents == 0) throw std::invalid_argument("zipf_popularity needs N >= 1");
    if (exponent < 0.0) throw std::invalid_argument("zipf exponent must be non-negative");
    std::vector<double> p(num_contents);
    double total = 0.0;
    for (std::size_t i = 0; i < num_contents; ++i) {
        p[i] = std::pow(static_cast<double>(i + 1), -exponent);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

/// Every invariant violation, with a path-like prefix. Empty iff the config is usable.
inline std::vector<std::string> validate(const ScenarioConfig& cfg) {
    std::vector<std::string> out;
    auto fail = [&out](std::string msg) { out.push_back(std::move(msg)); };

    if (cfg.num_servers < 1) fail("servers: must be at least 1");
    if (cfg.num_contents < 1) fail("contents: must be at least 1");
    if (cfg.cache_size < 1) fail("cache_size: must be at least 1");
    if (cfg.cache_size > cfg.num_contents) fail("cache_size exceeds num_contents");
    if (cfg.batch_size < 1) fail("batch_size: must be at least 1");
    if (cfg.horizon < 1) fail("horizon: must be at least 1");
    if (!(cfg.zipf_exponent >= 0.0)) fail("zipf_exponent: must be non-negative");

    const auto& d = cfg.density;
    if (!(d.w > 0.0)) fail("density.w: must be positive for mu to be increasing");
    if (!(d.exponent > 0.0)) fail("density.exponent: must be positive for mu to be increasing");
    if (!(d.theta_min >= 0.0)) fail("density.theta_min: must be non-negative");
    if (!(d.theta_min <= d.theta_max)) fail("density: theta_min exceeds theta_max");
    if (!(d.theta_true >= d.theta_min && d.theta_true <= d.theta_max)) fail("density.theta: outside [theta_min, theta_max]");
    if (d.theta_true <= 0.0) fail("density.theta: must be positive");
    if (d.w > 0.0 && d.exponent > 0.0 && !(d.mu(d.theta_min) > 0.0)) fail("density: mu(theta_min) must be positive");

    const auto& regions = cfg.regions;
    if (regions.sub_regions.empty()) fail("sub_regions: at least one sub-region required");
    for (std::size_t i = 0; i < regions.sub_regions.size(); ++i) {
        const auto& r = regions.sub_regions[i];
        const std::string path = "sub_regions[" + std::to_string(i) + "]";
        if (!(r.area > 0.0)) fail(path + ".area: must be positive");
        if (r.owners.empty()) fail(path + ".owners: must be non-empty");
        for (ServerId m : r.owners) {
            if (m >= cfg.num_servers) fail(path + ".owners: server " + std::to_string(m + 1) + " out of range");
        }
        if (!std::is_sorted(r.owners.begin(), r.owners.end()) ||
            std::adjacent_find(r.owners.begin(), r.owners.end()) != r.owners.end()) {
            fail(path + ".owners: must be a set");
        }
    }
    if (!(regions.total_area > 0.0)) fail("total_area: must be positive");
    const double sum = regions.area_sum();
    const bool consistent = std::abs(sum - regions.total_area) <= 1e-9 * std::max(1.0, regions.total_area);
    if (!consistent) fail("total_area mismatch");

    double server_sum = 0.0;
    for (ServerId m = 0; m < cfg.num_servers; ++m) {
        const double rm = regions.server_area(m);
        server_sum += rm;
        if (!(rm > 0.0)) fail("servers: server " + std::to_string(m + 1) + " owns no sub-region");
        if (rm > regions.total_area * (1.0 + 1e-12)) fail("regions: R_m exceeds total_area for server " + std::to_string(m + 1));
    }
    // with a mismatched total the bound below would only restate the mismatch
    if (consistent && regions.total_area > server_sum * (1.0 + 1e-12)) fail("regions: total_area exceeds sum of server areas");
    return out;
}

struct InvalidScenario : std::invalid_argument {
    std::vector<std::string> violations;
    explicit InvalidScenario(std::vector<std::string> v)
        : std::invalid_argument("invalid scenario: " + (v.empty() ? std::string{} : v.front())), violations(std::move(v)) {}
};

/// A validated scenario with derived, read-only quantities.
class Scenario {
public:
    explicit Scenario(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
        if (auto v = validate(cfg_); !v.empty()) throw InvalidScenario(std::move(v));
        popularity_ = zipf_popularity(cfg_.num_contents, cfg_.zipf_exponent);
        server_area_.resize(cfg_.num_servers);
        for (ServerId m = 0; m < cfg_.num_servers; ++m) server_area_[m] = cfg_.regions.server_area(m);
    }

    const ScenarioConfig& config() const noexcept { return cfg_; }
    std::size_t servers() const noexcept { return cfg_.num_servers; }
    std::size_t contents() const noexcept { return cfg_.num_contents; }
    std::size_t cache_size() const noexcept { return cfg_.cache_size; }
    std::size_t batch_size() const noexcept { return cfg_.batch_size; }
    std::size_t horizon() const noexcept { return cfg_.horizon; }
    const DensityModel& density() const noexcept { return cfg_.density; }
    const std::vector<SubRegion>& sub_regions() const noexcept { return cfg_.regions.sub_regions; }
    double total_area() const noexcept { return cfg_.regions.total_area; }
    double server_area(ServerId m) const { return server_area_.at(m); }
    const std::vector<double>& popularity() const noexcept { return popularity_; }

    bool has_overlap() const {
        return std::any_of(sub_regions().begin(), sub_regions().end(),
                           [](const SubRegion& r) { return r.owners.size() > 1; });
    }

    /// Servers sharing at least one sub-region with m.
    std::vector<ServerId> neighbors(ServerId m) const {
        std::vector<ServerId> out;
        for (const auto& r : sub_regions()) {
            if (!r.owned_by(m)) continue;
            for (ServerId o : r.owners) {
                if (o != m) out.push_back(o);
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    ScenarioConfig cfg_;
    std::vector<double> popularity_;
    std::vector<double> server_area_;
};

} // namespace edgecache
