#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwp/classes.hpp"
#include "bwp/geometry.hpp"
#include "bwp/heuristics.hpp"
#include "bwp/pathloss.hpp"
#include "bwp/quadrature.hpp"
#include "bwp/sbd_sim.hpp"
#include "bwp/stats.hpp"

namespace bwp {

struct LambdaSpec {
    enum class Kind { Absolute, Relative };
    Kind kind = Kind::Absolute;
    double value = 0.0;
};

/// One experiment description, parsed from a JSON config file. The parsed
/// form re-serializes to a canonical JSON document whose FNV-1a hash
/// identifies the run in manifests.
struct ExperimentConfig {
    std::string scenario = "unnamed";
    TorusDomain dom{10.0, 0.0};
    PathLoss pl = PathLoss::power_law(4.0);
    ClassProfile profile = expand_symmetric(SymmetricProfile(1, {1.0}, {1.0}));
    double n0 = 1.0;
    LambdaSpec lambda;
    std::vector<std::uint64_t> seeds{1};
    Budget budget;
    std::uint64_t population_cap = 1000000;
    double epsilon = 0.5; // tessellation cell size, defaults to side / 20
    QuadratureSettings quad;
    SolverSettings solver;
    StabilitySettings stability;
    std::string out_dir = "out";

    /// Resolves the arrival rate; relative specs multiply the closed-form
    /// critical rate (symmetric profiles only).
    double resolve_lambda() const;

    SimConfig sim_config(std::uint64_t seed, double lambda_abs) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// FNV-1a over the canonical (sorted-key) dump.
std::uint64_t config_hash(const nlohmann::json& j);

/// git describe --always --dirty, or "unknown" outside a repository.
std::string git_describe();

} // namespace bwp
