#ifndef MESO_SCENARIO_HPP
#define MESO_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meso/asa.hpp"
#include "meso/pathint.hpp"
#include "meso/population.hpp"
#include "meso/risk.hpp"

namespace meso::io {

// Declarative scenario document (JSON).  The schema is closed: unknown keys
// are errors, and every default the loader applies is echoed so the manifest
// can record it.

struct FitSection {
    std::vector<std::string> regions;  // fitted regions (all their columns)
    FitMode mode = FitMode::background;
    std::int64_t budget = 10000;
    double c = 1.0;
    std::int64_t pattern_epochs = 50;
    int pattern_ensemble = 64;
    std::optional<std::string> trajectory_csv;  // columns m_e,m_i; fits the first subset column
};

struct PopulationSection {
    PopulationGraph graph;
    std::optional<IdeaPattern> pattern;
    std::int64_t epochs = 200;
    int ensemble = 256;
    std::optional<FitSection> fit;
};

struct PathintDynamics {
    enum class Kind { ou, diffusion, column } kind = Kind::ou;
    double tau = 1.0;     // ou
    double sigma2 = 1.0;  // ou / diffusion
    std::optional<ColumnParams> column;  // 2-D column dynamics
    bool center_column = false;
};

struct PathintSection {
    pathint::Grid grid;
    double dt = 0.01;
    std::int64_t steps = 100;
    std::vector<int> bandwidth;
    PathintDynamics dynamics;
    // initial condition
    bool initial_delta = false;
    std::vector<double> initial_mean;
    std::vector<double> initial_var;
    std::optional<pathint::TroughSpec> trough;
};

struct RiskOptimizeSection {
    std::vector<std::size_t> free_indices;
    std::vector<double> lo;
    std::vector<double> hi;
    risk::ExposureObjective objective = risk::ExposureObjective::mean_return;
    double penalty_weight = 1000.0;
    std::int64_t budget = 10000;
    double c = 0.02;
};

struct RiskSection {
    std::string series_csv;
    std::size_t window = 0;  // 0 = whole series
    bool preaverage = true;
    bool asymmetric = false;
    std::size_t n_events = 100000;
    risk::BinSpec bins;
    double var_level = 0.05;
    double q_target = 0.01;
    risk::PortfolioSpec portfolio;
    std::optional<RiskOptimizeSection> optimize;
};

struct AsaSection {
    std::string target = "quadratic";  // builtin benchmark: quadratic | cosine_bowl
    asa::Bounds bounds;
    double t0 = 1.0;
    double c = 1.0;
    double t0_accept = 1.0;
    double c_accept = 0.0;
    std::int64_t budget = 10000;
    std::int64_t reanneal_every = 0;
    std::size_t n_samples = 100;
};

struct Scenario {
    std::uint64_t seed = 0;
    std::optional<std::string> output_dir;
    std::optional<PopulationSection> population;
    std::optional<PathintSection> pathint;
    std::optional<RiskSection> risk;
    std::optional<AsaSection> asa;

    std::string raw_text;                // exact config bytes (hash input)
    std::vector<std::string> defaults;   // "path = value" for every applied default
    std::string base_dir;                // directory of the config file, for relative paths
};

// Parses and fully validates a scenario file.  Schema violations are
// collected and reported together; missing file, parse error and schema
// violation carry distinct messages (all ErrorCategory::config except the
// missing file, which is io).
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin,
                        const std::string& base_dir);

}  // namespace meso::io

#endif
