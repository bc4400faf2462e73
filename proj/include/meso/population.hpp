#ifndef MESO_POPULATION_HPP
#define MESO_POPULATION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "meso/asa.hpp"
#include "meso/column.hpp"
#include "meso/pathint.hpp"

namespace meso {

// Regions of macrocolumns coupled by delayed long-ranged connections and
// exogenous drives.  The graph description is immutable during a run;
// ensemble members evolve independently, each on its own RNG substream
// derived from (seed, member index).

struct Column {
    ColumnParams params;
    FiringState state;
};

struct Region {
    std::string id;
    std::vector<Column> columns;
    std::optional<std::vector<int>> lattice_shape;  // 1-D/2-D extent for nn coupling
};

struct Connection {
    std::string src;
    std::string dst;
    double weight = 0.0;  // scales the delayed upstream mean excitatory firing
    int delay = 0;        // epochs; 0 reads the state at the start of the epoch
    bool allow_self = false;
};

struct DriveWindow {
    std::int64_t first_epoch = 0;
    std::int64_t last_epoch = 0;  // inclusive
    double amount = 0.0;          // additive m_dagger contribution
};

struct ExogenousDrive {
    std::string region;
    std::vector<DriveWindow> schedule;
};

struct PopulationGraph {
    std::vector<Region> regions;
    std::vector<Connection> connections;
    std::vector<ExogenousDrive> drives;

    int region_index(const std::string& id) const;  // -1 when absent
    int max_delay() const;
    void validate() const;  // throws Error(config) on dangling ids, overlaps, bad bounds
};

// Target firing pattern over a subset of regions.
struct IdeaPattern {
    std::map<std::string, std::vector<FiringState>> targets;  // region id -> per-column target
    double tolerance = 1.0;  // match radius in firing units (Euclidean)

    void validate(const PopulationGraph& graph) const;
};

// Per-region mean excitatory firing, one entry per completed epoch, plus the
// pre-run baseline used for lookups into negative time.
class HistoryBuffer {
  public:
    HistoryBuffer() = default;
    explicit HistoryBuffer(const PopulationGraph& graph);  // records the baseline

    void push(const PopulationGraph& graph);
    // Mean excitatory firing of region r after step `epoch`; negative epochs
    // return the baseline.
    double mean_e(std::size_t region, std::int64_t epoch) const;
    bool has_baseline() const { return !baseline_.empty(); }
    std::int64_t size() const { return static_cast<std::int64_t>(rows_.size()); }

  private:
    std::vector<double> baseline_;
    std::vector<std::vector<double>> rows_;
};

double region_mean_excitatory(const Region& region);

struct StepOptions {
    double noise_scale = 1.0;  // 0 disables noise (deterministic drift limit)
};

// Per-region afferent firing m_dagger at this epoch: weighted sum of delayed
// upstream mean excitatory firings plus the exogenous drive.
std::vector<double> afferent_firings(const PopulationGraph& graph, const HistoryBuffer& history,
                                     std::int64_t epoch);

// One coupled Langevin epoch, in place:
//   M^G <- clamp(M^G + tau g^G + sqrt(tau) eta^G),  var(eta^G) = g^GG
// where each region's m_dagger is the weighted sum of delayed upstream mean
// excitatory firings plus its exogenous drive at this epoch.  Columns
// without a long-ranged block ignore afferents.  The caller pushes the
// post-step state into the history buffer afterwards.
void langevin_step(PopulationGraph& graph, const HistoryBuffer& history, std::int64_t epoch,
                   std::mt19937_64& rng, const StepOptions& options = {});

// Pure variant returning the stepped copy.
PopulationGraph langevin_stepped(const PopulationGraph& graph, const HistoryBuffer& history,
                                 std::int64_t epoch, std::mt19937_64& rng,
                                 const StepOptions& options = {});

// Negative log of the short-time transition density summed over a
// trajectory sampled at spacing tau:
//   sum_t [ N tau L_M - (1/2) ln g + (1/2) ln(2 pi tau) ]
// Used as the trajectory-fitting cost.
double effective_action_cost(const ColumnParams& params, const std::vector<FiringState>& trajectory);

// --- Idea fitting -----------------------------------------------------------

struct ColumnRef {
    std::size_t region = 0;
    std::size_t column = 0;
};

enum class FitMode {
    background,        // all four B entries per column
    background_shift,  // one additive shift per receiving population (2 per column)
};

struct FitOptions {
    FitMode mode = FitMode::background;
    asa::AnnealSchedule schedule;           // dim is derived from the selection
    std::uint64_t seed = 0;
    std::optional<asa::Bounds> bounds;      // default: derived from current params
    // Pattern-residency settings (pattern targets only):
    std::int64_t pattern_epochs = 50;
    int pattern_ensemble = 64;
};

struct FitResult {
    std::vector<ColumnParams> fitted;  // per selected column, selection order
    double cost = 0.0;
    bool budget_exhausted = false;
    std::vector<asa::TraceRecord> trace;
};

// Fits the selected columns' background efficacies to trajectory data
// (effective-action cost, one trajectory per selected column) ...
FitResult fit_idea(const PopulationGraph& graph, const std::vector<ColumnRef>& subset,
                   const std::vector<std::vector<FiringState>>& trajectories,
                   const FitOptions& options);

// ... or to a pattern (residency cost: fraction of ensemble-epoch samples
// outside the tolerance ball, simulated under common random numbers so the
// cost is a pure function of the parameters).
FitResult fit_idea(const PopulationGraph& graph, const std::vector<ColumnRef>& subset,
                   const IdeaPattern& pattern, const FitOptions& options);

// --- Distribution overlap ----------------------------------------------------

// Bhattacharyya coefficient sum_i sqrt(p_i q_i) over a shared mesh.
double overlap(const pathint::GridDistribution& a, const pathint::GridDistribution& b);

// Histogram of (m_e, m_i) samples onto a grid (samples outside are clamped
// into the edge cells).
pathint::GridDistribution histogram_states(const std::vector<FiringState>& samples,
                                           const pathint::Grid& grid);

// --- Propagation experiments -------------------------------------------------

struct RegionEpochStats {
    double mean_e = 0.0;
    double mean_i = 0.0;
    double cov_ee = 0.0;
    double cov_ei = 0.0;
    double cov_ii = 0.0;
    double overlap = 0.0;  // residency fraction within pattern tolerance; 0 without a target
};

struct PropagationResult {
    std::vector<std::string> region_ids;
    // stats[epoch][region]; epoch 0 is the initial state.
    std::vector<std::vector<RegionEpochStats>> stats;
};

// Ensemble of independent graph trajectories; deterministic per seed.
// Ensemble sizes of at least ~100 give usable overlap estimates.
PropagationResult propagation_experiment(const PopulationGraph& graph, const IdeaPattern& pattern,
                                         std::int64_t epochs, int ensemble_size,
                                         std::uint64_t seed, const StepOptions& options = {});

}  // namespace meso

#endif
