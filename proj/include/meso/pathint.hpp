#ifndef MESO_PATHINT_HPP
#define MESO_PATHINT_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace meso::pathint {

// Grid-based evolution of short-time conditional probabilities: a banded
// row-stochastic transition kernel built from any drift/diffusion pair is
// applied repeatedly to a density on a 1-D or 2-D mesh.  Kernels and grids
// are immutable after construction; applying a kernel only reads it.

struct Axis {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;  // >= 3
    std::string label;

    double spacing() const { return (hi - lo) / (n - 1); }
    double coord(int index) const { return lo + index * spacing(); }
};

struct Grid {
    std::vector<Axis> axes;

    std::size_t cells() const;
    std::size_t index(const std::vector<int>& multi) const;
    std::vector<int> multi_index(std::size_t flat) const;
    std::vector<double> coords(std::size_t flat) const;
    // Nearest cell to a point, clamped into the grid.
    std::size_t nearest_cell(const std::vector<double>& point) const;
    bool same_mesh(const Grid& other) const;

    void validate(std::size_t cell_cap = 1u << 22) const;
};

struct GridDistribution {
    Grid grid;
    std::vector<double> weights;  // nonnegative, sums to 1 after any evolve step

    // Mean and variance per axis under the current weights.
    std::vector<double> mean() const;
    std::vector<double> variance() const;
    void normalize();
};

GridDistribution delta_distribution(const Grid& grid, const std::vector<double>& point);
GridDistribution gaussian_distribution(const Grid& grid, const std::vector<double>& mean,
                                       const std::vector<double>& variance);

// Per-axis drift and (diagonal) diffusion at a grid point.
struct AxisDynamics {
    double drift = 0.0;
    double diffusion = 0.0;  // >= 0; 0 collapses the axis to pure advection
};

using DynamicsFn = std::function<std::vector<AxisDynamics>(const std::vector<double>&)>;

// Banded sparse row-stochastic kernel.  Row i holds the discretized
// short-time density from cell i over dt, truncated to `bandwidth` cells per
// axis and renormalized (truncate-and-renormalize boundary handling).
struct Kernel {
    Grid grid;
    double dt = 0.0;
    std::vector<int> bandwidth;          // per axis
    std::vector<std::uint32_t> columns;  // concatenated per-row column indices
    std::vector<double> values;          // matching transition weights
    std::vector<std::size_t> row_start;  // size cells()+1

    std::size_t entries() const { return values.size(); }
};

// Builds the kernel.  Throws Error(config) naming the first cell whose local
// 3 sigma = 3 sqrt(diffusion dt) exceeds the covered band.
Kernel build_kernel(const DynamicsFn& dynamics, const Grid& grid, double dt,
                    const std::vector<int>& bandwidth);

struct EvolveStats {
    std::size_t steps = 0;
    double max_leakage = 0.0;      // max |pre-renormalization mass - 1| per step
    double last_l1_change = 0.0;   // L1 distance between the final two steps
};

// Applies the kernel `steps` times, renormalizing each step.
GridDistribution evolve(const GridDistribution& dist, const Kernel& kernel, std::size_t steps,
                        EvolveStats* stats = nullptr);

// A diagonal cut through the distribution for trough scans.
struct TroughSpec {
    std::vector<int> from;  // multi-index of one endpoint
    std::vector<int> to;    // multi-index of the other
    double floor_fraction = 1e-6;  // maxima below floor_fraction * max are ignored
};

struct ProfilePoint {
    std::vector<int> cell;
    double weight = 0.0;
};

// Extracts the profile along the trough line (nearest cells on the segment)
// and returns strict local maxima above the floor.
std::vector<ProfilePoint> stationary_scan(const GridDistribution& dist, const TroughSpec& trough);

// Full profile along the trough, in segment order (for export/debugging).
std::vector<ProfilePoint> trough_profile(const GridDistribution& dist, const TroughSpec& trough);

// CSV import/export: one column per axis label plus a weight column.
std::string distribution_csv(const GridDistribution& dist);
GridDistribution distribution_from_csv(const Grid& grid, const std::string& csv_text);

}  // namespace meso::pathint

#endif
