#include "meso/pathint.hpp"

#include <algorithm>
#include <cmath>

#include "meso/csv.hpp"
#include "meso/error.hpp"

namespace meso::pathint {

namespace {

int nearest_index(const Axis& axis, double value) {
    int idx = static_cast<int>(std::lround((value - axis.lo) / axis.spacing()));
    return std::clamp(idx, 0, axis.n - 1);
}

}  // namespace

std::size_t Grid::cells() const {
    std::size_t total = 1;
    for (const Axis& a : axes) total *= static_cast<std::size_t>(a.n);
    return total;
}

std::size_t Grid::index(const std::vector<int>& multi) const {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) flat = flat * axes[a].n + multi[a];
    return flat;
}

std::vector<int> Grid::multi_index(std::size_t flat) const {
    std::vector<int> multi(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
        multi[a] = static_cast<int>(flat % axes[a].n);
        flat /= axes[a].n;
    }
    return multi;
}

std::vector<double> Grid::coords(std::size_t flat) const {
    std::vector<int> multi = multi_index(flat);
    std::vector<double> c(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a) c[a] = axes[a].coord(multi[a]);
    return c;
}

std::size_t Grid::nearest_cell(const std::vector<double>& point) const {
    std::vector<int> multi(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a) multi[a] = nearest_index(axes[a], point[a]);
    return index(multi);
}

bool Grid::same_mesh(const Grid& other) const {
    if (axes.size() != other.axes.size()) return false;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (axes[a].lo != other.axes[a].lo || axes[a].hi != other.axes[a].hi ||
            axes[a].n != other.axes[a].n)
            return false;
    }
    return true;
}

void Grid::validate(std::size_t cell_cap) const {
    if (axes.empty() || axes.size() > 2)
        throw config_error("grid: 1 or 2 axes supported");
    for (const Axis& a : axes) {
        if (a.n < 3) throw config_error("grid: need at least 3 points per axis");
        if (!(a.lo < a.hi)) throw config_error("grid: axis lo must be < hi");
    }
    if (cells() > cell_cap)
        throw config_error("grid: " + std::to_string(cells()) + " cells exceeds cap of " +
                           std::to_string(cell_cap));
}

std::vector<double> GridDistribution::mean() const {
    std::vector<double> m(grid.axes.size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        std::vector<double> c = grid.coords(i);
        for (std::size_t a = 0; a < m.size(); ++a) m[a] += weights[i] * c[a];
    }
    return m;
}

std::vector<double> GridDistribution::variance() const {
    std::vector<double> m = mean();
    std::vector<double> v(grid.axes.size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        std::vector<double> c = grid.coords(i);
        for (std::size_t a = 0; a < v.size(); ++a) {
            double d = c[a] - m[a];
            v[a] += weights[i] * d * d;
        }
    }
    return v;
}

void GridDistribution::normalize() {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw domain_error("grid distribution: zero total mass");
    for (double& w : weights) w /= total;
}

GridDistribution delta_distribution(const Grid& grid, const std::vector<double>& point) {
    GridDistribution dist;
    dist.grid = grid;
    dist.weights.assign(grid.cells(), 0.0);
    dist.weights[grid.nearest_cell(point)] = 1.0;
    return dist;
}

GridDistribution gaussian_distribution(const Grid& grid, const std::vector<double>& mean,
                                       const std::vector<double>& variance) {
    GridDistribution dist;
    dist.grid = grid;
    dist.weights.assign(grid.cells(), 0.0);
    for (std::size_t i = 0; i < dist.weights.size(); ++i) {
        std::vector<double> c = grid.coords(i);
        double expo = 0.0;
        for (std::size_t a = 0; a < grid.axes.size(); ++a)
            expo += (c[a] - mean[a]) * (c[a] - mean[a]) / (2.0 * variance[a]);
        dist.weights[i] = std::exp(-expo);
    }
    dist.normalize();
    return dist;
}

Kernel build_kernel(const DynamicsFn& dynamics, const Grid& grid, double dt,
                    const std::vector<int>& bandwidth) {
    grid.validate();
    if (!(dt > 0.0)) throw config_error("kernel: dt must be positive");
    if (bandwidth.size() != grid.axes.size())
        throw config_error("kernel: bandwidth needed per axis");
    for (int b : bandwidth)
        if (b < 0) throw config_error("kernel: bandwidth must be nonnegative");

    const std::size_t n_axes = grid.axes.size();
    const std::size_t n_cells = grid.cells();

    Kernel kernel;
    kernel.grid = grid;
    kernel.dt = dt;
    kernel.bandwidth = bandwidth;
    kernel.row_start.assign(n_cells + 1, 0);

    std::vector<int> lo_idx(n_axes), hi_idx(n_axes), cursor(n_axes);
    std::vector<double> mean(n_axes), inv_two_var(n_axes);

    for (std::size_t i = 0; i < n_cells; ++i) {
        std::vector<double> x = grid.coords(i);
        std::vector<AxisDynamics> dyn = dynamics(x);
        if (dyn.size() != n_axes) throw config_error("kernel: dynamics dimension mismatch");

        for (std::size_t a = 0; a < n_axes; ++a) {
            const Axis& axis = grid.axes[a];
            double sigma = std::sqrt(std::max(dyn[a].diffusion, 0.0) * dt);
            if (3.0 * sigma > bandwidth[a] * axis.spacing())
                throw config_error("kernel: bandwidth covers less than 3 sigma at cell " +
                                   std::to_string(i) + ", axis " + axis.label);
            mean[a] = x[a] + dyn[a].drift * dt;
            int center = nearest_index(axis, mean[a]);
            if (sigma > 0.0) {
                lo_idx[a] = std::max(0, center - bandwidth[a]);
                hi_idx[a] = std::min(axis.n - 1, center + bandwidth[a]);
                inv_two_var[a] = 1.0 / (2.0 * sigma * sigma);
            } else {
                lo_idx[a] = hi_idx[a] = center;  // pure advection: single target cell
                inv_two_var[a] = 0.0;
            }
        }

        // Enumerate the band and accumulate unnormalized Gaussian weights.
        std::size_t row_begin = kernel.values.size();
        cursor = lo_idx;
        double row_sum = 0.0;
        bool done = false;
        while (!done) {
            double expo = 0.0;
            for (std::size_t a = 0; a < n_axes; ++a) {
                double d = grid.axes[a].coord(cursor[a]) - mean[a];
                expo += d * d * inv_two_var[a];
            }
            double w = std::exp(-expo);
            kernel.columns.push_back(static_cast<std::uint32_t>(grid.index(cursor)));
            kernel.values.push_back(w);
            row_sum += w;

            done = true;
            for (std::size_t a = n_axes; a-- > 0;) {
                if (++cursor[a] <= hi_idx[a]) {
                    done = false;
                    break;
                }
                cursor[a] = lo_idx[a];
            }
        }
        for (std::size_t e = row_begin; e < kernel.values.size(); ++e)
            kernel.values[e] /= row_sum;
        kernel.row_start[i + 1] = kernel.values.size();
    }
    return kernel;
}

GridDistribution evolve(const GridDistribution& dist, const Kernel& kernel, std::size_t steps,
                        EvolveStats* stats) {
    if (!dist.grid.same_mesh(kernel.grid))
        throw config_error("evolve: distribution and kernel grids differ");
    GridDistribution current = dist;
    std::vector<double> next(current.weights.size());
    EvolveStats local;
    for (std::size_t step = 0; step < steps; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < current.weights.size(); ++i) {
            double w = current.weights[i];
            if (w == 0.0) continue;
            for (std::size_t e = kernel.row_start[i]; e < kernel.row_start[i + 1]; ++e)
                next[kernel.columns[e]] += w * kernel.values[e];
        }
        double total = 0.0;
        for (double w : next) total += w;
        local.max_leakage = std::max(local.max_leakage, std::abs(total - 1.0));
        double l1 = 0.0;
        for (std::size_t j = 0; j < next.size(); ++j) {
            next[j] /= total;
            l1 += std::abs(next[j] - current.weights[j]);
        }
        local.last_l1_change = l1;
        current.weights.swap(next);
        ++local.steps;
    }
    if (stats) *stats = local;
    return current;
}

namespace {

// Multilinear interpolation of the weights at a fractional cell position;
// sampling the cut this way avoids the stair-step artifacts a nearest-cell
// walk produces along diagonal lines.
double interpolate_weight(const GridDistribution& dist, const std::vector<double>& pos) {
    const Grid& grid = dist.grid;
    std::size_t n_axes = grid.axes.size();
    std::vector<int> base(n_axes);
    std::vector<double> frac(n_axes);
    for (std::size_t a = 0; a < n_axes; ++a) {
        double clamped = std::clamp(pos[a], 0.0, static_cast<double>(grid.axes[a].n - 1));
        double floor = std::floor(clamped);
        base[a] = std::min(static_cast<int>(floor), grid.axes[a].n - 2);
        if (grid.axes[a].n == 1) base[a] = 0;
        frac[a] = clamped - base[a];
    }
    double value = 0.0;
    std::size_t corners = std::size_t{1} << n_axes;
    std::vector<int> cell(n_axes);
    for (std::size_t corner = 0; corner < corners; ++corner) {
        double weight = 1.0;
        for (std::size_t a = 0; a < n_axes; ++a) {
            bool high = corner & (std::size_t{1} << a);
            cell[a] = std::min(base[a] + (high ? 1 : 0), grid.axes[a].n - 1);
            weight *= high ? frac[a] : 1.0 - frac[a];
        }
        if (weight > 0.0) value += weight * dist.weights[grid.index(cell)];
    }
    return value;
}

}  // namespace

std::vector<ProfilePoint> trough_profile(const GridDistribution& dist, const TroughSpec& trough) {
    const Grid& grid = dist.grid;
    if (trough.from.size() != grid.axes.size() || trough.to.size() != grid.axes.size())
        throw config_error("trough: endpoint dimension mismatch");
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
        for (int idx : {trough.from[a], trough.to[a]})
            if (idx < 0 || idx >= grid.axes[a].n)
                throw config_error("trough: endpoint outside grid on axis " + grid.axes[a].label);
    }
    int span = 0;
    for (std::size_t a = 0; a < grid.axes.size(); ++a)
        span = std::max(span, std::abs(trough.to[a] - trough.from[a]));
    if (span == 0) throw config_error("trough: endpoints coincide (empty profile)");

    std::vector<ProfilePoint> profile;
    profile.reserve(span + 1);
    std::vector<double> pos(grid.axes.size());
    std::vector<int> cell(grid.axes.size());
    for (int s = 0; s <= span; ++s) {
        double t = static_cast<double>(s) / span;
        for (std::size_t a = 0; a < grid.axes.size(); ++a) {
            pos[a] = trough.from[a] + t * (trough.to[a] - trough.from[a]);
            cell[a] = static_cast<int>(std::lround(pos[a]));
        }
        profile.push_back({cell, interpolate_weight(dist, pos)});
    }
    return profile;
}

std::vector<ProfilePoint> stationary_scan(const GridDistribution& dist, const TroughSpec& trough) {
    std::vector<ProfilePoint> profile = trough_profile(dist, trough);
    double peak = 0.0;
    for (const ProfilePoint& p : profile) peak = std::max(peak, p.weight);
    double floor = trough.floor_fraction * peak;

    std::vector<ProfilePoint> maxima;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        double w = profile[k].weight;
        if (w <= floor) continue;
        bool up = k == 0 || w > profile[k - 1].weight;
        bool down = k + 1 == profile.size() || w > profile[k + 1].weight;
        if (up && down) maxima.push_back(profile[k]);
    }
    return maxima;
}

std::string distribution_csv(const GridDistribution& dist) {
    std::vector<std::string> header;
    for (const Axis& a : dist.grid.axes) header.push_back(a.label.empty() ? "x" : a.label);
    header.push_back("weight");
    CsvWriter w(header);
    for (std::size_t i = 0; i < dist.weights.size(); ++i) {
        std::vector<double> c = dist.grid.coords(i);
        std::vector<std::string> row;
        for (double v : c) row.push_back(format_double(v));
        row.push_back(format_double(dist.weights[i]));
        w.add_row(row);
    }
    return w.str();
}

GridDistribution distribution_from_csv(const Grid& grid, const std::string& csv_text) {
    CsvTable table = parse_csv(csv_text, "grid distribution");
    if (table.header.size() != grid.axes.size() + 1)
        throw io_error("grid distribution: expected one column per axis plus weight");
    GridDistribution dist;
    dist.grid = grid;
    dist.weights.assign(grid.cells(), 0.0);
    for (const auto& row : table.rows) {
        std::vector<double> point(grid.axes.size());
        for (std::size_t a = 0; a < grid.axes.size(); ++a) point[a] = std::stod(row[a]);
        dist.weights[grid.nearest_cell(point)] += std::stod(row.back());
    }
    dist.normalize();
    return dist;
}

}  // namespace meso::pathint
