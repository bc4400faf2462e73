#include "meso/population.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "meso/error.hpp"
#include "meso/rng.hpp"

namespace meso {

int PopulationGraph::region_index(const std::string& id) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].id == id) return static_cast<int>(i);
    return -1;
}

int PopulationGraph::max_delay() const {
    int d = 0;
    for (const Connection& c : connections) d = std::max(d, c.delay);
    return d;
}

void PopulationGraph::validate() const {
    std::set<std::string> ids;
    for (const Region& r : regions) {
        if (r.id.empty()) throw config_error("population: region with empty id");
        if (!ids.insert(r.id).second) throw config_error("population: duplicate region id " + r.id);
        if (r.columns.empty()) throw config_error("population: region " + r.id + " has no columns");
        for (const Column& col : r.columns) {
            col.params.validate();
            if (!col.params.in_bounds(col.state))
                throw config_error("population: region " + r.id + " has a state outside firing bounds");
        }
        if (r.lattice_shape) {
            std::size_t product = 1;
            for (int e : *r.lattice_shape) {
                if (e <= 0) throw config_error("population: nonpositive lattice extent in " + r.id);
                product *= static_cast<std::size_t>(e);
            }
            if (product != r.columns.size())
                throw config_error("population: lattice shape of " + r.id +
                                   " does not match its column count");
        }
    }
    for (const Connection& c : connections) {
        if (region_index(c.src) < 0 || region_index(c.dst) < 0)
            throw config_error("population: connection references undefined region: " + c.src +
                               " -> " + c.dst);
        if (c.src == c.dst && !c.allow_self)
            throw config_error("population: self-loop " + c.src + " requires allow_self");
        if (c.weight < 0.0) throw config_error("population: negative connection weight");
        if (c.delay < 0) throw config_error("population: negative connection delay");
    }
    for (const ExogenousDrive& d : drives) {
        if (region_index(d.region) < 0)
            throw config_error("population: drive references undefined region " + d.region);
        std::vector<std::pair<std::int64_t, std::int64_t>> windows;
        for (const DriveWindow& w : d.schedule) {
            if (w.last_epoch < w.first_epoch)
                throw config_error("population: drive window with last < first in " + d.region);
            windows.emplace_back(w.first_epoch, w.last_epoch);
        }
        std::sort(windows.begin(), windows.end());
        for (std::size_t i = 1; i < windows.size(); ++i)
            if (windows[i].first <= windows[i - 1].second)
                throw config_error("population: overlapping drive windows for region " + d.region);
    }
}

void IdeaPattern::validate(const PopulationGraph& graph) const {
    if (!(tolerance > 0.0)) throw config_error("pattern: tolerance must be positive");
    for (const auto& [id, states] : targets) {
        int r = graph.region_index(id);
        if (r < 0) throw config_error("pattern: target references undefined region " + id);
        const Region& region = graph.regions[r];
        if (states.size() != region.columns.size())
            throw config_error("pattern: target count for " + id + " does not match column count");
        for (std::size_t c = 0; c < states.size(); ++c)
            if (!region.columns[c].params.in_bounds(states[c]))
                throw config_error("pattern: target outside firing bounds in region " + id);
    }
}

double region_mean_excitatory(const Region& region) {
    double sum = 0.0;
    for (const Column& col : region.columns) sum += col.state.m_e;
    return sum / static_cast<double>(region.columns.size());
}

HistoryBuffer::HistoryBuffer(const PopulationGraph& graph) {
    baseline_.reserve(graph.regions.size());
    for (const Region& r : graph.regions) baseline_.push_back(region_mean_excitatory(r));
}

void HistoryBuffer::push(const PopulationGraph& graph) {
    std::vector<double> row;
    row.reserve(graph.regions.size());
    for (const Region& r : graph.regions) row.push_back(region_mean_excitatory(r));
    if (baseline_.empty()) baseline_ = row;
    rows_.push_back(std::move(row));
}

double HistoryBuffer::mean_e(std::size_t region, std::int64_t epoch) const {
    if (epoch < 0) return baseline_.at(region);
    if (epoch >= size()) throw domain_error("history: epoch not yet recorded");
    return rows_[static_cast<std::size_t>(epoch)].at(region);
}

namespace {

double drive_amount(const PopulationGraph& graph, std::size_t region, std::int64_t epoch) {
    double total = 0.0;
    const std::string& id = graph.regions[region].id;
    for (const ExogenousDrive& d : graph.drives) {
        if (d.region != id) continue;
        for (const DriveWindow& w : d.schedule)
            if (epoch >= w.first_epoch && epoch <= w.last_epoch) total += w.amount;
    }
    return total;
}

}  // namespace

std::vector<double> afferent_firings(const PopulationGraph& graph, const HistoryBuffer& history,
                                     std::int64_t epoch) {
    std::vector<double> m_dagger(graph.regions.size(), 0.0);
    for (const Connection& c : graph.connections) {
        std::size_t src = static_cast<std::size_t>(graph.region_index(c.src));
        std::size_t dst = static_cast<std::size_t>(graph.region_index(c.dst));
        // The signal recorded after step t becomes visible delay epochs later;
        // delay 0 falls back to the state at the start of this epoch.
        std::int64_t lookup = epoch - std::max(c.delay, 1);
        m_dagger[dst] += c.weight * history.mean_e(src, lookup);
    }
    for (std::size_t r = 0; r < m_dagger.size(); ++r)
        m_dagger[r] += drive_amount(graph, r, epoch);
    return m_dagger;
}

void langevin_step(PopulationGraph& graph, const HistoryBuffer& history, std::int64_t epoch,
                   std::mt19937_64& rng, const StepOptions& options) {
    if (graph.max_delay() > 0 && !history.has_baseline())
        throw config_error("langevin_step: delayed connections need a seeded history buffer");

    std::vector<double> m_dagger = afferent_firings(graph, history, epoch);

    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t r = 0; r < graph.regions.size(); ++r) {
        for (Column& col : graph.regions[r].columns) {
            if (col.params.long_ranged) {
                // The afferent signal is a firing on n_dagger fibers and obeys
                // the same bound as any firing; this also keeps the threshold
                // radicand positive for every in-bounds state.
                LongRangedParams& lr = *col.params.long_ranged;
                lr.m_dagger = std::clamp(m_dagger[r], -lr.n_dagger, lr.n_dagger);
            }
            LocalDynamics dyn = local_dynamics(col.state, col.params);
            double tau = col.params.tau;
            double sqrt_tau = std::sqrt(tau);
            FiringState next = col.state;
            PerPop<double*> slot = {&next.m_e, &next.m_i};
            for (int g = 0; g < kPops; ++g) {
                double noise = options.noise_scale == 0.0
                                   ? 0.0
                                   : options.noise_scale * normal(rng) * std::sqrt(dyn.diffusion[g]);
                *slot[g] += tau * dyn.drift[g] + sqrt_tau * noise;
            }
            col.state = col.params.clamp(next);
        }
    }
}

PopulationGraph langevin_stepped(const PopulationGraph& graph, const HistoryBuffer& history,
                                 std::int64_t epoch, std::mt19937_64& rng,
                                 const StepOptions& options) {
    PopulationGraph out = graph;
    langevin_step(out, history, epoch, rng, options);
    return out;
}

double effective_action_cost(const ColumnParams& params,
                             const std::vector<FiringState>& trajectory) {
    if (trajectory.size() < 2)
        throw domain_error("effective_action_cost: trajectory needs at least 2 epochs");
    double tau = params.tau;
    double n_total = params.n_total();
    double cost = 0.0;
    for (std::size_t t = 0; t + 1 < trajectory.size(); ++t) {
        const FiringState& from = trajectory[t];
        const FiringState& to = trajectory[t + 1];
        PerPop<double> rate = {(to.m_e - from.m_e) / tau, (to.m_i - from.m_i) / tau};
        LocalDynamics dyn = local_dynamics(from, params);
        double quad = 0.0;
        for (int g = 0; g < kPops; ++g) {
            double d = rate[g] - dyn.drift[g];
            quad += d * dyn.metric[g] * d;
        }
        double lagrangian_value = quad / (2.0 * n_total);
        cost += n_total * tau * lagrangian_value - 0.5 * std::log(dyn.det_metric) +
                0.5 * std::log(2.0 * M_PI * tau);
    }
    return cost;
}

namespace {

// Maps the free parameters of a fit onto candidate column parameters.
class FitParameterization {
  public:
    FitParameterization(const PopulationGraph& graph, const std::vector<ColumnRef>& subset,
                        FitMode mode)
        : mode_(mode) {
        originals_.reserve(subset.size());
        for (const ColumnRef& ref : subset) {
            if (ref.region >= graph.regions.size() ||
                ref.column >= graph.regions[ref.region].columns.size())
                throw config_error("fit_idea: column reference out of range");
            originals_.push_back(graph.regions[ref.region].columns[ref.column].params);
        }
    }

    std::size_t dim() const {
        return originals_.size() * (mode_ == FitMode::background ? 4 : 2);
    }

    asa::Bounds default_bounds() const {
        asa::Bounds b;
        for (const ColumnParams& p : originals_) {
            if (mode_ == FitMode::background) {
                for (int g = 0; g < kPops; ++g)
                    for (int gp = 0; gp < kPops; ++gp) {
                        double hi = 2.0 * p.B[g][gp] + 0.5 * p.A[g][gp] + 1e-3;
                        b.lo.push_back(0.0);
                        b.hi.push_back(hi);
                    }
            } else {
                for (int g = 0; g < kPops; ++g) {
                    double row_min = std::min(p.B[g][0], p.B[g][1]);
                    double row_max = std::max(p.B[g][0], p.B[g][1]);
                    b.lo.push_back(-row_min);
                    b.hi.push_back(row_max + 0.5 * (p.A[g][0] + p.A[g][1]) + 1e-3);
                }
            }
        }
        return b;
    }

    std::vector<double> initial_point() const {
        std::vector<double> x;
        for (const ColumnParams& p : originals_) {
            if (mode_ == FitMode::background) {
                for (int g = 0; g < kPops; ++g)
                    for (int gp = 0; gp < kPops; ++gp) x.push_back(p.B[g][gp]);
            } else {
                x.push_back(0.0);
                x.push_back(0.0);
            }
        }
        return x;
    }

    std::vector<ColumnParams> apply(const std::vector<double>& x) const {
        std::vector<ColumnParams> out = originals_;
        std::size_t i = 0;
        for (ColumnParams& p : out) {
            if (mode_ == FitMode::background) {
                for (int g = 0; g < kPops; ++g)
                    for (int gp = 0; gp < kPops; ++gp) p.B[g][gp] = x[i++];
            } else {
                for (int g = 0; g < kPops; ++g) {
                    double shift = x[i++];
                    for (int gp = 0; gp < kPops; ++gp)
                        p.B[g][gp] = std::max(0.0, p.B[g][gp] + shift);
                }
            }
        }
        return out;
    }

  private:
    FitMode mode_;
    std::vector<ColumnParams> originals_;
};

FitResult run_fit(const FitParameterization& par, const asa::CostFn& cost,
                  const FitOptions& options) {
    asa::Bounds bounds = options.bounds ? *options.bounds : par.default_bounds();
    if (bounds.dim() != par.dim()) throw config_error("fit_idea: bounds dimension mismatch");
    asa::AnnealSchedule schedule = options.schedule;
    if (schedule.t0.empty()) {
        schedule = asa::uniform_schedule(static_cast<int>(par.dim()), 1.0, 1.0,
                                         options.schedule.budget > 0 ? options.schedule.budget : 10000);
    }
    std::vector<double> start = par.initial_point();
    asa::AsaResult res = asa::optimize(cost, bounds, schedule, options.seed, &start);

    FitResult fit;
    fit.fitted = par.apply(res.best);
    fit.cost = res.best_cost;
    fit.budget_exhausted = res.budget_exhausted;
    fit.trace = std::move(res.trace);
    return fit;
}

}  // namespace

FitResult fit_idea(const PopulationGraph& graph, const std::vector<ColumnRef>& subset,
                   const std::vector<std::vector<FiringState>>& trajectories,
                   const FitOptions& options) {
    graph.validate();
    if (subset.empty() || trajectories.size() != subset.size())
        throw config_error("fit_idea: one trajectory per selected column required");
    for (const auto& t : trajectories)
        if (t.size() < 2) throw config_error("fit_idea: trajectories need at least 2 epochs");

    FitParameterization par(graph, subset, options.mode);
    asa::CostFn cost = [&](const std::vector<double>& x) {
        std::vector<ColumnParams> candidate = par.apply(x);
        double total = 0.0;
        for (std::size_t c = 0; c < candidate.size(); ++c)
            total += effective_action_cost(candidate[c], trajectories[c]);
        return total;
    };
    return run_fit(par, cost, options);
}

FitResult fit_idea(const PopulationGraph& graph, const std::vector<ColumnRef>& subset,
                   const IdeaPattern& pattern, const FitOptions& options) {
    graph.validate();
    pattern.validate(graph);
    if (subset.empty()) throw config_error("fit_idea: empty column selection");

    FitParameterization par(graph, subset, options.mode);
    // Common random numbers: every cost evaluation reuses the same substream
    // so the residency cost is a pure function of the candidate parameters.
    std::uint64_t crn_seed = derive_seed(options.seed, "fit-idea-crn");

    asa::CostFn cost = [&, crn_seed](const std::vector<double>& x) {
        std::vector<ColumnParams> candidate = par.apply(x);
        PopulationGraph trial = graph;
        for (std::size_t c = 0; c < subset.size(); ++c)
            trial.regions[subset[c].region].columns[subset[c].column].params = candidate[c];

        std::int64_t outside = 0;
        std::int64_t total = 0;
        for (int member = 0; member < options.pattern_ensemble; ++member) {
            PopulationGraph walker = trial;
            HistoryBuffer history(walker);
            std::mt19937_64 rng = make_stream(crn_seed, "member", member);
            for (std::int64_t epoch = 0; epoch < options.pattern_epochs; ++epoch) {
                langevin_step(walker, history, epoch, rng);
                history.push(walker);
                for (const ColumnRef& ref : subset) {
                    const Region& region = walker.regions[ref.region];
                    auto it = pattern.targets.find(region.id);
                    if (it == pattern.targets.end()) continue;
                    const FiringState& target = it->second[ref.column];
                    const FiringState& state = region.columns[ref.column].state;
                    double de = state.m_e - target.m_e;
                    double di = state.m_i - target.m_i;
                    ++total;
                    if (de * de + di * di > pattern.tolerance * pattern.tolerance) ++outside;
                }
            }
        }
        return total > 0 ? static_cast<double>(outside) / static_cast<double>(total) : 0.0;
    };
    return run_fit(par, cost, options);
}

double overlap(const pathint::GridDistribution& a, const pathint::GridDistribution& b) {
    if (!a.grid.same_mesh(b.grid)) throw config_error("overlap: distributions on different grids");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        sum += std::sqrt(a.weights[i] * b.weights[i]);
    return std::min(sum, 1.0);
}

pathint::GridDistribution histogram_states(const std::vector<FiringState>& samples,
                                           const pathint::Grid& grid) {
    if (samples.empty()) throw domain_error("histogram: no samples");
    pathint::GridDistribution dist;
    dist.grid = grid;
    dist.weights.assign(grid.cells(), 0.0);
    for (const FiringState& s : samples)
        dist.weights[grid.nearest_cell({s.m_e, s.m_i})] += 1.0;
    dist.normalize();
    return dist;
}

PropagationResult propagation_experiment(const PopulationGraph& graph, const IdeaPattern& pattern,
                                         std::int64_t epochs, int ensemble_size,
                                         std::uint64_t seed, const StepOptions& options) {
    graph.validate();
    pattern.validate(graph);
    if (epochs < 0) throw config_error("propagation: negative epoch count");
    if (ensemble_size < 1) throw config_error("propagation: ensemble size must be >= 1");

    const std::size_t n_regions = graph.regions.size();
    struct Accum {
        double sum_e = 0, sum_i = 0, sum_ee = 0, sum_ei = 0, sum_ii = 0;
        std::int64_t inside = 0;
        std::int64_t count = 0;
    };
    std::vector<std::vector<Accum>> acc(static_cast<std::size_t>(epochs) + 1,
                                        std::vector<Accum>(n_regions));

    auto record = [&](const PopulationGraph& g, std::int64_t epoch) {
        for (std::size_t r = 0; r < n_regions; ++r) {
            const Region& region = g.regions[r];
            auto target_it = pattern.targets.find(region.id);
            Accum& a = acc[static_cast<std::size_t>(epoch)][r];
            for (std::size_t c = 0; c < region.columns.size(); ++c) {
                const FiringState& s = region.columns[c].state;
                a.sum_e += s.m_e;
                a.sum_i += s.m_i;
                a.sum_ee += s.m_e * s.m_e;
                a.sum_ei += s.m_e * s.m_i;
                a.sum_ii += s.m_i * s.m_i;
                ++a.count;
                if (target_it != pattern.targets.end()) {
                    const FiringState& t = target_it->second[c];
                    double de = s.m_e - t.m_e;
                    double di = s.m_i - t.m_i;
                    if (de * de + di * di <= pattern.tolerance * pattern.tolerance) ++a.inside;
                }
            }
        }
    };

    for (int member = 0; member < ensemble_size; ++member) {
        PopulationGraph walker = graph;
        HistoryBuffer history(walker);
        std::mt19937_64 rng = make_stream(seed, "population", member);
        record(walker, 0);
        for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
            langevin_step(walker, history, epoch, rng, options);
            history.push(walker);
            record(walker, epoch + 1);
        }
    }

    PropagationResult result;
    for (const Region& r : graph.regions) result.region_ids.push_back(r.id);
    result.stats.resize(acc.size());
    for (std::size_t e = 0; e < acc.size(); ++e) {
        result.stats[e].resize(n_regions);
        for (std::size_t r = 0; r < n_regions; ++r) {
            const Accum& a = acc[e][r];
            RegionEpochStats& s = result.stats[e][r];
            double n = static_cast<double>(a.count);
            s.mean_e = a.sum_e / n;
            s.mean_i = a.sum_i / n;
            s.cov_ee = a.sum_ee / n - s.mean_e * s.mean_e;
            s.cov_ei = a.sum_ei / n - s.mean_e * s.mean_i;
            s.cov_ii = a.sum_ii / n - s.mean_i * s.mean_i;
            bool has_target = pattern.targets.count(graph.regions[r].id) > 0;
            s.overlap = has_target ? static_cast<double>(a.inside) / n : 0.0;
        }
    }
    return result;
}

}  // namespace meso
