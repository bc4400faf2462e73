#ifndef MESO_ASA_HPP
#define MESO_ASA_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace meso::asa {

// Adaptive simulated annealing: exponential schedule T = T0 exp(-c k^(1/D))
// per parameter, bounded candidate generation, Boltzmann acceptance on its
// own temperature indexed by accepted-move count, and periodic re-annealing
// driven by finite-difference cost sensitivities.
//
// The optimizer core is a single logical thread of control; cost functions
// must be pure (they may be called any number of times at the same point).

using CostFn = std::function<double(const std::vector<double>&)>;

struct Bounds {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const { return lo.size(); }
    void validate() const;  // throws Error(config) unless lo < hi elementwise
};

struct AnnealSchedule {
    std::vector<double> t0;   // per-parameter initial generation temperature
    std::vector<double> c;    // per-parameter schedule constants
    int dim = 0;              // D in the k^(1/D) exponent
    double t0_accept = 1.0;   // initial acceptance temperature
    double c_accept = 0.0;    // 0 -> mean of c
    std::int64_t budget = 10000;  // max cost evaluations
    std::int64_t reanneal_every = 0;  // 0 -> never

    void validate() const;
    double accept_c() const;
};

// Uniform schedule helper: same t0/c for every parameter.
AnnealSchedule uniform_schedule(int dim, double t0, double c, std::int64_t budget,
                                std::int64_t reanneal_every = 0);

// T(k) for one parameter.
double temperature(const AnnealSchedule& schedule, double k, std::size_t param);

struct PointCost {
    std::vector<double> point;
    double cost = 0.0;
};

struct AnnealState {
    std::vector<double> k;   // per-parameter annealing time (fractional after reannealing)
    double k_accept = 0.0;
    PointCost current;
    PointCost best;
    std::int64_t evals = 0;
};

// The ASA generating map: y = sgn(u - 1/2) T [(1 + 1/T)^|2u-1| - 1] for
// u in (0,1), |y| <= 1.
double generating_deviate(double u, double temperature);

// One candidate: candidate_i = current_i + y_i (hi_i - lo_i), resampled per
// coordinate until it falls inside the bounds.
std::vector<double> generate_candidate(const AnnealState& state, const AnnealSchedule& schedule,
                                       const Bounds& bounds, std::mt19937_64& rng);

// Boltzmann acceptance: downhill always, uphill with probability
// exp(-(candidate - current) / T).
bool accept(double current_cost, double candidate_cost, double temperature, std::mt19937_64& rng);

// Rescales the per-parameter annealing times so less sensitive parameters
// run hotter.  Anchored at the most sensitive parameter's current
// temperature, which makes the operation idempotent for fixed sensitivities:
//   T_i' = T_ref * (s_max / s_i),  k_i = max(0, (ln(T0_i / T_i') / c_i))^D
// All-zero sensitivities leave the state unchanged.
void reanneal(AnnealState& state, const AnnealSchedule& schedule,
              const std::vector<double>& sensitivities);

struct TraceRecord {
    std::int64_t eval = 0;
    double k = 0.0;     // shared annealing-time counter at this evaluation
    double temp = 0.0;  // geometric mean of per-parameter generation temperatures
    double cost = 0.0;
    bool accepted = false;
};

struct AsaResult {
    std::vector<double> best;
    double best_cost = 0.0;
    bool budget_exhausted = false;
    std::vector<TraceRecord> trace;
};

// Global minimization; deterministic per seed.  The search starts at the
// bounds midpoint unless `start` is given.
AsaResult optimize(const CostFn& cost, const Bounds& bounds, const AnnealSchedule& schedule,
                   std::uint64_t seed, const std::vector<double>* start = nullptr);

struct SampleRecord {
    std::vector<double> point;
    double cost = 0.0;
    double temp = 0.0;  // generation temperature when the point was accepted
};

struct SampleResult {
    std::vector<SampleRecord> records;
    bool budget_exhausted = false;
};

// Importance sampling: runs the same chain but returns the accepted-point
// stream with its generation temperatures instead of only the best point.
SampleResult sample(const CostFn& cost, const Bounds& bounds, const AnnealSchedule& schedule,
                    std::size_t n, std::uint64_t seed);

// CSV export of an optimization trace (columns: eval, k, T, cost, accepted).
std::string trace_csv(const std::vector<TraceRecord>& trace);

}  // namespace meso::asa

#endif
