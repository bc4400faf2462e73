#include "meso/asa.hpp"

#include <algorithm>
#include <cmath>

#include "meso/csv.hpp"
#include "meso/error.hpp"

namespace meso::asa {

namespace {

constexpr int kRejectionCap = 1000;

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double geometric_mean_temperature(const AnnealState& state, const AnnealSchedule& schedule) {
    double log_sum = 0.0;
    for (std::size_t i = 0; i < schedule.t0.size(); ++i)
        log_sum += std::log(temperature(schedule, state.k[i], i));
    return std::exp(log_sum / static_cast<double>(schedule.t0.size()));
}

// Forward-difference sensitivities |dcost/dparam| at the best point, with
// step 1e-4 of each parameter's range.  Evaluations count against the budget.
std::vector<double> estimate_sensitivities(const CostFn& cost, const Bounds& bounds,
                                           AnnealState& state) {
    std::size_t d = bounds.dim();
    std::vector<double> s(d, 0.0);
    double base = state.best.cost;
    for (std::size_t i = 0; i < d; ++i) {
        double range = bounds.hi[i] - bounds.lo[i];
        double h = 1e-4 * range;
        std::vector<double> probe = state.best.point;
        probe[i] += h;
        if (probe[i] > bounds.hi[i]) {
            probe[i] = state.best.point[i] - h;
            h = -h;
        }
        double c = cost(probe);
        ++state.evals;
        s[i] = std::abs((c - base) / h);
    }
    return s;
}

struct ChainCallbacks {
    std::function<void(const AnnealState&, const TraceRecord&)> on_eval;
    std::function<bool(const AnnealState&)> done;  // stop early when true
};

AnnealState run_chain(const CostFn& cost, const Bounds& bounds, const AnnealSchedule& schedule,
                      std::uint64_t seed, const std::vector<double>* start,
                      const ChainCallbacks& callbacks) {
    bounds.validate();
    schedule.validate();
    if (bounds.dim() != schedule.t0.size())
        throw config_error("asa: bounds and schedule dimension mismatch");
    if (schedule.budget < 1) throw config_error("asa: budget must be >= 1");

    std::mt19937_64 rng(seed);

    AnnealState state;
    state.k.assign(bounds.dim(), 0.0);
    if (start) {
        state.current.point = *start;
        for (std::size_t i = 0; i < bounds.dim(); ++i)
            if (state.current.point[i] < bounds.lo[i] || state.current.point[i] > bounds.hi[i])
                throw config_error("asa: start point outside bounds");
    } else {
        state.current.point.resize(bounds.dim());
        for (std::size_t i = 0; i < bounds.dim(); ++i)
            state.current.point[i] = 0.5 * (bounds.lo[i] + bounds.hi[i]);
    }
    state.current.cost = cost(state.current.point);
    ++state.evals;
    state.best = state.current;

    while (state.evals < schedule.budget) {
        std::vector<double> candidate = generate_candidate(state, schedule, bounds, rng);
        double cand_cost = cost(candidate);
        ++state.evals;
        for (double& ki : state.k) ki += 1.0;

        double t_accept =
            schedule.t0_accept *
            std::exp(-schedule.accept_c() * std::pow(state.k_accept, 1.0 / schedule.dim));
        bool took = accept(state.current.cost, cand_cost, t_accept, rng);
        if (took) {
            state.current.point = candidate;
            state.current.cost = cand_cost;
            state.k_accept += 1.0;
        }
        if (cand_cost < state.best.cost) {
            state.best.point = candidate;
            state.best.cost = cand_cost;
        }

        if (callbacks.on_eval) {
            TraceRecord rec;
            rec.eval = state.evals;
            rec.k = state.k[0];
            rec.temp = geometric_mean_temperature(state, schedule);
            rec.cost = cand_cost;
            rec.accepted = took;
            callbacks.on_eval(state, rec);
        }
        if (callbacks.done && callbacks.done(state)) break;

        if (schedule.reanneal_every > 0 && state.evals < schedule.budget &&
            state.evals % schedule.reanneal_every == 0) {
            std::vector<double> sens = estimate_sensitivities(cost, bounds, state);
            reanneal(state, schedule, sens);
        }
    }
    return state;
}

}  // namespace

void Bounds::validate() const {
    if (lo.size() != hi.size() || lo.empty()) throw config_error("asa: malformed bounds");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i]))
            throw config_error("asa: bounds must satisfy lo < hi (parameter " + std::to_string(i) + ")");
}

void AnnealSchedule::validate() const {
    if (dim < 1 || t0.size() != static_cast<std::size_t>(dim) || c.size() != t0.size())
        throw config_error("asa: schedule dimension mismatch");
    for (double v : t0)
        if (!(v > 0.0)) throw config_error("asa: t0 entries must be positive");
    for (double v : c)
        if (!(v > 0.0)) throw config_error("asa: c entries must be positive");
    if (!(t0_accept > 0.0)) throw config_error("asa: t0_accept must be positive");
    if (c_accept < 0.0) throw config_error("asa: c_accept must be nonnegative");
}

double AnnealSchedule::accept_c() const {
    if (c_accept > 0.0) return c_accept;
    double s = 0.0;
    for (double v : c) s += v;
    return s / static_cast<double>(c.size());
}

AnnealSchedule uniform_schedule(int dim, double t0, double c, std::int64_t budget,
                                std::int64_t reanneal_every) {
    AnnealSchedule s;
    s.dim = dim;
    s.t0.assign(dim, t0);
    s.c.assign(dim, c);
    s.budget = budget;
    s.reanneal_every = reanneal_every;
    return s;
}

double temperature(const AnnealSchedule& schedule, double k, std::size_t param) {
    return schedule.t0[param] * std::exp(-schedule.c[param] * std::pow(k, 1.0 / schedule.dim));
}

double generating_deviate(double u, double temperature) {
    if (!(temperature > 0.0)) return 0.0;  // frozen chain
    double w = std::abs(2.0 * u - 1.0);
    double sign = u < 0.5 ? -1.0 : (u > 0.5 ? 1.0 : 0.0);
    // y = T ((1 + 1/T)^w - 1), evaluated in log space so deep-frozen
    // temperatures cannot overflow the base.
    double log_base = std::log1p(temperature) - std::log(temperature);  // log(1 + 1/T)
    double exponent = w * log_base;
    double y = exponent > 700.0 ? std::exp(std::log(temperature) + exponent)
                                : temperature * std::expm1(exponent);
    return sign * std::min(y, 1.0);
}

std::vector<double> generate_candidate(const AnnealState& state, const AnnealSchedule& schedule,
                                       const Bounds& bounds, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> candidate(bounds.dim());
    for (std::size_t i = 0; i < bounds.dim(); ++i) {
        double t = temperature(schedule, state.k[i], i);
        double range = bounds.hi[i] - bounds.lo[i];
        int tries = 0;
        while (true) {
            double u = uniform(rng);
            double y = generating_deviate(u, t);
            double value = state.current.point[i] + y * range;
            if (value >= bounds.lo[i] && value <= bounds.hi[i]) {
                candidate[i] = value;
                break;
            }
            if (++tries >= kRejectionCap)
                throw config_error("asa: candidate rejection cap hit (degenerate bounds?)");
        }
    }
    return candidate;
}

bool accept(double current_cost, double candidate_cost, double temperature, std::mt19937_64& rng) {
    if (candidate_cost <= current_cost) return true;
    if (!(temperature > 0.0)) return false;
    double p = std::exp(-(candidate_cost - current_cost) / temperature);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    return uniform(rng) < p;
}

void reanneal(AnnealState& state, const AnnealSchedule& schedule,
              const std::vector<double>& sensitivities) {
    if (sensitivities.size() != state.k.size())
        throw config_error("asa: sensitivity dimension mismatch");
    double s_max = 0.0;
    std::size_t ref = 0;
    for (std::size_t i = 0; i < sensitivities.size(); ++i) {
        if (sensitivities[i] > s_max) {
            s_max = sensitivities[i];
            ref = i;
        }
    }
    if (s_max <= 0.0) return;  // no gradient information: leave the state alone
    double t_ref = temperature(schedule, state.k[ref], ref);
    for (std::size_t i = 0; i < state.k.size(); ++i) {
        double s_i = sensitivities[i] > 0.0 ? sensitivities[i] : s_max * 1e-12;
        double t_new = t_ref * (s_max / s_i);
        double ratio = std::log(schedule.t0[i] / t_new) / schedule.c[i];
        state.k[i] = ratio > 0.0 ? std::pow(ratio, schedule.dim) : 0.0;
    }
}

AsaResult optimize(const CostFn& cost, const Bounds& bounds, const AnnealSchedule& schedule,
                   std::uint64_t seed, const std::vector<double>* start) {
    AsaResult result;
    ChainCallbacks callbacks;
    callbacks.on_eval = [&](const AnnealState&, const TraceRecord& rec) {
        result.trace.push_back(rec);
    };
    AnnealState state = run_chain(cost, bounds, schedule, seed, start, callbacks);
    result.best = state.best.point;
    result.best_cost = state.best.cost;
    result.budget_exhausted = state.evals >= schedule.budget;
    return result;
}

SampleResult sample(const CostFn& cost, const Bounds& bounds, const AnnealSchedule& schedule,
                    std::size_t n, std::uint64_t seed) {
    SampleResult result;
    ChainCallbacks callbacks;
    callbacks.on_eval = [&](const AnnealState& state, const TraceRecord& rec) {
        if (rec.accepted && result.records.size() < n) {
            SampleRecord sr;
            sr.point = state.current.point;
            sr.cost = state.current.cost;
            sr.temp = rec.temp;
            result.records.push_back(sr);
        }
    };
    callbacks.done = [&](const AnnealState&) { return result.records.size() >= n; };
    AnnealState state = run_chain(cost, bounds, schedule, seed, nullptr, callbacks);
    result.budget_exhausted = result.records.size() < n && state.evals >= schedule.budget;
    return result;
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
    CsvWriter w({"eval", "k", "T", "cost", "accepted"});
    for (const TraceRecord& r : trace) {
        w.add_row({std::to_string(r.eval), format_double(r.k), format_double(r.temp),
                   format_double(r.cost), r.accepted ? "1" : "0"});
    }
    return w.str();
}

}  // namespace meso::asa
