#include "meso/column.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "meso/error.hpp"

namespace meso {

namespace {

const char* pop_name(int g) { return g == kE ? "E" : "I"; }

struct ThresholdParts {
    double numerator;
    double radicand;  // pi * (weighted efficacy sum); must be positive
};

ThresholdParts threshold_parts(const FiringState& state, const ColumnParams& p, int g) {
    double num = p.v_thresh[g];
    double scale = std::abs(num);
    double rad = 0.0;
    for (int gp = 0; gp < kPops; ++gp) {
        double n_src = p.n_pop(gp);
        double m_src = state[gp];
        double a = p.a(g, gp);
        double half_A = 0.5 * p.A[g][gp];
        double vv = p.v[g][gp];
        double ph = p.phi[g][gp];
        double term = a * vv * n_src + half_A * vv * m_src;
        num -= term;
        scale += std::abs(term);
        rad += (vv * vv + ph * ph) * (a * n_src + half_A * m_src);
    }
    if (g == kE && p.long_ranged) {
        const LongRangedParams& lr = *p.long_ranged;
        double ad = lr.combined_efficacy();
        double half_Ad = 0.5 * lr.a_dagger;
        double term = ad * lr.v_dagger * lr.n_dagger + half_Ad * lr.v_dagger * lr.m_dagger;
        num -= term;
        scale += std::abs(term);
        rad += ad * lr.n_dagger + half_Ad * lr.m_dagger;
    }
    // A numerator below the roundoff bound of its own evaluation carries no
    // information; collapsing it keeps drift exactly zero at centered targets.
    if (std::abs(num) <= 8.0 * std::numeric_limits<double>::epsilon() * scale) num = 0.0;
    return {num, M_PI * rad};
}

double sech_squared(double x) {
    double e = std::exp(-2.0 * std::abs(x));
    double s = 4.0 * e / ((1.0 + e) * (1.0 + e));
    // sech^2 underflows for |x| > ~372; keep the diffusion strictly positive.
    return s > 0.0 ? s : std::numeric_limits<double>::min();
}

}  // namespace

void ColumnParams::validate() const {
    if (!(n_e > 0.0) || !(n_i > 0.0)) throw domain_error("column: neuron counts must be positive");
    if (!(tau > 0.0)) throw domain_error("column: tau must be positive");
    for (int g = 0; g < kPops; ++g) {
        for (int gp = 0; gp < kPops; ++gp) {
            if (!(phi[g][gp] > 0.0)) throw domain_error("column: phi entries must be positive");
            if (A[g][gp] < 0.0 || B[g][gp] < 0.0)
                throw domain_error("column: synaptic efficacies must be nonnegative");
        }
        if (nn_coeff[g] < 0.0) throw domain_error("column: nn_coeff must be nonnegative");
    }
    if (long_ranged) {
        const LongRangedParams& lr = *long_ranged;
        if (lr.n_dagger < 0.0 || lr.a_dagger < 0.0 || lr.b_dagger < 0.0)
            throw domain_error("column: long-ranged magnitudes must be nonnegative");
    }
}

bool ColumnParams::in_bounds(const FiringState& s) const {
    return std::abs(s.m_e) <= n_e && std::abs(s.m_i) <= n_i;
}

FiringState ColumnParams::clamp(const FiringState& s) const {
    FiringState out = s;
    if (out.m_e > n_e) out.m_e = n_e;
    if (out.m_e < -n_e) out.m_e = -n_e;
    if (out.m_i > n_i) out.m_i = n_i;
    if (out.m_i < -n_i) out.m_i = -n_i;
    return out;
}

PerPop<double> threshold_factor(const FiringState& state, const ColumnParams& params) {
    PerPop<double> f{};
    for (int g = 0; g < kPops; ++g) {
        ThresholdParts parts = threshold_parts(state, params, g);
        if (!(parts.radicand > 0.0))
            throw domain_error(std::string("threshold_factor: nonpositive denominator radicand for F^") +
                               pop_name(g) + " (check phi, efficacies and firing bounds)");
        f[g] = parts.numerator / std::sqrt(parts.radicand);
    }
    return f;
}

LocalDynamics local_dynamics(const FiringState& state, const ColumnParams& params) {
    PerPop<double> f = threshold_factor(state, params);
    LocalDynamics dyn;
    double det = 1.0;
    for (int g = 0; g < kPops; ++g) {
        double n_g = params.n_pop(g);
        dyn.drift[g] = -(state[g] + n_g * std::tanh(f[g])) / params.tau;
        dyn.diffusion[g] = n_g * sech_squared(f[g]) / params.tau;
        dyn.metric[g] = 1.0 / dyn.diffusion[g];
        det *= dyn.metric[g];
    }
    dyn.det_metric = det;
    return dyn;
}

double lagrangian(const FiringState& state, const PerPop<double>& rate, const ColumnParams& params,
                  const PerPop<double>* neighbor_gradient) {
    LocalDynamics dyn = local_dynamics(state, params);
    double quad = 0.0;
    for (int g = 0; g < kPops; ++g) {
        double d = rate[g] - dyn.drift[g];
        quad += d * dyn.metric[g] * d;
    }
    double value = quad / (2.0 * params.n_total());
    if (neighbor_gradient) {
        for (int g = 0; g < kPops; ++g) {
            double grad = (*neighbor_gradient)[g];
            value -= params.nn_coeff[g] * grad * grad;
        }
    }
    return value;
}

double short_time_probability(const FiringState& from, const FiringState& to,
                              const ColumnParams& params) {
    PerPop<double> rate = {(to.m_e - from.m_e) / params.tau, (to.m_i - from.m_i) / params.tau};
    double l = lagrangian(from, rate, params);
    LocalDynamics dyn = local_dynamics(from, params);
    double prefactor = std::sqrt(dyn.det_metric / (2.0 * M_PI * params.tau));
    return prefactor * std::exp(-params.n_total() * params.tau * l);
}

ColumnParams center_background(const ColumnParams& params, const FiringState& target) {
    if (!params.in_bounds(target)) throw domain_error("center_background: target outside firing bounds");
    ColumnParams out = params;
    for (int g = 0; g < kPops; ++g) {
        // The numerator is linear in a uniform shift s of row g of B:
        //   num(s) = num(0) - s * sum_G' v[g][G'] N^G'
        double slope = 0.0;
        for (int gp = 0; gp < kPops; ++gp) slope += out.v[g][gp] * out.n_pop(gp);
        if (slope == 0.0)
            throw domain_error(std::string("center_background: degenerate v/N row for F^") + pop_name(g));

        auto residual = [&](double shift) {
            ColumnParams probe = out;
            for (int gp = 0; gp < kPops; ++gp) probe.B[g][gp] = out.B[g][gp] + shift;
            return threshold_parts(target, probe, g).numerator;
        };

        double s = residual(0.0) / slope;
        for (int iter = 0; iter < 3 && residual(s) != 0.0; ++iter) s += residual(s) / slope;

        // Walk outward around the analytic root in steps of the stored-B
        // granularity; the numerator passes exactly through 0.0 at some
        // representable shift for essentially every parameter set, which is
        // what makes drift(target) vanish bit-exactly after centering.
        double best_s = s;
        double best_abs = std::abs(residual(s));
        double quantum = std::numeric_limits<double>::infinity();
        for (int gp = 0; gp < kPops; ++gp) {
            double at = std::abs(out.B[g][gp] + s);
            quantum = std::min(quantum, std::nextafter(at, at * 2.0 + 1.0) - at);
        }
        quantum = std::max(quantum * 0.5, std::numeric_limits<double>::denorm_min());
        for (int k = 1; k <= 8192 && best_abs != 0.0; ++k) {
            for (double probe : {s + k * quantum, s - k * quantum}) {
                double r = std::abs(residual(probe));
                if (r < best_abs) {
                    best_abs = r;
                    best_s = probe;
                }
            }
            if (best_abs == 0.0) break;
        }

        for (int gp = 0; gp < kPops; ++gp) {
            double shifted = out.B[g][gp] + best_s;
            if (shifted < 0.0)
                throw domain_error(std::string("center_background: infeasible for F^") + pop_name(g) +
                                   ": would require negative background efficacy");
            out.B[g][gp] = shifted;
        }
    }
    return out;
}

}  // namespace meso
