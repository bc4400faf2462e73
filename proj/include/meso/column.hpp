#ifndef MESO_COLUMN_HPP
#define MESO_COLUMN_HPP

#include <array>
#include <optional>

namespace meso {

// Mesoscopic dynamics of a single macrocolumn: two coupled firing variables
// (excitatory and inhibitory) with nonlinear drifts and state-dependent
// diagonal diffusions.  All operations here are pure functions of their
// arguments and safe to share across threads.

enum Pop : int { kE = 0, kI = 1 };
inline constexpr int kPops = 2;

template <typename T>
using PerPop = std::array<T, kPops>;

using PopMatrix = std::array<std::array<double, kPops>, kPops>;  // [target G][source G']

// Net firing of one column, bounded by the neuron counts of its parameters.
struct FiringState {
    double m_e = 0.0;
    double m_i = 0.0;

    double operator[](int g) const { return g == kE ? m_e : m_i; }
};

// Afferent long-ranged excitatory block.  `m_dagger` is the delayed upstream
// firing, supplied per step by the population layer; the other fields are
// static column parameters.  Long-ranged terms modify the excitatory
// threshold factor only.
struct LongRangedParams {
    double n_dagger = 0.0;  // fiber count scale
    double a_dagger = 0.0;  // synaptic efficacy
    double b_dagger = 0.0;  // background efficacy
    double v_dagger = 0.0;  // polarization contribution
    double m_dagger = 0.0;  // afferent firing, set each step

    double combined_efficacy() const { return 0.5 * a_dagger + b_dagger; }
};

// Synaptic and threshold parameters of a column.  First matrix index is the
// receiving population G, second the source population G'.
struct ColumnParams {
    double n_e = 0.0;  // excitatory neurons per minicolumn
    double n_i = 0.0;  // inhibitory neurons per minicolumn
    double tau = 1.0;  // epoch duration

    PerPop<double> v_thresh{};  // threshold polarization V^G
    PopMatrix A{};              // synaptic efficacies
    PopMatrix B{};              // background efficacies
    PopMatrix v{};              // mean polarization contributions
    PopMatrix phi{};            // polarization variance contributions
    PerPop<double> nn_coeff{};  // nearest-neighbor coefficients, default 0

    std::optional<LongRangedParams> long_ranged;

    double n_pop(int g) const { return g == kE ? n_e : n_i; }
    double n_total() const { return n_e + n_i; }
    // a = A/2 + B, the combined efficacy appearing in the threshold factor.
    double a(int g, int gp) const { return 0.5 * A[g][gp] + B[g][gp]; }

    // Throws meso::Error(domain) if counts, tau or phi are not positive or
    // any efficacy is negative.
    void validate() const;

    bool in_bounds(const FiringState& s) const;
    FiringState clamp(const FiringState& s) const;
};

// Drift, diffusion and metric of one column at one state.  The diffusion
// matrix is diagonal; `metric` is its elementwise reciprocal and
// `det_metric` the determinant of the full (diagonal) metric.
struct LocalDynamics {
    PerPop<double> drift{};      // g^G
    PerPop<double> diffusion{};  // g^GG, strictly positive
    PerPop<double> metric{};     // g_GG = 1 / g^GG
    double det_metric = 0.0;     // det(g_GG'), used as the propagator prefactor
};

// Threshold factors F^E, F^I.  With a long-ranged block present the
// excitatory factor gains the afferent terms; the printed form puts the
// long-ranged denominator contribution outside the (v^2 + phi^2) weighting,
// and that is what is implemented.  Throws meso::Error(domain) when a
// denominator radicand is not positive.
PerPop<double> threshold_factor(const FiringState& state, const ColumnParams& params);

LocalDynamics local_dynamics(const FiringState& state, const ColumnParams& params);

// Quadratic-form Lagrangian for a given firing rate, minus the
// nearest-neighbor potential when a gradient is supplied and the
// corresponding coefficient is nonzero.
double lagrangian(const FiringState& state, const PerPop<double>& rate, const ColumnParams& params,
                  const PerPop<double>* neighbor_gradient = nullptr);

// Unnormalized short-time conditional density for the transition
// from -> to over one epoch tau.  Callers needing a normalized density
// renormalize on their grid (see pathint).
double short_time_probability(const FiringState& from, const FiringState& to,
                              const ColumnParams& params);

// Shifts the background efficacies B (one uniform additive shift per
// receiving population) so that both threshold factors vanish at `target`.
// The shift is linear in the numerator, solved analytically and then
// polished so the stored parameters reproduce F^G(target) == 0 exactly in
// floating point whenever a representable shift exists.  Throws
// meso::Error(domain) if a shift would push any B entry negative.
ColumnParams center_background(const ColumnParams& params, const FiringState& target = {});

}  // namespace meso

#endif
