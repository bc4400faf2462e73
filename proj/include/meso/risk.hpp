#ifndef MESO_RISK_HPP
#define MESO_RISK_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meso/asa.hpp"

namespace meso::risk {

// Gaussian-copula portfolio risk stack: two-tailed exponential marginals,
// transform to Gaussian space, stable correlation estimation, correlated
// event sampling via Cholesky, binned portfolio returns with a fitted
// exponential, and Q / VaR / ETL reporting.  Model objects are immutable
// after fitting; all sampling is governed by explicit seeds.

// --- Marginals ---------------------------------------------------------------

// Two-tailed exponential p(dx) = exp(-|dx - m| / chi) / (2 chi).
// Optional asymmetric widths give different scales below/above the mean.
struct MarginalModel {
    double m = 0.0;
    double chi = 0.0;
    std::optional<double> chi_minus;
    std::optional<double> chi_plus;

    void validate() const;
};

// m = mean, chi = sqrt(variance / 2) over the trailing `window` points
// (window 0 uses the whole series).  The window should exceed the variable
// count when the fit feeds a correlation estimate.  Throws Error(domain)
// on zero variance.
MarginalModel fit_marginal(const std::vector<double>& series, std::size_t window = 0,
                           bool asymmetric = false);

double marginal_pdf(const MarginalModel& model, double dx);
// F(dx) = (1 + sgn(dx-m)(1 - exp(-|dx-m|/chi))) / 2, strictly increasing.
double marginal_cdf(const MarginalModel& model, double dx);

// Copula transform dy = sqrt(2) erfinv(2 F(dx) - 1) and its inverse
// dx = m - sgn(dy) chi ln[1 - erf(|dy|/sqrt 2)].  The tail is evaluated in
// complementary-error-function space so round trips hold to ~1e-15 relative
// out to |dx - m| = 20 chi and beyond.  |dy| so large that the tail
// probability underflows saturates at a documented clamp; `clamped` reports
// it when non-null.
double to_gaussian(const MarginalModel& model, double dx);
double from_gaussian(const MarginalModel& model, double dy, bool* clamped = nullptr);

// --- Correlation model --------------------------------------------------------

struct CopulaModel {
    int dim = 0;
    std::vector<double> corr;        // row-major N x N, unit diagonal
    std::vector<double> metric;      // inverse of corr
    double det = 1.0;                // det(corr)
    std::vector<double> chol_lower;  // lower triangular L with corr = L L^T
    std::vector<std::string> warnings;

    double corr_at(int i, int j) const { return corr[static_cast<std::size_t>(i) * dim + j]; }
    void validate() const;
};

CopulaModel identity_copula(int dim);
// Builds the model from an explicit correlation matrix (row-major).
CopulaModel copula_from_correlation(int dim, const std::vector<double>& corr);

// Trailing rolling mean over up to three epochs, the covariance stabilizer.
std::vector<std::vector<double>> preaverage3(const std::vector<std::vector<double>>& rows);

// Sample correlation of Gaussianized data (rows = epochs).  Pre-averaging
// applies preaverage3 first; it is the recommended stabilizer for noisy
// windows.  Warns (model.warnings) when the window does not exceed the
// variable count; throws Error(domain) when the matrix is not positive
// definite, with a remediation hint.
CopulaModel estimate_correlation(const std::vector<std::vector<double>>& dy_rows,
                                 bool preaverage = true);

// A_eff = L dt + (1/2) ln det + (N/2) ln(2 pi dt),
// L = (1 / 2 dt^2) sum_ij dy_i metric_ij dy_j; exp(-A_eff) is the correlated
// Gaussian density including prefactors.
double effective_action(const std::vector<double>& dy, const CopulaModel& model, double dt = 1.0);

// Copula density C(dx) = det^{-1/2} exp(-(1/2) dy^T (metric - I) dy) with
// dy the Gaussianized coordinates of dx; the joint density is C times the
// product of marginal densities.
double copula_density(const std::vector<double>& dx, const std::vector<MarginalModel>& marginals,
                      const CopulaModel& model);
double joint_density(const std::vector<double>& dx, const std::vector<MarginalModel>& marginals,
                     const CopulaModel& model);

// --- Events -------------------------------------------------------------------

struct EventSample {
    std::vector<double> dz;  // independent standard normals
    std::vector<double> dy;  // correlated normals, dy = L dz
    std::vector<double> dx;  // marginal-space returns
};

std::vector<EventSample> sample_events(const CopulaModel& model,
                                       const std::vector<MarginalModel>& marginals, std::size_t n,
                                       std::uint64_t seed);

// --- Portfolio ----------------------------------------------------------------

// Either a direct linear combination dM = sum_j (a_j dx_j + b_j), or position
// semantics: capital K = Y + sum_i nc_i (p_i - p@_i) marked to market with
// per-contract-change slippage, and dM the relative capital change when each
// price moves by its dx.
struct DirectPortfolio {
    std::vector<double> a;
    std::vector<double> b;
};

struct PositionPortfolio {
    std::vector<double> nc;       // target contracts, sign = long/short
    std::vector<double> nc_prev;  // current contracts (defaults to nc)
    std::vector<double> price;    // p at t'
    std::vector<double> price_at; // entry price p@
    double y_cash = 0.0;
    double sl_rate = 0.0;         // slippage cost per contract changed
};

struct PortfolioSpec {
    std::optional<DirectPortfolio> direct;
    std::optional<PositionPortfolio> position;

    void validate(std::size_t n_markets) const;  // exactly one form, matching sizes
};

double portfolio_return(const PortfolioSpec& spec, const std::vector<double>& dx);

struct Bin {
    double center = 0.0;
    std::int64_t count = 0;
};

struct BinSpec {
    int count = 101;      // used when width == 0
    double width = 0.0;   // explicit bin width wins when > 0
};

struct PortfolioDistribution {
    std::vector<Bin> bins;
    std::int64_t n_events = 0;
    double m_m = 0.0;      // fitted mean
    double x_width = 0.0;  // fitted exponential width X
    std::optional<double> x_minus;
    std::optional<double> x_plus;
};

// Histogram of dM over the events; m_M and X are fitted from the raw event
// values (2 X^2 = <dM^2> - <dM>^2), not from bin centers.  Throws
// Error(domain) when the returns are degenerate (all equal).
PortfolioDistribution build_portfolio_distribution(const std::vector<EventSample>& events,
                                                   const PortfolioSpec& spec, const BinSpec& bins,
                                                   bool asymmetric = false);

// --- Risk reports ---------------------------------------------------------------

struct RiskReport {
    double q = 0.0;             // headline Q (closed form)
    double var_level = 0.0;
    double q_closed_form = 0.0; // (1/2) exp(-|VaR - m_M| / X), loss-tail convention
    double q_empirical = 0.0;   // fraction of events with dM < -var_level
    std::optional<double> etl;  // mean dM over the loss tail; empty tail -> nullopt
};

// Loss-tail convention: the threshold is -var_level with var_level > 0, so
// Q estimates P(dM < -var_level).  Both the closed form and the empirical
// fraction are always reported.
RiskReport risk_report(const PortfolioDistribution& dist, const std::vector<double>& event_dm,
                       double var_level);

// Convenience: dM per event under a spec.
std::vector<double> event_returns(const std::vector<EventSample>& events, const PortfolioSpec& spec);

// --- Exposure optimization -------------------------------------------------------

enum class ExposureObjective {
    none,         // pure |Q - q_target| penalty (the risk-constraint cost)
    mean_return,  // maximize mean dM subject to the penalty
};

struct ExposureProblem {
    PortfolioSpec spec;              // template; free entries are overwritten
    std::vector<std::size_t> free_indices;  // indices into a[] or nc[]
    asa::Bounds bounds;              // per free parameter
    double var_level = 0.05;
    double q_target = 0.01;
    double penalty_weight = 1000.0;
    ExposureObjective objective = ExposureObjective::mean_return;
    BinSpec bins;
};

struct ExposureResult {
    PortfolioSpec spec;
    RiskReport report;
    double cost = 0.0;
    bool constraint_met = false;   // |Q - q_target| <= 1e-3
    bool budget_exhausted = false;
    bool tie_detected = false;     // distinct near-best exposures (cost plateau)
};

ExposureResult optimize_exposures(const ExposureProblem& problem,
                                  const std::vector<EventSample>& events,
                                  const asa::AnnealSchedule& schedule, std::uint64_t seed);

}  // namespace meso::risk

#endif
