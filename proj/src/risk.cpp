#include "meso/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "meso/error.hpp"
#include "meso/special.hpp"

namespace meso::risk {

namespace {

constexpr double kTailSwitch = 0.02;  // below this tail probability, work in erfc space
constexpr double kClampU = 700.0;     // |dx - m| / chi saturation when the tail underflows

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// chi on the side of `delta` = dx - m (or dy for the inverse map).
double side_chi(const MarginalModel& model, double delta) {
    if (delta < 0.0 && model.chi_minus) return *model.chi_minus;
    if (delta > 0.0 && model.chi_plus) return *model.chi_plus;
    return model.chi;
}

// Lower-triangular Cholesky factor of a symmetric matrix, row-major.
std::vector<double> cholesky_lower(int n, const std::vector<double>& m, const char* context) {
    std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = m[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                sum -= l[static_cast<std::size_t>(i) * n + k] * l[static_cast<std::size_t>(j) * n + k];
            if (i == j) {
                if (sum <= 1e-12)
                    throw domain_error(std::string(context) +
                                       ": matrix is not positive definite "
                                       "(enable pre-averaging or widen the estimation window)");
                l[static_cast<std::size_t>(i) * n + j] = std::sqrt(sum);
            } else {
                l[static_cast<std::size_t>(i) * n + j] =
                    sum / l[static_cast<std::size_t>(j) * n + j];
            }
        }
    }
    return l;
}

// Inverse of L L^T from its Cholesky factor via forward/back substitution.
std::vector<double> inverse_from_cholesky(int n, const std::vector<double>& l) {
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> col(n), y(n);
    for (int e = 0; e < n; ++e) {
        for (int i = 0; i < n; ++i) {
            double sum = (i == e) ? 1.0 : 0.0;
            for (int k = 0; k < i; ++k) sum -= l[static_cast<std::size_t>(i) * n + k] * y[k];
            y[i] = sum / l[static_cast<std::size_t>(i) * n + i];
        }
        for (int i = n - 1; i >= 0; --i) {
            double sum = y[i];
            for (int k = i + 1; k < n; ++k) sum -= l[static_cast<std::size_t>(k) * n + i] * col[k];
            col[i] = sum / l[static_cast<std::size_t>(i) * n + i];
        }
        for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + e] = col[i];
    }
    return inv;
}

CopulaModel finish_model(int n, std::vector<double> corr) {
    CopulaModel model;
    model.dim = n;
    model.corr = std::move(corr);
    model.chol_lower = cholesky_lower(n, model.corr, "copula");
    model.metric = inverse_from_cholesky(n, model.chol_lower);
    model.det = 1.0;
    for (int i = 0; i < n; ++i) {
        double lii = model.chol_lower[static_cast<std::size_t>(i) * n + i];
        model.det *= lii * lii;
    }
    return model;
}

}  // namespace

void MarginalModel::validate() const {
    if (!(chi > 0.0)) throw domain_error("marginal: chi must be positive");
    if (chi_minus && !(*chi_minus > 0.0)) throw domain_error("marginal: chi_minus must be positive");
    if (chi_plus && !(*chi_plus > 0.0)) throw domain_error("marginal: chi_plus must be positive");
}

MarginalModel fit_marginal(const std::vector<double>& series, std::size_t window, bool asymmetric) {
    std::size_t n = series.size();
    std::size_t take = (window == 0 || window > n) ? n : window;
    if (take < 2) throw domain_error("fit_marginal: window must cover at least 2 points");
    std::size_t begin = n - take;

    double sum = 0.0;
    for (std::size_t i = begin; i < n; ++i) sum += series[i];
    double mean = sum / static_cast<double>(take);

    double sq = 0.0;
    for (std::size_t i = begin; i < n; ++i) {
        double d = series[i] - mean;
        sq += d * d;
    }
    double variance = sq / static_cast<double>(take);
    if (!(variance > 0.0)) throw domain_error("fit_marginal: degenerate series (zero variance)");

    MarginalModel model;
    model.m = mean;
    model.chi = std::sqrt(0.5 * variance);
    if (asymmetric) {
        double lo_sq = 0.0, hi_sq = 0.0;
        std::size_t lo_n = 0, hi_n = 0;
        for (std::size_t i = begin; i < n; ++i) {
            double d = series[i] - mean;
            if (d < 0.0) {
                lo_sq += d * d;
                ++lo_n;
            } else if (d > 0.0) {
                hi_sq += d * d;
                ++hi_n;
            }
        }
        if (lo_n > 0) model.chi_minus = std::sqrt(0.5 * lo_sq / static_cast<double>(lo_n));
        if (hi_n > 0) model.chi_plus = std::sqrt(0.5 * hi_sq / static_cast<double>(hi_n));
    }
    return model;
}

double marginal_pdf(const MarginalModel& model, double dx) {
    double chi = side_chi(model, dx - model.m);
    return std::exp(-std::abs(dx - model.m) / chi) / (2.0 * chi);
}

double marginal_cdf(const MarginalModel& model, double dx) {
    double delta = dx - model.m;
    double chi = side_chi(model, delta);
    double tail = std::exp(-std::abs(delta) / chi);
    return delta < 0.0 ? 0.5 * tail : 1.0 - 0.5 * tail;
}

double to_gaussian(const MarginalModel& model, double dx) {
    double delta = dx - model.m;
    if (delta == 0.0) return 0.0;
    double u = std::abs(delta) / side_chi(model, delta);
    double q = std::exp(-u);  // one-sided tail mass times 2
    double x;
    if (q < kTailSwitch) {
        x = erfc_inv(q);
    } else {
        x = erf_inv(-std::expm1(-u));
    }
    return sgn(delta) * M_SQRT2 * x;
}

double from_gaussian(const MarginalModel& model, double dy, bool* clamped) {
    if (clamped) *clamped = false;
    if (dy == 0.0) return model.m;
    double x = std::abs(dy) * M_SQRT1_2;
    double u;
    if (x < 0.5) {
        u = -std::log1p(-std::erf(x));
    } else {
        double q = std::erfc(x);
        if (q <= 0.0) {
            u = kClampU;
            if (clamped) *clamped = true;
        } else {
            u = -std::log(q);
            if (u > kClampU) {
                u = kClampU;
                if (clamped) *clamped = true;
            }
        }
    }
    return model.m + sgn(dy) * side_chi(model, dy) * u;
}

void CopulaModel::validate() const {
    std::size_t n = static_cast<std::size_t>(dim);
    if (dim < 1 || corr.size() != n * n || metric.size() != n * n || chol_lower.size() != n * n)
        throw domain_error("copula: inconsistent model dimensions");
}

CopulaModel identity_copula(int dim) {
    std::vector<double> corr(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) corr[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return finish_model(dim, std::move(corr));
}

CopulaModel copula_from_correlation(int dim, const std::vector<double>& corr) {
    if (corr.size() != static_cast<std::size_t>(dim) * dim)
        throw domain_error("copula: correlation matrix size mismatch");
    return finish_model(dim, corr);
}

std::vector<std::vector<double>> preaverage3(const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        std::size_t first = t >= 2 ? t - 2 : 0;
        double span = static_cast<double>(t - first + 1);
        out[t].resize(rows[t].size());
        for (std::size_t j = 0; j < rows[t].size(); ++j) {
            double s = 0.0;
            for (std::size_t u = first; u <= t; ++u) s += rows[u][j];
            out[t][j] = s / span;
        }
    }
    return out;
}

CopulaModel estimate_correlation(const std::vector<std::vector<double>>& dy_rows, bool preaverage) {
    if (dy_rows.size() < 2) throw domain_error("correlation: need at least 2 epochs");
    int n = static_cast<int>(dy_rows.front().size());
    if (n < 1) throw domain_error("correlation: empty rows");
    for (const auto& row : dy_rows)
        if (static_cast<int>(row.size()) != n) throw domain_error("correlation: ragged rows");

    std::size_t t_len = dy_rows.size();
    std::vector<std::vector<double>> data = preaverage ? preaverage3(dy_rows) : dy_rows;

    std::vector<double> mean(n, 0.0);
    for (const auto& row : data)
        for (int j = 0; j < n; ++j) mean[j] += row[j];
    for (int j = 0; j < n; ++j) mean[j] /= static_cast<double>(t_len);

    std::vector<double> cov(static_cast<std::size_t>(n) * n, 0.0);
    for (const auto& row : data)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j)
                cov[static_cast<std::size_t>(i) * n + j] += (row[i] - mean[i]) * (row[j] - mean[j]);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            cov[static_cast<std::size_t>(i) * n + j] /= static_cast<double>(t_len);
            cov[static_cast<std::size_t>(j) * n + i] = cov[static_cast<std::size_t>(i) * n + j];
        }

    for (int i = 0; i < n; ++i)
        if (!(cov[static_cast<std::size_t>(i) * n + i] > 0.0))
            throw domain_error("correlation: column " + std::to_string(i) + " has zero variance");

    std::vector<double> corr(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        corr[static_cast<std::size_t>(i) * n + i] = 1.0;
        for (int j = 0; j < i; ++j) {
            double r = cov[static_cast<std::size_t>(i) * n + j] /
                       std::sqrt(cov[static_cast<std::size_t>(i) * n + i] *
                                 cov[static_cast<std::size_t>(j) * n + j]);
            corr[static_cast<std::size_t>(i) * n + j] = r;
            corr[static_cast<std::size_t>(j) * n + i] = r;
        }
    }

    std::string window_note = "correlation window (" + std::to_string(t_len) +
                              ") does not exceed the variable count (" + std::to_string(n) + ")";
    CopulaModel model;
    try {
        model = finish_model(n, std::move(corr));
    } catch (const Error& e) {
        if (t_len <= static_cast<std::size_t>(n))
            throw domain_error(std::string(e.what()) + "; " + window_note);
        throw;
    }
    if (t_len <= static_cast<std::size_t>(n)) model.warnings.push_back(window_note);
    return model;
}

double effective_action(const std::vector<double>& dy, const CopulaModel& model, double dt) {
    model.validate();
    if (static_cast<int>(dy.size()) != model.dim)
        throw domain_error("effective_action: dimension mismatch");
    if (!(dt > 0.0)) throw domain_error("effective_action: dt must be positive");
    int n = model.dim;
    double quad = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            quad += dy[i] * model.metric[static_cast<std::size_t>(i) * n + j] * dy[j];
    double lagr = quad / (2.0 * dt * dt);
    return lagr * dt + 0.5 * std::log(model.det) + 0.5 * n * std::log(2.0 * M_PI * dt);
}

double copula_density(const std::vector<double>& dx, const std::vector<MarginalModel>& marginals,
                      const CopulaModel& model) {
    model.validate();
    int n = model.dim;
    if (static_cast<int>(dx.size()) != n || static_cast<int>(marginals.size()) != n)
        throw domain_error("copula_density: dimension mismatch");
    std::vector<double> dy(n);
    for (int i = 0; i < n; ++i) dy[i] = to_gaussian(marginals[i], dx[i]);
    double quad = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double mij = model.metric[static_cast<std::size_t>(i) * n + j] - (i == j ? 1.0 : 0.0);
            quad += dy[i] * mij * dy[j];
        }
    return std::exp(-0.5 * quad) / std::sqrt(model.det);
}

double joint_density(const std::vector<double>& dx, const std::vector<MarginalModel>& marginals,
                     const CopulaModel& model) {
    double density = copula_density(dx, marginals, model);
    for (std::size_t i = 0; i < marginals.size(); ++i) density *= marginal_pdf(marginals[i], dx[i]);
    return density;
}

std::vector<EventSample> sample_events(const CopulaModel& model,
                                       const std::vector<MarginalModel>& marginals, std::size_t n,
                                       std::uint64_t seed) {
    model.validate();
    if (static_cast<int>(marginals.size()) != model.dim)
        throw domain_error("sample_events: marginal count mismatch");
    int d = model.dim;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<EventSample> events;
    events.reserve(n);
    for (std::size_t e = 0; e < n; ++e) {
        EventSample ev;
        ev.dz.resize(d);
        ev.dy.assign(d, 0.0);
        ev.dx.resize(d);
        for (int i = 0; i < d; ++i) ev.dz[i] = normal(rng);
        for (int i = 0; i < d; ++i) {
            double sum = 0.0;
            for (int k = 0; k <= i; ++k)
                sum += model.chol_lower[static_cast<std::size_t>(i) * d + k] * ev.dz[k];
            ev.dy[i] = sum;
        }
        for (int i = 0; i < d; ++i) ev.dx[i] = from_gaussian(marginals[i], ev.dy[i]);
        events.push_back(std::move(ev));
    }
    return events;
}

void PortfolioSpec::validate(std::size_t n_markets) const {
    if (direct.has_value() == position.has_value())
        throw config_error("portfolio: exactly one of direct/position form required");
    if (direct) {
        if (direct->a.size() != n_markets || direct->b.size() != n_markets)
            throw config_error("portfolio: coefficient count does not match market count");
    } else {
        const PositionPortfolio& p = *position;
        if (p.nc.size() != n_markets || p.price.size() != n_markets ||
            p.price_at.size() != n_markets)
            throw config_error("portfolio: position vectors must match market count");
        if (!p.nc_prev.empty() && p.nc_prev.size() != n_markets)
            throw config_error("portfolio: nc_prev must match market count");
        if (p.sl_rate < 0.0) throw config_error("portfolio: slippage rate must be nonnegative");
    }
}

double portfolio_return(const PortfolioSpec& spec, const std::vector<double>& dx) {
    spec.validate(dx.size());
    if (spec.direct) {
        double dm = 0.0;
        for (std::size_t j = 0; j < dx.size(); ++j)
            dm += spec.direct->a[j] * dx[j] + spec.direct->b[j];
        return dm;
    }
    const PositionPortfolio& p = *spec.position;
    double k_prev = p.y_cash;
    double k_now = p.y_cash;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        double nc_prev = p.nc_prev.empty() ? p.nc[i] : p.nc_prev[i];
        k_prev += nc_prev * (p.price[i] - p.price_at[i]);
        double price_next = p.price[i] * (1.0 + dx[i]);
        // Slippage is a cost: it reduces capital when contracts change.
        k_now += p.nc[i] * (price_next - p.price_at[i]) - p.sl_rate * std::abs(p.nc[i] - nc_prev);
    }
    if (k_prev == 0.0) throw domain_error("portfolio: reference capital K_t' is zero");
    return (k_now - k_prev) / k_prev;
}

std::vector<double> event_returns(const std::vector<EventSample>& events,
                                  const PortfolioSpec& spec) {
    std::vector<double> dm;
    dm.reserve(events.size());
    for (const EventSample& ev : events) dm.push_back(portfolio_return(spec, ev.dx));
    return dm;
}

namespace {

PortfolioDistribution distribution_from_returns(const std::vector<double>& dm, const BinSpec& bins,
                                                bool asymmetric) {
    if (dm.size() < 2)
        throw domain_error("portfolio distribution: need at least 2 events (width undefined)");
    double lo = dm[0], hi = dm[0], sum = 0.0;
    for (double v : dm) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    double mean = sum / static_cast<double>(dm.size());
    double sq = 0.0;
    for (double v : dm) sq += (v - mean) * (v - mean);
    double variance = sq / static_cast<double>(dm.size());
    if (!(variance > 0.0))
        throw domain_error("portfolio distribution: degenerate returns (zero width)");

    PortfolioDistribution dist;
    dist.n_events = static_cast<std::int64_t>(dm.size());
    dist.m_m = mean;
    dist.x_width = std::sqrt(0.5 * variance);

    double width = bins.width > 0.0 ? bins.width : (hi - lo) / std::max(bins.count, 1);
    if (!(width > 0.0)) throw domain_error("portfolio distribution: nonpositive bin width");
    int n_bins = static_cast<int>(std::floor((hi - lo) / width)) + 1;
    dist.bins.assign(n_bins, Bin{});
    for (int k = 0; k < n_bins; ++k) dist.bins[k].center = lo + (k + 0.5) * width;
    for (double v : dm) {
        int k = std::min(static_cast<int>((v - lo) / width), n_bins - 1);
        ++dist.bins[k].count;
    }

    if (asymmetric) {
        double lo_sq = 0.0, hi_sq = 0.0;
        std::int64_t lo_n = 0, hi_n = 0;
        for (double v : dm) {
            double d = v - mean;
            if (d < 0.0) {
                lo_sq += d * d;
                ++lo_n;
            } else if (d > 0.0) {
                hi_sq += d * d;
                ++hi_n;
            }
        }
        if (lo_n > 0) dist.x_minus = std::sqrt(0.5 * lo_sq / static_cast<double>(lo_n));
        if (hi_n > 0) dist.x_plus = std::sqrt(0.5 * hi_sq / static_cast<double>(hi_n));
    }
    return dist;
}

}  // namespace

PortfolioDistribution build_portfolio_distribution(const std::vector<EventSample>& events,
                                                   const PortfolioSpec& spec, const BinSpec& bins,
                                                   bool asymmetric) {
    if (events.empty()) throw domain_error("portfolio distribution: no events");
    return distribution_from_returns(event_returns(events, spec), bins, asymmetric);
}

RiskReport risk_report(const PortfolioDistribution& dist, const std::vector<double>& event_dm,
                       double var_level) {
    if (!(dist.x_width > 0.0)) throw domain_error("risk_report: distribution not fitted");
    RiskReport report;
    report.var_level = var_level;

    double threshold = -var_level;
    if (dist.m_m >= threshold) {
        report.q_closed_form = 0.5 * std::exp(-(dist.m_m - threshold) / dist.x_width);
    } else {
        report.q_closed_form = 1.0 - 0.5 * std::exp(-(threshold - dist.m_m) / dist.x_width);
    }
    report.q = report.q_closed_form;

    std::int64_t tail_count = 0;
    double tail_sum = 0.0;
    for (double v : event_dm) {
        if (v < threshold) {
            ++tail_count;
            tail_sum += v;
        }
    }
    report.q_empirical =
        event_dm.empty() ? 0.0 : static_cast<double>(tail_count) / static_cast<double>(event_dm.size());
    if (tail_count > 0) report.etl = tail_sum / static_cast<double>(tail_count);
    return report;
}

ExposureResult optimize_exposures(const ExposureProblem& problem,
                                  const std::vector<EventSample>& events,
                                  const asa::AnnealSchedule& schedule, std::uint64_t seed) {
    if (events.empty()) throw config_error("optimize_exposures: no events");
    if (problem.free_indices.empty())
        throw config_error("optimize_exposures: no free exposure parameters");
    std::size_t n_markets = events.front().dx.size();
    problem.spec.validate(n_markets);
    if (problem.bounds.dim() != problem.free_indices.size())
        throw config_error("optimize_exposures: bounds must match free parameter count");

    auto apply = [&](const std::vector<double>& x) {
        PortfolioSpec spec = problem.spec;
        for (std::size_t i = 0; i < problem.free_indices.size(); ++i) {
            std::size_t idx = problem.free_indices[i];
            if (spec.direct)
                spec.direct->a.at(idx) = x[i];
            else
                spec.position->nc.at(idx) = x[i];
        }
        return spec;
    };

    asa::CostFn cost = [&](const std::vector<double>& x) {
        PortfolioSpec spec = apply(x);
        double sum = 0.0, sq = 0.0;
        for (const EventSample& ev : events) {
            double dm = portfolio_return(spec, ev.dx);
            sum += dm;
            sq += dm * dm;
        }
        double n = static_cast<double>(events.size());
        double mean = sum / n;
        double variance = sq / n - mean * mean;
        if (!(variance > 0.0)) return problem.penalty_weight;  // degenerate exposure
        double x_width = std::sqrt(0.5 * variance);
        double threshold = -problem.var_level;
        double q = mean >= threshold ? 0.5 * std::exp(-(mean - threshold) / x_width)
                                     : 1.0 - 0.5 * std::exp(-(threshold - mean) / x_width);
        double value = problem.penalty_weight * std::abs(q - problem.q_target);
        if (problem.objective == ExposureObjective::mean_return) value -= mean;
        return value;
    };

    asa::AsaResult res = asa::optimize(cost, problem.bounds, schedule, seed);

    ExposureResult result;
    result.spec = apply(res.best);
    result.cost = res.best_cost;
    result.budget_exhausted = res.budget_exhausted;

    std::vector<double> dm = event_returns(events, result.spec);
    PortfolioDistribution dist = distribution_from_returns(dm, problem.bins, false);
    result.report = risk_report(dist, dm, problem.var_level);
    result.constraint_met = std::abs(result.report.q_closed_form - problem.q_target) <= 1e-3;

    // Plateau (tie) probes: a direction along which a 1%-of-range move does
    // not change the cost means the optimum is non-unique.
    double tol = 1e-9 * (1.0 + std::abs(res.best_cost));
    auto probe_direction = [&](const std::vector<double>& dir) {
        for (double sign : {1.0, -1.0}) {
            std::vector<double> probe = res.best;
            bool in_bounds = true;
            for (std::size_t i = 0; i < probe.size(); ++i) {
                probe[i] += sign * dir[i];
                if (probe[i] < problem.bounds.lo[i] || probe[i] > problem.bounds.hi[i])
                    in_bounds = false;
            }
            if (in_bounds && std::abs(cost(probe) - res.best_cost) <= tol) return true;
        }
        return false;
    };
    std::size_t dims = problem.free_indices.size();
    for (std::size_t i = 0; i < dims && !result.tie_detected; ++i) {
        for (std::size_t j = i + 1; j < dims && !result.tie_detected; ++j) {
            std::vector<double> dir(dims, 0.0);
            dir[i] = 0.01 * (problem.bounds.hi[i] - problem.bounds.lo[i]);
            dir[j] = -0.01 * (problem.bounds.hi[j] - problem.bounds.lo[j]);
            if (probe_direction(dir)) result.tie_detected = true;
        }
    }
    return result;
}

}  // namespace meso::risk
