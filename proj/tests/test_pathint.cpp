#include <doctest.h>

#include <cmath>

#include "meso/error.hpp"
#include "meso/pathint.hpp"

using namespace meso;
using namespace meso::pathint;

namespace {

Grid line_grid(double lo, double hi, int n) {
    Grid g;
    g.axes = {{lo, hi, n, "x"}};
    return g;
}

DynamicsFn constant_dynamics(double drift, double diffusion) {
    return [=](const std::vector<double>&) {
        return std::vector<AxisDynamics>{{drift, diffusion}};
    };
}

DynamicsFn ou_dynamics(double tau, double diffusion) {
    return [=](const std::vector<double>& x) {
        return std::vector<AxisDynamics>{{-x[0] / tau, diffusion}};
    };
}

}  // namespace

TEST_CASE("zero drift and zero diffusion build the identity kernel") {
    Grid g = line_grid(-1.0, 1.0, 21);
    Kernel k = build_kernel(constant_dynamics(0.0, 0.0), g, 0.1, {3});
    for (std::size_t i = 0; i < g.cells(); ++i) {
        REQUIRE(k.row_start[i + 1] - k.row_start[i] == 1);
        CHECK(k.columns[k.row_start[i]] == i);
        CHECK(k.values[k.row_start[i]] == 1.0);
    }
}

TEST_CASE("diffusive rows match the discretized Gaussian") {
    Grid g = line_grid(-3.0, 3.0, 201);
    double sigma2 = 0.5, dt = 0.01;
    Kernel k = build_kernel(constant_dynamics(0.0, sigma2), g, dt, {12});
    // Interior row: compare against a directly normalized point Gaussian.
    std::size_t row = 100;
    double x0 = g.coords(row)[0];
    double var = sigma2 * dt;
    std::vector<double> expected;
    double norm = 0.0;
    for (std::size_t e = k.row_start[row]; e < k.row_start[row + 1]; ++e) {
        double xj = g.coords(k.columns[e])[0];
        double w = std::exp(-(xj - x0) * (xj - x0) / (2.0 * var));
        expected.push_back(w);
        norm += w;
    }
    double row_sum = 0.0;
    for (std::size_t e = k.row_start[row]; e < k.row_start[row + 1]; ++e) {
        double want = expected[e - k.row_start[row]] / norm;
        CHECK(std::abs(k.values[e] - want) < 1e-6);
        row_sum += k.values[e];
    }
    CHECK(std::abs(row_sum - 1.0) < 1e-12);
}

TEST_CASE("constant drift shifts the row argmax by round(mu dt / spacing)") {
    Grid g = line_grid(-3.0, 3.0, 201);
    double spacing = g.axes[0].spacing();
    double dt = 0.1;
    double mu = 2.33 * spacing / dt;  // 2.33 cells per step
    Kernel k = build_kernel(constant_dynamics(mu, 0.04), g, dt, {15});
    std::size_t row = 80;
    std::size_t argmax = 0;
    double best = -1.0;
    for (std::size_t e = k.row_start[row]; e < k.row_start[row + 1]; ++e) {
        if (k.values[e] > best) {
            best = k.values[e];
            argmax = k.columns[e];
        }
    }
    long shift = static_cast<long>(argmax) - static_cast<long>(row);
    CHECK(shift == std::lround(mu * dt / spacing));
}

TEST_CASE("insufficient bandwidth is a configuration error naming the cell") {
    Grid g = line_grid(-1.0, 1.0, 21);
    CHECK_THROWS_WITH_AS(build_kernel(constant_dynamics(0.0, 1.0), g, 1.0, {2}),
                         doctest::Contains("cell"), Error);
}

TEST_CASE("identity kernel evolution leaves the distribution unchanged") {
    Grid g = line_grid(-1.0, 1.0, 31);
    Kernel k = build_kernel(constant_dynamics(0.0, 0.0), g, 0.1, {2});
    GridDistribution d = gaussian_distribution(g, {0.2}, {0.09});
    GridDistribution evolved = evolve(d, k, 25);
    for (std::size_t i = 0; i < d.weights.size(); ++i)
        CHECK(evolved.weights[i] == doctest::Approx(d.weights[i]).epsilon(1e-12));
}

TEST_CASE("Ornstein-Uhlenbeck relaxation matches the analytic solution") {
    const double tau = 1.0, sigma2 = 0.5;
    const double dt = 0.005;
    const int steps = 1000;  // t = 5 tau
    Grid g = line_grid(-3.0, 3.0, 201);
    Kernel k = build_kernel(ou_dynamics(tau, sigma2), g, dt, {8});

    const double m0 = 1.0, v0 = 0.04;
    GridDistribution d = gaussian_distribution(g, {m0}, {v0});
    EvolveStats stats;
    GridDistribution evolved = evolve(d, k, steps, &stats);

    double t = steps * dt;
    double v_inf = sigma2 * tau / 2.0;
    double m_expect = m0 * std::exp(-t / tau);
    double v_expect = v_inf * (1.0 - std::exp(-2.0 * t / tau)) + v0 * std::exp(-2.0 * t / tau);

    CHECK(evolved.mean()[0] == doctest::Approx(m_expect).epsilon(0.02));
    CHECK(evolved.variance()[0] == doctest::Approx(v_expect).epsilon(0.02));
    CHECK(stats.max_leakage < 1e-12);

    double total = 0.0;
    for (double w : evolved.weights) total += w;
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("pure diffusion grows variance linearly") {
    Grid g = line_grid(-3.0, 3.0, 201);
    double sigma2 = 0.5, dt = 0.01;
    Kernel k = build_kernel(constant_dynamics(0.0, sigma2), g, dt, {10});
    GridDistribution d = delta_distribution(g, {0.0});
    double prev_var = 0.0;
    double first = 0.0, last = 0.0;
    for (int step = 1; step <= 50; ++step) {
        d = evolve(d, k, 1);
        double v = d.variance()[0];
        if (step == 1) first = v;
        if (step == 50) last = v;
        CHECK(v > prev_var);
        prev_var = v;
    }
    double slope = (last - first) / (49.0 * dt);
    CHECK(slope == doctest::Approx(sigma2).epsilon(0.02));
}

TEST_CASE("stationary scan") {
    SUBCASE("unimodal profile has exactly one maximum at the mode") {
        Grid g = line_grid(-2.0, 2.0, 81);
        GridDistribution d = gaussian_distribution(g, {0.5}, {0.09});
        auto maxima = stationary_scan(d, {{0}, {80}, 1e-6});
        REQUIRE(maxima.size() == 1);
        CHECK(g.coords(g.index(maxima[0].cell))[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("bimodal mixture yields both component modes") {
        Grid g = line_grid(-2.0, 2.0, 81);
        GridDistribution a = gaussian_distribution(g, {-1.0}, {0.04});
        GridDistribution b = gaussian_distribution(g, {1.0}, {0.04});
        GridDistribution mix;
        mix.grid = g;
        mix.weights.resize(g.cells());
        for (std::size_t i = 0; i < g.cells(); ++i)
            mix.weights[i] = 0.5 * (a.weights[i] + b.weights[i]);
        auto maxima = stationary_scan(mix, {{0}, {80}, 1e-6});
        REQUIRE(maxima.size() == 2);
        CHECK(g.coords(g.index(maxima[0].cell))[0] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(g.coords(g.index(maxima[1].cell))[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("2-D diagonal cut") {
        Grid g;
        g.axes = {{-1.0, 1.0, 41, "m_e"}, {-1.0, 1.0, 41, "m_i"}};
        GridDistribution d = gaussian_distribution(g, {0.0, 0.0}, {0.09, 0.09});
        auto maxima = stationary_scan(d, {{0, 0}, {40, 40}, 1e-6});
        REQUIRE(maxima.size() == 1);
        CHECK(maxima[0].cell == std::vector<int>{20, 20});
    }
    SUBCASE("coinciding endpoints are an input error") {
        Grid g = line_grid(-1.0, 1.0, 11);
        GridDistribution d = gaussian_distribution(g, {0.0}, {0.1});
        CHECK_THROWS_AS(stationary_scan(d, {{3}, {3}, 1e-6}), Error);
    }
}

TEST_CASE("distribution csv round trip") {
    Grid g = line_grid(-1.0, 1.0, 41);
    GridDistribution d = gaussian_distribution(g, {0.3}, {0.05});
    GridDistribution back = distribution_from_csv(g, distribution_csv(d));
    for (std::size_t i = 0; i < d.weights.size(); ++i)
        CHECK(back.weights[i] == doctest::Approx(d.weights[i]).epsilon(1e-12));
}

TEST_CASE("mismatched grids are rejected") {
    Grid g1 = line_grid(-1.0, 1.0, 21);
    Grid g2 = line_grid(-1.0, 1.0, 31);
    Kernel k = build_kernel(constant_dynamics(0.0, 0.0), g1, 0.1, {2});
    GridDistribution d = gaussian_distribution(g2, {0.0}, {0.1});
    CHECK_THROWS_AS(evolve(d, k, 1), Error);
}
