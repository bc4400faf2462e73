#include <doctest.h>

#include <cmath>
#include <random>

#include "meso/asa.hpp"
#include "meso/error.hpp"

using namespace meso;
using namespace meso::asa;

namespace {

Bounds interval(int dim, double lo, double hi) {
    Bounds b;
    b.lo.assign(dim, lo);
    b.hi.assign(dim, hi);
    return b;
}

double quadratic(const std::vector<double>& x) { return (x[0] - 0.3) * (x[0] - 0.3); }

// Multimodal bowl with global minimum 0 at the origin.
double cosine_bowl(const std::vector<double>& x) {
    double f = 0.0;
    for (double xi : x) f += xi * xi / 10.0 + 1.0 - std::cos(2.0 * M_PI * xi);
    return f;
}

}  // namespace

TEST_CASE("temperature schedule") {
    AnnealSchedule s = uniform_schedule(2, 1.0, 1.0, 100);
    CHECK(temperature(s, 0.0, 0) == 1.0);
    CHECK(temperature(s, 4.0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(temperature(s, 16.0, 0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
    double prev = temperature(s, 0.0, 0);
    for (double k = 1.0; k < 64.0; k += 1.0) {
        double t = temperature(s, k, 0);
        CHECK(t < prev);
        prev = t;
    }
}

TEST_CASE("exponential schedule undercuts Cauchy which undercuts Boltzmann") {
    AnnealSchedule s = uniform_schedule(1, 1.0, 1.0, 100);
    for (double k : {10.0, 100.0, 1000.0}) {
        double t_exp = temperature(s, k, 0);
        double t_cauchy = 1.0 / k;
        double t_boltzmann = 1.0 / std::log(k);
        CHECK(t_exp <= t_cauchy);
        CHECK(t_cauchy <= t_boltzmann);
    }
}

TEST_CASE("generating deviate") {
    SUBCASE("u = 1/2 gives a zero move") { CHECK(generating_deviate(0.5, 1.0) == 0.0); }
    SUBCASE("the move shrinks to zero as T -> 0 for fixed u") {
        // The map behaves as T^(1-w) with w = |2u-1|: slow but monotone at
        // u = 0.9 (w = 0.8), fast for near-median draws.
        double prev = 1.0;
        for (double t : {1e-2, 1e-4, 1e-6, 1e-8, 1e-12}) {
            double y = std::abs(generating_deviate(0.9, t));
            CHECK(y < prev);
            prev = y;
        }
        CHECK(std::abs(generating_deviate(0.9, 1e-6)) ==
              doctest::Approx(std::pow(1e-6, 0.2)).epsilon(1e-3));
        CHECK(std::abs(generating_deviate(0.55, 1e-6)) < 1e-5);
    }
    SUBCASE("bounded by 1 in scaled units") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 10000; ++i) CHECK(std::abs(generating_deviate(u(rng), 1.0)) <= 1.0);
    }
    SUBCASE("symmetric about zero at T = 1") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int n = 100000;
        double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
        for (int i = 0; i < n; ++i) {
            double y = generating_deviate(u(rng), 1.0);
            sum += y;
            sum2 += y * y;
            sum3 += y * y * y;
        }
        double mean = sum / n;
        double var = sum2 / n - mean * mean;
        double skew = (sum3 / n - 3.0 * mean * var - mean * mean * mean) / std::pow(var, 1.5);
        CHECK(std::abs(skew) < 0.05);
    }
}

TEST_CASE("candidates always satisfy the bounds") {
    AnnealSchedule s = uniform_schedule(3, 1.0, 1.0, 100);
    Bounds b;
    b.lo = {-1.0, 0.0, 10.0};
    b.hi = {1.0, 0.1, 30.0};
    AnnealState state;
    state.k = {0.0, 5.0, 50.0};
    state.current.point = {0.9, 0.01, 29.0};
    std::mt19937_64 rng(17);
    for (int i = 0; i < 5000; ++i) {
        std::vector<double> c = generate_candidate(state, s, b, rng);
        for (int j = 0; j < 3; ++j) {
            CHECK(c[j] >= b.lo[j]);
            CHECK(c[j] <= b.hi[j]);
        }
    }
}

TEST_CASE("acceptance rule") {
    std::mt19937_64 rng(23);
    SUBCASE("downhill always accepted") {
        for (int i = 0; i < 100; ++i) CHECK(accept(1.0, 0.5, 1e-300, rng));
    }
    SUBCASE("uphill by one temperature accepted at rate 1/e") {
        const int n = 100000;
        int accepted = 0;
        for (int i = 0; i < n; ++i)
            if (accept(0.0, 0.7, 0.7, rng)) ++accepted;
        double rate = static_cast<double>(accepted) / n;
        CHECK(rate == doctest::Approx(std::exp(-1.0)).epsilon(0.03));
        CHECK(std::abs(rate - std::exp(-1.0)) < 0.01);
    }
    SUBCASE("frozen chain rejects uphill moves") {
        int accepted = 0;
        for (int i = 0; i < 100000; ++i)
            if (accept(0.0, 0.1, 1e-12, rng)) ++accepted;
        CHECK(accepted == 0);
    }
}

TEST_CASE("reannealing") {
    AnnealSchedule s = uniform_schedule(2, 1.0, 1.0, 100);
    AnnealState state;
    state.k = {100.0, 100.0};

    SUBCASE("equal sensitivities leave k unchanged") {
        reanneal(state, s, {2.5, 2.5});
        CHECK(state.k[0] == doctest::Approx(100.0).epsilon(1e-12));
        CHECK(state.k[1] == doctest::Approx(100.0).epsilon(1e-12));
    }
    SUBCASE("a 10x less sensitive parameter runs hotter") {
        reanneal(state, s, {1.0, 0.1});
        CHECK(state.k[0] == doctest::Approx(100.0).epsilon(1e-12));
        CHECK(state.k[1] < state.k[0]);
    }
    SUBCASE("idempotent for fixed sensitivities") {
        reanneal(state, s, {1.0, 0.1});
        std::vector<double> once = state.k;
        reanneal(state, s, {1.0, 0.1});
        CHECK(state.k[0] == doctest::Approx(once[0]).epsilon(1e-12));
        CHECK(state.k[1] == doctest::Approx(once[1]).epsilon(1e-12));
    }
    SUBCASE("all-zero sensitivities are a no-op") {
        reanneal(state, s, {0.0, 0.0});
        CHECK(state.k[0] == 100.0);
        CHECK(state.k[1] == 100.0);
    }
}

TEST_CASE("optimize") {
    SUBCASE("1-D quadratic") {
        AnnealSchedule s = uniform_schedule(1, 1.0, 1.0, 10000);
        AsaResult r = optimize(quadratic, interval(1, -1.0, 1.0), s, 99);
        CHECK(std::abs(r.best[0] - 0.3) < 1e-2);
    }
    SUBCASE("4-D cosine bowl finds the global minimum") {
        AnnealSchedule s = uniform_schedule(4, 1.0, 1.0, 100000, 5000);
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            AsaResult r = optimize(cosine_bowl, interval(4, -5.12, 5.12), s, seed);
            CHECK(r.best_cost < 1e-3);
        }
    }
    SUBCASE("constant cost returns the first evaluated point") {
        AnnealSchedule s = uniform_schedule(2, 1.0, 1.0, 500);
        AsaResult r = optimize([](const std::vector<double>&) { return 7.0; },
                               interval(2, -1.0, 1.0), s, 5);
        CHECK(r.best == std::vector<double>{0.0, 0.0});  // bounds midpoint
        CHECK(r.best_cost == 7.0);
    }
    SUBCASE("best cost is the running minimum of the trace") {
        AnnealSchedule s = uniform_schedule(1, 1.0, 1.0, 2000);
        AsaResult r = optimize(quadratic, interval(1, -1.0, 1.0), s, 7);
        double running = r.trace.front().cost;
        for (const TraceRecord& rec : r.trace) running = std::min(running, rec.cost);
        CHECK(r.best_cost <= running + 1e-15);
    }
    SUBCASE("deterministic per seed") {
        AnnealSchedule s = uniform_schedule(1, 1.0, 1.0, 3000);
        AsaResult a = optimize(quadratic, interval(1, -1.0, 1.0), s, 31);
        AsaResult b = optimize(quadratic, interval(1, -1.0, 1.0), s, 31);
        CHECK(a.best[0] == b.best[0]);
        CHECK(a.best_cost == b.best_cost);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].cost == b.trace[i].cost);
    }
}

TEST_CASE("sample") {
    AnnealSchedule s = uniform_schedule(1, 1.0, 1.0, 100000);
    SUBCASE("returns exactly n records") {
        SampleResult r = sample(quadratic, interval(1, -1.0, 1.0), s, 500, 11);
        CHECK(r.records.size() == 500);
        CHECK_FALSE(r.budget_exhausted);
    }
    SUBCASE("later samples concentrate at lower cost") {
        SampleResult r = sample(quadratic, interval(1, -1.0, 1.0), s, 1000, 13);
        REQUIRE(r.records.size() == 1000);
        double first = 0.0, last = 0.0;
        for (int i = 0; i < 100; ++i) {
            first += r.records[i].cost;
            last += r.records[900 + i].cost;
        }
        CHECK(last < first);
    }
    SUBCASE("fixed seed reproduces the identical stream") {
        SampleResult a = sample(quadratic, interval(1, -1.0, 1.0), s, 200, 17);
        SampleResult b = sample(quadratic, interval(1, -1.0, 1.0), s, 200, 17);
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            CHECK(a.records[i].point == b.records[i].point);
            CHECK(a.records[i].cost == b.records[i].cost);
            CHECK(a.records[i].temp == b.records[i].temp);
        }
    }
    SUBCASE("budget exhaustion is flagged, not thrown") {
        AnnealSchedule tiny = uniform_schedule(1, 1.0, 1.0, 50);
        SampleResult r = sample(quadratic, interval(1, -1.0, 1.0), tiny, 10000, 19);
        CHECK(r.budget_exhausted);
        CHECK(r.records.size() < 10000);
    }
}

TEST_CASE("configuration errors") {
    AnnealSchedule s = uniform_schedule(1, 1.0, 1.0, 100);
    SUBCASE("inverted bounds") {
        Bounds b;
        b.lo = {1.0};
        b.hi = {-1.0};
        CHECK_THROWS_AS(optimize(quadratic, b, s, 1), Error);
    }
    SUBCASE("nonpositive t0") {
        AnnealSchedule bad = s;
        bad.t0[0] = 0.0;
        CHECK_THROWS_AS(optimize(quadratic, interval(1, -1.0, 1.0), bad, 1), Error);
    }
    SUBCASE("trace csv has the documented columns") {
        AsaResult r = optimize(quadratic, interval(1, -1.0, 1.0), s, 3);
        std::string csv = trace_csv(r.trace);
        CHECK(csv.rfind("eval,k,T,cost,accepted\n", 0) == 0);
    }
}
