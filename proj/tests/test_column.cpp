#include <doctest.h>

#include <cmath>
#include <random>

#include "meso/column.hpp"
#include "meso/error.hpp"

using namespace meso;

namespace {

// Line-by-line transcription of the printed threshold/drift/diffusion forms,
// kept independent of the library implementation.
std::array<double, 2> oracle_threshold(const ColumnParams& p, double me, double mi) {
    double M[2] = {me, mi};
    double N[2] = {p.n_e, p.n_i};
    std::array<double, 2> F{};
    for (int G = 0; G < 2; ++G) {
        double num = p.v_thresh[G];
        double den = 0.0;
        for (int Gp = 0; Gp < 2; ++Gp) {
            double a = 0.5 * p.A[G][Gp] + p.B[G][Gp];
            num -= a * p.v[G][Gp] * N[Gp];
            num -= 0.5 * p.A[G][Gp] * p.v[G][Gp] * M[Gp];
            den += (p.v[G][Gp] * p.v[G][Gp] + p.phi[G][Gp] * p.phi[G][Gp]) *
                   (a * N[Gp] + 0.5 * p.A[G][Gp] * M[Gp]);
        }
        if (G == 0 && p.long_ranged) {
            const auto& lr = *p.long_ranged;
            double ad = 0.5 * lr.a_dagger + lr.b_dagger;
            num -= ad * lr.v_dagger * lr.n_dagger + 0.5 * lr.a_dagger * lr.v_dagger * lr.m_dagger;
            den += ad * lr.n_dagger + 0.5 * lr.a_dagger * lr.m_dagger;
        }
        F[G] = num / std::sqrt(M_PI * den);
    }
    return F;
}

std::array<double, 2> oracle_drift(const ColumnParams& p, double me, double mi) {
    auto F = oracle_threshold(p, me, mi);
    double M[2] = {me, mi};
    double N[2] = {p.n_e, p.n_i};
    std::array<double, 2> g{};
    for (int G = 0; G < 2; ++G) g[G] = -(M[G] + N[G] * std::tanh(F[G])) / p.tau;
    return g;
}

std::array<double, 2> oracle_diffusion(const ColumnParams& p, double me, double mi) {
    auto F = oracle_threshold(p, me, mi);
    double N[2] = {p.n_e, p.n_i};
    std::array<double, 2> gg{};
    for (int G = 0; G < 2; ++G) {
        double sech = 1.0 / std::cosh(F[G]);
        gg[G] = N[G] * sech * sech / p.tau;
    }
    return gg;
}

double oracle_lagrangian(const ColumnParams& p, double me, double mi, double rate_e,
                         double rate_i) {
    auto g = oracle_drift(p, me, mi);
    auto gg = oracle_diffusion(p, me, mi);
    double rate[2] = {rate_e, rate_i};
    double sum = 0.0;
    for (int G = 0; G < 2; ++G) sum += (rate[G] - g[G]) * (1.0 / gg[G]) * (rate[G] - g[G]);
    return sum / (2.0 * (p.n_e + p.n_i));
}

ColumnParams small_fixed_params() {
    ColumnParams p;
    p.n_e = 80.0;
    p.n_i = 30.0;
    p.tau = 1.0;
    for (int g = 0; g < 2; ++g) {
        p.v_thresh[g] = 0.1;
        for (int gp = 0; gp < 2; ++gp) {
            p.A[g][gp] = 0.01;
            p.B[g][gp] = 0.005;
            p.v[g][gp] = 0.1;
            p.phi[g][gp] = 0.03;
        }
    }
    return p;
}

ColumnParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ColumnParams p;
    p.n_e = 20.0 + 100.0 * u(rng);
    p.n_i = 10.0 + 50.0 * u(rng);
    p.tau = 0.5 + 1.5 * u(rng);
    for (int g = 0; g < 2; ++g) {
        p.v_thresh[g] = -0.2 + 0.4 * u(rng);
        for (int gp = 0; gp < 2; ++gp) {
            p.A[g][gp] = 0.001 + 0.02 * u(rng);
            p.B[g][gp] = 0.0005 + 0.01 * u(rng);
            p.v[g][gp] = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 0.15 * u(rng));
            p.phi[g][gp] = 0.01 + 0.04 * u(rng);
        }
    }
    return p;
}

FiringState random_state(const ColumnParams& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    return {p.n_e * u(rng), p.n_i * u(rng)};
}

double rel_diff(double a, double b) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("threshold factor matches the independent transcription on the fixed set") {
    ColumnParams p = small_fixed_params();
    FiringState s{10.0, 5.0};
    auto f = threshold_factor(s, p);
    auto ref = oracle_threshold(p, s.m_e, s.m_i);
    CHECK(rel_diff(f[kE], ref[0]) < 1e-12);
    CHECK(rel_diff(f[kI], ref[1]) < 1e-12);
    // Spot value worked out by hand: num = -0.0175, rad = pi * 0.0109 * 1.175.
    CHECK(f[kE] == doctest::Approx(-0.0175 / std::sqrt(M_PI * 0.0109 * 1.175)).epsilon(1e-12));
}

TEST_CASE("centered params give zero threshold and zero drift at the target") {
    ColumnParams p = center_background(small_fixed_params());
    auto f = threshold_factor({0.0, 0.0}, p);
    CHECK(std::abs(f[kE]) <= 1e-10);
    CHECK(std::abs(f[kI]) <= 1e-10);
    LocalDynamics dyn = local_dynamics({0.0, 0.0}, p);
    CHECK(dyn.drift[kE] == 0.0);
    CHECK(dyn.drift[kI] == 0.0);
}

TEST_CASE("zero long-ranged magnitudes reduce to the local form") {
    std::mt19937_64 rng(42);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        ColumnParams p = random_params(rng);
        FiringState s = random_state(p, rng);
        auto base = threshold_factor(s, p);
        ColumnParams with_long = p;
        with_long.long_ranged = LongRangedParams{};  // all magnitudes zero
        with_long.long_ranged->m_dagger = 17.0;      // must be inert when A† = 0
        auto extended = threshold_factor(s, with_long);
        for (int g = 0; g < 2; ++g) worst = std::max(worst, rel_diff(base[g], extended[g]));
    }
    CHECK(worst <= 1e-15);
}

TEST_CASE("long-ranged terms act on the excitatory threshold only") {
    ColumnParams p = small_fixed_params();
    ColumnParams with_long = p;
    with_long.long_ranged = LongRangedParams{800.0, 0.01, 0.005, 0.1, 12.0};
    FiringState s{10.0, 5.0};
    auto base = threshold_factor(s, p);
    auto extended = threshold_factor(s, with_long);
    CHECK(extended[kI] == base[kI]);
    CHECK(extended[kE] != base[kE]);
    auto ref = oracle_threshold(with_long, s.m_e, s.m_i);
    CHECK(rel_diff(extended[kE], ref[0]) < 1e-12);
}

TEST_CASE("local dynamics match the transcription on 1000 random draws") {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        ColumnParams p = random_params(rng);
        FiringState s = random_state(p, rng);
        LocalDynamics dyn = local_dynamics(s, p);
        auto drift_ref = oracle_drift(p, s.m_e, s.m_i);
        auto diff_ref = oracle_diffusion(p, s.m_e, s.m_i);
        for (int g = 0; g < 2; ++g) {
            worst = std::max(worst, rel_diff(dyn.drift[g], drift_ref[g]));
            worst = std::max(worst, rel_diff(dyn.diffusion[g], diff_ref[g]));
            CHECK(dyn.diffusion[g] > 0.0);
            CHECK(std::abs(dyn.metric[g] * dyn.diffusion[g] - 1.0) < 1e-12);
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("diffusion equals N/tau where the threshold vanishes") {
    ColumnParams p = center_background(small_fixed_params());
    LocalDynamics dyn = local_dynamics({0.0, 0.0}, p);
    CHECK(dyn.diffusion[kE] == doctest::Approx(p.n_e / p.tau).epsilon(1e-15));
    CHECK(dyn.diffusion[kI] == doctest::Approx(p.n_i / p.tau).epsilon(1e-15));
}

TEST_CASE("lagrangian") {
    ColumnParams p = small_fixed_params();
    FiringState s{10.0, 5.0};
    LocalDynamics dyn = local_dynamics(s, p);

    SUBCASE("vanishes when the rate equals the drift") {
        CHECK(lagrangian(s, dyn.drift, p) == 0.0);
    }
    SUBCASE("single-component perturbation gives the one-term quadratic") {
        double delta = 0.37;
        PerPop<double> rate = dyn.drift;
        rate[kE] += delta;
        double expected = delta * delta * dyn.metric[kE] / (2.0 * p.n_total());
        CHECK(lagrangian(s, rate, p) == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("matches the transcription on random draws") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            ColumnParams q = random_params(rng);
            FiringState x = random_state(q, rng);
            double re = u(rng), ri = u(rng);
            double got = lagrangian(x, {re, ri}, q);
            double ref = oracle_lagrangian(q, x.m_e, x.m_i, re, ri);
            worst = std::max(worst, rel_diff(got, ref));
        }
        CHECK(worst < 1e-12);
    }
    SUBCASE("nearest-neighbor potential subtracts when a gradient is supplied") {
        ColumnParams q = p;
        q.nn_coeff = {0.2, 0.1};
        PerPop<double> grad = {1.5, -0.5};
        double base = lagrangian(s, dyn.drift, q);
        double with_nn = lagrangian(s, dyn.drift, q, &grad);
        CHECK(with_nn == doctest::Approx(base - 0.2 * 2.25 - 0.1 * 0.25).epsilon(1e-14));
    }
}

TEST_CASE("short-time probability") {
    ColumnParams p = small_fixed_params();
    FiringState from{10.0, 5.0};
    LocalDynamics dyn = local_dynamics(from, p);

    SUBCASE("drift step yields the bare prefactor") {
        FiringState to{from.m_e + p.tau * dyn.drift[kE], from.m_i + p.tau * dyn.drift[kI]};
        double density = short_time_probability(from, to, p);
        double prefactor = std::sqrt(dyn.det_metric / (2.0 * M_PI * p.tau));
        CHECK(density == doctest::Approx(prefactor).epsilon(1e-12));
    }
    SUBCASE("strictly positive") {
        CHECK(short_time_probability(from, {40.0, -20.0}, p) > 0.0);
        CHECK(short_time_probability(from, {-70.0, 28.0}, p) > 0.0);
    }
    SUBCASE("mode over a fine grid sits at the drift step") {
        double te = from.m_e + p.tau * dyn.drift[kE];
        double ti = from.m_i + p.tau * dyn.drift[kI];
        double best = -1.0;
        int best_i = -1, best_j = -1;
        const int half = 40;
        const double cell = 0.05;
        for (int i = -half; i <= half; ++i) {
            for (int j = -half; j <= half; ++j) {
                double d = short_time_probability(from, {te + i * cell, ti + j * cell}, p);
                if (d > best) {
                    best = d;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        CHECK(std::abs(best_i) <= 1);
        CHECK(std::abs(best_j) <= 1);
    }
}

TEST_CASE("center_background") {
    SUBCASE("already-centered params come back unchanged") {
        ColumnParams centered = center_background(small_fixed_params());
        ColumnParams again = center_background(centered);
        for (int g = 0; g < 2; ++g)
            for (int gp = 0; gp < 2; ++gp) CHECK(again.B[g][gp] == centered.B[g][gp]);
    }
    SUBCASE("shift agrees with an independent bisection") {
        ColumnParams p = small_fixed_params();
        ColumnParams centered = center_background(p);
        for (int g = 0; g < 2; ++g) {
            // Bisection on F^G(0) as a function of a uniform row shift.
            auto f_of_shift = [&](double s) {
                ColumnParams probe = p;
                for (int gp = 0; gp < 2; ++gp) probe.B[g][gp] = p.B[g][gp] + s;
                return oracle_threshold(probe, 0.0, 0.0)[g];
            };
            double lo = -0.004, hi = 0.05;
            REQUIRE(f_of_shift(lo) * f_of_shift(hi) < 0.0);
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                if (f_of_shift(lo) * f_of_shift(mid) <= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            double bisected = 0.5 * (lo + hi);
            double applied = centered.B[g][0] - p.B[g][0];
            CHECK(applied == doctest::Approx(bisected).epsilon(1e-8));
        }
    }
    SUBCASE("keeps every other field and applies one shift per row") {
        ColumnParams p = small_fixed_params();
        ColumnParams c = center_background(p);
        CHECK(c.n_e == p.n_e);
        CHECK(c.tau == p.tau);
        for (int g = 0; g < 2; ++g) {
            CHECK(c.A[g][0] == p.A[g][0]);
            double shift0 = c.B[g][0] - p.B[g][0];
            double shift1 = c.B[g][1] - p.B[g][1];
            CHECK(shift0 == doctest::Approx(shift1).epsilon(1e-15));
        }
    }
    SUBCASE("reports infeasibility naming the population") {
        ColumnParams p = small_fixed_params();
        // A large negative threshold needs a big negative shift; B is too
        // small to absorb it.
        p.v_thresh[kE] = -10.0;
        CHECK_THROWS_WITH_AS(center_background(p), doctest::Contains("F^E"), Error);
    }
    SUBCASE("nonzero target") {
        ColumnParams p = small_fixed_params();
        FiringState target{12.0, -4.0};
        ColumnParams c = center_background(p, target);
        auto f = threshold_factor(target, c);
        CHECK(std::abs(f[kE]) <= 1e-10);
        CHECK(std::abs(f[kI]) <= 1e-10);
    }
}

TEST_CASE("invalid parameters are rejected") {
    ColumnParams p = small_fixed_params();
    SUBCASE("nonpositive phi") {
        p.phi[0][1] = 0.0;
        CHECK_THROWS_AS(p.validate(), Error);
    }
    SUBCASE("nonpositive radicand reported as a domain error") {
        // B = 0 and firing at the negative corner zeroes the radicand.
        for (int g = 0; g < 2; ++g)
            for (int gp = 0; gp < 2; ++gp) p.B[g][gp] = 0.0;
        CHECK_THROWS_AS(threshold_factor({-p.n_e, -p.n_i}, p), Error);
    }
}
