#include "meso/special.hpp"

#include <cmath>
#include <limits>

namespace meso {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// Newton refinement of erf(x) = y.  Well-conditioned for |y| away from 1.
double polish_erf(double x, double y) {
    for (int i = 0; i < 6; ++i) {
        double f = std::erf(x) - y;
        double step = f * (kSqrtPi / 2.0) * std::exp(x * x);
        x -= step;
        if (std::abs(step) <= 1e-17 * (1.0 + std::abs(x))) break;
    }
    return x;
}

// Newton refinement of erfc(x) = q in the upper tail (small q, x > 1).
double polish_erfc(double x, double q) {
    for (int i = 0; i < 6; ++i) {
        double f = std::erfc(x) - q;
        double step = f * (kSqrtPi / 2.0) * std::exp(x * x);
        x += step;
        if (std::abs(step) <= 1e-17 * (1.0 + std::abs(x))) break;
    }
    return x;
}

}  // namespace

double erf_inv(double y) {
    if (y == 0.0) return y;  // preserves signed zero
    if (std::abs(y) >= 1.0) {
        return y > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    }
    if (std::abs(y) > 0.98) {
        double x = erfc_inv(1.0 - std::abs(y));
        return y > 0 ? x : -x;
    }
    // Winitzki's approximation as the starting point.
    constexpr double a = 0.147;
    double l = std::log1p(-y * y);
    double t = 2.0 / (M_PI * a) + 0.5 * l;
    double x0 = std::sqrt(std::sqrt(t * t - l / a) - t);
    double x = polish_erf(std::copysign(x0, y), y);
    return x;
}

double erfc_inv(double q) {
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    if (q >= 2.0) return -std::numeric_limits<double>::infinity();
    if (q > 1.0) return -erfc_inv(2.0 - q);
    if (q > 0.02) return erf_inv(1.0 - q);
    // Tail: invert the asymptotic erfc(x) ~ exp(-x^2) / (x sqrt(pi)).
    double big = -std::log(q * kSqrtPi);
    double x = std::sqrt(big > 1.0 ? big : 1.0);
    for (int i = 0; i < 2; ++i) x = std::sqrt(big - std::log(x));
    return polish_erfc(x, q);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

}  // namespace meso
