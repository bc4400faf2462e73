#ifndef MESO_SPECIAL_HPP
#define MESO_SPECIAL_HPP

namespace meso {

// Inverse error functions, accurate to a few ulp over the full double range.
// Strategy: closed-form initial guess, then Newton iterations against
// std::erf / std::erfc.  The tail branch of erfc_inv works entirely in
// complementary space so that arguments like 1e-12 keep full relative
// precision (the round-trip contract of the copula transform depends on it).

// Solves erf(x) = y for |y| < 1.
double erf_inv(double y);

// Solves erfc(x) = q for 0 < q < 2.
double erfc_inv(double q);

// Standard normal CDF.
double norm_cdf(double x);

}  // namespace meso

#endif
