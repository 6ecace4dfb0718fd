#pragma once

#include <cstddef>
#include <vector>

namespace bursty {

// Supported orders. Zeros need nu >= -1/2 so that every j_{nu,k} > 1.
inline constexpr double kMinBesselOrder = -1.0;
inline constexpr double kMaxBesselOrder = 50.0;
inline constexpr double kMinZeroOrder = -0.5;

// Bessel function of the first kind J_nu(x) for real order nu in (-1, 50]
// and x >= 0 (x > 0 when nu < 0).
//
// Power series in extended precision below max(12, 2 nu); above it the
// Hankel asymptotic expansion when it converges to full precision, and the
// Schlaefli integral representation otherwise.
double bessel_j(double nu, double x);

// First k_terms positive zeros of J_nu in increasing order, for nu in
// [-1/2, 50]. Results are memoized per order; the cache is safe to use from
// several threads.
std::vector<double> bessel_zeros(double nu, std::size_t k_terms);

// First zero j_{nu,1}.
double bessel_first_zero(double nu);

}  // namespace bursty
