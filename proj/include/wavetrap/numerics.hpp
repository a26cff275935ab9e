#pragma once
// Low-level numerical kernels shared by the whole library: deterministic
// summation, composite quadrature, centered difference stencils and the
// quintic smoothstep used by the time/space cutoffs.
//
// Every reported integral goes through pairwise_sum so that a given config
// produces bit-identical output regardless of how the work is scheduled.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wavetrap {

using cplx = std::complex<double>;

struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic reduction: ascending-index pairwise tree, leaf width 8.
// ---------------------------------------------------------------------------

template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, F&& term) {
  if (hi <= lo) return 0.0;
  const std::size_t n = hi - lo;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(std::size_t{0}, v.size(), [&](std::size_t i) { return v[i]; });
}

// ---------------------------------------------------------------------------
// Composite quadrature on uniform grids.
// ---------------------------------------------------------------------------

// Trapezoid over n samples with spacing dx. Used for spatial integrals,
// whose integrands decay smoothly to zero well inside the domain ends and
// therefore see no O(dx^2) boundary term.
template <class F>
double trapezoid(std::size_t n, double dx, F&& f) {
  if (n < 2) return 0.0;
  const double s = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    return w * f(i);
  });
  return s * dx;
}

// Composite Simpson over n samples (n-1 intervals). Time integrals over a
// slab have non-vanishing endpoint derivatives, so trapezoid would cap the
// accuracy of residual-style diagnostics at second order; Simpson keeps the
// whole pipeline fourth order. An odd interval count is handled by a 3/8
// block on the last three intervals.
template <class F>
double simpson(std::size_t n, double dx, F&& f) {
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * dx * (f(0) + f(1));
  if (n == 3) return dx / 3.0 * (f(0) + 4.0 * f(1) + f(2));
  const std::size_t intervals = n - 1;
  // j_cut: index where the plain Simpson body ends (even number of intervals
  // before it); the remainder, if any, is a 3/8 tail.
  const std::size_t j_cut = (intervals % 2 == 0) ? n - 1 : n - 4;
  if (j_cut < 2) {  // n == 4: single 3/8 block
    return 3.0 * dx / 8.0 * (f(0) + 3.0 * f(1) + 3.0 * f(2) + f(3));
  }
  const double body = pairwise_sum(std::size_t{0}, j_cut + 1, [&](std::size_t i) {
    double w;
    if (i == 0 || i == j_cut) w = 1.0;
    else if (i % 2 == 1) w = 4.0;
    else w = 2.0;
    return w / 3.0 * f(i);
  });
  double tail = 0.0;
  if (j_cut != n - 1) {
    tail = 3.0 / 8.0 * (f(j_cut) + 3.0 * f(j_cut + 1) + 3.0 * f(j_cut + 2) + f(j_cut + 3));
  }
  return (body + tail) * dx;
}

// ---------------------------------------------------------------------------
// Centered finite differences on uniform grids. Callers guarantee the
// stencil fits; these are diagnostics helpers, not the evolution kernel.
// ---------------------------------------------------------------------------

// 4th-order first derivative, 5-point.
template <class Vec>
auto d1_c4(const Vec& a, std::size_t i, double inv_h) {
  return (a[i - 2] - 8.0 * a[i - 1] + 8.0 * a[i + 1] - a[i + 2]) * (inv_h / 12.0);
}

// 6th-order first derivative, 7-point.
template <class Vec>
auto d1_c6(const Vec& a, std::size_t i, double inv_h) {
  return (-a[i - 3] + 9.0 * a[i - 2] - 45.0 * a[i - 1] + 45.0 * a[i + 1] -
          9.0 * a[i + 2] + a[i + 3]) *
         (inv_h / 60.0);
}

// 4th-order second derivative, 5-point.
template <class Vec>
auto d2_c4(const Vec& a, std::size_t i, double inv_h2) {
  return (-a[i - 2] + 16.0 * a[i - 1] - 30.0 * a[i] + 16.0 * a[i + 1] - a[i + 2]) *
         (inv_h2 / 12.0);
}

// ---------------------------------------------------------------------------
// Quintic smoothstep s(r) = r^3 (10 - 15 r + 6 r^2) on [0,1]; C^2 when glued
// to the constants 0 and 1 (s' and s'' vanish at both ends).
// ---------------------------------------------------------------------------

inline double smoothstep(double r) {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return 1.0;
  return r * r * r * (10.0 + r * (-15.0 + 6.0 * r));
}

inline double smoothstep_d1(double r) {
  if (r <= 0.0 || r >= 1.0) return 0.0;
  const double omr = 1.0 - r;
  return 30.0 * r * r * omr * omr;
}

inline double smoothstep_d2(double r) {
  if (r <= 0.0 || r >= 1.0) return 0.0;
  return 60.0 * r * (1.0 - 2.0 * r) * (1.0 - r);
}

// ---------------------------------------------------------------------------
// Refinement-slope helper: observed order between two errors at h and h/2.
// Returns NaN when either error is zero (order undefined, e.g. zero data).
// ---------------------------------------------------------------------------

inline double observed_order(double err_coarse, double err_fine) {
  if (err_coarse <= 0.0 || err_fine <= 0.0) return std::nan("");
  return std::log2(err_coarse / err_fine);
}

}  // namespace wavetrap
