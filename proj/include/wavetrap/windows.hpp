#pragma once
// C^2 cutoff machinery: smooth characteristic functions built from quintic
// smoothstep ramps of unit length. smooth_characteristic(a, b) equals 1 on
// [a, b], vanishes outside [a-1, b+1], and is monotone on each ramp.
//
// A run over [0, T] uses three cutoffs:
//   chi1 = smooth characteristic of [0, T]        (time window)
//   chi2 = smooth characteristic of [-1,0] u [T,T+1]  (covers chi1's ramps)
//   chix = smooth characteristic of [-1, 1]       (space window)
// chi2 is identically 1 wherever chi1 has nonzero derivatives, which gives
// the pointwise domination |chi1'| + |chi1''| <= C chi2 with a constant
// depending only on the ramp polynomial.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wavetrap/numerics.hpp"

namespace wavetrap {

struct WindowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SmoothCharacteristic {
  double a = 0.0, b = 1.0;  // the plateau; support is [a-1, b+1]

  double value(double t) const {
    if (t <= a - 1.0 || t >= b + 1.0) return 0.0;
    if (t < a) return smoothstep(t - (a - 1.0));
    if (t > b) return smoothstep(b + 1.0 - t);
    return 1.0;
  }
  double d1(double t) const {
    if (t < a && t > a - 1.0) return smoothstep_d1(t - (a - 1.0));
    if (t > b && t < b + 1.0) return -smoothstep_d1(b + 1.0 - t);
    return 0.0;
  }
  double d2(double t) const {
    if (t < a && t > a - 1.0) return smoothstep_d2(t - (a - 1.0));
    if (t > b && t < b + 1.0) return smoothstep_d2(b + 1.0 - t);
    return 0.0;
  }
};

inline SmoothCharacteristic smooth_characteristic(double a, double b) {
  if (!(b >= a)) throw WindowError("smooth_characteristic needs b >= a");
  return SmoothCharacteristic{a, b};
}

// Union of two plateaus whose 1-enlargements must not overlap; the union is
// then just the sum of the two pieces.
struct SmoothCharacteristicPair {
  SmoothCharacteristic left, right;

  double value(double t) const { return left.value(t) + right.value(t); }
  double d1(double t) const { return left.d1(t) + right.d1(t); }
  double d2(double t) const { return left.d2(t) + right.d2(t); }
};

// sup over a ramp of |s'| + |s''|; chi2 == 1 there, so this is exactly the
// best constant in |chi1'| + |chi1''| <= C chi2. Value frozen from a
// high-precision maximization of 30 r^2(1-r)^2 + |60 r (1-2r)(1-r)|.
inline constexpr double kRampDominationConstant = 6.6889746734112196;

struct WindowSet {
  double t_horizon = 50.0;
  SmoothCharacteristic chi1;       // [0, T]
  SmoothCharacteristicPair chi2;   // [-1, 0] u [T, T+1]
  SmoothCharacteristic chix;       // [-1, 1] in x

  double domination_constant() const { return kRampDominationConstant; }
};

inline WindowSet make_window_set(double t_horizon) {
  if (!(t_horizon > 2.0))
    throw WindowError("window set needs t_horizon > 2 so the chi2 plateaus stay separated");
  WindowSet w;
  w.t_horizon = t_horizon;
  w.chi1 = smooth_characteristic(0.0, t_horizon);
  w.chi2 = SmoothCharacteristicPair{smooth_characteristic(-1.0, 0.0),
                                    smooth_characteristic(t_horizon, t_horizon + 1.0)};
  w.chix = smooth_characteristic(-1.0, 1.0);
  return w;
}

// Dense scan of the domination inequality over [-2, T+2]. Returns the
// largest observed (|chi1'| + |chi1''|) / chi2; infinite if the inequality
// fails structurally (derivative where chi2 == 0).
struct DominationScan {
  double sup_ratio = 0.0;
  bool holds = true;
};

inline DominationScan domination_scan(const WindowSet& w, int n_samples) {
  if (n_samples < 2) throw WindowError("domination scan needs at least 2 samples");
  DominationScan r;
  const double lo = -2.0, hi = w.t_horizon + 2.0;
  for (int i = 0; i < n_samples; ++i) {
    const double t = lo + (hi - lo) * i / (n_samples - 1);
    const double num = std::abs(w.chi1.d1(t)) + std::abs(w.chi1.d2(t));
    if (num == 0.0) continue;
    const double den = w.chi2.value(t);
    if (den <= 0.0) {
      r.holds = false;
      r.sup_ratio = std::numeric_limits<double>::infinity();
      return r;
    }
    r.sup_ratio = std::max(r.sup_ratio, num / den);
  }
  r.holds = r.sup_ratio <= kRampDominationConstant * (1.0 + 1e-12);
  return r;
}

}  // namespace wavetrap
