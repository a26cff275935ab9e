#pragma once
// Multiplier machinery for the divergence identity
//
//   Re[(f u_x~ + q u~) (-u_tt + u_xx - (lam+N)V u + i eps W u)]
//     = d/dt p_t + d/dx p_x
//       + c_t |u_t|^2 + c_x |u_x|^2 + (lam c_w + c_0) |u|^2
//       - eps f W Im(u_x~ u)
//
// (~ = conjugate, lam = ell(ell+1)) with fluxes
//
//   p_t = -Re[(f u_x~ + q u~) u_t]
//   p_x = f/2 (|u_t|^2 + |u_x|^2) - f/2 V lam |u|^2 + q Re(u~ u_x)
//         - 1/2 (N f V + q') |u|^2
//
// and bulk coefficients
//
//   c_t = -f'/2 + q
//   c_x = -(f'/2 + q)
//   c_w = (f'/2 - q) V + f V'/2
//   c_0 = N c_w + q''/2 .
//
// Two families are provided:
//   classical: f = -atan(x),          q = f'/2 + delta atan(x)^2/(1+x^2)
//   refined:   f = -atan(|tau|^a x),  |q| = 1/2 |tau|^a/(1+|tau|^{2a}x^2)
// The sign of the refined q is configurable; the default (negative, i.e.
// q = f'/2) is the choice that keeps the frequency-side bulk form
// nonnegative. All derivative fields are true closed-form derivatives of
// the stored f and q, cross-checked against finite differences in the test
// suite. The displayed curvature weight |tau|^{3a}(1-3s^2)/(1+s^2)^3 used by
// the frequency-side domination argument differs from q''/2 of the stored q
// by a factor of 2; it is exposed separately as refined_bulk_curvature.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wavetrap/model.hpp"
#include "wavetrap/numerics.hpp"

namespace wavetrap {

struct MultiplierError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MultiplierSet {
  enum class Kind { classical, refined };
  Kind kind = Kind::classical;
  double delta = 0.05;  // classical only
  double tau = 0.0;     // refined only: frequency the multiplier is tuned to
  double alpha = 0.4;   // refined only
  int q_sign = -1;      // refined only: sign of q; -1 means q = f'/2

  // -- f family -------------------------------------------------------------
  double f(double x) const {
    return kind == Kind::classical ? -std::atan(x) : -std::atan(k() * x);
  }
  double f1(double x) const {
    const double s = kx(x);
    return -k() / (1.0 + s * s);
  }
  double f2(double x) const {
    const double s = kx(x), d = 1.0 + s * s;
    return 2.0 * k() * k() * k() * x / (d * d);
  }
  double f3(double x) const {
    const double s = kx(x), d = 1.0 + s * s;
    const double k3 = k() * k() * k();
    return 2.0 * k3 * (1.0 - 3.0 * s * s) / (d * d * d);
  }

  // -- q family -------------------------------------------------------------
  double q(double x) const {
    if (kind == Kind::refined) {
      const double s = kx(x);
      return q_sign * 0.5 * k() / (1.0 + s * s);
    }
    const double u = potential_v(x), a = std::atan(x);
    return -0.5 * u + delta * a * a * u;
  }
  double q1(double x) const {
    if (kind == Kind::refined) {
      const double s = kx(x), d = 1.0 + s * s;
      return -q_sign * k() * k() * k() * x / (d * d);
    }
    const double u = potential_v(x), a = std::atan(x);
    return u * u * (x + 2.0 * delta * a - 2.0 * delta * x * a * a);
  }
  double q2(double x) const {
    if (kind == Kind::refined) {
      const double s = kx(x), d = 1.0 + s * s;
      const double k3 = k() * k() * k();
      return -q_sign * k3 * (1.0 - 3.0 * s * s) / (d * d * d);
    }
    const double u = potential_v(x), a = std::atan(x);
    return u * u * (1.0 + 2.0 * delta * u - 2.0 * delta * a * a - 4.0 * delta * x * a * u) -
           4.0 * x * u * u * u * (x + 2.0 * delta * a - 2.0 * delta * x * a * a);
  }

 private:
  double k() const { return kind == Kind::classical ? 1.0 : std::pow(std::abs(tau), alpha); }
  double kx(double x) const { return k() * x; }
};

inline MultiplierSet classical_multiplier(double delta) {
  if (!(delta >= 0.0 && delta * (M_PI * M_PI / 4.0) < 1.0))
    throw MultiplierError("classical multiplier needs 0 <= delta < 4/pi^2");
  MultiplierSet m;
  m.kind = MultiplierSet::Kind::classical;
  m.delta = delta;
  return m;
}

inline MultiplierSet refined_multiplier(double tau, double alpha, int q_sign = -1) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw MultiplierError("refined multiplier needs alpha in (0,1)");
  if (q_sign != 1 && q_sign != -1) throw MultiplierError("refined q sign must be +1 or -1");
  MultiplierSet m;
  m.kind = MultiplierSet::Kind::refined;
  m.tau = tau;
  m.alpha = alpha;
  m.q_sign = q_sign;
  return m;
}

// The curvature weight as it enters the frequency-side bulk bound:
// |tau|^{3a} (1 - 3 s^2) / (1 + s^2)^3 with s = |tau|^a x.
inline double refined_bulk_curvature(double tau, double alpha, double x) {
  const double k = std::pow(std::abs(tau), alpha);
  const double s = k * x, d = 1.0 + s * s;
  return k * k * k * (1.0 - 3.0 * s * s) / (d * d * d);
}

// ---------------------------------------------------------------------------
// Bulk coefficients of the identity at a point, valid for either family.
// For the classical multiplier these reduce to
//   c_t = delta atan^2/(1+x^2)
//   c_x = (1 - delta atan^2)/(1+x^2)
//   c_w = (x atan - delta atan^2)/(1+x^2)^2
//   c_0 = N c_w + q''/2 ,
// which the tests verify against this generic assembly.
// ---------------------------------------------------------------------------

struct BulkCoefficients {
  double c_t = 0.0, c_x = 0.0, c_omega = 0.0, c_0 = 0.0;
};

inline BulkCoefficients bulk_coefficients(const MultiplierSet& m, const ModelParams& p, double x) {
  BulkCoefficients c;
  const double f1 = m.f1(x), q = m.q(x);
  c.c_t = -0.5 * f1 + q;
  c.c_x = -(0.5 * f1 + q);
  c.c_omega = (0.5 * f1 - q) * potential_v(x) + 0.5 * m.f(x) * potential_v_d1(x);
  c.c_0 = p.big_n * c.c_omega + 0.5 * m.q2(x);
  return c;
}

// ---------------------------------------------------------------------------
// Positivity of the classical bulk form. Checks, over a uniform x grid:
//   * c_x, c_w, c_0 >= 0 pointwise,
//   * the 2x2 form [c_x, -eps f W/2; -eps f W/2, c_0] is PSD, i.e. the
//     W cross term is dominated: 4 c_x c_0 >= (eps f W)^2,
// and reports margins for a list of epsilons (the PSD margin must be
// nonincreasing in eps).
// ---------------------------------------------------------------------------

struct PositivityReport {
  double min_c_x = 0.0, min_c_omega = 0.0, min_c_0 = 0.0;
  std::vector<double> eps_values;
  std::vector<double> psd_margins;  // min over grid of 4 c_x c_0 - (eps f W)^2
  bool pointwise_nonnegative = false;
  bool psd_all = false;
  bool monotone_in_eps = false;
  bool pass() const { return pointwise_nonnegative && psd_all && monotone_in_eps; }
};

inline PositivityReport bulk_positivity_check(const ModelParams& params,
                                              const PotentialProfile& profile,
                                              const std::vector<double>& eps_list,
                                              double x_max, int n_points) {
  if (n_points < 2) throw MultiplierError("positivity check needs at least 2 grid points");
  const MultiplierSet m = classical_multiplier(params.delta);
  PositivityReport r;
  r.eps_values = eps_list;
  r.min_c_x = r.min_c_omega = r.min_c_0 = std::numeric_limits<double>::infinity();
  r.psd_margins.assign(eps_list.size(), std::numeric_limits<double>::infinity());
  for (int i = 0; i < n_points; ++i) {
    const double x = -x_max + 2.0 * x_max * i / (n_points - 1);
    const BulkCoefficients c = bulk_coefficients(m, params, x);
    r.min_c_x = std::min(r.min_c_x, c.c_x);
    r.min_c_omega = std::min(r.min_c_omega, c.c_omega);
    r.min_c_0 = std::min(r.min_c_0, c.c_0);
    const double fw = m.f(x) * potential_w(profile, x);
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      const double cross = eps_list[e] * fw;
      r.psd_margins[e] = std::min(r.psd_margins[e], 4.0 * c.c_x * c.c_0 - cross * cross);
    }
  }
  r.pointwise_nonnegative = r.min_c_x >= 0.0 && r.min_c_omega >= 0.0 && r.min_c_0 >= 0.0;
  r.psd_all = true;
  for (double mgn : r.psd_margins) r.psd_all = r.psd_all && mgn >= 0.0;
  // margins must not improve when eps grows
  r.monotone_in_eps = true;
  for (std::size_t e = 0; e + 1 < eps_list.size(); ++e) {
    if (eps_list[e] <= eps_list[e + 1]) {
      if (r.psd_margins[e] < r.psd_margins[e + 1] - 1e-15) r.monotone_in_eps = false;
    } else if (r.psd_margins[e] > r.psd_margins[e + 1] + 1e-15) {
      r.monotone_in_eps = false;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// g(s) = (1 - 3 s^2)/(1 + s^2)^3 + M s^2, the radial profile behind the
// frequency-side weight domination: for M >= 6 it is minimized at s = 0 with
// value 1; for M = 0 the minimum is -1/4 at s = 1.
// ---------------------------------------------------------------------------

struct LemmaScanResult {
  double min_value = 0.0;
  double argmin = 0.0;
};

inline double lemma_weight_profile(double m_const, double s) {
  const double d = 1.0 + s * s;
  return (1.0 - 3.0 * s * s) / (d * d * d) + m_const * s * s;
}

inline LemmaScanResult lemma_min_scan(double m_const, double s_max, long n_samples) {
  if (n_samples < 2) throw MultiplierError("lemma scan needs at least 2 samples");
  if (!(s_max > 0.0)) throw MultiplierError("lemma scan needs s_max > 0");
  LemmaScanResult r;
  r.min_value = std::numeric_limits<double>::infinity();
  for (long i = 0; i < n_samples; ++i) {
    const double s = s_max * double(i) / double(n_samples - 1);
    const double g = lemma_weight_profile(m_const, s);
    if (g < r.min_value) {
      r.min_value = g;
      r.argmin = s;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Exponent bookkeeping: the frequency weight |tau|^{2-2a} coming from
// M tau^2 x^2 and the curvature weight |tau|^{3a} balance exactly when
// 2 - 2a = 3a, i.e. a = 2/5.
// ---------------------------------------------------------------------------

struct AlphaBalance {
  double alpha;
  double growth_exponent;     // 2 - 2 alpha
  double curvature_exponent;  // 3 alpha
  bool balanced;
};

inline AlphaBalance alpha_balance(double alpha) {
  AlphaBalance b{alpha, 2.0 - 2.0 * alpha, 3.0 * alpha, false};
  b.balanced = std::abs(b.growth_exponent - b.curvature_exponent) <= 1e-12;
  return b;
}

inline constexpr double kBalancedAlpha = 0.4;  // the unique solution of 2-2a = 3a

}  // namespace wavetrap
