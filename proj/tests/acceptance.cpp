// Acceptance gate for the laboratory. Twelve end-to-end criteria cover the
// full chain: exact conservation at eps = 0, the energy-balance identity
// under refinement, the exponential bound, horizon uniformity of the energy
// and of the three bulk constants, the Parseval identity behind the
// frequency-weighted bulk, the two exact model constants (alpha = 2/5,
// M = 700), the divergence identities on solver output, bulk-coefficient
// positivity, the indefiniteness of the conserved charge, and the cutoff
// domination bound.
//
// Each criterion prints exactly one [PASS]/[FAIL] line with the measured
// numbers and the limit it was held to; progress goes to stderr. The
// process exits 0 only if all twelve criteria hold. Thresholds are pinned
// here on purpose: a regression anywhere in the chain flips a line to FAIL
// rather than silently shifting a constant.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <limits>
#include <string>
#include <vector>

#include <wavetrap/config.hpp>
#include <wavetrap/multipliers.hpp>
#include <wavetrap/scenario.hpp>
#include <wavetrap/sweep.hpp>
#include <wavetrap/windows.hpp>

using namespace wavetrap;

namespace {

struct Line {
  int number = 0;
  bool pass = false;
  std::string text;
};

std::vector<Line> g_lines;

std::string fmt(const char* f, ...) {
  char buf[768];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void verdict(int number, bool pass, std::string text) {
  g_lines.push_back({number, pass, std::move(text)});
}

double check_value(const SummaryReport& r, const char* check, const char* key) {
  const CheckResult* c = r.find(check);
  if (!c) throw std::runtime_error(fmt("report has no check named '%s'", check));
  return c->values.at(key);
}

bool check_pass(const SummaryReport& r, const char* check) {
  const CheckResult* c = r.find(check);
  return c != nullptr && c->pass;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto secs_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  const std::string dir = std::string(WAVETRAP_SOURCE_DIR) + "/scenarios/";

  // ------------------------------------------------------------------
  // Criterion 8: the two exact model constants. 2 - 2a = 3a forces
  // a = 2/5, and the refined-weight profile (1 - 3s^2)/(1+s^2)^3 + M s^2
  // has minimum 1 at s = 0 once M = 700, against -1/4 at s = 1 for M = 0.
  // ------------------------------------------------------------------
  {
    const auto t0 = clock::now();
    const AlphaBalance ab = alpha_balance(0.4);
    const LemmaScanResult big = lemma_min_scan(700.0, 10.0, 1000001);
    const LemmaScanResult ctl = lemma_min_scan(0.0, 10.0, 1000001);
    const double dt = secs_since(t0);
    const bool pass = ab.balanced && std::abs(ab.growth_exponent - 1.2) <= 1e-12 &&
                      std::abs(ab.curvature_exponent - 1.2) <= 1e-12 &&
                      std::abs(big.min_value - 1.0) <= 1e-6 && std::abs(big.argmin) <= 1e-5 &&
                      std::abs(ctl.min_value + 0.25) <= 1e-4 &&
                      std::abs(ctl.argmin - 1.0) <= 1e-3 && dt <= 5.0;
    verdict(8, pass,
            fmt("alpha = 2/5 balances the exponents (both %.12g); weight-profile minimum "
                "%.9f at s = %.1e for M = 700 and %.6f at s = %.5f for M = 0; %.2f s <= 5 s",
                ab.growth_exponent, big.min_value, big.argmin, ctl.min_value, ctl.argmin, dt));
  }

  // ------------------------------------------------------------------
  // Criterion 10: bulk-coefficient positivity of the classical multiplier
  // with N = 20, delta = 0.05, and PSD margins monotone in eps.
  // ------------------------------------------------------------------
  {
    ModelParams params;  // N = 20, delta = 0.05 defaults
    PotentialProfile profile;
    profile.width = 2.0;  // the shipped interaction profile
    const std::vector<double> eps_list = {1e-3, 1e-2, std::pow(10.0, -1.5)};
    const PositivityReport pr = bulk_positivity_check(params, profile, eps_list, 100.0, 100001);
    double psd_min = std::numeric_limits<double>::infinity();
    for (double m : pr.psd_margins) psd_min = std::min(psd_min, m);
    verdict(10, pr.pass(),
            fmt("bulk coefficients on 100001 points: min c_x %.3g, c_omega %.3g, c_0 %.3g "
                ">= 0; PSD margin %.3g >= 0; monotone over eps {1e-3, 1e-2, 10^-1.5}: %s",
                pr.min_c_x, pr.min_c_omega, pr.min_c_0, psd_min,
                pr.monotone_in_eps ? "yes" : "no"));
  }

  // ------------------------------------------------------------------
  // Criterion 12: |chi1'| + |chi1''| <= C chi2 pointwise on a dense time
  // grid, with the smoothstep constant C reported and pinned.
  // ------------------------------------------------------------------
  {
    const DominationScan ds = domination_scan(make_window_set(50.0), 10001);
    const bool pass = ds.holds && ds.sup_ratio <= kRampDominationConstant * (1.0 + 1e-9);
    verdict(12, pass,
            fmt("|chi1'| + |chi1''| <= C chi2 on 10001 samples: C = %.10f (pinned %.10f)",
                ds.sup_ratio, kRampDominationConstant));
  }

  // ------------------------------------------------------------------
  // Criteria 1 and 11: the eps = 0 baseline. Energy and charge are exact
  // invariants; the purely imaginary data make the charge negative while
  // the energy stays positive.
  // ------------------------------------------------------------------
  SummaryReport r_cons;
  bool ok_cons = false;
  try {
    std::fprintf(stderr, "acceptance: running the conservation baseline (3 modes, T = 50)...\n");
    r_cons = run_scenario(load_config(dir + "conservation_baseline.cfg"), false);
    ok_cons = true;
  } catch (const std::exception& e) {
    verdict(1, false, fmt("conservation baseline failed to run: %s", e.what()));
    verdict(11, false, fmt("conservation baseline failed to run: %s", e.what()));
  }
  if (ok_cons) {
    const double drift = check_value(r_cons, "energy_drift", "max_relative_drift");
    const double total = r_cons.runtimes_s.at("total");
    const int n = (int)r_cons.constants.at("grid_n");
    verdict(1, check_pass(r_cons, "energy_drift") && total <= 30.0,
            fmt("eps = 0, modes {0,1,2}, T = 50: relative energy drift %.3g <= 1e-6 on the "
                "n = %d reference grid; %.1f s <= 30 s", drift, n, total));

    const double q0 = check_value(r_cons, "noether_indefinite", "q_initial");
    const double e0 = check_value(r_cons, "noether_indefinite", "e_initial");
    const double qdrift = check_value(r_cons, "noether_conservation", "max_relative_drift");
    verdict(11,
            check_pass(r_cons, "noether_indefinite") && check_pass(r_cons, "noether_conservation"),
            fmt("imaginary gaussian data: conserved charge %.4g < 0 < energy %.4g; "
                "charge drift %.3g <= 1e-6 at eps = 0", q0, e0, qdrift));
  }

  // ------------------------------------------------------------------
  // Criteria 2 and 9: dyadic refinement of the explicit-grid study. The
  // balance residual is pure quadrature error and the divergence-identity
  // residuals are pure stencil error, so both converge at order ~4; the
  // gate is >= 2.8 over three halvings.
  // ------------------------------------------------------------------
  try {
    std::fprintf(stderr, "acceptance: running the 4-level refinement study...\n");
    const ConvergeResult cv = run_converge(load_config(dir + "convergence.cfg"), 4);
    verdict(2, cv.balance_slope >= 2.8,
            fmt("energy-balance residual order %.2f >= 2.8 over 3 halvings "
                "(residual %.3g at h = %.3g down to %.3g at h = %.3g)",
                cv.balance_slope, cv.levels.front().balance_residual, cv.levels.front().h,
                cv.levels.back().balance_residual, cv.levels.back().h));
    const double tau_min = std::min({cv.identity_tau_slopes[0], cv.identity_tau_slopes[1],
                                     cv.identity_tau_slopes[2]});
    verdict(9, cv.identity_time_slope >= 2.8 && tau_min >= 2.8,
            fmt("divergence identities on solver output: t-side order %.2f, tau-side orders "
                "{%.2f, %.2f, %.2f} at tau = {1, 4, 32}, all >= 2.8",
                cv.identity_time_slope, cv.identity_tau_slopes[0], cv.identity_tau_slopes[1],
                cv.identity_tau_slopes[2]));
  } catch (const std::exception& e) {
    verdict(2, false, fmt("refinement study failed to run: %s", e.what()));
    verdict(9, false, fmt("refinement study failed to run: %s", e.what()));
  }

  // ------------------------------------------------------------------
  // The two dissipative reference scenarios feed criteria 3 and 7.
  // ------------------------------------------------------------------
  SummaryReport r_trap, r_trav;
  bool ok_trap = false, ok_trav = false;
  try {
    std::fprintf(stderr, "acceptance: running the trapped packet (3 modes, T = 50)...\n");
    r_trap = run_scenario(load_config(dir + "trapped_packet.cfg"), false);
    ok_trap = true;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: trapped packet failed: %s\n", e.what());
  }
  try {
    std::fprintf(stderr, "acceptance: running the traveling packet (3 modes, T = 50)...\n");
    r_trav = run_scenario(load_config(dir + "traveling_packet.cfg"), false);
    ok_trav = true;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: traveling packet failed: %s\n", e.what());
  }

  // ------------------------------------------------------------------
  // Criteria 4-7: the horizon sweep T in {25, 50, 100, 200}. Uniformity
  // in T is read off the plateau of max_t E/E(0) and the stability of the
  // three empirical constants under T-doubling.
  // ------------------------------------------------------------------
  SweepResult sw;
  bool ok_sw = false;
  try {
    std::fprintf(stderr, "acceptance: sweeping the horizon T over {25, 50, 100, 200}...\n");
    sw = run_sweep(load_config(dir + "t_sweep.cfg"), SweepAxis::t_horizon,
                   {25.0, 50.0, 100.0, 200.0}, false);
    ok_sw = true;
  } catch (const std::exception& e) {
    for (int c : {4, 5, 6, 7})
      verdict(c, false, fmt("horizon sweep failed to run: %s", e.what()));
  }
  if (ok_sw) {
    const double r100 = sw.points[2].report.constants.at("max_energy_ratio");
    const double r200 = sw.points[3].report.constants.at("max_energy_ratio");
    const double rel = std::abs(r200 / r100 - 1.0);
    double slowest = 0.0;
    for (const SweepPoint& p : sw.points)
      slowest = std::max(slowest, p.report.runtimes_s.at("total"));
    verdict(4, rel <= 0.05 && slowest <= 60.0,
            fmt("max_t E(t)/E(0) moves %.3g%% <= 5%% between T = 100 (%.8f) and "
                "T = 200 (%.8f); slowest horizon %.1f s <= 60 s",
                100.0 * rel, r100, r200, slowest));

    const ConstantFit fc = sw.fits.at("c_classical");
    verdict(5, fc.stability <= 1.2,
            fmt("classical bulk / E(0) across T-doublings: c = %.5f, worst consecutive "
                "ratio %.4f <= 1.2", fc.c_hat, fc.stability));

    const ConstantFit fr = sw.fits.at("c_refined");
    verdict(6, fr.stability <= 1.2,
            fmt("refined bulk / E(0) across T-doublings: c = %.5f, worst consecutive "
                "ratio %.4f <= 1.2", fr.c_hat, fr.stability));

    const ConstantFit fj = sw.fits.at("c_j");
    double pv_worst = 0.0;
    for (const SweepPoint& p : sw.points)
      pv_worst = std::max(pv_worst, check_value(p.report, "parseval", "relative"));
    if (ok_trap) pv_worst = std::max(pv_worst, check_value(r_trap, "parseval", "relative"));
    verdict(7, fj.stability <= 1.2 && pv_worst <= 1e-8,
            fmt("frequency-weighted bulk / (E(0)+E(T)): c_J = %.5f, worst consecutive "
                "ratio %.4f <= 1.2; worst Parseval residual %.3g <= 1e-8",
                fj.c_hat, fj.stability, pv_worst));
  }

  // ------------------------------------------------------------------
  // Criterion 3: the exponential bound with 1e-3 slack on every shipped
  // scenario with eps <= 0.01 (the refinement base runs eps = 0.05 and is
  // covered by its own balance criterion instead).
  // ------------------------------------------------------------------
  {
    bool pass = ok_cons && ok_trap && ok_trav && ok_sw;
    double headroom = std::numeric_limits<double>::infinity();
    int runs = 0;
    const auto fold = [&](const SummaryReport& r) {
      const CheckResult* c = r.find("exponential_bound");
      pass = pass && c != nullptr && c->pass;
      if (c != nullptr) headroom = std::min(headroom, c->margin);
      ++runs;
    };
    if (ok_cons) fold(r_cons);
    if (ok_trap) fold(r_trap);
    if (ok_trav) fold(r_trav);
    if (ok_sw)
      for (const SweepPoint& p : sw.points) fold(p.report);
    verdict(3, pass,
            fmt("E(t2) <= e^{eps (t2 - t1)} E(t1) with 1e-3 slack on every recorded pair "
                "of %d runs at eps <= 0.01 (worst headroom %.3g)", runs,
                std::isfinite(headroom) ? headroom : 0.0));
  }

  // ------------------------------------------------------------------
  // Emit the verdict table in criterion order and the final tally.
  // ------------------------------------------------------------------
  std::sort(g_lines.begin(), g_lines.end(),
            [](const Line& a, const Line& b) { return a.number < b.number; });
  int failed = 0;
  for (const Line& l : g_lines) {
    std::printf("[%s] criterion %2d: %s\n", l.pass ? "PASS" : "FAIL", l.number, l.text.c_str());
    if (!l.pass) ++failed;
  }
  if (g_lines.size() != 12) {
    std::printf("[FAIL] acceptance emitted %zu verdicts instead of 12\n", g_lines.size());
    ++failed;
  }
  std::printf("acceptance: %d/12 criteria passed\n", 12 - failed);
  return failed == 0 ? 0 : 1;
}
