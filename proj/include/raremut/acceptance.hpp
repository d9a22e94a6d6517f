// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "raremut/fitness.hpp"
#include "raremut/flow.hpp"
#include "raremut/gamma_sweep.hpp"
#include "raremut/jump_process.hpp"
#include "raremut/kolmogorov.hpp"
#include "raremut/mesh.hpp"
#include "raremut/rng.hpp"
#include "raremut/simplex.hpp"
#include "raremut/two_species.hpp"

// End-to-end verification of the library against its reference setup: two
// types with fitness (2, 1), one 0 -> 1 channel at rate 0.5 and fraction 0.5
// (effective rate 0.25), a 401-node mesh and dt = 1e-3.  Each criterion
// prints pass/fail with the measured quantities.  `tol_scale` multiplies the
// additive numeric tolerances (for sensitivity probes); absolute value
// bounds and runtime limits are never scaled.

namespace raremut {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  double tol_scale = 1.0;
  unsigned threads = 1;
};

namespace detail {

inline std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

}  // namespace detail

inline std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  const double k = opts.tol_scale;

  const FitnessModel fit = FitnessModel::constant({2.0, 1.0});
  const TwoSpeciesParams ref(2.0, 1.0, /*lambda0=*/0.5, /*lambda1=*/0.0,
                             /*gamma0=*/0.5, /*gamma1=*/1.0);
  const double s = ref.s();                  // 1
  const double mf = ref.m0() * ref.f0;       // 0.5
  auto mesh = std::make_shared<const Mesh>(Mesh::line(401));
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.flow = default_flow_config(fit);

  std::vector<CriterionResult> results;
  auto run = [&results](int id, const char* name, auto&& body) {
    CriterionResult r;
    r.id = id;
    r.name = name;
    auto t0 = clock::now();
    try {
      body(r);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    results.push_back(std::move(r));
  };

  // ---- 1: solver vs the fraction-one closed form ------------------------
  run(1, "total_conversion_match", [&](CriterionResult& r) {
    std::vector<MutationChannel> ch{MutationChannel(0, 1, 0.25, 1.0)};
    SolverConfig c = cfg;
    c.t_end = 5.0;
    const std::vector<double> snaps{0.5, 1.0, 2.0, 5.0};
    auto t0 = clock::now();
    auto sol = solve_kolmogorov(mesh, 1, fit, ch, c, snaps);
    double wall = std::chrono::duration<double>(clock::now() - t0).count();
    double worst = 0.0;
    for (const auto& u : sol)
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        double x = mesh->node(i)[0];
        worst = std::max(worst, std::abs(u.values[i] -
                                         total_conversion_solution(
                                             s, mf, x, u.time)));
      }
    double tol = 5e-3 * k;
    r.pass = worst <= tol && wall < 10.0;
    r.detail = detail::fmt("max|u - closed form| = %.3e (tol %.3e), solve %.2fs (limit 10s)",
                           worst, tol, wall);
  });

  // ---- 2-4 share one solve of the reference channel ---------------------
  std::optional<std::vector<GridFunction>> ref_snaps;

  run(2, "averaged_ode_sandwich", [&](CriterionResult& r) {
    std::vector<MutationChannel> ch = ref.channels();
    SolverConfig c = cfg;
    c.t_end = 5.0;
    const std::vector<double> snaps{0.5, 1.0, 2.0, 5.0};
    double lo = 0.0, hi = 0.0;
    StepObserver watch = [&](const GridFunction& u) {
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        double x = mesh->node(i)[0];
        lo = std::min(lo, u.values[i] - quasispecies_solution(ref, x, u.time));
        hi = std::max(hi, u.values[i]);
      }
    };
    ref_snaps = solve_kolmogorov(mesh, 1, fit, ch, c, snaps, {}, watch);
    r.pass = lo >= -5e-3 * k && hi <= 1.0 + 1e-9 * k;
    r.detail = detail::fmt("min(u - ode) = %.3e (>= %.3e), max u = %.12f (<= 1 + %.1e)",
                           lo, -5e-3 * k, hi, 1e-9 * k);
  });

  run(3, "slope_band", [&](CriterionResult& r) {
    if (!ref_snaps) throw std::runtime_error("reference solve unavailable");
    double worst_low = 0.0, worst_excess = -1.0;
    for (const auto& u : *ref_snaps) {
      if (u.time > 2.0 + 1e-9) continue;  // band checked at t = 0.5, 1, 2
      double bound = std::exp((s - mf) * u.time) + 1e-3 * k;
      FiniteDifferences fd = finite_difference_probe(u);
      for (double d : fd.first) {
        worst_low = std::min(worst_low, d);
        worst_excess = std::max(worst_excess, d - bound);
      }
    }
    r.pass = worst_low >= -1e-6 * k && worst_excess <= 0.0;
    r.detail = detail::fmt("min slope = %.3e (>= %.1e), max slope - bound = %.3e (<= 0)",
                           worst_low, -1e-6 * k, worst_excess);
  });

  run(4, "convexity", [&](CriterionResult& r) {
    if (!ref_snaps) throw std::runtime_error("reference solve unavailable");
    double worst = 0.0;
    for (const auto& u : *ref_snaps) {
      FiniteDifferences fd = finite_difference_probe(u);
      for (double d : fd.second) worst = std::min(worst, d);
    }
    r.pass = worst >= -1e-6 * k;
    r.detail = detail::fmt("min curvature = %.3e (>= %.1e)", worst, -1e-6 * k);
  });

  // ---- 5: fraction sweep between the two closed forms --------------------
  run(5, "fraction_sweep_bracket", [&](CriterionResult& r) {
    const std::vector<double> gammas{0.1, 0.2, 0.3, 0.4, 0.5,
                                     0.6, 0.7, 0.8, 0.9, 1.0};
    auto t0 = clock::now();
    auto rows = sweep_jump_fraction(ref, gammas, 0.3, 2.0, mesh, cfg);
    double wall = std::chrono::duration<double>(clock::now() - t0).count();
    double worst_drop = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i)
      worst_drop = std::min(worst_drop, rows[i].u_gamma - rows[i - 1].u_gamma);
    double top_err = std::abs(rows.back().u_gamma - rows.back().z_ref);
    double low_gap = rows.front().u_gamma - rows.front().x_ref;
    r.pass = worst_drop >= -1e-4 * k && top_err <= 5e-3 * k &&
             low_gap >= -5e-3 * k && low_gap <= 0.08 && wall < 120.0;
    r.detail = detail::fmt(
        "min increment = %.3e (>= %.1e), |u(1) - closed form| = %.3e (tol %.1e), "
        "u(0.1) - ode = %.3e (in [%.1e, 0.08]), sweep %.1fs (limit 120s)",
        worst_drop, -1e-4 * k, top_err, 5e-3 * k, low_gap, -5e-3 * k, wall);
  });

  // ---- 6: threshold fraction root ----------------------------------------
  run(6, "threshold_fraction_root", [&](CriterionResult& r) {
    double gs = threshold_fraction(2.0, 1.0);
    double resid = std::abs(threshold_residual(2.0, 1.0, gs));
    double below = threshold_residual(2.0, 1.0, gs - 1e-3);
    double above = threshold_residual(2.0, 1.0, gs + 1e-3);
    r.pass = resid <= 1e-12 * k && gs > 0.79 && gs < 0.80 && below > 0.0 &&
             above < 0.0;
    r.detail = detail::fmt(
        "root = %.12f (in (0.79, 0.80)), |g(root)| = %.2e (tol %.1e), "
        "g(root -/+ 1e-3) = %.2e / %.2e",
        gs, resid, 1e-12 * k, below, above);
  });

  // ---- 7: Monte Carlo vs solver ------------------------------------------
  SimplexAudit path_audit;
  bool have_audit = false;

  run(7, "monte_carlo_vs_solver", [&](CriterionResult& r) {
    std::vector<MutationChannel> ch = ref.channels();
    SolverConfig c = cfg;
    c.t_end = 1.0;
    const std::vector<double> snap{1.0};
    auto t0 = clock::now();
    auto sol = solve_kolmogorov(mesh, 1, fit, ch, c, snap);
    const GridFunction& u = sol.back();
    bool ok = true;
    std::string parts;
    for (double x0 : {0.1, 0.5, 0.9}) {
      SimplexState start(std::vector<double>{1.0 - x0, x0});
      auto est = monte_carlo_expectation(fit, ch, start, snap, 100000,
                                         7001 + static_cast<int>(10 * x0),
                                         cfg.flow, opts.threads);
      path_audit.merge(est.audit);
      have_audit = true;
      double coords[1] = {x0};
      double solver_value = u.at(coords);
      double diff = std::abs(est.mean[0][1] - solver_value);
      double tol = 3.0 * est.std_error[0][1] + 5e-3 * k;
      ok = ok && diff <= tol;
      parts += detail::fmt("%sx0=%.1f: |mc - u| = %.2e (tol %.2e)",
                           parts.empty() ? "" : "; ", x0, diff, tol);
    }
    double wall = std::chrono::duration<double>(clock::now() - t0).count();
    r.pass = ok && wall < 120.0;
    r.detail = parts + detail::fmt("; %.1fs (limit 120s)", wall);
  });

  // ---- 8: event counts follow the constant-intensity law -----------------
  run(8, "event_count_law", [&](CriterionResult& r) {
    std::vector<MutationChannel> ch = ref.channels();
    const std::size_t n = 100000;
    const double horizon = 2.0;
    SimplexState start(std::vector<double>{0.5, 0.5});
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      PathRng rng(8888, p);
      PathSample path = simulate_path(fit, ch, start, horizon, rng, cfg.flow,
                                      {}, &path_audit);
      have_audit = true;
      double c = 0.0;
      for (const auto& ev : path.events)
        if (ev.ancestor == 0 && ev.descendant == 1) c += 1.0;
      sum += c;
      sumsq += c * c;
    }
    double mean = sum / n;
    double var = (sumsq - n * mean * mean) / (n - 1.0);
    // Rate lambda0 f0 = 1 is state-independent, so counts over [0,2] are
    // Poisson with mean = variance = 2.
    double tol = 4.0 * std::sqrt(2.0 / n) * k;
    r.pass = std::abs(mean - 2.0) <= tol && std::abs(var - 2.0) <= tol;
    r.detail = detail::fmt("mean = %.4f, variance = %.4f (both within %.4f of 2)",
                           mean, var, tol);
  });

  // ---- 9: every recorded state stayed on the simplex ----------------------
  run(9, "simplex_confinement", [&](CriterionResult& r) {
    if (!have_audit)
      throw std::runtime_error("no path states recorded (criteria 7-8 failed)");
    r.pass = path_audit.min_entry() >= -1e-14 * k &&
             path_audit.max_sum_deviation() <= 1e-12 * k;
    r.detail = detail::fmt(
        "%lld states: min entry = %.2e (>= %.1e), max |sum - 1| = %.2e (<= %.1e)",
        static_cast<long long>(path_audit.states()), path_audit.min_entry(),
        -1e-14 * k, path_audit.max_sum_deviation(), 1e-12 * k);
  });

  // ---- 10: large-time plateaus grow with the fraction ---------------------
  run(10, "plateau_progression", [&](CriterionResult& r) {
    std::vector<double> values;
    std::string parts;
    bool in_time = true;
    for (double g : {0.05, 0.5, 0.95}) {
      auto t0 = clock::now();
      PlateauResult p = large_time_plateau(ref, g, mesh, cfg);
      double wall = std::chrono::duration<double>(clock::now() - t0).count();
      in_time = in_time && wall < 180.0;
      values.push_back(p.value);
      parts += detail::fmt("%subar(%.2f) = %.4f at t = %.0f (%.1fs)",
                           parts.empty() ? "" : "; ", g, p.value, p.reached_at,
                           wall);
    }
    bool ordered = values[0] <= values[1] && values[1] <= values[2];
    r.pass = ordered && values[0] <= 0.55 && values[2] >= 0.9 && in_time;
    r.detail = parts + detail::fmt("; ordered = %s, bounds ubar(0.05) <= 0.55, ubar(0.95) >= 0.9",
                                   ordered ? "yes" : "no");
  });

  // ---- 11: marching solver vs integral fixed point ------------------------
  run(11, "fixed_point_agreement", [&](CriterionResult& r) {
    std::vector<MutationChannel> ch = ref.channels();
    SolverConfig c = cfg;
    c.t_end = 0.2;
    const std::vector<double> snap{0.2};
    auto sol = solve_kolmogorov(mesh, 1, fit, ch, c, snap);
    PicardResult fp = solve_kolmogorov_picard(mesh, 1, fit, ch, 0.2, c);
    double gap = 0.0;
    for (std::size_t i = 0; i < fp.u.values.size(); ++i)
      gap = std::max(gap, std::abs(fp.u.values[i] - sol.back().values[i]));
    double tol = 10.0 * std::max(c.dt, mesh->spacing()) * k;
    r.pass = gap <= tol;
    r.detail = detail::fmt("sup |march - fixed point| = %.3e (tol %.3e), %d iterations",
                           gap, tol, fp.iterations);
  });

  return results;
}

}  // namespace raremut
