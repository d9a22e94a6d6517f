// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "raremut/kolmogorov.hpp"
#include "raremut/mesh.hpp"
#include "raremut/two_species.hpp"

namespace raremut {

namespace detail {

// The fraction studies fix the effective rate m0 = lambda gamma and vary the
// conversion fraction, so the channel for a given gamma fires at m0 / gamma.
inline MutationChannel fraction_channel(const TwoSpeciesParams& p,
                                        double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("fraction sweep: fraction must be in (0,1]");
  return MutationChannel(0, 1, p.m0() / gamma, gamma);
}

inline void check_sweep_regime(const TwoSpeciesParams& p, const char* what) {
  if (p.m1() != 0.0)
    throw std::invalid_argument(std::string(what) +
                                ": 1 -> 0 channel must be absent");
  double mf = p.m0() * p.f0;
  if (!(mf > 0.0) || !(mf < p.s()))
    throw std::invalid_argument(std::string(what) +
                                ": need 0 < m0 f0 < s (got m0 f0 = " +
                                std::to_string(mf) + ", s = " +
                                std::to_string(p.s()) + ")");
}

}  // namespace detail

struct PlateauOptions {
  double horizon = 400.0;       // give up past this time
  double tolerance = 3e-3;      // stationarity and oscillation tolerance
  double check_interval = 1.0;  // time between plateau tests
  double window_max = 0.9;      // plateau window is x in [0, window_max]
};

struct PlateauResult {
  double value = 0.0;          // window mean of u at the plateau
  double reached_at = 0.0;     // first time the plateau test passed
  double stationarity = 0.0;   // max |u(x,T) - u(x,T-interval)| over window
  double oscillation = 0.0;    // max - min of u over the window
  bool near_threshold = false; // fraction within 1e-9 of the threshold
};

// Large-time plateau of the expected frequency for a given conversion
// fraction, at fixed effective rate taken from p.  The expected frequency
// flattens in x away from the pinned value at x = 1, so the plateau window
// excludes the right edge; convergence requires both the window profile to
// stop moving in time and its x-oscillation to be small.
inline PlateauResult large_time_plateau(const TwoSpeciesParams& p, double gamma,
                                        std::shared_ptr<const Mesh> mesh,
                                        const SolverConfig& cfg,
                                        const PlateauOptions& opts = {}) {
  detail::check_sweep_regime(p, "large_time_plateau");
  if (!mesh || mesh->dimension() != 1)
    throw std::invalid_argument("large_time_plateau: need a 1-d mesh");
  if (!(opts.tolerance > 0.0) || !(opts.check_interval > 0.0) ||
      !(opts.horizon >= opts.check_interval) || !(opts.window_max > 0.0) ||
      opts.window_max > 1.0)
    throw std::invalid_argument("large_time_plateau: bad plateau options");

  const MutationChannel ch = detail::fraction_channel(p, gamma);
  const FitnessModel m = p.fitness();
  std::span<const MutationChannel> channels(&ch, 1);
  if (!(cfg.dt > 0.0))
    throw std::invalid_argument("large_time_plateau: dt must be positive");
  detail::check_dt_cap(cfg.dt, intensity_bound(m, channels));

  // Window = nodes with x <= window_max.
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < mesh->node_count(); ++i)
    if (mesh->node(i)[0] <= opts.window_max + 1e-12) window.push_back(i);
  if (window.size() < 2)
    throw std::invalid_argument("large_time_plateau: plateau window is empty");

  FlowConfig flow = cfg.flow;
  auto stencils = detail::build_jump_stencils(*mesh, m, channels, cfg.dt, flow);
  std::vector<double> u(mesh->node_count()), scratch(mesh->node_count());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = mesh->node(i)[0];

  const std::size_t steps_per_check = static_cast<std::size_t>(
      std::llround(opts.check_interval / cfg.dt));
  if (steps_per_check == 0)
    throw std::invalid_argument("large_time_plateau: check interval below dt");

  PlateauResult result;
  result.near_threshold =
      std::abs(gamma - threshold_fraction(p.s(), p.m0() * p.f0)) <= 1e-9;

  std::vector<double> previous;
  double t = 0.0;
  while (t < opts.horizon * (1.0 + 1e-12)) {
    for (std::size_t s = 0; s < steps_per_check; ++s) {
      detail::apply_step(stencils, cfg.dt, u, scratch);
      u.swap(scratch);
    }
    t += opts.check_interval;

    double lo = u[window.front()], hi = lo, move = 0.0, mean = 0.0;
    for (std::size_t w = 0; w < window.size(); ++w) {
      double v = u[window[w]];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      mean += v;
      if (!previous.empty()) move = std::max(move, std::abs(v - previous[w]));
    }
    mean /= static_cast<double>(window.size());
    result.stationarity = previous.empty() ? hi - lo : move;
    result.oscillation = hi - lo;

    if (!previous.empty() && result.stationarity < opts.tolerance &&
        result.oscillation < opts.tolerance) {
      result.value = mean;
      result.reached_at = t;
      return result;
    }
    previous.resize(window.size());
    for (std::size_t w = 0; w < window.size(); ++w) previous[w] = u[window[w]];
  }
  throw std::runtime_error(
      "large_time_plateau: no plateau within horizon " +
      std::to_string(opts.horizon) + " (stationarity " +
      std::to_string(result.stationarity) + ", oscillation " +
      std::to_string(result.oscillation) + " vs tolerance " +
      std::to_string(opts.tolerance) + ")");
}

struct SweepRow {
  double gamma;
  double u_gamma;  // solver value at (x_probe, t_probe)
  double z_ref;    // fraction-one closed form at the probe
  double x_ref;    // averaged-ODE value at the probe
};

// Expected frequency at a fixed probe point for a list of conversion
// fractions, all at the same effective rate m0 taken from p.  z_ref and
// x_ref bracket the family: u_gamma increases with gamma from the averaged
// ODE (gamma -> 0) to the fraction-one closed form (gamma = 1).
inline std::vector<SweepRow> sweep_jump_fraction(
    const TwoSpeciesParams& p, std::span<const double> gammas, double x_probe,
    double t_probe, std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg) {
  detail::check_sweep_regime(p, "sweep_jump_fraction");
  if (!mesh || mesh->dimension() != 1)
    throw std::invalid_argument("sweep_jump_fraction: need a 1-d mesh");
  if (!(x_probe >= 0.0) || !(x_probe <= 1.0))
    throw std::invalid_argument("sweep_jump_fraction: x_probe must be in [0,1]");
  if (!(t_probe > 0.0))
    throw std::invalid_argument("sweep_jump_fraction: t_probe must be > 0");
  for (double g : gammas)
    if (!(g > 0.0) || g > 1.0)
      throw std::invalid_argument("sweep_jump_fraction: fractions must be in (0,1]");

  const FitnessModel m = p.fitness();
  SolverConfig run = cfg;
  run.t_end = t_probe;
  const double probe[1] = {x_probe};
  const double snap[1] = {t_probe};

  std::vector<SweepRow> rows;
  rows.reserve(gammas.size());
  for (double g : gammas) {
    MutationChannel ch = detail::fraction_channel(p, g);
    std::vector<GridFunction> sol = solve_kolmogorov(
        mesh, 1, m, std::span<const MutationChannel>(&ch, 1), run, snap);
    SweepRow row;
    row.gamma = g;
    row.u_gamma = sol.back().at(probe);
    row.z_ref =
        total_conversion_solution(p.s(), p.m0() * p.f0, x_probe, t_probe);
    row.x_ref = quasispecies_solution(p, x_probe, t_probe);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace raremut
