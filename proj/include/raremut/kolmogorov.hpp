// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "raremut/fitness.hpp"
#include "raremut/flow.hpp"
#include "raremut/mesh.hpp"
#include "raremut/simplex.hpp"

namespace raremut {

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double picard_tol = 1e-10;
  int picard_max_iter = 60;
  enum class Interpolation { linear } interpolation = Interpolation::linear;
  FlowConfig flow;  // characteristic integrator
};

// Nonlocal jump part of the generator applied to a grid function at a point:
//   (J u)(x) = sum_ch lambda_ch f_anc(x) [u(x after jump) - u(x)].
inline double apply_jump_operator(const GridFunction& u, const FitnessModel& m,
                                  std::span<const MutationChannel> channels,
                                  const ReducedState& r) {
  if (!u.mesh || u.mesh->dimension() != r.dimension())
    throw std::invalid_argument("apply_jump_operator: dimension mismatch");
  SimplexState x = lift(r);
  double here = u.mesh->interpolate(u.values, r.coords());
  double total = 0.0;
  for (const auto& ch : channels) {
    double rate = ch.rate * m.component(ch.ancestor, x);
    if (rate == 0.0) continue;
    ReducedState target = reduce(apply_jump(x, ch));
    total += rate * (u.mesh->interpolate(u.values, target.coords()) - here);
  }
  return total;
}

namespace detail {

// Geometry of one transport step of length tau seen from a mesh node: the
// foot of the characteristic through the node, and for every channel the
// post-jump point of the foot with the rate factor lambda * f_anc(foot).
// The drift and the channels are autonomous, so this depends on tau only and
// can be reused across time steps.
struct JumpStencil {
  Mesh::Stencil foot;
  struct Target {
    double rate;  // lambda_ch * f_anc(foot)
    Mesh::Stencil at;
  };
  std::vector<Target> targets;
};

inline double stencil_value(const Mesh::Stencil& st,
                            std::span<const double> values) {
  double out = 0.0;
  for (int a = 0; a < st.size; ++a) out += st.weight[a] * values[st.index[a]];
  return out;
}

inline std::vector<JumpStencil> build_jump_stencils(
    const Mesh& mesh, const FitnessModel& m,
    std::span<const MutationChannel> channels, double tau,
    const FlowConfig& flow) {
  std::vector<JumpStencil> out(mesh.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    ReducedState node(mesh.node(i));
    ReducedState foot = replicator_advance(m, node, tau, flow);
    out[i].foot = mesh.stencil(foot.coords());
    SimplexState xfoot = lift(foot);
    out[i].targets.reserve(channels.size());
    for (const auto& ch : channels) {
      JumpStencil::Target tg;
      tg.rate = ch.rate * m.component(ch.ancestor, xfoot);
      tg.at = mesh.stencil(reduce(apply_jump(xfoot, ch)).coords());
      out[i].targets.push_back(tg);
    }
  }
  return out;
}

// u_new(node) = u(foot) + dt * sum_ch rate_ch [u(target_ch) - u(foot)].
// With dt * sum rate <= 1 this is a convex combination of current values,
// so the update cannot leave the range of u.
inline void apply_step(const std::vector<JumpStencil>& stencils, double dt,
                       std::span<const double> u, std::span<double> out) {
  for (std::size_t i = 0; i < stencils.size(); ++i) {
    const JumpStencil& ns = stencils[i];
    double at_foot = stencil_value(ns.foot, u);
    double v = at_foot;
    for (const auto& tg : ns.targets)
      v += dt * tg.rate * (stencil_value(tg.at, u) - at_foot);
    out[i] = v;
  }
}

inline void check_dt_cap(double dt, double bound) {
  if (bound > 0.0 && dt > 0.1 / bound * (1.0 + 1e-12))
    throw std::invalid_argument(
        "solver dt = " + std::to_string(dt) +
        " exceeds 0.1 / intensity bound = " + std::to_string(0.1 / bound) +
        "; shrink dt");
}

inline void check_problem(const Mesh& mesh, std::size_t type_index,
                          const FitnessModel& m, const char* what) {
  if (mesh.dimension() + 1 != m.size())
    throw std::invalid_argument(std::string(what) + ": mesh/model size mismatch");
  if (type_index < 1 || type_index > mesh.dimension())
    throw std::invalid_argument(std::string(what) +
                                ": type index must be in 1..d");
}

}  // namespace detail

// One explicit transport step of length dt: pull values back along the
// characteristics and couple the jump terms at the foot, first order in time.
inline GridFunction step_semi_lagrangian(const GridFunction& u,
                                         const FitnessModel& m,
                                         std::span<const MutationChannel> channels,
                                         double dt, const FlowConfig& flow) {
  if (!u.mesh) throw std::invalid_argument("step_semi_lagrangian: no mesh");
  if (!(dt > 0.0))
    throw std::invalid_argument("step_semi_lagrangian: dt must be positive");
  detail::check_dt_cap(dt, intensity_bound(m, channels));
  auto stencils = detail::build_jump_stencils(*u.mesh, m, channels, dt, flow);
  GridFunction next = u;
  next.time = u.time + dt;
  detail::apply_step(stencils, dt, u.values, next.values);
  return next;
}

using StepObserver = std::function<void(const GridFunction&)>;
using Datum = std::function<double(std::span<const double>)>;

// March the expected-frequency equation for type `type_index` from its
// datum (by default u(x,0) = x_k) to each requested snapshot time.  Steps use
// cfg.dt, shortened when a snapshot falls between step boundaries, and the
// step geometry is precomputed once per step size.  Snapshot times must be
// nondecreasing and inside [0, cfg.t_end].  The observer, when set, sees the
// state at t = 0 and after every step.
inline std::vector<GridFunction> solve_kolmogorov(
    std::shared_ptr<const Mesh> mesh, std::size_t type_index,
    const FitnessModel& m, std::span<const MutationChannel> channels,
    const SolverConfig& cfg, std::span<const double> snapshot_times,
    const Datum& datum = {}, const StepObserver& observer = {}) {
  if (!mesh) throw std::invalid_argument("solve_kolmogorov: no mesh");
  detail::check_problem(*mesh, type_index, m, "solve_kolmogorov");
  if (!(cfg.dt > 0.0))
    throw std::invalid_argument("solve_kolmogorov: dt must be positive");
  if (!(cfg.t_end >= 0.0))
    throw std::invalid_argument("solve_kolmogorov: t_end must be >= 0");
  detail::check_dt_cap(cfg.dt, intensity_bound(m, channels));

  std::vector<double> stops(snapshot_times.begin(), snapshot_times.end());
  for (std::size_t i = 0; i < stops.size(); ++i) {
    if (stops[i] < 0.0 || stops[i] > cfg.t_end * (1.0 + 1e-12))
      throw std::invalid_argument(
          "solve_kolmogorov: snapshot time outside [0, t_end]");
    if (i > 0 && stops[i] < stops[i - 1])
      throw std::invalid_argument(
          "solve_kolmogorov: snapshot times must be nondecreasing");
  }
  if (stops.empty()) stops.push_back(cfg.t_end);

  GridFunction u;
  u.mesh = mesh;
  u.type_index = type_index;
  u.time = 0.0;
  u.values.resize(mesh->node_count());
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    std::vector<double> node = mesh->node(i);
    u.values[i] = datum ? datum(node) : node[type_index - 1];
  }
  if (observer) observer(u);

  auto full = detail::build_jump_stencils(*mesh, m, channels, cfg.dt, cfg.flow);
  std::vector<double> scratch(u.values.size());
  std::vector<GridFunction> out;
  out.reserve(stops.size());

  double t = 0.0;
  for (double stop : stops) {
    while (stop - t > 1e-12) {
      double step = std::min(cfg.dt, stop - t);
      if (step >= cfg.dt * (1.0 - 1e-9)) {
        detail::apply_step(full, cfg.dt, u.values, scratch);
        t += cfg.dt;
      } else {
        auto partial =
            detail::build_jump_stencils(*mesh, m, channels, step, cfg.flow);
        detail::apply_step(partial, step, u.values, scratch);
        t += step;
      }
      u.values.swap(scratch);
      u.time = t;
      if (observer) observer(u);
    }
    u.time = stop;  // absorb the 1e-12 slack
    out.push_back(u);
  }
  return out;
}

struct PicardResult {
  GridFunction u;                 // iterate at the final time
  int iterations = 0;             // applications of the integral map
  std::vector<double> gaps;       // sup |v^{m+1} - v^m| per iteration
};

// Independent reference solver on short horizons: iterate the integral form
//   v(x, t) = datum(Y(x, -t)) + int_0^t (J v)(Y(x, -(t - r)), r) dr
// to a fixed point, with a trapezoid rule in r.  The map contracts only for
// small t; past roughly 1 / (2 sup f) it may diverge, which is detected and
// reported.  Meant for cross-checking solve_kolmogorov, not production runs.
inline PicardResult solve_kolmogorov_picard(
    std::shared_ptr<const Mesh> mesh, std::size_t type_index,
    const FitnessModel& m, std::span<const MutationChannel> channels,
    double t_final, const SolverConfig& cfg) {
  if (!mesh) throw std::invalid_argument("solve_kolmogorov_picard: no mesh");
  detail::check_problem(*mesh, type_index, m, "solve_kolmogorov_picard");
  if (!(t_final > 0.0))
    throw std::invalid_argument("solve_kolmogorov_picard: t_final must be > 0");
  if (!(cfg.dt > 0.0) || !(cfg.picard_tol > 0.0) || cfg.picard_max_iter < 1)
    throw std::invalid_argument("solve_kolmogorov_picard: bad configuration");

  const std::size_t n = mesh->node_count();
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::ceil(t_final / cfg.dt - 1e-12)));
  const double dr = t_final / static_cast<double>(steps);

  // Step geometry for every lag l * dr used by the integral.
  std::vector<std::vector<detail::JumpStencil>> lag(steps + 1);
  for (std::size_t l = 0; l <= steps; ++l)
    lag[l] = detail::build_jump_stencils(*mesh, m, channels,
                                         dr * static_cast<double>(l), cfg.flow);

  // v[j][i]: iterate at time j * dr, node i.  Start from the pure-transport
  // solution datum(Y(x, -j dr)), which is also the first term of the
  // integral form; the datum here is the coordinate x_k.
  std::vector<double> datum_values(n);
  for (std::size_t i = 0; i < n; ++i)
    datum_values[i] = mesh->node(i)[type_index - 1];
  std::vector<std::vector<double>> v0(steps + 1, std::vector<double>(n));
  for (std::size_t j = 0; j <= steps; ++j)
    for (std::size_t i = 0; i < n; ++i)
      v0[j][i] = detail::stencil_value(lag[j][i].foot, datum_values);

  std::vector<std::vector<double>> v = v0, next = v0;
  PicardResult result;

  auto jump_at = [&](const detail::JumpStencil& ns,
                     std::span<const double> values) {
    double at_foot = detail::stencil_value(ns.foot, values);
    double total = 0.0;
    for (const auto& tg : ns.targets)
      total += tg.rate * (detail::stencil_value(tg.at, values) - at_foot);
    return total;
  };

  int grew = 0;
  for (int it = 0; it < cfg.picard_max_iter; ++it) {
    double gap = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        double integral = 0.0;
        for (std::size_t r = 0; r <= j; ++r) {
          double w = (r == 0 || r == j) ? 0.5 : 1.0;
          integral += w * jump_at(lag[j - r][i], v[r]);
        }
        double value = v0[j][i] + (j == 0 ? 0.0 : dr * integral);
        gap = std::max(gap, std::abs(value - v[j][i]));
        next[j][i] = value;
      }
    }
    v.swap(next);
    result.gaps.push_back(gap);
    result.iterations = it + 1;
    if (gap <= cfg.picard_tol) break;
    if (result.gaps.size() >= 2 && gap > result.gaps[result.gaps.size() - 2]) {
      if (++grew >= 3)
        throw std::runtime_error(
            "solve_kolmogorov_picard: iteration diverges at t_final = " +
            std::to_string(t_final) + "; the integral map contracts only up "
            "to about 1/(2 sup f) = " +
            std::to_string(1.0 / (2.0 * m.sup_norm())));
    } else {
      grew = 0;
    }
  }
  if (result.gaps.back() > cfg.picard_tol)
    throw std::runtime_error(
        "solve_kolmogorov_picard: no convergence to " +
        std::to_string(cfg.picard_tol) + " within " +
        std::to_string(cfg.picard_max_iter) + " iterations (last gap " +
        std::to_string(result.gaps.back()) + ")");

  result.u.mesh = mesh;
  result.u.type_index = type_index;
  result.u.time = t_final;
  result.u.values = std::move(v[steps]);
  return result;
}

}  // namespace raremut
