// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "raremut/fitness.hpp"
#include "raremut/ode.hpp"
#include "raremut/simplex.hpp"

namespace raremut {

struct FlowConfig {
  enum class Integrator { closed_form_2species, rk4 };

  Integrator integrator = Integrator::rk4;
  double step = 0.01;        // max RK4 step
  double tolerance = 1e-9;   // largest round-off excursion clamped back onto the simplex
};

// Two species with constant fitness: pick the exact flow; otherwise RK4.
inline FlowConfig default_flow_config(const FitnessModel& m) {
  FlowConfig cfg;
  if (m.size() == 2 && m.is_constant())
    cfg.integrator = FlowConfig::Integrator::closed_form_2species;
  return cfg;
}

// Solution at time t of y' = s y (1 - y), y(0) = x, for x in [0,1].
// Written so that neither overflow of exp nor 0 * inf can produce NaN.
inline double logistic_flow(double x, double s, double t) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double st = s * t;
  if (st > 700.0) return 1.0;
  if (st < -700.0) return 0.0;
  double e = std::exp(st);
  return x * e / ((1.0 - x) + x * e);
}

// Drift of the characteristic system in reduced coordinates, the negated
// replicator field: a_k(x) = -(f_k(x) - fbar(x)) x_k for k = 1..d.
// It vanishes on the boundary faces x_k = 0, so the flow never leaves the
// reduced simplex (only round-off can push it out).
inline std::vector<double> selection_drift(const FitnessModel& m,
                                           const ReducedState& r) {
  SimplexState x = lift(r);
  std::vector<double> f = fitness_at(m, x);
  double fbar = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) fbar += f[k] * x[k];
  std::vector<double> a(r.dimension());
  for (std::size_t j = 0; j < r.dimension(); ++j)
    a[j] = -(f[j + 1] - fbar) * r[j];
  return a;
}

namespace detail {

// Allocation-free drift evaluation for the RK4 inner loop.
class DriftEvaluator {
 public:
  explicit DriftEvaluator(const FitnessModel& m) : m_(m), full_(m.size()) {}

  // RK4 stage states may sit a step-sized distance off the simplex, so this
  // works on the raw vector and skips simplex validation.
  void operator()(const std::vector<double>& y, std::vector<double>& dy) {
    double sum = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      full_[j + 1] = y[j];
      sum += y[j];
    }
    full_[0] = 1.0 - sum;
    m_.values_raw(full_, f_);
    double fbar = 0.0;
    for (std::size_t k = 0; k < f_.size(); ++k) fbar += f_[k] * full_[k];
    for (std::size_t j = 0; j < y.size(); ++j)
      dy[j] = -(f_[j + 1] - fbar) * y[j];
  }

 private:
  const FitnessModel& m_;
  std::vector<double> full_;
  std::vector<double> f_;
};

inline void confine_to_simplex(std::vector<double>& y, double tol,
                               const char* what) {
  double sum = 0.0;
  for (double& v : y) {
    if (v < 0.0) {
      if (v < -tol)
        throw std::runtime_error(std::string(what) +
                                 ": state left the simplex (coordinate " +
                                 std::to_string(v) + "); reduce the step");
      v = 0.0;
    }
    sum += v;
  }
  if (sum > 1.0) {
    if (sum > 1.0 + tol)
      throw std::runtime_error(std::string(what) +
                               ": state left the simplex (sum " +
                               std::to_string(sum) + "); reduce the step");
    for (double& v : y) v /= sum;
  }
}

}  // namespace detail

// Flow map Y(x, t) of the characteristic system y' = a(y), Y(x, 0) = x.
// Negative t runs the characteristics backwards, i.e. forwards in the
// original selection dynamics.
inline ReducedState characteristic_flow(const FitnessModel& m,
                                        const ReducedState& r, double t,
                                        const FlowConfig& cfg) {
  if (r.dimension() + 1 != m.size())
    throw std::invalid_argument("characteristic_flow: state/model size mismatch");
  if (t == 0.0) return r;

  if (cfg.integrator == FlowConfig::Integrator::closed_form_2species) {
    if (m.size() != 2 || !m.is_constant())
      throw std::invalid_argument(
          "characteristic_flow: closed_form_2species needs two types with "
          "constant fitness");
    SimplexState one(std::vector<double>{1.0, 0.0});
    double s = m.component(0, one) - m.component(1, one);
    // a_1(x) = s x (1 - x) in the single reduced coordinate.
    return ReducedState({logistic_flow(r[0], s, t)});
  }

  double hmax = cfg.step;
  double fsup = m.sup_norm();
  if (fsup > 0.0) hmax = std::min(hmax, 0.01 / fsup);

  std::vector<double> y = r.coords();
  detail::DriftEvaluator drift(m);
  rk4_integrate(drift, y, 0.0, t, hmax, [&cfg](std::vector<double>& v) {
    detail::confine_to_simplex(v, cfg.tolerance, "characteristic_flow");
  });
  return ReducedState(std::move(y));
}

// Advance the selection dynamics (no jumps) forward by dt >= 0.
inline ReducedState replicator_advance(const FitnessModel& m,
                                       const ReducedState& r, double dt,
                                       const FlowConfig& cfg) {
  if (!(dt >= 0.0))
    throw std::invalid_argument("replicator_advance: dt must be >= 0");
  return characteristic_flow(m, r, -dt, cfg);
}

}  // namespace raremut
