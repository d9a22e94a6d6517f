// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "raremut/fitness.hpp"
#include "raremut/flow.hpp"
#include "raremut/ode.hpp"
#include "raremut/simplex.hpp"

namespace raremut {

// Two types with constant fitness f0 > f1 and up to two mutation channels
// (0 -> 1 at rate lambda0, fraction gamma0; 1 -> 0 at rate lambda1, fraction
// gamma1).  Everything below is written in the reduced coordinate
// x = frequency of the less fit type 1.
struct TwoSpeciesParams {
  double f0, f1;
  double lambda0, lambda1;
  double gamma0, gamma1;

  TwoSpeciesParams(double f0_, double f1_, double lambda0_ = 0.0,
                   double lambda1_ = 0.0, double gamma0_ = 1.0,
                   double gamma1_ = 1.0)
      : f0(f0_), f1(f1_), lambda0(lambda0_), lambda1(lambda1_),
        gamma0(gamma0_), gamma1(gamma1_) {
    if (!(f1 >= 0.0) || !(f0 > f1))
      throw std::invalid_argument("TwoSpeciesParams: need f0 > f1 >= 0");
    if (!(lambda0 >= 0.0) || !(lambda1 >= 0.0))
      throw std::invalid_argument("TwoSpeciesParams: rates must be >= 0");
    if (!(gamma0 > 0.0) || gamma0 > 1.0 || !(gamma1 > 0.0) || gamma1 > 1.0)
      throw std::invalid_argument("TwoSpeciesParams: fractions must be in (0,1]");
  }

  double s() const { return f0 - f1; }            // selection strength
  double m0() const { return lambda0 * gamma0; }  // effective 0 -> 1 mutation
  double m1() const { return lambda1 * gamma1; }  // effective 1 -> 0 mutation

  FitnessModel fitness() const { return FitnessModel::constant({f0, f1}); }

  std::vector<MutationChannel> channels() const {
    std::vector<MutationChannel> ch;
    if (lambda0 > 0.0) ch.emplace_back(0, 1, lambda0, gamma0);
    if (lambda1 > 0.0) ch.emplace_back(1, 0, lambda1, gamma1);
    return ch;
  }
};

namespace detail {

// expm1(z)/z, continuous through z = 0.
inline double expm1_over(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

// (1 - exp(-z))/z, continuous through z = 0.
inline double one_minus_exp_over(double z) {
  return z == 0.0 ? 1.0 : -std::expm1(-z) / z;
}

}  // namespace detail

// Right-hand side of the averaged mutation-selection ODE
//   x' = -s x (1-x) + m0 f0 (1-x) - m1 f1 x.
inline double quasispecies_rate(const TwoSpeciesParams& p, double x) {
  return -p.s() * x * (1.0 - x) + p.m0() * p.f0 * (1.0 - x) -
         p.m1() * p.f1 * x;
}

// Stable rest point of the averaged ODE in [0,1]: the smaller root of
//   s xbar^2 - (s + m0 f0 + m1 f1) xbar + m0 f0 = 0,
// computed in the cancellation-free form 2 m0 f0 / (b + sqrt(disc)).
inline double quasispecies_equilibrium(const TwoSpeciesParams& p) {
  double mf0 = p.m0() * p.f0;
  double mf1 = p.m1() * p.f1;
  if (mf0 == 0.0) return 0.0;
  double b = p.s() + mf0 + mf1;
  double disc = b * b - 4.0 * p.s() * mf0;  // >= (s - mf0)^2 >= 0
  return std::min(1.0, 2.0 * mf0 / (b + std::sqrt(std::max(disc, 0.0))));
}

// Solution X(x, t) of the averaged ODE with X(x, 0) = x, t >= 0.  Closed
// forms cover one-sided mutation and the mutation-free case; two-sided
// mutation falls back to RK4.
inline double quasispecies_solution(const TwoSpeciesParams& p, double x,
                                    double t) {
  if (!(x >= 0.0) || !(x <= 1.0))
    throw std::invalid_argument("quasispecies_solution: x must be in [0,1]");
  if (!(t >= 0.0))
    throw std::invalid_argument("quasispecies_solution: t must be >= 0");
  double s = p.s(), mf0 = p.m0() * p.f0, mf1 = p.m1() * p.f1;

  if (mf0 == 0.0 && mf1 == 0.0) return logistic_flow(x, -s, t);

  if (mf1 == 0.0) {
    if (x >= 1.0) return 1.0;
    if (mf0 < s) {
      // Relaxation onto xbar = mf0/s.  With rho = s - mf0 > 0,
      //   X = xbar + (x - xbar) / (1 + s (1-x) t * expm1(rho t)/(rho t)).
      double rho = s - mf0, xbar = mf0 / s;
      if (rho * t > 700.0) return xbar;
      double q = 1.0 + s * (1.0 - x) * t * detail::expm1_over(rho * t);
      return xbar + (x - xbar) / q;
    }
    // Fixation regime mf0 >= s: w = 1 - x decays,
    //   w(t) = w0 e^{-rho t} / (1 + s w0 t * (1 - e^{-rho t})/(rho t)).
    double rho = mf0 - s, w0 = 1.0 - x;
    double w = w0 * std::exp(-rho * t) /
               (1.0 + s * w0 * t * detail::one_minus_exp_over(rho * t));
    return 1.0 - w;
  }

  if (mf0 == 0.0) {
    // Pure back-mutation: x decays to 0 with sigma = s + m1 f1,
    //   X = x e^{-sigma t} / (1 - (s x / sigma)(1 - e^{-sigma t})).
    double sigma = s + mf1;
    double denom = 1.0 + (s * x / sigma) * std::expm1(-sigma * t);
    return x * std::exp(-sigma * t) / denom;
  }

  // Two-sided mutation: no closed form used; fixed-step RK4.
  double scale = std::max(1.0, s + mf0 + mf1);
  return rk4_scalar([&p](double y) { return quasispecies_rate(p, y); }, x, 0.0,
                    t, 0.005 / scale);
}

// Threshold conversion fraction: the root in (0,1) of
//   g(gamma) = s gamma + m f log(1 - gamma),
// the fraction above which a single-event analysis favours large jumps.
// Bisection runs in the substituted variable w = -log(1 - gamma), where the
// root is well conditioned even when gamma* is close to 1; the returned value
// satisfies |g(gamma*)| <= 1e-12 in that formulation.  For very small mf / s
// the exact root sits within one ulp of 1 and the correctly rounded result
// is exactly 1.0.
inline double threshold_fraction(double s, double mf) {
  if (!(s > 0.0) || !(mf > 0.0) || !(mf < s))
    throw std::invalid_argument("threshold_fraction: need 0 < m f < s");
  // h(w) = s (1 - e^{-w}) - mf w rises to its peak at w = log(s/mf) and then
  // decreases to -inf; the nonzero root sits in [log(s/mf), s/mf].
  double a = std::log(s / mf);
  double b = s / mf;
  for (int i = 0; i < 200 && (b - a) > 1e-17 * b; ++i) {
    double mid = 0.5 * (a + b);
    double h = -s * std::expm1(-mid) - mf * mid;
    (h > 0.0 ? a : b) = mid;
  }
  return -std::expm1(-0.5 * (a + b));
}

// g(gamma) evaluated directly; diagnostic companion of threshold_fraction.
inline double threshold_residual(double s, double mf, double gamma) {
  return s * gamma + mf * std::log1p(-gamma);
}

// Expected frequency Z(x, t) when every 0 -> 1 event converts the whole
// ancestor mass (fraction 1) and events arrive at constant intensity mf:
//   Z = 1 - P(no event by t) * (1 - flow_t(x))
//     = 1 - (1-x) e^{-mf t} / ((1-x) + x e^{-s t}).
inline double total_conversion_solution(double s, double mf, double x,
                                        double t) {
  if (!(s > 0.0) || !(mf > 0.0))
    throw std::invalid_argument("total_conversion_solution: need s, mf > 0");
  if (!(x >= 0.0) || !(x <= 1.0))
    throw std::invalid_argument("total_conversion_solution: x must be in [0,1]");
  if (!(t >= 0.0))
    throw std::invalid_argument("total_conversion_solution: t must be >= 0");
  if (x >= 1.0) return 1.0;
  double est = s * t > 700.0 ? 0.0 : std::exp(-s * t);
  return 1.0 - (1.0 - x) * std::exp(-mf * t) / ((1.0 - x) + x * est);
}

inline double total_conversion_solution(const TwoSpeciesParams& p, double x,
                                        double t) {
  if (p.m1() != 0.0)
    throw std::invalid_argument(
        "total_conversion_solution: 1 -> 0 channel must be absent");
  return total_conversion_solution(p.s(), p.m0() * p.f0, x, t);
}

// Closed forms bundled with their exact partial derivatives, for checking
// candidates against the fraction-one evolution equation
//   d_t u + s x (1-x) d_x u = mf (u(1,t) - u(x,t)).

struct TotalConversionClosedForm {
  double s, mf;

  double value(double x, double t) const {
    return total_conversion_solution(s, mf, x, t);
  }
  double dx(double x, double t) const {
    double b = (1.0 - x) + x * std::exp(-s * t);
    return std::exp(-mf * t) * std::exp(-s * t) / (b * b);
  }
  double dt(double x, double t) const {
    double est = std::exp(-s * t);
    double b = (1.0 - x) + x * est;
    return (1.0 - x) * std::exp(-mf * t) * (mf * b - s * x * est) / (b * b);
  }
};

// Averaged-ODE solution in the relaxation regime (m1 = 0, mf < s), with
// derivatives; its transport is local, so it is the natural negative control
// for the fraction-one equation.
struct QuasispeciesClosedForm {
  double s, mf;  // requires 0 < mf < s

  double xbar() const { return mf / s; }
  double value(double x, double t) const {
    return xbar() + (x - xbar()) / growth(x, t);
  }
  double dx(double x, double t) const {
    double g = growth(x, t);
    double c0 = s / (s - mf);
    return (g + c0 * (x - xbar()) * std::expm1((s - mf) * t)) / (g * g);
  }
  double dt(double x, double t) const {
    double g = growth(x, t);
    return -(x - xbar()) * (1.0 - x) * s * std::exp((s - mf) * t) / (g * g);
  }

 private:
  double growth(double x, double t) const {
    return 1.0 + (s / (s - mf)) * (1.0 - x) * std::expm1((s - mf) * t);
  }
};

struct ResidualGrid {
  int nx = 201;
  int nt = 81;
  double t_max = 2.0;
};

// Max over a (x, t) grid of |d_t u + s x (1-x) d_x u - mf (u(1,t) - u(x,t))|
// for a candidate exposing value/dx/dt.  Zero (up to round-off) identifies a
// solution of the fraction-one evolution equation.
template <class Candidate>
double total_conversion_pde_residual(double s, double mf, const Candidate& c,
                                     const ResidualGrid& grid = {}) {
  if (grid.nx < 2 || grid.nt < 2 || !(grid.t_max > 0.0))
    throw std::invalid_argument("total_conversion_pde_residual: bad grid");
  double worst = 0.0;
  for (int it = 0; it < grid.nt; ++it) {
    double t = grid.t_max * it / (grid.nt - 1);
    double u_one = c.value(1.0, t);
    for (int ix = 0; ix < grid.nx; ++ix) {
      double x = static_cast<double>(ix) / (grid.nx - 1);
      double res = c.dt(x, t) + s * x * (1.0 - x) * c.dx(x, t) -
                   mf * (u_one - c.value(x, t));
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst;
}

}  // namespace raremut
