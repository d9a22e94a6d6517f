// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace raremut {

// Classic fixed-step RK4 over [t0, t1] on a vector state, integrating
// y' = rhs(y, dy).  The step count is chosen so the step never exceeds hmax.
// `post_step(y)` runs after every step (used to clamp round-off excursions).
template <class Rhs, class PostStep>
void rk4_integrate(Rhs&& rhs, std::vector<double>& y, double t0, double t1,
                   double hmax, PostStep&& post_step) {
  if (!(hmax > 0.0))
    throw std::invalid_argument("rk4_integrate: hmax must be positive");
  double span = t1 - t0;
  if (span == 0.0) return;
  std::size_t n = static_cast<std::size_t>(std::ceil(std::abs(span) / hmax));
  if (n == 0) n = 1;
  double h = span / static_cast<double>(n);

  const std::size_t dim = y.size();
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  for (std::size_t step = 0; step < n; ++step) {
    rhs(y, k1);
    for (std::size_t j = 0; j < dim; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
    rhs(tmp, k2);
    for (std::size_t j = 0; j < dim; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
    rhs(tmp, k3);
    for (std::size_t j = 0; j < dim; ++j) tmp[j] = y[j] + h * k3[j];
    rhs(tmp, k4);
    for (std::size_t j = 0; j < dim; ++j)
      y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    post_step(y);
  }
}

template <class Rhs>
void rk4_integrate(Rhs&& rhs, std::vector<double>& y, double t0, double t1,
                   double hmax) {
  rk4_integrate(static_cast<Rhs&&>(rhs), y, t0, t1, hmax,
                [](std::vector<double>&) {});
}

// Scalar convenience wrapper.
template <class Rhs>
double rk4_scalar(Rhs&& rhs, double y0, double t0, double t1, double hmax) {
  std::vector<double> y{y0};
  rk4_integrate([&rhs](const std::vector<double>& v, std::vector<double>& dv) {
    dv[0] = rhs(v[0]);
  }, y, t0, t1, hmax);
  return y[0];
}

}  // namespace raremut
