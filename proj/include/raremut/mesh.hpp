// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "raremut/simplex.hpp"

namespace raremut {

// Uniform mesh on the reduced simplex: an interval grid on [0,1] for one
// reduced coordinate, or a triangular lattice {(i h, j h) : i + j <= n-1}
// for two.  Interpolation is piecewise linear (barycentric on triangles),
// which keeps interpolated values inside the range of the nodal values.
class Mesh {
 public:
  static Mesh line(std::size_t axis_nodes) { return Mesh(1, axis_nodes); }
  static Mesh triangle(std::size_t axis_nodes) { return Mesh(2, axis_nodes); }

  std::size_t dimension() const { return dim_; }
  std::size_t axis_nodes() const { return n_; }
  double spacing() const { return h_; }

  std::size_t node_count() const {
    return dim_ == 1 ? n_ : n_ * (n_ + 1) / 2;
  }

  // Row-major index of lattice node (i, j), j the second coordinate (d = 2).
  std::size_t node_index(std::size_t i, std::size_t j) const {
    return j * n_ - j * (j - 1) / 2 + i;
  }

  std::vector<double> node(std::size_t idx) const {
    if (idx >= node_count()) throw std::out_of_range("Mesh::node: bad index");
    if (dim_ == 1) return {static_cast<double>(idx) * h_};
    // Invert the triangular row-major numbering by walking rows.
    std::size_t j = 0, row_start = 0;
    while (row_start + (n_ - j) <= idx) {
      row_start += n_ - j;
      ++j;
    }
    std::size_t i = idx - row_start;
    return {static_cast<double>(i) * h_, static_cast<double>(j) * h_};
  }

  struct Stencil {
    std::array<std::size_t, 3> index;
    std::array<double, 3> weight;
    int size;
  };

  // Linear interpolation stencil at a point of the reduced simplex.  Points
  // may sit outside by round-off (up to `slack`); they are pulled back in.
  Stencil stencil(std::span<const double> coords, double slack = 1e-9) const {
    if (coords.size() != dim_)
      throw std::invalid_argument("Mesh::stencil: wrong coordinate count");
    if (dim_ == 1) return stencil_1d(coords[0], slack);
    return stencil_2d(coords[0], coords[1], slack);
  }

  double interpolate(std::span<const double> values,
                     std::span<const double> coords) const {
    if (values.size() != node_count())
      throw std::invalid_argument("Mesh::interpolate: wrong value count");
    Stencil st = stencil(coords);
    double out = 0.0;
    for (int a = 0; a < st.size; ++a) out += st.weight[a] * values[st.index[a]];
    return out;
  }

 private:
  Mesh(std::size_t dim, std::size_t axis_nodes) : dim_(dim), n_(axis_nodes) {
    if (n_ < 2) throw std::invalid_argument("Mesh: need at least two nodes per axis");
    h_ = 1.0 / static_cast<double>(n_ - 1);
  }

  static double pull_in(double x, double lo, double hi, double slack,
                        const char* what) {
    if (x < lo - slack || x > hi + slack)
      throw std::invalid_argument(std::string(what) +
                                  ": point outside the reduced simplex");
    return x < lo ? lo : (x > hi ? hi : x);
  }

  Stencil stencil_1d(double x, double slack) const {
    x = pull_in(x, 0.0, 1.0, slack, "Mesh::stencil");
    double a = x / h_;
    std::size_t i = std::min(static_cast<std::size_t>(a), n_ - 2);
    double u = a - static_cast<double>(i);
    return Stencil{{i, i + 1, 0}, {1.0 - u, u, 0.0}, 2};
  }

  Stencil stencil_2d(double x, double y, double slack) const {
    x = pull_in(x, 0.0, 1.0, slack, "Mesh::stencil");
    y = pull_in(y, 0.0, 1.0, slack, "Mesh::stencil");
    double sum = x + y;
    if (sum > 1.0) {
      if (sum > 1.0 + slack)
        throw std::invalid_argument("Mesh::stencil: point outside the reduced simplex");
      x /= sum;
      y /= sum;
    }
    double a = x / h_, b = y / h_;
    std::size_t i = std::min(static_cast<std::size_t>(a), n_ - 2);
    std::size_t j = std::min(static_cast<std::size_t>(b), n_ - 2);
    double u = a - static_cast<double>(i);
    double v = b - static_cast<double>(j);
    if (i + j > n_ - 2) {
      // Only reachable when the point is exactly a lattice node on the
      // hypotenuse row; emit the single node.
      return Stencil{{node_index(i, j), 0, 0}, {1.0, 0.0, 0.0}, 1};
    }
    if (i + j == n_ - 2 && u + v > 1.0) {
      // Round-off past the hypotenuse of the last full cell.
      double scale = 1.0 / (u + v);
      u *= scale;
      v *= scale;
    }
    if (u + v <= 1.0) {
      return Stencil{{node_index(i, j), node_index(i + 1, j), node_index(i, j + 1)},
                     {1.0 - u - v, u, v},
                     3};
    }
    return Stencil{
        {node_index(i + 1, j), node_index(i, j + 1), node_index(i + 1, j + 1)},
        {1.0 - v, 1.0 - u, u + v - 1.0},
        3};
  }

  std::size_t dim_;
  std::size_t n_;
  double h_;
};

// Nodal values of one type's expected frequency at a fixed time.
struct GridFunction {
  std::shared_ptr<const Mesh> mesh;
  std::size_t type_index = 1;  // which type's frequency this tracks
  double time = 0.0;
  std::vector<double> values;

  double at(std::span<const double> coords) const {
    return mesh->interpolate(values, coords);
  }
};

struct FiniteDifferences {
  std::vector<double> first;   // (u_{i+1} - u_i) / h, length n-1
  std::vector<double> second;  // (u_{i+1} - 2 u_i + u_{i-1}) / h^2, length n-2
};

// Divided differences of a one-dimensional grid function; shape diagnostics
// for monotonicity and convexity checks.
inline FiniteDifferences finite_difference_probe(const GridFunction& u) {
  if (!u.mesh || u.mesh->dimension() != 1)
    throw std::invalid_argument("finite_difference_probe: need a 1-d grid function");
  const std::vector<double>& v = u.values;
  double h = u.mesh->spacing();
  FiniteDifferences out;
  out.first.resize(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    out.first[i] = (v[i + 1] - v[i]) / h;
  out.second.resize(v.size() - 2);
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    out.second[i - 1] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
  return out;
}

}  // namespace raremut
