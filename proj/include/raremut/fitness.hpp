// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "raremut/simplex.hpp"

namespace raremut {

// Fitness landscape over d+1 types.  Either constant per-type values f_k, or
// frequency-dependent linear payoff f_k(x) = (A x)_k with A >= 0 entrywise,
// so that fitness stays bounded and nonnegative on the simplex.
class FitnessModel {
 public:
  static FitnessModel constant(std::vector<double> f) {
    if (f.size() < 2)
      throw std::invalid_argument("FitnessModel::constant: need at least two types");
    for (double v : f)
      if (!(v >= 0.0))
        throw std::invalid_argument("FitnessModel::constant: fitness must be >= 0");
    FitnessModel m;
    m.constant_ = true;
    m.f_ = std::move(f);
    return m;
  }

  static FitnessModel payoff(std::vector<std::vector<double>> a) {
    if (a.size() < 2)
      throw std::invalid_argument("FitnessModel::payoff: need at least two types");
    for (const auto& row : a) {
      if (row.size() != a.size())
        throw std::invalid_argument("FitnessModel::payoff: matrix must be square");
      for (double v : row)
        if (!(v >= 0.0))
          throw std::invalid_argument("FitnessModel::payoff: entries must be >= 0");
    }
    FitnessModel m;
    m.constant_ = false;
    m.a_ = std::move(a);
    return m;
  }

  bool is_constant() const { return constant_; }
  std::size_t size() const { return constant_ ? f_.size() : a_.size(); }  // d + 1

  double component(std::size_t k, const SimplexState& s) const {
    check(k, s);
    if (constant_) return f_[k];
    double v = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) v += a_[k][j] * s[j];
    return v;
  }

  void values(const SimplexState& s, std::vector<double>& out) const {
    check(0, s);
    out.resize(size());
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (constant_) {
        out[k] = f_[k];
      } else {
        double v = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) v += a_[k][j] * s[j];
        out[k] = v;
      }
    }
  }

  // Evaluation on a raw frequency vector without simplex validation, for
  // integrator stages that may sit a step-sized distance off the simplex.
  void values_raw(std::span<const double> x, std::vector<double>& out) const {
    if (x.size() != size())
      throw std::invalid_argument("FitnessModel: state has wrong number of types");
    out.resize(size());
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (constant_) {
        out[k] = f_[k];
      } else {
        double v = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) v += a_[k][j] * x[j];
        out[k] = v;
      }
    }
  }

  // sup over the simplex of f_k: the constant itself, or the row maximum of A
  // (the supremum of a linear function over the simplex sits at a vertex).
  double component_sup(std::size_t k) const {
    if (k >= size())
      throw std::out_of_range("FitnessModel::component_sup: type index out of range");
    if (constant_) return f_[k];
    return *std::max_element(a_[k].begin(), a_[k].end());
  }

  double sup_norm() const {
    double m = 0.0;
    for (std::size_t k = 0; k < size(); ++k) m = std::max(m, component_sup(k));
    return m;
  }

 private:
  FitnessModel() = default;
  void check(std::size_t k, const SimplexState& s) const {
    if (k >= size())
      throw std::out_of_range("FitnessModel: type index out of range");
    if (s.size() != size())
      throw std::invalid_argument("FitnessModel: state has wrong number of types");
  }

  bool constant_ = true;
  std::vector<double> f_;
  std::vector<std::vector<double>> a_;
};

inline std::vector<double> fitness_at(const FitnessModel& m, const SimplexState& s) {
  std::vector<double> out;
  m.values(s, out);
  return out;
}

inline double mean_fitness(const FitnessModel& m, const SimplexState& s) {
  double fbar = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) fbar += m.component(k, s) * s[k];
  return fbar;
}

// Uniform bound on the total event intensity sum_{ik} lambda_ik f_i(x) over
// the simplex; dominating rate for thinning and the solver's time step.
inline double intensity_bound(const FitnessModel& m,
                              std::span<const MutationChannel> channels) {
  double bound = 0.0;
  for (const auto& ch : channels) {
    if (ch.ancestor >= m.size() || ch.descendant >= m.size())
      throw std::out_of_range("intensity_bound: channel type index out of range");
    bound += ch.rate * m.component_sup(ch.ancestor);
  }
  return bound;
}

}  // namespace raremut
