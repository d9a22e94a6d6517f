// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace raremut {

// Round-off slack accepted when checking that a frequency vector lies on the
// probability simplex.  Entries inside the slack are clamped back onto the
// simplex; anything larger is treated as a logic error upstream.
inline constexpr double simplex_tol = 1e-12;

namespace detail {

inline void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace detail

// Frequency vector (x_0, ..., x_d) of d+1 types: entries in [0,1], sum 1.
// Type indices are zero-based throughout.
class SimplexState {
 public:
  explicit SimplexState(std::vector<double> freqs) : freqs_(std::move(freqs)) {
    if (freqs_.size() < 2)
      throw std::invalid_argument("SimplexState: need at least two types");
    detail::check_finite(freqs_, "SimplexState");
    double sum = std::accumulate(freqs_.begin(), freqs_.end(), 0.0);
    if (std::abs(sum - 1.0) > simplex_tol)
      throw std::invalid_argument("SimplexState: frequencies sum to " +
                                  std::to_string(sum) + ", not 1");
    for (double& x : freqs_) {
      if (x < -simplex_tol || x > 1.0 + simplex_tol)
        throw std::invalid_argument("SimplexState: frequency " +
                                    std::to_string(x) + " outside [0,1]");
      x = std::clamp(x, 0.0, 1.0);
    }
  }

  // For external (user/file) input: rescale a nonnegative vector to sum 1.
  static SimplexState normalized(std::vector<double> raw) {
    detail::check_finite(raw, "SimplexState::normalized");
    double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (sum <= 0.0)
      throw std::invalid_argument("SimplexState::normalized: sum must be positive");
    for (double& x : raw) {
      if (x < 0.0)
        throw std::invalid_argument("SimplexState::normalized: negative entry");
      x /= sum;
    }
    // Push rounding residue into the largest entry so the total is exact.
    double resid = 1.0 - std::accumulate(raw.begin(), raw.end(), 0.0);
    *std::max_element(raw.begin(), raw.end()) += resid;
    return SimplexState(std::move(raw));
  }

  std::size_t dimension() const { return freqs_.size() - 1; }  // d
  std::size_t size() const { return freqs_.size(); }           // d + 1
  double operator[](std::size_t k) const { return freqs_[k]; }
  const std::vector<double>& freqs() const { return freqs_; }

 private:
  std::vector<double> freqs_;
};

// Reduced coordinates (x_1, ..., x_d); x_0 = 1 - sum is implicit.
class ReducedState {
 public:
  explicit ReducedState(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty())
      throw std::invalid_argument("ReducedState: need at least one coordinate");
    detail::check_finite(coords_, "ReducedState");
    double sum = 0.0;
    for (double& x : coords_) {
      if (x < -simplex_tol)
        throw std::invalid_argument("ReducedState: negative coordinate " +
                                    std::to_string(x));
      x = std::max(x, 0.0);
      sum += x;
    }
    if (sum > 1.0 + simplex_tol)
      throw std::invalid_argument("ReducedState: coordinates sum to " +
                                  std::to_string(sum) + " > 1");
  }

  std::size_t dimension() const { return coords_.size(); }  // d
  double operator[](std::size_t j) const { return coords_[j]; }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::vector<double> coords_;
};

// One mutation channel: events convert a `fraction` of the ancestor type's
// mass into the descendant type, firing at `rate` per unit of ancestor
// fitness-weighted frequency.
struct MutationChannel {
  std::size_t ancestor;
  std::size_t descendant;
  double rate;      // lambda >= 0
  double fraction;  // gamma in (0, 1]

  MutationChannel(std::size_t anc, std::size_t desc, double lambda, double gamma)
      : ancestor(anc), descendant(desc), rate(lambda), fraction(gamma) {
    if (anc == desc)
      throw std::invalid_argument("MutationChannel: ancestor == descendant");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("MutationChannel: rate must be >= 0");
    if (!(gamma > 0.0) || gamma > 1.0)
      throw std::invalid_argument("MutationChannel: fraction must be in (0,1]");
  }

  // Effective mutation strength of the channel.
  double effective_rate() const { return rate * fraction; }
};

inline SimplexState lift(const ReducedState& r) {
  std::vector<double> x(r.dimension() + 1);
  double sum = 0.0;
  for (std::size_t j = 0; j < r.dimension(); ++j) {
    x[j + 1] = r[j];
    sum += r[j];
  }
  x[0] = 1.0 - sum;
  return SimplexState(std::move(x));
}

inline ReducedState reduce(const SimplexState& s) {
  std::vector<double> r(s.freqs().begin() + 1, s.freqs().end());
  return ReducedState(std::move(r));
}

// Post-jump state: x_i loses fraction*x_i, x_k gains the same mass.
inline SimplexState apply_jump(const SimplexState& s, const MutationChannel& ch) {
  if (ch.ancestor >= s.size() || ch.descendant >= s.size())
    throw std::out_of_range("apply_jump: channel type index out of range");
  std::vector<double> x = s.freqs();
  double moved = ch.fraction * x[ch.ancestor];
  x[ch.ancestor] -= moved;
  x[ch.descendant] += moved;
  return SimplexState(std::move(x));
}

// Same jump expressed on reduced coordinates.
inline ReducedState apply_jump(const ReducedState& r, const MutationChannel& ch) {
  return reduce(apply_jump(lift(r), ch));
}

}  // namespace raremut
