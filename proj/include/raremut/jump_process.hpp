// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "raremut/fitness.hpp"
#include "raremut/flow.hpp"
#include "raremut/rng.hpp"
#include "raremut/simplex.hpp"

namespace raremut {

// Tracks how far raw state vectors stray from the simplex before they are
// validated: the most negative entry and the largest |sum - 1| ever seen.
class SimplexAudit {
 public:
  void record(std::span<const double> raw) {
    double sum = 0.0;
    for (double v : raw) {
      if (v < min_entry_) min_entry_ = v;
      sum += v;
    }
    double dev = std::abs(sum - 1.0);
    if (dev > max_sum_deviation_) max_sum_deviation_ = dev;
    ++count_;
  }

  void merge(const SimplexAudit& other) {
    if (other.min_entry_ < min_entry_) min_entry_ = other.min_entry_;
    if (other.max_sum_deviation_ > max_sum_deviation_)
      max_sum_deviation_ = other.max_sum_deviation_;
    count_ += other.count_;
  }

  double min_entry() const {
    return count_ == 0 ? 0.0 : min_entry_;
  }
  double max_sum_deviation() const { return max_sum_deviation_; }
  std::int64_t states() const { return count_; }

 private:
  double min_entry_ = std::numeric_limits<double>::infinity();
  double max_sum_deviation_ = 0.0;
  std::int64_t count_ = 0;
};

struct JumpEvent {
  double time;
  std::size_t ancestor, descendant;
  SimplexState state;  // state right after the jump
};

struct PathSample {
  SimplexState initial;
  double horizon = 0.0;
  std::vector<JumpEvent> events;
  std::vector<double> snapshot_times;
  std::vector<SimplexState> snapshots;  // aligned with snapshot_times
};

namespace detail {

// Selection flow applied to the raw frequency vector; the raw result is fed
// to the audit before simplex validation clamps it.
inline SimplexState advance_raw(const FitnessModel& m, const SimplexState& x,
                                double dt, const FlowConfig& flow,
                                SimplexAudit* audit) {
  ReducedState r = replicator_advance(m, reduce(x), dt, flow);
  std::vector<double> raw(x.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < r.dimension(); ++j) {
    raw[j + 1] = r[j];
    sum += r[j];
  }
  raw[0] = 1.0 - sum;
  if (audit) audit->record(raw);
  return SimplexState(std::move(raw));
}

inline SimplexState jump_raw(const SimplexState& x, const MutationChannel& ch,
                             SimplexAudit* audit) {
  std::vector<double> raw = x.freqs();
  double moved = ch.fraction * raw[ch.ancestor];
  raw[ch.ancestor] -= moved;
  raw[ch.descendant] += moved;
  if (audit) audit->record(raw);
  return SimplexState(std::move(raw));
}

}  // namespace detail

// One trajectory of the selection dynamics with mutation events, simulated
// by thinning: candidate times arrive at the constant dominating rate
// intensity_bound; a candidate at state x is kept with probability
// sum_ch lambda_ch f_anc(x) / bound and the channel is then drawn in
// proportion to lambda_ch f_anc(x).  Between events the state follows the
// selection flow.  Snapshot times must be nondecreasing and <= horizon.
inline PathSample simulate_path(const FitnessModel& m,
                                std::span<const MutationChannel> channels,
                                const SimplexState& x0, double horizon,
                                PathRng& rng, const FlowConfig& flow,
                                std::span<const double> snapshot_times = {},
                                SimplexAudit* audit = nullptr) {
  if (x0.size() != m.size())
    throw std::invalid_argument("simulate_path: state/model size mismatch");
  if (!(horizon >= 0.0))
    throw std::invalid_argument("simulate_path: horizon must be >= 0");
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    if (snapshot_times[i] < 0.0 || snapshot_times[i] > horizon)
      throw std::invalid_argument("simulate_path: snapshot time outside [0, horizon]");
    if (i > 0 && snapshot_times[i] < snapshot_times[i - 1])
      throw std::invalid_argument("simulate_path: snapshot times must be nondecreasing");
  }
  const double bound = intensity_bound(m, channels);

  PathSample path{x0, horizon, {}, {snapshot_times.begin(), snapshot_times.end()}, {}};
  path.snapshots.reserve(path.snapshot_times.size());
  if (audit) audit->record(x0.freqs());

  SimplexState x = x0;
  double t = 0.0;
  std::size_t next_snap = 0;
  std::vector<double> f;

  auto advance_to = [&](double target) {
    while (next_snap < path.snapshot_times.size() &&
           path.snapshot_times[next_snap] <= target) {
      double ts = path.snapshot_times[next_snap];
      if (ts > t) x = detail::advance_raw(m, x, ts - t, flow, audit);
      t = ts;
      path.snapshots.push_back(x);
      ++next_snap;
    }
    if (target > t) {
      x = detail::advance_raw(m, x, target - t, flow, audit);
      t = target;
    }
  };

  while (true) {
    double wait = bound > 0.0 ? rng.exponential(bound)
                              : std::numeric_limits<double>::infinity();
    if (t + wait >= horizon) {
      advance_to(horizon);
      break;
    }
    advance_to(t + wait);

    // Accept or discard the candidate by the actual intensity at x.
    m.values(x, f);
    double total = 0.0;
    for (const auto& ch : channels) total += ch.rate * f[ch.ancestor];
    double u = rng.uniform01() * bound;
    if (u >= total) continue;

    // Reuse u (uniform on [0, total)) to pick the channel.
    double acc = 0.0;
    for (const auto& ch : channels) {
      acc += ch.rate * f[ch.ancestor];
      if (u < acc) {
        x = detail::jump_raw(x, ch, audit);
        path.events.push_back(JumpEvent{t, ch.ancestor, ch.descendant, x});
        break;
      }
    }
  }
  return path;
}

struct MonteCarloEstimate {
  std::vector<double> times;
  std::vector<std::vector<double>> mean;       // [time][type]
  std::vector<std::vector<double>> std_error;  // [time][type]
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  SimplexAudit audit;
};

namespace detail {

// Fixed block size for the Monte Carlo reduction: sums are accumulated per
// block and merged in block order, so results do not depend on how blocks
// are scheduled across threads.
inline constexpr std::size_t mc_block_size = 1024;

struct McBlock {
  std::vector<double> sum, sumsq;  // flat [time * types]
  SimplexAudit audit;
};

}  // namespace detail

// Sample mean and standard error of the type frequencies at the given times
// (nondecreasing; the last one is the horizon), over n_paths independent
// trajectories.  Path p always uses the random stream (seed, p), so the
// estimate is reproducible for any thread count.
inline MonteCarloEstimate monte_carlo_expectation(
    const FitnessModel& m, std::span<const MutationChannel> channels,
    const SimplexState& x0, std::span<const double> times, std::size_t n_paths,
    std::uint64_t seed, const FlowConfig& flow, unsigned threads = 1) {
  if (times.empty())
    throw std::invalid_argument("monte_carlo_expectation: no sample times");
  if (n_paths == 0)
    throw std::invalid_argument("monte_carlo_expectation: n_paths must be > 0");
  const double horizon = times.back();
  const std::size_t types = m.size();
  const std::size_t cells = times.size() * types;
  const std::size_t n_blocks =
      (n_paths + detail::mc_block_size - 1) / detail::mc_block_size;

  std::vector<detail::McBlock> blocks(n_blocks);
  std::atomic<std::size_t> next_block{0};
  std::exception_ptr failure;
  std::mutex failure_guard;

  auto worker = [&]() {
    try {
      for (;;) {
        std::size_t b = next_block.fetch_add(1);
        if (b >= n_blocks) return;
        detail::McBlock& blk = blocks[b];
        blk.sum.assign(cells, 0.0);
        blk.sumsq.assign(cells, 0.0);
        std::size_t lo = b * detail::mc_block_size;
        std::size_t hi = std::min(n_paths, lo + detail::mc_block_size);
        for (std::size_t p = lo; p < hi; ++p) {
          PathRng rng(seed, p);
          PathSample path = simulate_path(m, channels, x0, horizon, rng, flow,
                                          times, &blk.audit);
          for (std::size_t ti = 0; ti < times.size(); ++ti) {
            const SimplexState& xs = path.snapshots[ti];
            for (std::size_t k = 0; k < types; ++k) {
              double v = xs[k];
              blk.sum[ti * types + k] += v;
              blk.sumsq[ti * types + k] += v * v;
            }
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_guard);
      if (!failure) failure = std::current_exception();
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    unsigned n = std::min<std::size_t>(threads, n_blocks);
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> sum(cells, 0.0), sumsq(cells, 0.0);
  MonteCarloEstimate est;
  for (const auto& blk : blocks) {
    for (std::size_t c = 0; c < cells; ++c) {
      sum[c] += blk.sum[c];
      sumsq[c] += blk.sumsq[c];
    }
    est.audit.merge(blk.audit);
  }

  est.times.assign(times.begin(), times.end());
  est.n_paths = n_paths;
  est.seed = seed;
  est.mean.assign(times.size(), std::vector<double>(types));
  est.std_error.assign(times.size(), std::vector<double>(types));
  double n = static_cast<double>(n_paths);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (std::size_t k = 0; k < types; ++k) {
      std::size_t c = ti * types + k;
      double mean = sum[c] / n;
      est.mean[ti][k] = mean;
      double var = n_paths < 2 ? 0.0
                               : std::max(0.0, (sumsq[c] - n * mean * mean) /
                                                   (n - 1.0));
      est.std_error[ti][k] = std::sqrt(var / n);
    }
  }
  return est;
}

}  // namespace raremut
