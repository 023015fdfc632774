#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abset/asgraph.hpp"
#include "abset/rational.hpp"

namespace abset {

/// Vector of the N in-set extrinsic messages; construction clamps into [-1,1].
class MessageState {
 public:
  explicit MessageState(VecQ x) : x_(saturate(std::move(x))) {}
  const VecQ& values() const { return x_; }
  Eigen::Index size() const { return x_.size(); }

 private:
  VecQ x_;
};

/// The a channel values, clamped into [-1,1]; punctured VNs are pinned to 0.
class ChannelVector {
 public:
  explicit ChannelVector(VecQ lambda, std::vector<int> punctured = {});
  const VecQ& values() const { return lambda_; }
  const std::vector<int>& punctured() const { return punctured_; }

 private:
  VecQ lambda_;
  std::vector<int> punctured_;
};

struct TrajectoryResult {
  enum class Outcome { ConvergedAllOnes, Equilibrium, LimitCycle, BudgetExhausted };
  Outcome outcome = Outcome::BudgetExhausted;
  int iterations = 0;
  VecQ state;                    // equilibrium state, or last state
  int period = 0;                // limit cycles only
  std::vector<VecQ> cycle_states;

  bool converged() const { return outcome == Outcome::ConvergedAllOnes; }
};

inline constexpr int kDefaultMaxIters = 200;
inline constexpr std::size_t kDefaultStateCap = 1'000'000;

/// One decoding iteration. Parallel schedules evaluate
///   x' = sat(A(x - 1) + 2*1 + R*lambda)
/// in one shot; sequential schedules update messages in check-node activation
/// order, each reading the freshest values of its inputs.
VecQ step(const RoutingSystem& rs, const SchedulePartition& sp, const VecQ& x,
          const ChannelVector& ch);
inline MessageState step(const RoutingSystem& rs, const SchedulePartition& sp,
                         const MessageState& x, const ChannelVector& ch) {
  return MessageState(step(rs, sp, x.values(), ch));
}

/// Test hook: parallel evaluation without the channel clamp, for driving the
/// system with out-of-range channel values.
VecQ step_parallel_raw(const MatB& routing, const MatB& repetition, const VecQ& x,
                       const VecQ& lambda_unclamped);

/// Exact fixed-point test of the parallel map (schedule-independent).
bool is_equilibrium(const RoutingSystem& rs, const VecQ& x, const ChannelVector& ch);

TrajectoryResult run(const RoutingSystem& rs, const SchedulePartition& sp,
                     const MessageState& x0, const ChannelVector& ch,
                     int max_iters = kDefaultMaxIters,
                     std::size_t state_cap = kDefaultStateCap);

/// A deterministic (lambda, x0) pair injected into a sweep alongside the
/// randomized trials.
struct SweepProbe {
  VecQ lambda;
  std::optional<VecQ> x0;  // defaults to all -1, the extremal start
};

struct SweepOutcomes {
  std::uint64_t converged = 0;
  std::uint64_t equilibrium = 0;
  std::uint64_t cycle = 0;
  std::uint64_t budget = 0;

  std::uint64_t failures() const { return equilibrium + cycle + budget; }
  std::uint64_t total() const { return converged + failures(); }
};

struct SweepReport {
  std::string as_name;
  Rational tau;
  Rational lch;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  SweepOutcomes outcomes;
  std::vector<int> punctured;                  // puncture sweeps only
  std::optional<TrajectoryResult> first_bad;   // earliest non-converged trajectory
  std::optional<VecQ> first_bad_lambda;
};

struct SweepOptions {
  int max_iters = kDefaultMaxIters;
  int jobs = 1;
  std::vector<SweepProbe> probes;
};

/// Randomized stability sweep: channel entries drawn from the 1/16 grid
/// scaled into [-lch, lch], initial states from {-1, 0, 1}^N, each trial run
/// to completion. Per-trial seeds are derived from (seed, trial), so results
/// do not depend on the number of workers.
SweepReport lch_sweep(const RoutingSystem& rs, const SchedulePartition& sp,
                      const Rational& tau, const Rational& lch, std::uint64_t trials,
                      std::uint64_t seed, const SweepOptions& opts = {});

struct PunctureOptions {
  Rational margin = rat(1, 16);            // sampling band (tau, tau+margin]
  std::optional<Rational> rest_lambda;     // fixed value for non-punctured VNs
  int max_iters = kDefaultMaxIters;
  int jobs = 1;
  std::uint64_t corner_cap = 1u << 16;     // exhaustive corner grid up to this size
};

/// Puncturing sweep: punctured VNs carry lambda = 0, the rest stay in a band
/// strictly above tau (or at a fixed rest_lambda). When 2^N fits the corner
/// cap the initial states are the full corner grid; otherwise `trials` random
/// corner states are drawn. Requires tau < 0 and |punctured| <= a-1.
SweepReport puncture_check(const RoutingSystem& rs, const SchedulePartition& sp,
                           const Rational& tau, const std::vector<int>& punctured,
                           std::uint64_t trials, std::uint64_t seed,
                           const PunctureOptions& opts = {});

/// Runs every corner of {-1,1}^N under a fixed channel vector, with
/// memoization across shared trajectory tails. N must be at most 30.
SweepOutcomes corner_grid_outcomes(const RoutingSystem& rs, const SchedulePartition& sp,
                                   const ChannelVector& ch, int max_iters = kDefaultMaxIters,
                                   std::optional<TrajectoryResult>* first_bad = nullptr);

}  // namespace abset
