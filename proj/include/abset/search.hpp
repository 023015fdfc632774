#pragma once

#include <cstdint>
#include <optional>

#include "abset/dynamics.hpp"
#include "abset/pattern.hpp"
#include "abset/ratlp.hpp"

namespace abset {

struct SearchStats {
  std::uint64_t nodes_visited = 0;
  std::uint64_t lps_solved = 0;
  std::uint64_t test1_prunes = 0;
  std::uint64_t test2_prunes = 0;
};

struct ThresholdResult {
  Rational tau;
  SaturationPattern witness_pattern;
  Rational witness_lambda;
  VecQ witness_x_unsat;  // one entry per unsaturated message of the pattern
  Rational lambda_max_used;
  SearchStats stats;
  bool budget_exhausted = false;  // tau is then only a lower bound
};

/// Structural prune on the unsaturated submatrix: an all-zero row, or a
/// weight-1 row whose surviving column has support among the saturated
/// messages, rules the pattern out entirely.
struct Test1Result {
  enum class Kind { Pass, AllFree, HasFixed };
  Kind kind = Kind::Pass;
  std::vector<int> violations;  // message ids, ascending

  bool pass() const { return kind == Kind::Pass; }
};
Test1Result test1(const RoutingSystem& rs, const SaturationPattern& pattern);

/// Bound-propagation prune seeded with the incumbent threshold: KEEP means
/// the pattern may still hold a solution above tau_so_far.
enum class Test2Result { Keep, Prune };
Test2Result test2(const RoutingSystem& rs, const SaturationPattern& pattern,
                  const Rational& tau_so_far, const Rational& lambda_max);

struct SearchOptions {
  Rational lambda_max = rat(1);
  bool use_test1 = true;
  bool use_test2 = true;
  std::uint64_t node_budget = UINT64_MAX;
};

/// Depth-first search over saturation patterns. Each node classifies its
/// pattern with test1; a passing node is solved (once per distinct pattern,
/// gated by test2) and then branches on the free message with the heaviest
/// routing row; an all-free violation moves every violator to the saturated
/// side in one batch; violations touching a fixed-unsaturated message close
/// the subtree. Matches brute_force_threshold exactly.
ThresholdResult compute_threshold(const RoutingSystem& rs, const SearchOptions& opts = {});

/// Small-N oracle: solves the inner program for every nonempty unsaturated
/// subset. Throws if rs.n exceeds the cap or the system has no messages.
ThresholdResult brute_force_threshold(const RoutingSystem& rs,
                                      const Rational& lambda_max = rat(1),
                                      int max_messages = 16);

struct CertifyOptions {
  Rational epsilon = rat(1, 16);      // probe margin above tau
  std::uint64_t corner_budget = 256;  // sampled corners when 2^N is too large
  int max_iters = kDefaultMaxIters;
  std::uint64_t seed = 1;
};

struct EquilibriumCertificate {
  VecQ equilibrium;        // x' with is_equilibrium(x', tau * 1)
  Rational lambda_value;   // = tau
  int descent_steps = 0;
  bool probe_ran = false;  // above-threshold convergence probe (skipped when
                           // tau was capped by lambda_max or tau + eps > 1)
  std::uint64_t probe_corners = 0;
};

/// Reconstructs a genuine bad equilibrium at lambda = tau * 1 from the LP
/// witness by monotone descent, verifies it exactly, and (when meaningful)
/// probes that channels at tau + epsilon show no bad trajectory. Failure
/// throws std::logic_error: the construction is guaranteed to succeed.
EquilibriumCertificate certify_threshold(const RoutingSystem& rs,
                                         const ThresholdResult& result,
                                         const CertifyOptions& opts = {});

}  // namespace abset
