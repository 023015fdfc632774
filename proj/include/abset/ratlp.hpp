#pragma once

#include <optional>
#include <vector>

#include "abset/asgraph.hpp"
#include "abset/pattern.hpp"
#include "abset/rational.hpp"

namespace abset {

/// max objective . y  subject to  constraints . y <= rhs  and  lower <= y <= upper.
/// All entries exact rationals; bounds finite.
struct LinearProgram {
  VecQ objective;
  MatQ constraints;
  VecQ rhs;
  VecQ lower;
  VecQ upper;

  Eigen::Index num_vars() const { return objective.size(); }
  Eigen::Index num_rows() const { return constraints.rows(); }
};

struct LpOutcome {
  enum class Status { Optimal, Infeasible };
  Status status = Status::Infeasible;
  Rational value;
  VecQ point;
  int pivots = 0;

  bool optimal() const { return status == Status::Optimal; }
};

/// Exact primal simplex (dense tableau, Bland's anti-cycling rule, phase I
/// via a single auxiliary variable). Deterministic for fixed input. The
/// finite variable bounds make unboundedness impossible; hitting it anyway
/// throws std::logic_error.
LpOutcome simplex_max(const LinearProgram& lp);

/// The per-pattern linearized equilibrium feasibility system over
/// y = [lambda; x_unsat]: one <=0 block for the unsaturated rows, one >=0
/// block for the saturated rows, bounds -1 <= x_unsat <= 1 and
/// -1 <= lambda <= lambda_max, objective = lambda.
LinearProgram build_problem4(const RoutingSystem& rs, const SaturationPattern& pattern,
                             const Rational& lambda_max);

struct TightenResult {
  bool empty = false;
  int witness_row = -1;  // row that forced an empty box
  VecQ lower;
  VecQ upper;
  int sweeps = 0;
};

/// Interval propagation over the rows of lp.constraints: for every row and
/// every variable with a nonzero coefficient, derives the implied one-sided
/// bound from the worst-case contribution of the other variables, sweeping
/// rows in order until a fixpoint or max_sweeps. Prune-only: never excludes
/// a feasible point of the box. max_sweeps < 0 selects the 2(M+1) default.
TightenResult tighten_bounds(const LinearProgram& lp, VecQ lower, VecQ upper,
                             int max_sweeps = -1);

}  // namespace abset
