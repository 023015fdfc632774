#include "abset/search.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace abset {

namespace {

struct Adjacency {
  std::vector<std::vector<int>> row;  // incoming supports, <= 2 each
  std::vector<std::vector<int>> col;  // outgoing recipients, <= 2 each

  static Adjacency build(const MatB& a) {
    Adjacency adj;
    const int n = static_cast<int>(a.rows());
    adj.row.assign(static_cast<size_t>(n), {});
    adj.col.assign(static_cast<size_t>(n), {});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (a(i, j)) {
          adj.row[static_cast<size_t>(i)].push_back(j);
          adj.col[static_cast<size_t>(j)].push_back(i);
        }
    return adj;
  }
};

Test1Result test1_impl(const Adjacency& adj, const std::vector<MsgLabel>& labels) {
  Test1Result res;
  const int n = static_cast<int>(labels.size());
  for (int j = 0; j < n; ++j) {
    if (labels[static_cast<size_t>(j)] == MsgLabel::FixedSat) continue;
    int weight = 0;
    int survivor = -1;
    for (int h : adj.row[static_cast<size_t>(j)])
      if (labels[static_cast<size_t>(h)] != MsgLabel::FixedSat) {
        ++weight;
        survivor = h;
      }
    bool violated = false;
    if (weight == 0) {
      violated = true;  // forces x_j >= 2 + lambda >= 1
    } else if (weight == 1) {
      // Single unsaturated support: fatal if that column also feeds a
      // saturated message.
      for (int i : adj.col[static_cast<size_t>(survivor)])
        if (labels[static_cast<size_t>(i)] == MsgLabel::FixedSat) {
          violated = true;
          break;
        }
    }
    if (violated) res.violations.push_back(j);
  }
  if (res.violations.empty()) {
    res.kind = Test1Result::Kind::Pass;
  } else {
    res.kind = Test1Result::Kind::AllFree;
    for (int j : res.violations)
      if (labels[static_cast<size_t>(j)] == MsgLabel::FixedUnsat) {
        res.kind = Test1Result::Kind::HasFixed;
        break;
      }
  }
  return res;
}

struct TreeSearch {
  const RoutingSystem& rs;
  const SearchOptions& opts;
  Adjacency adj;
  std::vector<int> branch_order;  // by descending routing-row weight, then index

  std::vector<MsgLabel> labels;
  ThresholdResult best;
  bool have_witness = false;
  bool out_of_budget = false;

  TreeSearch(const RoutingSystem& rs_, const SearchOptions& opts_)
      : rs(rs_), opts(opts_), adj(Adjacency::build(rs_.routing)) {
    labels.assign(static_cast<size_t>(rs.n), MsgLabel::Free);
    branch_order.resize(static_cast<size_t>(rs.n));
    std::iota(branch_order.begin(), branch_order.end(), 0);
    std::stable_sort(branch_order.begin(), branch_order.end(), [&](int i, int j) {
      return adj.row[static_cast<size_t>(i)].size() > adj.row[static_cast<size_t>(j)].size();
    });
    best.tau = rat(-1);
    best.lambda_max_used = opts.lambda_max;
  }

  void solve_pattern() {
    const SaturationPattern pattern{labels};
    if (opts.use_test2 &&
        test2(rs, pattern, best.tau, opts.lambda_max) == Test2Result::Prune) {
      ++best.stats.test2_prunes;
      return;
    }
    const LinearProgram lp = build_problem4(rs, pattern, opts.lambda_max);
    const LpOutcome out = simplex_max(lp);
    ++best.stats.lps_solved;
    if (!out.optimal()) return;
    if (!have_witness || out.value > best.tau) {
      have_witness = true;
      best.tau = out.value;
      best.witness_pattern = pattern;
      best.witness_lambda = out.point[0];
      best.witness_x_unsat = out.point.tail(out.point.size() - 1);
    }
  }

  void visit(bool pattern_is_new) {
    if (out_of_budget) return;
    if (++best.stats.nodes_visited > opts.node_budget) {
      out_of_budget = true;
      return;
    }
    const bool any_unsat =
        std::any_of(labels.begin(), labels.end(),
                    [](MsgLabel l) { return l != MsgLabel::FixedSat; });
    if (!any_unsat) return;

    Test1Result t1;
    if (opts.use_test1) t1 = test1_impl(adj, labels);

    if (t1.kind == Test1Result::Kind::Pass) {
      if (pattern_is_new) solve_pattern();
      const int branch = pick_branch_message();
      if (branch < 0) return;  // every message fixed
      labels[static_cast<size_t>(branch)] = MsgLabel::FixedSat;
      visit(true);
      labels[static_cast<size_t>(branch)] = MsgLabel::FixedUnsat;
      visit(false);
      labels[static_cast<size_t>(branch)] = MsgLabel::Free;
    } else if (t1.kind == Test1Result::Kind::AllFree) {
      // Batch move: saturating only part of the violators leaves the rest
      // violating, so no pattern in between can be feasible.
      ++best.stats.test1_prunes;
      for (int j : t1.violations) labels[static_cast<size_t>(j)] = MsgLabel::FixedSat;
      visit(true);
      for (int j : t1.violations) labels[static_cast<size_t>(j)] = MsgLabel::Free;
    } else {
      // A fixed-unsaturated message is violating: the whole subtree keeps it
      // unsaturated and inherits the violation.
      ++best.stats.test1_prunes;
    }
  }

  int pick_branch_message() const {
    for (int i : branch_order)
      if (labels[static_cast<size_t>(i)] == MsgLabel::Free) return i;
    return -1;
  }
};

}  // namespace

Test1Result test1(const RoutingSystem& rs, const SaturationPattern& pattern) {
  if (pattern.size() != rs.n)
    throw std::invalid_argument("pattern size does not match message count");
  if (pattern.unsat_indices().empty())
    throw std::invalid_argument("empty unsaturated set");
  return test1_impl(Adjacency::build(rs.routing), pattern.labels);
}

Test2Result test2(const RoutingSystem& rs, const SaturationPattern& pattern,
                  const Rational& tau_so_far, const Rational& lambda_max) {
  const LinearProgram lp = build_problem4(rs, pattern, lambda_max);
  VecQ lower = lp.lower;
  VecQ upper = lp.upper;
  lower[0] = tau_so_far;  // only candidates above the incumbent matter
  const auto res = tighten_bounds(lp, std::move(lower), std::move(upper));
  return res.empty ? Test2Result::Prune : Test2Result::Keep;
}

ThresholdResult compute_threshold(const RoutingSystem& rs, const SearchOptions& opts) {
  if (rs.n <= 0) throw std::invalid_argument("routing system has no messages");
  if (opts.lambda_max < 0 || opts.lambda_max > 1)
    throw std::invalid_argument("lambda_max must lie in [0, 1]");

  TreeSearch search(rs, opts);
  search.visit(true);
  search.best.budget_exhausted = search.out_of_budget;
  if (!search.have_witness)
    throw std::logic_error("threshold search finished without any feasible pattern");
  return search.best;
}

ThresholdResult brute_force_threshold(const RoutingSystem& rs, const Rational& lambda_max,
                                      int max_messages) {
  if (rs.n <= 0) throw std::invalid_argument("routing system has no messages");
  if (rs.n > max_messages)
    throw std::invalid_argument("message count exceeds the brute-force cap");
  if (lambda_max < 0 || lambda_max > 1)
    throw std::invalid_argument("lambda_max must lie in [0, 1]");

  ThresholdResult best;
  best.tau = rat(-1);
  best.lambda_max_used = lambda_max;
  bool have = false;

  const uint64_t limit = uint64_t(1) << rs.n;
  for (uint64_t mask = 1; mask < limit; ++mask) {
    SaturationPattern pattern;
    pattern.labels.assign(static_cast<size_t>(rs.n), MsgLabel::FixedSat);
    for (int i = 0; i < rs.n; ++i)
      if ((mask >> i) & 1) pattern.labels[static_cast<size_t>(i)] = MsgLabel::FixedUnsat;

    ++best.stats.nodes_visited;
    const LpOutcome out = simplex_max(build_problem4(rs, pattern, lambda_max));
    ++best.stats.lps_solved;
    if (!out.optimal()) continue;
    if (!have || out.value > best.tau) {
      have = true;
      best.tau = out.value;
      best.witness_pattern = pattern;
      best.witness_lambda = out.point[0];
      best.witness_x_unsat = out.point.tail(out.point.size() - 1);
    }
  }
  if (!have) throw std::logic_error("brute force found no feasible pattern");
  return best;
}

EquilibriumCertificate certify_threshold(const RoutingSystem& rs,
                                         const ThresholdResult& result,
                                         const CertifyOptions& opts) {
  if (result.budget_exhausted)
    throw std::invalid_argument("cannot certify a budget-limited lower bound");

  const Rational tau = result.tau;
  const auto unsat = result.witness_pattern.unsat_indices();

  // Witness extrinsic vector, extended with 1 on the saturated side.
  VecQ x0 = constant_vec(rs.n, rat(1));
  for (size_t k = 0; k < unsat.size(); ++k)
    x0[unsat[k]] = result.witness_x_unsat[static_cast<Eigen::Index>(k)];

  bool all_ones = true;
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    if (x0[i] != 1) all_ones = false;
  if (all_ones) {
    // Fully saturated witness forces lambda <= -1; fall back to the
    // universal bad equilibrium at the bottom corner.
    if (tau != -1) throw std::logic_error("saturated witness with tau > -1");
    x0 = constant_vec(rs.n, rat(-1));
  }

  const ChannelVector ch(constant_vec(rs.vn_count, tau));
  const auto sp = schedule_partition(rs);

  // Monotone descent to a fixed point; each step must be elementwise <= the
  // previous state, and the exact grid makes termination finite.
  EquilibriumCertificate cert;
  cert.lambda_value = tau;
  VecQ x = x0;
  constexpr int kDescentGuard = 1'000'000;
  for (int step_count = 0;; ++step_count) {
    if (step_count > kDescentGuard) throw std::logic_error("descent did not terminate");
    VecQ next = step(rs, sp, x, ch);
    for (Eigen::Index i = 0; i < next.size(); ++i)
      if (next[i] > x[i]) throw std::logic_error("descent increased a message");
    if (next == x) {
      cert.descent_steps = step_count;
      break;
    }
    x = next;
  }

  if (!is_equilibrium(rs, x, ch)) throw std::logic_error("descent missed an equilibrium");
  bool some_below_one = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > x0[i]) throw std::logic_error("equilibrium above its start");
    if (x[i] < 1) some_below_one = true;
  }
  if (!some_below_one) throw std::logic_error("equilibrium is the all-ones state");
  cert.equilibrium = x;

  // Above-threshold probe: valid only when tau is the uncapped threshold and
  // tau + epsilon is still an admissible channel value.
  if (tau < result.lambda_max_used && tau + opts.epsilon <= 1) {
    const ChannelVector probe_ch(constant_vec(rs.vn_count, tau + opts.epsilon));
    if (rs.n <= 14) {
      std::optional<TrajectoryResult> bad;
      const auto outcomes = corner_grid_outcomes(rs, sp, probe_ch, opts.max_iters, &bad);
      if (outcomes.failures() != 0)
        throw std::logic_error("bad trajectory above the certified threshold");
      cert.probe_corners = outcomes.total();
    } else {
      std::mt19937_64 rng(opts.seed);
      for (uint64_t t = 0; t <= opts.corner_budget; ++t) {
        VecQ corner(rs.n);
        for (int i = 0; i < rs.n; ++i)
          corner[i] = (t == 0) ? rat(-1) : (rng() & 1 ? rat(1) : rat(-1));
        const auto res = run(rs, sp, MessageState(corner), probe_ch, opts.max_iters);
        if (!res.converged())
          throw std::logic_error("bad trajectory above the certified threshold");
        ++cert.probe_corners;
      }
    }
    cert.probe_ran = true;
  }
  return cert;
}

}  // namespace abset
