#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "abset/search.hpp"
#include "testutil.hpp"

using namespace abset;
using namespace abset::testutil;

namespace {

SaturationPattern with_saturated(int n, std::initializer_list<int> sat) {
  auto p = SaturationPattern::all_free(n);
  for (int i : sat) p.labels[static_cast<size_t>(i)] = MsgLabel::FixedSat;
  return p;
}

void check_witness_feasible(const RoutingSystem& rs, const ThresholdResult& res) {
  const auto lp = build_problem4(rs, res.witness_pattern, res.lambda_max_used);
  VecQ y(lp.num_vars());
  y[0] = res.witness_lambda;
  for (Eigen::Index k = 1; k < lp.num_vars(); ++k) y[k] = res.witness_x_unsat[k - 1];
  for (Eigen::Index r = 0; r < lp.num_rows(); ++r) {
    Rational lhs = 0;
    for (Eigen::Index k = 0; k < lp.num_vars(); ++k) lhs += lp.constraints(r, k) * y[k];
    CHECK(lhs <= lp.rhs[r]);
  }
  CHECK(res.witness_lambda == res.tau);
}

}  // namespace

TEST_CASE("test1: zero rows and poisoned single columns") {
  const auto rs40 = routing_from_text(kAs40);
  // A single unsaturated message keeps only the zero diagonal: weight-0 row.
  auto lonely = SaturationPattern{std::vector<MsgLabel>(12, MsgLabel::FixedSat)};
  lonely.labels[0] = MsgLabel::Free;
  auto res = test1(rs40, lonely);
  CHECK(res.kind == Test1Result::Kind::AllFree);
  CHECK(res.violations == std::vector<int>{0});

  const auto rs53 = routing_from_text(kAs53);
  CHECK(test1(rs53, SaturationPattern::all_free(rs53.n)).pass());

  // Saturating message 10 (1-based) leaves every surviving single-support
  // column clean: still a pass.
  CHECK(test1(rs53, with_saturated(12, {9})).pass());

  // Saturating messages 2 and 10 (1-based) trips all three violation modes:
  // row 0 keeps column 10 whose other reader is saturated, row 2 keeps
  // column 3 whose other reader is saturated, row 8 loses its only support.
  res = test1(rs53, with_saturated(12, {1, 9}));
  CHECK(res.kind == Test1Result::Kind::AllFree);
  CHECK(res.violations == std::vector<int>{0, 2, 8});

  // Same pattern, but a violator was previously fixed unsaturated.
  auto mixed = with_saturated(12, {1, 9});
  mixed.labels[0] = MsgLabel::FixedUnsat;
  CHECK(test1(rs53, mixed).kind == Test1Result::Kind::HasFixed);

  CHECK_THROWS_AS(
      test1(rs53, SaturationPattern{std::vector<MsgLabel>(12, MsgLabel::FixedSat)}),
      std::invalid_argument);
}

TEST_CASE("test2: keeps truth, prunes dominated patterns") {
  const auto rs53 = routing_from_text(kAs53);
  const auto all53 = SaturationPattern::all_free(rs53.n);
  CHECK(test2(rs53, all53, rat(-1), rat(1)) == Test2Result::Keep);
  CHECK(test2(rs53, all53, rat(-1, 3), rat(1)) == Test2Result::Keep);

  // The (6,4) instance tops out at -1/2: an incumbent of -1/3 empties the box.
  const auto rs64 = routing_from_text(kAs64);
  CHECK(test2(rs64, SaturationPattern::all_free(rs64.n), rat(-1, 3), rat(1)) ==
        Test2Result::Prune);
}

TEST_CASE("compute_threshold reproduces the reference thresholds") {
  const struct {
    const char* text;
    Rational tau;
  } expected[] = {{kAs44, rat(-1)},
                  {kAs53, rat(-1, 3)},
                  {kAs40, rat(1)},
                  {kAs73, rat(-1, 9)},
                  {kAs64, rat(-1, 2)}};
  for (const auto& [text, tau] : expected) {
    const auto rs = routing_from_text(text);
    const auto res = compute_threshold(rs);
    CHECK(res.tau == tau);
    CHECK_FALSE(res.budget_exhausted);
    CHECK(res.tau >= -1);
    CHECK(res.tau <= 1);
    CHECK(den(res.tau) <= 16);  // catalog thresholds have small denominators
    check_witness_feasible(rs, res);
  }
}

TEST_CASE("tree search equals the brute-force oracle") {
  for (const char* text : {kAs44, kAs53, kAs64}) {
    const auto rs = routing_from_text(text);
    const auto fast = compute_threshold(rs);
    const auto oracle = brute_force_threshold(rs);
    CHECK(fast.tau == oracle.tau);
    CHECK(oracle.stats.lps_solved == (uint64_t(1) << rs.n) - 1);
    check_witness_feasible(rs, oracle);
  }
}

TEST_CASE("brute force enforces its caps") {
  const auto rs73 = routing_from_text(kAs73);
  CHECK_THROWS_AS(brute_force_threshold(rs73), std::invalid_argument);  // N = 18

  RoutingSystem empty;
  empty.n = 0;
  CHECK_THROWS_AS(brute_force_threshold(empty), std::invalid_argument);
  CHECK_THROWS_AS(compute_threshold(empty), std::invalid_argument);
}

TEST_CASE("pruning tests change work, never the threshold") {
  const auto rs = routing_from_text(kAs53);
  SearchOptions plain;
  const auto base = compute_threshold(rs, plain);

  SearchOptions no1 = plain, no2 = plain, none = plain;
  no1.use_test1 = false;
  no2.use_test2 = false;
  none.use_test1 = false;
  none.use_test2 = false;
  const auto r1 = compute_threshold(rs, no1);
  const auto r2 = compute_threshold(rs, no2);
  const auto r0 = compute_threshold(rs, none);
  CHECK(r1.tau == base.tau);
  CHECK(r2.tau == base.tau);
  CHECK(r0.tau == base.tau);
  CHECK(r0.stats.nodes_visited > base.stats.nodes_visited);
  CHECK(r1.stats.nodes_visited > base.stats.nodes_visited);
  CHECK(r2.stats.lps_solved >= base.stats.lps_solved);
  // Without both tests the tree degenerates to full enumeration: every
  // nonempty pattern is solved exactly once.
  CHECK(r0.stats.lps_solved == (uint64_t(1) << rs.n) - 1);
  CHECK(r0.stats.test1_prunes == 0);
  CHECK(r0.stats.test2_prunes == 0);

  // as_7_3 sits above the oracle cap; solving every pattern that survives
  // the structural test is the strongest affordable cross-check there.
  const auto rs73 = routing_from_text(kAs73);
  const auto r73 = compute_threshold(rs73, no2);
  CHECK(r73.tau == rat(-1, 9));
  CHECK(r73.stats.lps_solved > compute_threshold(rs73).stats.lps_solved);
}

TEST_CASE("search is deterministic") {
  const auto rs = routing_from_text(kAs64);
  const auto a = compute_threshold(rs);
  const auto b = compute_threshold(rs);
  CHECK(a.tau == b.tau);
  CHECK(a.stats.nodes_visited == b.stats.nodes_visited);
  CHECK(a.stats.lps_solved == b.stats.lps_solved);
  CHECK(a.stats.test1_prunes == b.stats.test1_prunes);
  CHECK(a.stats.test2_prunes == b.stats.test2_prunes);
  CHECK(a.witness_pattern.bitstring() == b.witness_pattern.bitstring());
}

TEST_CASE("lambda_max caps the reported value") {
  const auto rs40 = routing_from_text(kAs40);
  SearchOptions capped;
  capped.lambda_max = rat(0);
  auto res = compute_threshold(rs40, capped);
  CHECK(res.tau == 0);  // min(tau, lambda_max) with tau = 1
  CHECK(res.lambda_max_used == 0);

  const auto rs53 = routing_from_text(kAs53);
  res = compute_threshold(rs53, capped);
  CHECK(res.tau == rat(-1, 3));  // unaffected below the cap

  SearchOptions bad;
  bad.lambda_max = rat(3, 2);
  CHECK_THROWS_AS(compute_threshold(rs53, bad), std::invalid_argument);
  bad.lambda_max = rat(-1, 4);
  CHECK_THROWS_AS(compute_threshold(rs53, bad), std::invalid_argument);
}

TEST_CASE("node budget returns a flagged lower bound") {
  const auto rs = routing_from_text(kAs53);
  SearchOptions tight;
  tight.node_budget = 3;
  const auto res = compute_threshold(rs, tight);
  CHECK(res.budget_exhausted);
  CHECK(res.tau <= rat(-1, 3));
  CHECK_THROWS_AS(certify_threshold(rs, res), std::invalid_argument);
}

TEST_CASE("certify_threshold reconstructs the known bad equilibria") {
  // (5,3): the descent lands exactly on the hub/spoke equilibrium.
  const auto rs53 = routing_from_text(kAs53);
  const auto res53 = compute_threshold(rs53);
  const auto cert = certify_threshold(rs53, res53);
  CHECK(cert.lambda_value == rat(-1, 3));
  CHECK(cert.probe_ran);
  for (int i = 0; i < rs53.n; ++i) {
    const bool hub = rs53.message_index[static_cast<size_t>(i)].first == 0 ||
                     rs53.message_index[static_cast<size_t>(i)].first == 2;
    CHECK(cert.equilibrium[i] == (hub ? rat(-1) : rat(-1, 3)));
  }

  // Maximal set: tau = -1 certified by the bottom corner.
  const auto rs44 = routing_from_text(kAs44);
  const auto cert44 = certify_threshold(rs44, compute_threshold(rs44));
  CHECK(cert44.lambda_value == rat(-1));
  for (int i = 0; i < rs44.n; ++i) CHECK(cert44.equilibrium[i] == -1);

  // Codeword support: tau = 1 equals lambda_max, so the probe is skipped.
  const auto rs40 = routing_from_text(kAs40);
  const auto cert40 = certify_threshold(rs40, compute_threshold(rs40));
  CHECK(cert40.lambda_value == rat(1));
  CHECK_FALSE(cert40.probe_ran);
  for (int i = 0; i < rs40.n; ++i) CHECK(cert40.equilibrium[i] == -1);
}

TEST_CASE("random sets: range, rationality, certification, oracle agreement") {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 10; ++iter) {
    const auto spec = random_elementary_as(rng, 2, 6);
    const auto rs = build_routing(spec);
    const auto res = compute_threshold(rs);
    CHECK(res.tau >= -1);
    CHECK(res.tau <= 1);
    check_witness_feasible(rs, res);
    certify_threshold(rs, res);  // throws on any certification failure
    if (rs.n <= 12) CHECK(brute_force_threshold(rs).tau == res.tau);
  }
}
