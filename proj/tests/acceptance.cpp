// Acceptance suite: one pass/fail line per criterion, exact-arithmetic
// assertions throughout. Any failure flips the exit code.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "abset/dynamics.hpp"
#include "abset/search.hpp"
#include "testutil.hpp"

using namespace abset;
using namespace abset::testutil;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure(what);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Fixture {
  const char* name;
  const char* text;
  Rational tau;
};

const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> fx = {{"as_4_4", kAs44, rat(-1)},
                                          {"as_5_3", kAs53, rat(-1, 3)},
                                          {"as_4_0", kAs40, rat(1)},
                                          {"as_7_3", kAs73, rat(-1, 9)},
                                          {"as_6_4", kAs64, rat(-1, 2)}};
  return fx;
}

// --- 1. exact thresholds -----------------------------------------------------

void criterion_exact_thresholds() {
  for (const auto& fx : fixtures()) {
    const auto rs = routing_from_text(fx.text);
    const auto start = Clock::now();
    const auto res = compute_threshold(rs);
    const double secs = seconds_since(start);
    require(res.tau == fx.tau, std::string(fx.name) + ": tau = " + to_string(res.tau) +
                                   ", expected " + to_string(fx.tau));
    require(secs < 10.0, std::string(fx.name) + ": search took " +
                             std::to_string(secs) + " s (budget 10 s)");
  }
}

// --- 2. oracle equivalence ---------------------------------------------------

void criterion_oracle_equivalence() {
  for (const auto& fx : fixtures()) {
    const auto rs = routing_from_text(fx.text);
    if (rs.n > 16) continue;
    const auto start = Clock::now();
    const auto oracle = brute_force_threshold(rs);
    const double secs = seconds_since(start);
    const auto fast = compute_threshold(rs);
    require(oracle.tau == fast.tau,
            std::string(fx.name) + ": oracle " + to_string(oracle.tau) + " != search " +
                to_string(fast.tau));
    require(oracle.stats.lps_solved == (uint64_t(1) << rs.n) - 1,
            std::string(fx.name) + ": oracle did not enumerate every pattern");
    if (std::string(fx.name) == "as_5_3") {
      require(oracle.stats.lps_solved == 4095, "as_5_3 oracle must solve 4095 programs");
      require(secs < 60.0, "as_5_3 oracle took " + std::to_string(secs) + " s (budget 60 s)");
    }

    SearchOptions plain;
    SearchOptions unpruned;
    unpruned.use_test1 = false;
    unpruned.use_test2 = false;
    const auto with = compute_threshold(rs, plain);
    const auto without = compute_threshold(rs, unpruned);
    require(with.tau == without.tau,
            std::string(fx.name) + ": disabling the tests changed tau");
    require(without.stats.nodes_visited > with.stats.nodes_visited,
            std::string(fx.name) + ": disabling the tests did not grow the tree");
  }
}

// --- 3. range and certification on random sets -------------------------------

void criterion_random_sets() {
  std::mt19937_64 rng(20250808);
  for (int iter = 0; iter < 50; ++iter) {
    const auto spec = random_elementary_as(rng, 2, 8);
    const auto rs = build_routing(spec);
    const auto res = compute_threshold(rs);
    require(res.tau >= -1 && res.tau <= 1,
            spec.name + ": tau out of range: " + to_string(res.tau));
    const auto cert = certify_threshold(rs, res);  // throws on failure
    bool below_one = false;
    for (int i = 0; i < rs.n; ++i)
      if (cert.equilibrium[i] < 1) below_one = true;
    require(below_one, spec.name + ": certified equilibrium has no message below 1");
  }
}

// --- 4. above-threshold convergence on the full corner grid ------------------

void criterion_corner_convergence() {
  const auto rs = routing_from_text(kAs53);
  const ChannelVector ch(constant_vec(rs.vn_count, rat(-1, 3) + rat(1, 12)));
  for (const auto& sp : {schedule_partition(rs), schedule_partition(rs, rs.even_cn_ids)}) {
    const auto outcomes = corner_grid_outcomes(rs, sp, ch, 200);
    require(outcomes.total() == 4096, "corner grid must cover 2^12 states");
    require(outcomes.converged == 4096,
            "non-converged corners: " + std::to_string(outcomes.failures()));
  }
}

// --- 5. deactivation rule ----------------------------------------------------

void criterion_deactivation() {
  const auto rs53 = routing_from_text(kAs53);
  SweepOptions opts;
  opts.jobs = 2;
  const auto clean =
      lch_sweep(rs53, schedule_partition(rs53), rat(-1, 3), rat(7, 31), 10000, 424242, opts);
  require(clean.outcomes.total() == 10000, "sweep must run 10^4 trials");
  require(clean.outcomes.failures() == 0,
          "as_5_3 at L_ch = 7/31: " + std::to_string(clean.outcomes.failures()) +
              " non-converged trials");

  // 7/31 exceeds |tau| = 1/9: the probe at the threshold channel must reach a
  // genuine bad equilibrium.
  const auto rs73 = routing_from_text(kAs73);
  SweepOptions probe_opts;
  probe_opts.probes.push_back({constant_vec(rs73.vn_count, rat(-1, 9)), std::nullopt});
  const auto probed =
      lch_sweep(rs73, schedule_partition(rs73), rat(-1, 9), rat(7, 31), 0, 1, probe_opts);
  require(probed.outcomes.failures() >= 1, "as_7_3 probe did not fail");
  require(probed.first_bad.has_value(), "as_7_3 probe kept no witness");
  require(probed.first_bad->outcome == TrajectoryResult::Outcome::Equilibrium,
          "as_7_3 probe did not settle on an equilibrium");
  require(is_equilibrium(rs73, probed.first_bad->state,
                         ChannelVector(constant_vec(rs73.vn_count, rat(-1, 9)))),
          "as_7_3 probe state failed the equilibrium check");
}

// --- 6. monotonicity and monotone descent ------------------------------------

void criterion_monotone() {
  std::mt19937_64 rng(606060);
  std::uniform_int_distribution<int> grid(-4, 4);
  std::uniform_int_distribution<int> bump(0, 2);
  for (const auto& fx : fixtures()) {
    const auto rs = routing_from_text(fx.text);
    const auto sp = schedule_partition(rs);
    for (int iter = 0; iter < 1000; ++iter) {
      VecQ x0(rs.n), y0(rs.n);
      for (int i = 0; i < rs.n; ++i) {
        x0[i] = rat(grid(rng), 4);
        y0[i] = saturate(x0[i] + rat(bump(rng), 4));
      }
      VecQ lx(rs.vn_count), ly(rs.vn_count);
      for (int v = 0; v < rs.vn_count; ++v) {
        lx[v] = rat(grid(rng), 4);
        ly[v] = saturate(lx[v] + rat(bump(rng), 4));
      }
      const VecQ sx = step(rs, sp, x0, ChannelVector(lx));
      const VecQ sy = step(rs, sp, y0, ChannelVector(ly));
      for (int i = 0; i < rs.n; ++i)
        require(sx[i] <= sy[i], std::string(fx.name) + ": step monotonicity violated");
    }

    // Monotone descent: extend a random state to a generalized equilibrium,
    // then iterate at the uniform minimum channel until it pins down.
    for (int iter = 0; iter < 1000; ++iter) {
      VecQ xstar(rs.n);
      for (int i = 0; i < rs.n; ++i) xstar[i] = rat(grid(rng), 4);
      const VecQ base =
          rs.routing.cast<Rational>() * (xstar - constant_vec(rs.n, rat(1))) +
          constant_vec(rs.n, rat(2));
      Rational lam_min;
      bool first = true;
      for (int i = 0; i < rs.n; ++i) {
        Rational li;
        if (xstar[i] == 1)
          li = 1 - base[i] + rat(1, 2);
        else if (xstar[i] == -1)
          li = -1 - base[i] - rat(1, 2);
        else
          li = xstar[i] - base[i];
        if (first || li < lam_min) lam_min = li;
        first = false;
      }
      const VecQ lam = constant_vec(rs.vn_count, lam_min);
      VecQ x = xstar;
      for (int guard = 0;; ++guard) {
        require(guard < 100000, std::string(fx.name) + ": descent did not terminate");
        const VecQ next = step_parallel_raw(rs.routing, rs.repetition, x, lam);
        for (int i = 0; i < rs.n; ++i)
          require(next[i] <= x[i], std::string(fx.name) + ": descent increased a message");
        if (next == x) break;
        x = next;
      }
      for (int i = 0; i < rs.n; ++i)
        require(x[i] <= xstar[i], std::string(fx.name) + ": descent ended above start");
    }
  }
}

// --- 7. puncturing -----------------------------------------------------------

void criterion_puncturing() {
  for (const auto& fx : fixtures()) {
    if (!(fx.tau == rat(-1, 3) || fx.tau == rat(-1, 2))) continue;  // (5,3), (6,4)
    const auto rs = routing_from_text(fx.text);
    const auto sp = schedule_partition(rs);
    const int a = rs.vn_count;
    PunctureOptions opts;
    opts.rest_lambda = fx.tau + rat(1, 16);
    for (uint32_t mask = 0; mask < (1u << a); ++mask) {
      std::vector<int> punctured;
      for (int v = 0; v < a; ++v)
        if ((mask >> v) & 1) punctured.push_back(v);
      if (static_cast<int>(punctured.size()) > a - 1) continue;
      const auto report = puncture_check(rs, sp, fx.tau, punctured, 0, 1, opts);
      require(report.trials == (uint64_t(1) << rs.n),
              std::string(fx.name) + ": puncture sweep must cover the corner grid");
      require(report.outcomes.failures() == 0,
              std::string(fx.name) + ": puncture subset of size " +
                  std::to_string(punctured.size()) + " produced " +
                  std::to_string(report.outcomes.failures()) + " bad trajectories");
    }
  }
}

// --- 8. schedule invariance --------------------------------------------------

void criterion_schedule_invariance() {
  for (const auto& fx : fixtures()) {
    const auto rs = routing_from_text(fx.text);
    const auto res = compute_threshold(rs);
    const auto cert = certify_threshold(rs, res);
    const ChannelVector ch(constant_vec(rs.vn_count, res.tau));

    // The certified equilibrium is fixed under every cyclic CN order.
    const auto& even = rs.even_cn_ids;
    for (size_t shift = 0; shift < even.size(); ++shift) {
      std::vector<int> order(even.begin() + static_cast<long>(shift), even.end());
      order.insert(order.end(), even.begin(), even.begin() + static_cast<long>(shift));
      const auto sp = schedule_partition(rs, order);
      require(step(rs, sp, cert.equilibrium, ch) == cert.equilibrium,
              std::string(fx.name) + ": equilibrium moved under a cyclic order");
      require(is_equilibrium(rs, cert.equilibrium, ch),
              std::string(fx.name) + ": parallel equilibrium check failed");
    }

    // Above threshold, sequential trajectories show no limit cycles.
    if (res.tau + rat(1, 12) > 1) continue;  // no admissible channel above tau
    const ChannelVector above(constant_vec(rs.vn_count, res.tau + rat(1, 12)));
    std::vector<std::vector<int>> orders = {even};
    std::vector<int> rotated(even.begin() + 1, even.end());
    rotated.push_back(even.front());
    orders.push_back(rotated);
    for (const auto& order : orders) {
      const auto sp = schedule_partition(rs, order);
      const auto outcomes = corner_grid_outcomes(rs, sp, above, 200);
      require(outcomes.cycle == 0,
              std::string(fx.name) + ": limit cycle detected above threshold");
      require(outcomes.failures() == 0,
              std::string(fx.name) + ": bad trajectory above threshold");
    }
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"1. exact thresholds for the reference sets (-1, -1/3, 1, -1/9, -1/2)",
       criterion_exact_thresholds},
      {"2. brute-force oracle equivalence and prune soundness", criterion_oracle_equivalence},
      {"3. range, rationality and certification on 50 random sets", criterion_random_sets},
      {"4. corner-grid convergence above threshold, both schedules",
       criterion_corner_convergence},
      {"5. channel-saturation deactivation rule", criterion_deactivation},
      {"6. step monotonicity and monotone descent, 10^3 pairs per set",
       criterion_monotone},
      {"7. puncturing never breaks above-threshold convergence", criterion_puncturing},
      {"8. schedule invariance of equilibria; no cycles above threshold",
       criterion_schedule_invariance},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = Clock::now();
    try {
      fn();
      std::printf("[PASS] %s  (%.1f s)\n", name.c_str(), seconds_since(start));
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] %s  (%.1f s)\n       %s\n", name.c_str(), seconds_since(start),
                  e.what());
    }
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
