#include "abset/dynamics.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <unordered_map>

namespace abset {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t trial_seed(uint64_t seed, uint64_t trial) {
  return splitmix64(splitmix64(seed) ^ splitmix64(trial + 0x51ED270F5E95ull));
}

// Compiled form of (rs, sp): incoming-message lists plus the in-iteration
// update order implied by the CN activation order.
struct StepEngine {
  int n = 0;
  bool parallel = true;
  std::vector<std::array<int, 2>> src;
  std::vector<int> src_count;
  std::vector<int> vn_of;
  std::vector<int> order;  // message update order for sequential schedules

  static StepEngine build(const RoutingSystem& rs, const SchedulePartition& sp) {
    StepEngine e;
    e.n = rs.n;
    e.parallel = sp.parallel;
    e.src.assign(rs.n, {0, 0});
    e.src_count.assign(rs.n, 0);
    e.vn_of.resize(rs.n);
    for (int i = 0; i < rs.n; ++i) {
      e.vn_of[i] = rs.message_index[i].first;
      for (int j = 0; j < rs.n; ++j)
        if (rs.routing(i, j)) e.src[i][e.src_count[i]++] = j;
    }
    e.order.resize(rs.n);
    for (int i = 0; i < rs.n; ++i) e.order[i] = i;
    if (!sp.parallel) {
      std::vector<int> position_of_cn;
      int maxcn = 0;
      for (const auto& [v, c] : rs.message_index) maxcn = std::max(maxcn, c);
      position_of_cn.assign(maxcn + 1, 0);
      for (size_t k = 0; k < sp.cn_order.size(); ++k)
        position_of_cn[sp.cn_order[k]] = static_cast<int>(k);
      std::stable_sort(e.order.begin(), e.order.end(), [&](int i, int j) {
        return position_of_cn[rs.message_index[i].second] <
               position_of_cn[rs.message_index[j].second];
      });
    }
    return e;
  }

  // One iteration over exact rationals. lambda has one entry per VN.
  VecQ step_q(const VecQ& x, const VecQ& lambda) const {
    VecQ out = x;
    if (parallel) {
      for (int i = 0; i < n; ++i) out[i] = update_q(x, lambda, i);
    } else {
      for (int i : order) out[i] = update_q(out, lambda, i);
    }
    return out;
  }

  Rational update_q(const VecQ& state, const VecQ& lambda, int i) const {
    Rational acc = 2 + lambda[vn_of[i]];
    for (int k = 0; k < src_count[i]; ++k) acc += state[src[i][k]] - 1;
    return saturate(acc);
  }
};

// ---------------------------------------------------------------------------
// Scaled-integer fast path. With the state and channel on the grid (1/L)*Z,
// every iterate of the saturated affine map stays on that grid, because the
// routing matrix is integer. Intermediate values are bounded by 7L, so int64
// arithmetic is exact for any L below the 2^40 guard.

constexpr int64_t kScaleLimit = int64_t(1) << 40;

std::optional<int64_t> common_scale(std::initializer_list<const VecQ*> vecs) {
  BigInt l = 1;
  for (const VecQ* v : vecs)
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      l = lcm(l, den((*v)[i]));
      if (l > kScaleLimit) return std::nullopt;
    }
  return l.convert_to<int64_t>();
}

int64_t scaled_value(const Rational& q, int64_t scale) {
  return (num(q) * (scale / den(q))).convert_to<int64_t>();
}

std::vector<int64_t> scaled_vec(const VecQ& v, int64_t scale) {
  std::vector<int64_t> out(static_cast<size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<size_t>(i)] = scaled_value(v[i], scale);
  return out;
}

VecQ unscaled_vec(const std::vector<int64_t>& v, int64_t scale) {
  VecQ out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = rat(v[i], scale);
  return out;
}

struct ScaledStepper {
  const StepEngine* engine;
  int64_t scale;
  std::vector<int64_t> drive;  // (2 + lambda_{vn(i)}) * scale, per message

  ScaledStepper(const StepEngine& e, const VecQ& lambda, int64_t s) : engine(&e), scale(s) {
    drive.resize(e.n);
    for (int i = 0; i < e.n; ++i) drive[i] = 2 * s + scaled_value(lambda[e.vn_of[i]], s);
  }

  int64_t update(const std::vector<int64_t>& state, int i) const {
    int64_t acc = drive[i];
    for (int k = 0; k < engine->src_count[i]; ++k) acc += state[engine->src[i][k]] - scale;
    return std::clamp(acc, -scale, scale);
  }

  void step_inplace(std::vector<int64_t>& x, std::vector<int64_t>& scratch) const {
    if (engine->parallel) {
      for (int i = 0; i < engine->n; ++i) scratch[i] = update(x, i);
      x.swap(scratch);
    } else {
      for (int i : engine->order) x[i] = update(x, i);
    }
  }

  bool all_ones(const std::vector<int64_t>& x) const {
    return std::all_of(x.begin(), x.end(), [&](int64_t v) { return v == scale; });
  }
};

struct VecHash {
  size_t operator()(const std::vector<int64_t>& v) const {
    uint64_t h = 0xCBF29CE484222325ull;
    for (int64_t x : v) {
      h ^= static_cast<uint64_t>(x);
      h *= 0x100000001B3ull;
    }
    return static_cast<size_t>(h);
  }
};

TrajectoryResult run_scaled(const StepEngine& engine, const VecQ& lambda,
                            const VecQ& x0, int64_t scale, int max_iters,
                            std::size_t state_cap) {
  ScaledStepper stepper(engine, lambda, scale);
  std::vector<int64_t> x = scaled_vec(x0, scale);
  std::vector<int64_t> scratch(x.size());

  TrajectoryResult res;
  if (stepper.all_ones(x)) {
    res.outcome = TrajectoryResult::Outcome::ConvergedAllOnes;
    res.iterations = 0;
    res.state = unscaled_vec(x, scale);
    return res;
  }

  std::unordered_map<std::vector<int64_t>, int, VecHash> visited;
  std::vector<std::vector<int64_t>> trace;
  visited.emplace(x, 0);
  trace.push_back(x);

  for (int k = 1; k <= max_iters; ++k) {
    std::vector<int64_t> prev = x;
    stepper.step_inplace(x, scratch);
    res.iterations = k;
    if (stepper.all_ones(x)) {
      res.outcome = TrajectoryResult::Outcome::ConvergedAllOnes;
      res.state = unscaled_vec(x, scale);
      return res;
    }
    if (x == prev) {
      res.outcome = TrajectoryResult::Outcome::Equilibrium;
      res.state = unscaled_vec(x, scale);
      return res;
    }
    if (auto it = visited.find(x); it != visited.end()) {
      res.outcome = TrajectoryResult::Outcome::LimitCycle;
      res.period = k - it->second;
      res.state = unscaled_vec(x, scale);
      for (int t = it->second; t < k; ++t)
        res.cycle_states.push_back(unscaled_vec(trace[static_cast<size_t>(t)], scale));
      return res;
    }
    if (visited.size() >= state_cap) break;
    visited.emplace(x, k);
    trace.push_back(x);
  }
  res.outcome = TrajectoryResult::Outcome::BudgetExhausted;
  res.state = unscaled_vec(x, scale);
  return res;
}

std::string state_key(const VecQ& x) {
  std::string key;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    key += x[i].str();
    key += ',';
  }
  return key;
}

TrajectoryResult run_rational(const StepEngine& engine, const VecQ& lambda,
                              const VecQ& x0, int max_iters, std::size_t state_cap) {
  VecQ x = x0;
  const auto ones = [&](const VecQ& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] != 1) return false;
    return true;
  };

  TrajectoryResult res;
  if (ones(x)) {
    res.outcome = TrajectoryResult::Outcome::ConvergedAllOnes;
    res.state = x;
    return res;
  }
  std::unordered_map<std::string, int> visited;
  std::vector<VecQ> trace;
  visited.emplace(state_key(x), 0);
  trace.push_back(x);

  for (int k = 1; k <= max_iters; ++k) {
    VecQ next = engine.step_q(x, lambda);
    res.iterations = k;
    if (ones(next)) {
      res.outcome = TrajectoryResult::Outcome::ConvergedAllOnes;
      res.state = next;
      return res;
    }
    if (next == x) {
      res.outcome = TrajectoryResult::Outcome::Equilibrium;
      res.state = next;
      return res;
    }
    if (auto it = visited.find(state_key(next)); it != visited.end()) {
      res.outcome = TrajectoryResult::Outcome::LimitCycle;
      res.period = k - it->second;
      res.state = next;
      for (int t = it->second; t < k; ++t) res.cycle_states.push_back(trace[static_cast<size_t>(t)]);
      return res;
    }
    x = next;
    if (visited.size() >= state_cap) break;
    visited.emplace(state_key(x), k);
    trace.push_back(x);
  }
  res.outcome = TrajectoryResult::Outcome::BudgetExhausted;
  res.state = x;
  return res;
}

void check_dims(const RoutingSystem& rs, const VecQ& x, const ChannelVector& ch) {
  if (x.size() != rs.n) throw std::invalid_argument("message state has wrong dimension");
  if (ch.values().size() != rs.vn_count)
    throw std::invalid_argument("channel vector has wrong dimension");
}

}  // namespace

ChannelVector::ChannelVector(VecQ lambda, std::vector<int> punctured)
    : lambda_(saturate(std::move(lambda))), punctured_(std::move(punctured)) {
  std::sort(punctured_.begin(), punctured_.end());
  punctured_.erase(std::unique(punctured_.begin(), punctured_.end()), punctured_.end());
  for (int v : punctured_) {
    if (v < 0 || v >= lambda_.size())
      throw std::invalid_argument("punctured VN index out of range");
    lambda_[v] = 0;
  }
}

VecQ step(const RoutingSystem& rs, const SchedulePartition& sp, const VecQ& x,
          const ChannelVector& ch) {
  check_dims(rs, x, ch);
  return StepEngine::build(rs, sp).step_q(saturate(x), ch.values());
}

VecQ step_parallel_raw(const MatB& routing, const MatB& repetition, const VecQ& x,
                       const VecQ& lambda_unclamped) {
  const Eigen::Index n = routing.rows();
  VecQ out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rational acc = 2;
    for (Eigen::Index v = 0; v < repetition.cols(); ++v)
      if (repetition(i, v)) acc += lambda_unclamped[v];
    for (Eigen::Index j = 0; j < n; ++j)
      if (routing(i, j)) acc += x[j] - 1;
    out[i] = saturate(acc);
  }
  return out;
}

bool is_equilibrium(const RoutingSystem& rs, const VecQ& x, const ChannelVector& ch) {
  check_dims(rs, x, ch);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < -1 || x[i] > 1) return false;
  const auto sp = schedule_partition(rs);
  return StepEngine::build(rs, sp).step_q(x, ch.values()) == x;
}

TrajectoryResult run(const RoutingSystem& rs, const SchedulePartition& sp,
                     const MessageState& x0, const ChannelVector& ch, int max_iters,
                     std::size_t state_cap) {
  check_dims(rs, x0.values(), ch);
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  const StepEngine engine = StepEngine::build(rs, sp);
  const VecQ& lambda = ch.values();
  if (auto scale = common_scale({&x0.values(), &lambda}))
    return run_scaled(engine, lambda, x0.values(), *scale, max_iters, state_cap);
  return run_rational(engine, lambda, x0.values(), max_iters, state_cap);
}

namespace {

void record_outcome(SweepOutcomes& agg, const TrajectoryResult& r) {
  switch (r.outcome) {
    case TrajectoryResult::Outcome::ConvergedAllOnes: ++agg.converged; break;
    case TrajectoryResult::Outcome::Equilibrium: ++agg.equilibrium; break;
    case TrajectoryResult::Outcome::LimitCycle: ++agg.cycle; break;
    case TrajectoryResult::Outcome::BudgetExhausted: ++agg.budget; break;
  }
}

// Runs trial indices [0, total) across `jobs` workers; `make_trial` must be
// a pure function of the trial index so the aggregate is worker-independent.
template <class TrialFn>
SweepOutcomes parallel_trials(uint64_t total, int jobs, const TrialFn& make_trial,
                              std::optional<TrajectoryResult>* first_bad,
                              std::optional<VecQ>* first_bad_lambda) {
  jobs = std::max(1, jobs);
  std::mutex mtx;
  SweepOutcomes agg;
  uint64_t best_bad = ~0ull;
  std::optional<TrajectoryResult> bad;
  std::optional<VecQ> bad_lambda;

  auto worker = [&](uint64_t begin, uint64_t end) {
    SweepOutcomes local;
    uint64_t local_bad_idx = ~0ull;
    std::optional<TrajectoryResult> local_bad;
    std::optional<VecQ> local_bad_lambda;
    for (uint64_t t = begin; t < end; ++t) {
      auto [res, lambda] = make_trial(t);
      record_outcome(local, res);
      if (!res.converged() && t < local_bad_idx) {
        local_bad_idx = t;
        local_bad = res;
        local_bad_lambda = lambda;
      }
    }
    std::lock_guard<std::mutex> lock(mtx);
    agg.converged += local.converged;
    agg.equilibrium += local.equilibrium;
    agg.cycle += local.cycle;
    agg.budget += local.budget;
    if (local_bad_idx < best_bad) {
      best_bad = local_bad_idx;
      bad = std::move(local_bad);
      bad_lambda = std::move(local_bad_lambda);
    }
  };

  if (jobs == 1 || total < 2) {
    worker(0, total);
  } else {
    std::vector<std::thread> threads;
    const uint64_t chunk = (total + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      const uint64_t begin = std::min<uint64_t>(w * chunk, total);
      const uint64_t end = std::min<uint64_t>(begin + chunk, total);
      if (begin < end) threads.emplace_back(worker, begin, end);
    }
    for (auto& th : threads) th.join();
  }
  if (first_bad) *first_bad = bad;
  if (first_bad_lambda) *first_bad_lambda = bad_lambda;
  return agg;
}

}  // namespace

SweepReport lch_sweep(const RoutingSystem& rs, const SchedulePartition& sp,
                      const Rational& tau, const Rational& lch, uint64_t trials,
                      uint64_t seed, const SweepOptions& opts) {
  if (lch <= 0 || lch > 1) throw std::invalid_argument("lch must lie in (0, 1]");
  SweepReport report;
  report.tau = tau;
  report.lch = lch;
  report.trials = trials;
  report.seed = seed;

  const uint64_t total = trials + opts.probes.size();
  auto make_trial = [&](uint64_t t) -> std::pair<TrajectoryResult, VecQ> {
    VecQ lambda(rs.vn_count);
    VecQ x0(rs.n);
    if (t < trials) {
      std::mt19937_64 rng(trial_seed(seed, t));
      std::uniform_int_distribution<int> grid(-16, 16);
      std::uniform_int_distribution<int> corner(-1, 1);
      for (int v = 0; v < rs.vn_count; ++v) lambda[v] = lch * rat(grid(rng), 16);
      for (int i = 0; i < rs.n; ++i) x0[i] = corner(rng);
    } else {
      const auto& probe = opts.probes[t - trials];
      lambda = probe.lambda;
      x0 = probe.x0.value_or(constant_vec(rs.n, rat(-1)));
    }
    auto res = run(rs, sp, MessageState(x0), ChannelVector(lambda), opts.max_iters);
    return {std::move(res), std::move(lambda)};
  };

  report.outcomes = parallel_trials(total, opts.jobs, make_trial, &report.first_bad,
                                    &report.first_bad_lambda);
  return report;
}

SweepOutcomes corner_grid_outcomes(const RoutingSystem& rs, const SchedulePartition& sp,
                                   const ChannelVector& ch, int max_iters,
                                   std::optional<TrajectoryResult>* first_bad) {
  if (rs.n > 30) throw std::invalid_argument("corner grid too large");
  const StepEngine engine = StepEngine::build(rs, sp);
  const VecQ& lambda = ch.values();
  const auto maybe_scale = common_scale({&lambda});
  SweepOutcomes agg;
  if (first_bad) first_bad->reset();

  if (!maybe_scale) {
    // Denominators too large for the integer grid: run each corner directly.
    for (uint64_t mask = 0; mask < (uint64_t(1) << rs.n); ++mask) {
      VecQ x0(rs.n);
      for (int i = 0; i < rs.n; ++i) x0[i] = (mask >> i) & 1 ? 1 : -1;
      auto res = run(rs, sp, MessageState(x0), ch, max_iters);
      record_outcome(agg, res);
      if (!res.converged() && first_bad && !*first_bad) *first_bad = res;
    }
    return agg;
  }

  const int64_t scale = *maybe_scale;
  ScaledStepper stepper(engine, lambda, scale);
  // Memo over exact states: >=0 steps-to-all-ones, -1 equilibrium tail,
  // -2 cycle tail. Shared tails collapse the grid walk.
  std::unordered_map<std::vector<int64_t>, int, VecHash> memo;
  std::vector<int64_t> scratch(static_cast<size_t>(rs.n));
  std::optional<uint64_t> first_bad_mask;

  for (uint64_t mask = 0; mask < (uint64_t(1) << rs.n); ++mask) {
    std::vector<int64_t> x(static_cast<size_t>(rs.n));
    for (int i = 0; i < rs.n; ++i) x[static_cast<size_t>(i)] = (mask >> i) & 1 ? scale : -scale;

    std::vector<std::vector<int64_t>> path;
    std::unordered_map<std::vector<int64_t>, int, VecHash> on_path;
    int label = INT_MIN;  // steps-to-ones if >= 0, -1 eq, -2 cycle, INT_MIN budget
    while (true) {
      if (stepper.all_ones(x)) {
        label = 0;
        break;
      }
      if (auto it = memo.find(x); it != memo.end()) {
        label = it->second;
        break;
      }
      if (auto it = on_path.find(x); it != on_path.end()) {
        // Closed loop inside this walk: a 1-cycle is an equilibrium.
        label = (static_cast<int>(path.size()) - it->second == 1) ? -1 : -2;
        for (size_t t = static_cast<size_t>(it->second); t < path.size(); ++t)
          memo[path[t]] = label;
        break;
      }
      if (static_cast<int>(path.size()) > max_iters) break;  // unresolved: budget
      on_path.emplace(x, static_cast<int>(path.size()));
      path.push_back(x);
      stepper.step_inplace(x, scratch);
    }

    bool bad = true;
    if (label >= 0) {
      const int total_steps = label + static_cast<int>(path.size());
      for (size_t t = 0; t < path.size(); ++t)
        memo.emplace(path[t], label + static_cast<int>(path.size() - t));
      if (total_steps <= max_iters) {
        ++agg.converged;
        bad = false;
      } else {
        ++agg.budget;
      }
    } else if (label == -1) {
      for (const auto& s : path) memo.emplace(s, -1);
      ++agg.equilibrium;
    } else if (label == -2) {
      for (const auto& s : path) memo.emplace(s, -2);
      ++agg.cycle;
    } else {
      ++agg.budget;  // ran out of budget before classification; do not memoize
    }

    if (bad && first_bad && !first_bad_mask) {
      first_bad_mask = mask;
      VecQ x0(rs.n);
      for (int i = 0; i < rs.n; ++i) x0[i] = (mask >> i) & 1 ? 1 : -1;
      *first_bad = run(rs, sp, MessageState(x0), ch, max_iters);
    }
  }
  return agg;
}

SweepReport puncture_check(const RoutingSystem& rs, const SchedulePartition& sp,
                           const Rational& tau, const std::vector<int>& punctured,
                           uint64_t trials, uint64_t seed, const PunctureOptions& opts) {
  if (tau >= 0) throw std::invalid_argument("puncture_check requires tau < 0");
  std::set<int> pset(punctured.begin(), punctured.end());
  if (pset.size() != punctured.size())
    throw std::invalid_argument("punctured set has duplicates");
  for (int v : punctured)
    if (v < 0 || v >= rs.vn_count)
      throw std::invalid_argument("punctured VN index out of range");
  if (static_cast<int>(pset.size()) >= rs.vn_count)
    throw std::invalid_argument("puncturing all VNs leaves nothing to optimize");

  SweepReport report;
  report.tau = tau;
  report.lch = opts.rest_lambda.value_or(tau + opts.margin);
  report.seed = seed;
  report.punctured.assign(pset.begin(), pset.end());

  auto lambda_with = [&](const Rational& rest) {
    VecQ lambda = constant_vec(rs.vn_count, rest);
    for (int v : pset) lambda[v] = 0;
    return lambda;
  };

  if (opts.rest_lambda && (uint64_t(1) << rs.n) <= opts.corner_cap) {
    // One channel vector; exhaustive corner grid.
    ChannelVector ch(lambda_with(*opts.rest_lambda), report.punctured);
    report.trials = uint64_t(1) << rs.n;
    report.outcomes = corner_grid_outcomes(rs, sp, ch, opts.max_iters, &report.first_bad);
    if (report.first_bad) report.first_bad_lambda = ch.values();
    return report;
  }

  report.trials = trials;
  auto make_trial = [&](uint64_t t) -> std::pair<TrajectoryResult, VecQ> {
    std::mt19937_64 rng(trial_seed(seed, t));
    std::uniform_int_distribution<int> band(1, 16);
    std::uniform_int_distribution<int> corner(0, 1);
    const Rational rest =
        opts.rest_lambda ? *opts.rest_lambda : Rational(tau + opts.margin * rat(band(rng), 16));
    VecQ lambda = lambda_with(rest);
    VecQ x0(rs.n);
    for (int i = 0; i < rs.n; ++i) x0[i] = corner(rng) ? 1 : -1;
    auto res = run(rs, sp, MessageState(x0), ChannelVector(lambda, report.punctured),
                   opts.max_iters);
    return {std::move(res), std::move(lambda)};
  };
  report.outcomes = parallel_trials(trials, opts.jobs, make_trial, &report.first_bad,
                                    &report.first_bad_lambda);
  return report;
}

}  // namespace abset
