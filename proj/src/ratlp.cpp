#include "abset/ratlp.hpp"

#include <algorithm>
#include <cassert>

namespace abset {

namespace {

// Dense-tableau primal simplex over exact rationals, Bland's rule throughout.
// Operates on the shifted system  max c.z  s.t.  Az <= b, z >= 0.
class Tableau {
 public:
  Tableau(const MatQ& a, const VecQ& b, const VecQ& c)
      : nvars_(static_cast<int>(c.size())),
        nrows_(static_cast<int>(b.size())),
        ncols_(nvars_ + nrows_ + 2) {  // vars, slacks, aux, rhs
    aux_col_ = nvars_ + nrows_;
    rhs_col_ = aux_col_ + 1;
    rows_.assign(static_cast<size_t>(nrows_), std::vector<Rational>(static_cast<size_t>(ncols_)));
    basis_.resize(static_cast<size_t>(nrows_));
    for (int r = 0; r < nrows_; ++r) {
      auto& row = rows_[static_cast<size_t>(r)];
      for (int j = 0; j < nvars_; ++j) row[static_cast<size_t>(j)] = a(r, j);
      row[static_cast<size_t>(nvars_ + r)] = 1;
      row[static_cast<size_t>(rhs_col_)] = b[r];
      basis_[static_cast<size_t>(r)] = nvars_ + r;
    }
    objective_c_ = c;
  }

  // Returns false if infeasible.
  bool solve() {
    int worst = 0;
    for (int r = 1; r < nrows_; ++r)
      if (rhs(r) < rhs(worst)) worst = r;
    if (nrows_ > 0 && rhs(worst) < 0) {
      // Phase I: maximize -aux after the classic first pivot that restores
      // a feasible dictionary.
      for (auto& row : rows_) row[static_cast<size_t>(aux_col_)] = -1;
      obj_.assign(static_cast<size_t>(ncols_ - 1), Rational(0));
      obj_[static_cast<size_t>(aux_col_)] = -1;
      obj_const_ = 0;
      aux_active_ = true;
      pivot(worst, aux_col_);
      bland();
      if (obj_const_ < 0) return false;
      drive_aux_out();
      aux_active_ = false;
    }
    // Phase II: express the real objective in the current basis.
    obj_.assign(static_cast<size_t>(ncols_ - 1), Rational(0));
    obj_const_ = 0;
    for (int j = 0; j < nvars_; ++j) obj_[static_cast<size_t>(j)] = objective_c_[j];
    for (int r = 0; r < nrows_; ++r) {
      const int bv = basis_[static_cast<size_t>(r)];
      if (obj_[static_cast<size_t>(bv)] != 0) substitute_row(r, bv);
    }
    bland();
    return true;
  }

  Rational objective_value() const { return obj_const_; }

  VecQ solution() const {
    VecQ z = VecQ::Zero(nvars_);
    for (int r = 0; r < nrows_; ++r)
      if (basis_[static_cast<size_t>(r)] < nvars_) z[basis_[static_cast<size_t>(r)]] = rhs(r);
    return z;
  }

  int pivots() const { return pivots_; }

 private:
  Rational rhs(int r) const { return rows_[static_cast<size_t>(r)][static_cast<size_t>(rhs_col_)]; }

  void substitute_row(int r, int var) {
    const Rational t = obj_[static_cast<size_t>(var)];
    const auto& row = rows_[static_cast<size_t>(r)];
    for (int j = 0; j < ncols_ - 1; ++j)
      if (row[static_cast<size_t>(j)] != 0) obj_[static_cast<size_t>(j)] -= t * row[static_cast<size_t>(j)];
    obj_const_ += t * row[static_cast<size_t>(rhs_col_)];
  }

  void pivot(int r, int s) {
    ++pivots_;
    auto& prow = rows_[static_cast<size_t>(r)];
    const Rational inv = Rational(1) / prow[static_cast<size_t>(s)];
    for (auto& v : prow) v *= inv;
    for (int i = 0; i < nrows_; ++i) {
      if (i == r) continue;
      auto& row = rows_[static_cast<size_t>(i)];
      const Rational factor = row[static_cast<size_t>(s)];
      if (factor == 0) continue;
      for (int j = 0; j < ncols_; ++j)
        if (prow[static_cast<size_t>(j)] != 0) row[static_cast<size_t>(j)] -= factor * prow[static_cast<size_t>(j)];
      row[static_cast<size_t>(s)] = 0;  // exact, but keep it explicit
    }
    const Rational t = obj_[static_cast<size_t>(s)];
    if (t != 0) {
      for (int j = 0; j < ncols_ - 1; ++j)
        if (prow[static_cast<size_t>(j)] != 0) obj_[static_cast<size_t>(j)] -= t * prow[static_cast<size_t>(j)];
      obj_const_ += t * prow[static_cast<size_t>(rhs_col_)];
    }
    basis_[static_cast<size_t>(r)] = s;
  }

  // Bland: entering = lowest-index improving column, leaving = lowest basis
  // label among the minimum ratios. Terminates without anti-cycling hacks.
  void bland() {
    const int limit = aux_active_ ? aux_col_ + 1 : aux_col_;
    for (;;) {
      int enter = -1;
      for (int j = 0; j < limit; ++j)
        if (obj_[static_cast<size_t>(j)] > 0) {
          enter = j;
          break;
        }
      if (enter < 0) return;
      int leave = -1;
      Rational best_ratio;
      for (int r = 0; r < nrows_; ++r) {
        const Rational& coef = rows_[static_cast<size_t>(r)][static_cast<size_t>(enter)];
        if (coef <= 0) continue;
        const Rational ratio = rhs(r) / coef;
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[static_cast<size_t>(r)] < basis_[static_cast<size_t>(leave)])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (leave < 0)
        throw std::logic_error("simplex: unbounded direction in a boxed program");
      pivot(leave, enter);
    }
  }

  void drive_aux_out() {
    for (int r = 0; r < nrows_; ++r) {
      if (basis_[static_cast<size_t>(r)] != aux_col_) continue;
      assert(rhs(r) == 0);
      int col = -1;
      for (int j = 0; j < aux_col_ && col < 0; ++j)
        if (rows_[static_cast<size_t>(r)][static_cast<size_t>(j)] != 0) col = j;
      if (col >= 0) {
        pivot(r, col);  // degenerate pivot, keeps feasibility
      } else {
        // Redundant row: the aux variable is pinned at zero with no way out.
        rows_.erase(rows_.begin() + r);
        basis_.erase(basis_.begin() + r);
        --nrows_;
        --r;
      }
    }
    for (auto& row : rows_) row[static_cast<size_t>(aux_col_)] = 0;
  }

  int nvars_;
  int nrows_;
  int ncols_;
  int aux_col_;
  int rhs_col_;
  bool aux_active_ = false;
  std::vector<std::vector<Rational>> rows_;
  std::vector<int> basis_;
  std::vector<Rational> obj_;
  Rational obj_const_;
  VecQ objective_c_;
  int pivots_ = 0;
};

}  // namespace

LpOutcome simplex_max(const LinearProgram& lp) {
  const Eigen::Index n = lp.num_vars();
  const Eigen::Index m = lp.num_rows();
  LpOutcome out;

  for (Eigen::Index k = 0; k < n; ++k)
    if (lp.lower[k] > lp.upper[k]) return out;  // empty box

  // Shift to z = y - lower >= 0 and fold the upper bounds in as rows.
  MatQ a(m + n, n);
  VecQ b(m + n);
  for (Eigen::Index r = 0; r < m; ++r) {
    Rational shift = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      a(r, k) = lp.constraints(r, k);
      shift += lp.constraints(r, k) * lp.lower[k];
    }
    b[r] = lp.rhs[r] - shift;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) a(m + k, j) = (j == k) ? 1 : 0;
    b[m + k] = lp.upper[k] - lp.lower[k];
  }

  Tableau tableau(a, b, lp.objective);
  if (!tableau.solve()) {
    out.pivots = tableau.pivots();
    return out;
  }

  out.status = LpOutcome::Status::Optimal;
  out.pivots = tableau.pivots();
  const VecQ z = tableau.solution();
  out.point = z + lp.lower;
  Rational value = 0;
  for (Eigen::Index k = 0; k < n; ++k) value += lp.objective[k] * out.point[k];
  out.value = value;

  // The arithmetic is exact; a constraint violated here is a solver bug.
  for (Eigen::Index r = 0; r < m; ++r) {
    Rational lhs = 0;
    for (Eigen::Index k = 0; k < n; ++k) lhs += lp.constraints(r, k) * out.point[k];
    if (lhs > lp.rhs[r]) throw std::logic_error("simplex: infeasible optimum");
  }
  for (Eigen::Index k = 0; k < n; ++k)
    if (out.point[k] < lp.lower[k] || out.point[k] > lp.upper[k])
      throw std::logic_error("simplex: optimum out of bounds");
  return out;
}

LinearProgram build_problem4(const RoutingSystem& rs, const SaturationPattern& pattern,
                             const Rational& lambda_max) {
  const auto unsat = pattern.unsat_indices();
  const auto sat = pattern.sat_indices();
  const int m = static_cast<int>(unsat.size());
  if (m == 0) throw std::invalid_argument("empty unsaturated set");
  if (pattern.size() != rs.n)
    throw std::invalid_argument("pattern size does not match message count");

  LinearProgram lp;
  lp.objective = VecQ::Zero(m + 1);
  lp.objective[0] = 1;
  lp.constraints = MatQ::Zero(rs.n, m + 1);
  lp.rhs = VecQ::Zero(rs.n);

  int r = 0;
  for (int j : unsat) {
    lp.constraints(r, 0) = 1;
    Rational weight = 0;
    for (int k = 0; k < m; ++k) {
      const int a_jk = rs.routing(j, unsat[static_cast<size_t>(k)]);
      lp.constraints(r, k + 1) = a_jk - (j == unsat[static_cast<size_t>(k)] ? 1 : 0);
      weight += a_jk;
    }
    lp.rhs[r] = weight - 2;
    ++r;
  }
  for (int i : sat) {
    lp.constraints(r, 0) = -1;
    Rational weight = 0;
    for (int k = 0; k < m; ++k) {
      const int a_ik = rs.routing(i, unsat[static_cast<size_t>(k)]);
      lp.constraints(r, k + 1) = -a_ik;
      weight += a_ik;
    }
    lp.rhs[r] = 1 - weight;
    ++r;
  }

  lp.lower = constant_vec(m + 1, rat(-1));
  lp.upper = constant_vec(m + 1, rat(1));
  lp.upper[0] = lambda_max;
  return lp;
}

TightenResult tighten_bounds(const LinearProgram& lp, VecQ lower, VecQ upper,
                             int max_sweeps) {
  const Eigen::Index n = lp.num_vars();
  const Eigen::Index m = lp.num_rows();
  if (max_sweeps < 0) max_sweeps = 2 * static_cast<int>(n);

  TightenResult res;
  res.lower = std::move(lower);
  res.upper = std::move(upper);

  for (Eigen::Index k = 0; k < n; ++k)
    if (res.upper[k] < res.lower[k]) {
      res.empty = true;
      res.witness_row = -1;  // empty before any propagation
      return res;
    }

  // Nonzero entries per row, visited in row-major order.
  std::vector<std::vector<int>> support(static_cast<size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index k = 0; k < n; ++k)
      if (lp.constraints(r, k) != 0) support[static_cast<size_t>(r)].push_back(static_cast<int>(k));

  // min over the box of c * y_k, maintained incrementally as bounds move.
  const auto term_min = [&](Eigen::Index r, Eigen::Index k) {
    const Rational& c = lp.constraints(r, k);
    return c > 0 ? Rational(c * res.lower[k]) : Rational(c * res.upper[k]);
  };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& cols = support[static_cast<size_t>(r)];
      // A positive coefficient reads the lower bound and tightens the upper
      // one (and vice versa), so updates within this row never move its own
      // minima and total_min stays valid for the whole pass.
      Rational total_min = 0;
      for (int k : cols) total_min += term_min(r, k);
      for (int k : cols) {
        const Rational& c_rk = lp.constraints(r, k);
        const Rational cand = (lp.rhs[r] - (total_min - term_min(r, k))) / c_rk;
        if (c_rk > 0) {
          if (cand < res.upper[k]) {
            res.upper[k] = cand;
            changed = true;
          }
        } else {
          if (cand > res.lower[k]) {
            res.lower[k] = cand;
            changed = true;
          }
        }
        if (res.upper[k] < res.lower[k]) {
          res.empty = true;
          res.witness_row = static_cast<int>(r);
          res.sweeps = sweep + 1;
          return res;
        }
      }
    }
    res.sweeps = sweep + 1;
    if (!changed) break;
  }
  return res;
}

}  // namespace abset
