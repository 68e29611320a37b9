#pragma once

// Dense two-phase tableau simplex, templated on the scalar type so the same
// pivoting code runs in double precision and in exact rational arithmetic
// (see rational.hpp).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace vng {

enum class RowSense { less_equal, equal, greater_equal };
enum class ObjectiveSense { minimize, maximize, feasibility };
enum class SolveStatus { optimal, infeasible, unbounded, degenerate_model, iteration_limit, numerical_failure };

constexpr std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::degenerate_model: return "degenerate-model";
    case SolveStatus::iteration_limit: return "iteration-limit";
    case SolveStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

/// Arithmetic policy. Floating types compare against tolerances, exact
/// types against zero.
template <class Scalar, class Enable = void>
struct LpTraits;

template <class Scalar>
struct LpTraits<Scalar, std::enable_if_t<std::is_floating_point_v<Scalar>>> {
  static constexpr bool exact = false;
  static Scalar zero_tolerance() { return Scalar(1e-11); }
  static Scalar pivot_tolerance() { return Scalar(1e-9); }
  static double to_double(const Scalar& v) { return static_cast<double>(v); }
  static Scalar from_double(double v) { return static_cast<Scalar>(v); }
};

template <class Scalar>
using LpVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct LinearProgram {
  using Term = std::pair<int, Scalar>;
  struct Row {
    std::vector<Term> terms;
    RowSense sense = RowSense::less_equal;
    Scalar rhs = Scalar(0);
  };

  ObjectiveSense sense = ObjectiveSense::feasibility;
  std::vector<Scalar> cost;                   // one per variable
  std::vector<std::optional<Scalar>> upper;  // lower bounds are all zero
  std::vector<Row> rows;

  int num_variables() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_variable(Scalar c = Scalar(0), std::optional<Scalar> ub = std::nullopt) {
    cost.push_back(std::move(c));
    upper.push_back(std::move(ub));
    return num_variables() - 1;
  }
  int add_row(std::vector<Term> terms, RowSense s, Scalar rhs) {
    rows.push_back(Row{std::move(terms), s, std::move(rhs)});
    return num_rows() - 1;
  }
};

struct SimplexOptions {
  int max_iterations = 200000;
  /// Consecutive degenerate pivots tolerated under the largest-coefficient
  /// rule before switching to Bland's rule for the rest of the phase.
  int degenerate_switch = 50;
  bool bland_only = false;
};

/// Result of lp_solve. Duals follow the convention objective = rhs . duals:
/// for a maximization with <= rows they are nonnegative. For an infeasible
/// program `farkas` holds y with sum_i y_i A_i <= 0 (componentwise),
/// rhs . y > 0, y_i <= 0 on <= rows and y_i >= 0 on >= rows.
template <class Scalar>
struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  Scalar objective = Scalar(0);
  LpVector<Scalar> primal;
  LpVector<Scalar> duals;
  LpVector<Scalar> farkas;
  LpVector<Scalar> farkas_bounds;  // multipliers of x_j <= upper_j rows
  LpVector<Scalar> ray;            // unbounded direction
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  int phase_one_iterations = 0;
  bool used_bland = false;
  double wall_seconds = 0.0;
};

namespace detail {

template <class Scalar>
class Tableau {
 public:
  using Traits = LpTraits<Scalar>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit Tableau(const LinearProgram<Scalar>& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {}

  SolveReport<Scalar> run() {
    auto start = std::chrono::steady_clock::now();
    SolveReport<Scalar> rep;
    build();
    const Scalar eps = Traits::zero_tolerance();

    if (num_artificial_ > 0) {
      set_objective(/*phase_one=*/true);
      auto st = iterate(rep);
      rep.phase_one_iterations = rep.iterations;
      if (st != SolveStatus::optimal) {
        rep.status = st;
        finish(rep, start);
        return rep;
      }
      Scalar infeas = -T_(m_, rhs_col_);
      if (infeas > feasibility_threshold()) {
        rep.status = SolveStatus::infeasible;
        rep.objective = infeas;
        extract_duals(rep.farkas, rep.farkas_bounds, /*phase_one=*/true);
        finish(rep, start);
        return rep;
      }
      drive_out_artificials();
    }
    for (int j = first_artificial_; j < ncols_; ++j) barred_[j] = true;

    if (lp_.sense == ObjectiveSense::feasibility) {
      rep.status = SolveStatus::optimal;
    } else {
      set_objective(/*phase_one=*/false);
      rep.status = iterate(rep);
    }
    if (rep.status == SolveStatus::unbounded) {
      rep.ray = LpVector<Scalar>::Zero(n_);
      if (entering_ < n_) rep.ray(entering_) = Scalar(1);
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] < n_) rep.ray(basis_[i]) = -T_(i, entering_);
      }
    }
    if (rep.status == SolveStatus::optimal) {
      rep.primal = LpVector<Scalar>::Zero(n_);
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] < n_) rep.primal(basis_[i]) = T_(i, rhs_col_);
      }
      for (int j = 0; j < n_; ++j) {
        if (rep.primal(j) < Scalar(0)) rep.primal(j) = Scalar(0);  // clip rounding below zero
      }
      Scalar obj(0);
      for (int j = 0; j < n_; ++j) obj += lp_.cost[j] * rep.primal(j);
      rep.objective = obj;
      LpVector<Scalar> bound_duals;
      extract_duals(rep.duals, bound_duals, /*phase_one=*/false);
      compute_residuals(rep, bound_duals);
    }
    (void)eps;
    finish(rep, start);
    return rep;
  }

 private:
  void finish(SolveReport<Scalar>& rep, std::chrono::steady_clock::time_point start) {
    rep.used_bland = used_bland_;
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  Scalar feasibility_threshold() const {
    if constexpr (Traits::exact) return Scalar(0);
    else return Scalar(1e-9) * (Scalar(1) + rhs_scale_);
  }

  // Standardized row: sign_ * (original row), with rhs >= 0.
  void build() {
    n_ = lp_.num_variables();
    const int m_orig = lp_.num_rows();
    std::vector<typename LinearProgram<Scalar>::Row> rows = lp_.rows;
    for (int j = 0; j < n_; ++j) {
      if (lp_.upper[j]) rows.push_back({{{j, Scalar(1)}}, RowSense::less_equal, *lp_.upper[j]});
    }
    m_ = static_cast<int>(rows.size());
    m_orig_ = m_orig;
    sign_.assign(m_, 1);
    for (int i = 0; i < m_; ++i) {
      auto& r = rows[i];
      bool flip = r.rhs < Scalar(0) || (r.rhs == Scalar(0) && r.sense == RowSense::greater_equal);
      if (flip) {
        sign_[i] = -1;
        for (auto& t : r.terms) t.second = -t.second;
        r.rhs = -r.rhs;
        if (r.sense == RowSense::less_equal) r.sense = RowSense::greater_equal;
        else if (r.sense == RowSense::greater_equal) r.sense = RowSense::less_equal;
      }
    }

    // Structural column occupancy, to find unit columns usable as a start basis.
    std::vector<int> nnz(n_, 0), only_row(n_, -1);
    for (int i = 0; i < m_; ++i) {
      for (auto& t : rows[i].terms) {
        if (t.second != Scalar(0)) {
          ++nnz[t.first];
          only_row[t.first] = i;
        }
      }
    }

    int num_slack = 0;
    for (auto& r : rows) {
      if (r.sense != RowSense::equal) ++num_slack;
    }
    basis_.assign(m_, -1);
    init_col_.assign(m_, -1);
    std::vector<bool> used(n_, false);
    std::vector<int> need_art;
    for (int i = 0; i < m_; ++i) {
      if (rows[i].sense == RowSense::less_equal) continue;  // slack assigned below
      int pick = -1;
      for (auto& t : rows[i].terms) {
        int j = t.first;
        if (!used[j] && nnz[j] == 1 && only_row[j] == i && t.second > Scalar(0)) {
          pick = j;
          break;
        }
      }
      if (pick >= 0) {
        used[pick] = true;
        basis_[i] = pick;
      } else {
        need_art.push_back(i);
      }
    }
    num_artificial_ = static_cast<int>(need_art.size());
    first_artificial_ = n_ + num_slack;
    ncols_ = first_artificial_ + num_artificial_;
    rhs_col_ = ncols_;
    T_ = Dense::Zero(m_ + 1, ncols_ + 1);
    barred_.assign(ncols_, false);
    col_cost_.assign(ncols_, Scalar(0));
    is_artificial_row_.assign(m_, false);

    int slack = n_;
    int art = first_artificial_;
    std::size_t next_art = 0;
    rhs_scale_ = Scalar(0);
    for (int i = 0; i < m_; ++i) {
      for (auto& t : rows[i].terms) T_(i, t.first) += t.second;
      T_(i, rhs_col_) = rows[i].rhs;
      if (rows[i].rhs > rhs_scale_) rhs_scale_ = rows[i].rhs;
      if (rows[i].sense == RowSense::less_equal) {
        T_(i, slack) = Scalar(1);
        basis_[i] = slack;
        ++slack;
      } else if (rows[i].sense == RowSense::greater_equal) {
        T_(i, slack) = Scalar(-1);
        ++slack;
      }
      if (next_art < need_art.size() && need_art[next_art] == i) {
        T_(i, art) = Scalar(1);
        basis_[i] = art;
        is_artificial_row_[i] = true;
        ++art;
        ++next_art;
      }
      init_col_[i] = basis_[i];
    }
    // Unit structural columns may carry a coefficient other than one.
    init_scale_.assign(m_, Scalar(1));
    for (int i = 0; i < m_; ++i) {
      Scalar a = T_(i, basis_[i]);
      init_scale_[i] = a;
      if (a != Scalar(1)) T_.row(i) /= a;
    }
    for (int j = 0; j < n_; ++j) {
      Scalar c = lp_.cost[j];
      if (lp_.sense == ObjectiveSense::maximize) c = -c;
      if (lp_.sense == ObjectiveSense::feasibility) c = Scalar(0);
      col_cost_[j] = c;
    }
  }

  void set_objective(bool phase_one) {
    T_.row(m_).setZero();
    for (int j = 0; j < ncols_; ++j) {
      Scalar c = phase_one ? (j >= first_artificial_ ? Scalar(1) : Scalar(0)) : col_cost_[j];
      T_(m_, j) = c;
    }
    for (int i = 0; i < m_; ++i) {
      Scalar cb = T_(m_, basis_[i]);
      if (cb != Scalar(0)) T_.row(m_) -= cb * T_.row(i);
    }
    phase_one_ = phase_one;
  }

  SolveStatus iterate(SolveReport<Scalar>& rep) {
    const Scalar eps = Traits::zero_tolerance();
    bool bland = opt_.bland_only;
    int degenerate_run = 0;
    while (true) {
      if (rep.iterations >= opt_.max_iterations) return SolveStatus::iteration_limit;
      // Pricing.
      int q = -1;
      Scalar best(0);
      for (int j = 0; j < ncols_; ++j) {
        if (barred_[j]) continue;
        const Scalar& d = T_(m_, j);
        if (d < -eps) {
          if (bland) {
            q = j;
            break;
          }
          if (q < 0 || d < best) {
            q = j;
            best = d;
          }
        }
      }
      if (q < 0) return SolveStatus::optimal;
      entering_ = q;

      int r = exact_ratio_test(q);
      if constexpr (!Traits::exact) r = harris_ratio_test(q);
      Scalar best_ratio = r >= 0 ? T_(r, rhs_col_) / T_(r, q) : Scalar(0);
      if (r < 0) return SolveStatus::unbounded;

      bool degenerate;
      if constexpr (Traits::exact) degenerate = (best_ratio == Scalar(0));
      else degenerate = best_ratio <= eps;
      if (degenerate) {
        if (++degenerate_run > opt_.degenerate_switch && !bland) {
          bland = true;
          used_bland_ = true;
        }
      } else {
        degenerate_run = 0;
      }
      pivot(r, q);
      ++rep.iterations;
    }
  }

  // Minimum ratio; ties go to the smallest basic index.
  int exact_ratio_test(int q) const {
    const Scalar eps = Traits::zero_tolerance();
    const Scalar piv_tol = Traits::pivot_tolerance();
    int r = -1;
    Scalar best_ratio(0);
    for (int i = 0; i < m_; ++i) {
      const Scalar& a = T_(i, q);
      if (!(a > piv_tol)) continue;
      Scalar ratio = T_(i, rhs_col_) / a;
      if (r < 0) {
        r = i;
        best_ratio = ratio;
        continue;
      }
      Scalar diff = ratio - best_ratio;
      bool tie;
      if constexpr (Traits::exact) tie = (diff == Scalar(0));
      else tie = std::abs(diff) <= eps * (Scalar(1) + std::abs(best_ratio));
      if ((!tie && diff < Scalar(0)) || (tie && basis_[i] < basis_[r])) {
        r = i;
        best_ratio = ratio;
      }
    }
    return r;
  }

  // Two-pass test: bound the step with a small feasibility relaxation, then
  // take the largest pivot among the rows within that bound (ties to the
  // smallest basic index). Keeps pivots away from tiny entries.
  int harris_ratio_test(int q) const {
    const Scalar piv_tol = Traits::pivot_tolerance();
    const Scalar relax = feasibility_threshold();
    Scalar theta = std::numeric_limits<Scalar>::infinity();
    for (int i = 0; i < m_; ++i) {
      const Scalar& a = T_(i, q);
      if (a > piv_tol) theta = std::min(theta, (std::max(T_(i, rhs_col_), Scalar(0)) + relax) / a);
    }
    int r = -1;
    for (int i = 0; i < m_; ++i) {
      const Scalar& a = T_(i, q);
      if (!(a > piv_tol) || std::max(T_(i, rhs_col_), Scalar(0)) / a > theta) continue;
      if (r < 0 || a > T_(r, q) || (a == T_(r, q) && basis_[i] < basis_[r])) r = i;
    }
    return r;
  }

  void pivot(int r, int q) {
    Scalar piv = T_(r, q);
    T_.row(r) /= piv;
    T_(r, q) = Scalar(1);
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> pivot_row = T_.row(r);
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      Scalar f = T_(i, q);
      if (f == Scalar(0)) continue;
      T_.row(i) -= f * pivot_row;
      T_(i, q) = Scalar(0);
      if constexpr (!Traits::exact) {
        // Rounding can push a basic value just below zero, which would
        // poison later ratio tests.
        if (i < m_ && T_(i, rhs_col_) < Scalar(0) && T_(i, rhs_col_) > -feasibility_threshold()) {
          T_(i, rhs_col_) = Scalar(0);
        }
      }
    }
    basis_[r] = q;
  }

  void drive_out_artificials() {
    const Scalar piv_tol = Traits::pivot_tolerance();
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < first_artificial_) continue;
      int q = -1;
      for (int j = 0; j < first_artificial_; ++j) {
        Scalar a = T_(i, j);
        if (a > piv_tol || a < -piv_tol) {
          q = j;
          break;
        }
      }
      if (q >= 0) pivot(i, q);  // artificial sits at zero, so sign is irrelevant
    }
  }

  // y_i = (c_j - d_j) / a_ij for the column j that formed the initial basis
  // of row i, mapped back through the row sign flip.
  void extract_duals(LpVector<Scalar>& row_duals, LpVector<Scalar>& bound_duals, bool phase_one) {
    LpVector<Scalar> y(m_);
    for (int i = 0; i < m_; ++i) {
      int j = init_col_[i];
      Scalar c = phase_one ? (j >= first_artificial_ ? Scalar(1) : Scalar(0)) : col_cost_[j];
      y(i) = (c - T_(m_, j)) / init_scale_[i];
      if (sign_[i] < 0) y(i) = -y(i);
    }
    if (!phase_one && lp_.sense == ObjectiveSense::maximize) y = -y;
    row_duals = y.head(m_orig_);
    bound_duals = y.tail(m_ - m_orig_);
  }

  void compute_residuals(SolveReport<Scalar>& rep, const LpVector<Scalar>& bound_duals) {
    double pr = 0.0;
    std::vector<double> reduced(n_, 0.0);
    for (int j = 0; j < n_; ++j) reduced[j] = Traits::to_double(lp_.cost[j]);
    for (int i = 0; i < m_orig_; ++i) {
      const auto& row = lp_.rows[i];
      Scalar lhs(0);
      for (auto& t : row.terms) lhs += t.second * rep.primal(t.first);
      double v = Traits::to_double(lhs - row.rhs);
      double viol = row.sense == RowSense::less_equal   ? std::max(0.0, v)
                    : row.sense == RowSense::greater_equal ? std::max(0.0, -v)
                                                         : std::abs(v);
      pr = std::max(pr, viol);
      double yi = Traits::to_double(rep.duals(i));
      for (auto& t : row.terms) reduced[t.first] -= yi * Traits::to_double(t.second);
    }
    int b = 0;
    for (int j = 0; j < n_; ++j) {
      if (!lp_.upper[j]) continue;
      pr = std::max(pr, Traits::to_double(rep.primal(j) - *lp_.upper[j]));
      reduced[j] -= Traits::to_double(bound_duals(b++));
    }
    double dr = 0.0;
    if (lp_.sense != ObjectiveSense::feasibility) {
      // max: reduced costs c - A^T y must be <= 0; min: >= 0.
      double s = lp_.sense == ObjectiveSense::maximize ? 1.0 : -1.0;
      for (int j = 0; j < n_; ++j) dr = std::max(dr, s * reduced[j]);
    }
    rep.primal_residual = pr;
    rep.dual_residual = dr;
  }

  const LinearProgram<Scalar>& lp_;
  SimplexOptions opt_;
  Dense T_;
  int n_ = 0, m_ = 0, m_orig_ = 0, ncols_ = 0, rhs_col_ = 0;
  int num_artificial_ = 0, first_artificial_ = 0;
  int entering_ = -1;
  bool phase_one_ = false;
  bool used_bland_ = false;
  Scalar rhs_scale_ = Scalar(0);
  std::vector<int> sign_, basis_, init_col_;
  std::vector<Scalar> init_scale_, col_cost_;
  std::vector<bool> barred_, is_artificial_row_;
};

}  // namespace detail

/// Solves a linear program with nonnegative variables. Deterministic: the
/// same program always produces the same pivot sequence.
template <class Scalar>
SolveReport<Scalar> lp_solve(const LinearProgram<Scalar>& lp, const SimplexOptions& options = {}) {
  detail::Tableau<Scalar> tableau(lp, options);
  return tableau.run();
}

}  // namespace vng
