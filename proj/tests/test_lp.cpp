#include "vng/lp.hpp"
#include "vng/rational.hpp"

#include <doctest.h>

#include <random>

using namespace vng;
using doctest::Approx;

namespace {

using Term = LinearProgram<double>::Term;

// Brute-force oracle: best vertex of {x >= 0, A x <= b} by enumerating
// every choice of n active constraints.
std::optional<double> vertex_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  Eigen::MatrixXd all(m + n, n);
  Eigen::VectorXd rhs(m + n);
  all << A, -Eigen::MatrixXd::Identity(n, n);
  rhs << b, Eigen::VectorXd::Zero(n);
  std::optional<double> best;
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd S(n, n);
      Eigen::VectorXd r(n);
      for (int i = 0; i < n; ++i) {
        S.row(i) = all.row(pick[i]);
        r(i) = rhs(pick[i]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
      if (!lu.isInvertible()) return;
      Eigen::VectorXd x = lu.solve(r);
      if (((all * x - rhs).array() > 1e-9).any()) return;
      double v = c.dot(x);
      if (!best || v > *best) best = v;
      return;
    }
    for (int j = start; j < m + n; ++j) {
      pick[depth] = j;
      rec(j + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_SUITE("lp") {
  TEST_CASE("bounded single variable") {
    LinearProgram<double> lp;
    lp.sense = ObjectiveSense::maximize;
    lp.add_variable(1.0, 1.0);
    auto r = lp_solve(lp);
    CHECK(r.status == SolveStatus::optimal);
    CHECK(r.objective == 1.0);
  }

  TEST_CASE("infeasible program returns a Farkas certificate") {
    LinearProgram<double> lp;
    int x = lp.add_variable();
    lp.add_row({{x, 1.0}}, RowSense::less_equal, -1.0);
    auto r = lp_solve(lp);
    CHECK(r.status == SolveStatus::infeasible);
    REQUIRE(r.farkas.size() == 1);
    // y <= 0 on a <= row, y A <= 0 and rhs . y > 0.
    CHECK(r.farkas(0) < 0.0);
    CHECK(-1.0 * r.farkas(0) > 0.0);
  }

  TEST_CASE("unbounded program returns a ray") {
    LinearProgram<double> lp;
    lp.sense = ObjectiveSense::maximize;
    int x = lp.add_variable(1.0), y = lp.add_variable(0.0);
    lp.add_row({{x, 1.0}, {y, -1.0}}, RowSense::less_equal, 1.0);
    auto r = lp_solve(lp);
    CHECK(r.status == SolveStatus::unbounded);
    REQUIRE(r.ray.size() == 2);
    CHECK(r.ray(0) > 0.0);
    CHECK(r.ray(0) - r.ray(1) <= 1e-12);
  }

  TEST_CASE("x + y <= 1 reaches 1 deterministically") {
    auto solve = [] {
      LinearProgram<double> lp;
      lp.sense = ObjectiveSense::maximize;
      int x = lp.add_variable(1.0), y = lp.add_variable(1.0);
      lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::less_equal, 1.0);
      return lp_solve(lp);
    };
    auto a = solve(), b = solve();
    CHECK(a.status == SolveStatus::optimal);
    CHECK(a.objective == Approx(1.0));
    CHECK(a.primal == b.primal);
    CHECK(a.iterations == b.iterations);
    CHECK(a.duals(0) == Approx(1.0));
  }

  TEST_CASE("equality and >= rows with exact rationals") {
    LinearProgram<Rational> lp;
    lp.sense = ObjectiveSense::minimize;
    int x = lp.add_variable(Rational(1)), y = lp.add_variable(Rational(2));
    lp.add_row({{x, Rational(1)}, {y, Rational(1)}}, RowSense::equal, Rational(1, 3));
    lp.add_row({{y, Rational(3)}}, RowSense::greater_equal, Rational(1, 7));
    auto r = lp_solve(lp);
    REQUIRE(r.status == SolveStatus::optimal);
    // y = 1/21, x = 1/3 - 1/21 = 6/21.
    CHECK(r.primal(1) == Rational(1, 21));
    CHECK(r.primal(0) == Rational(6, 21));
    CHECK(r.objective == Rational(8, 21));
  }

  TEST_CASE("random small programs match vertex enumeration in both modes") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> coef(0, 8);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 2, m = 2 + trial % 3;
      Eigen::MatrixXd A(m, n);
      Eigen::VectorXd b(m), c(n);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = coef(rng) * 0.25;
        b(i) = 1.0 + coef(rng);
      }
      for (int j = 0; j < n; ++j) c(j) = coef(rng) * 0.5 - 1.0;
      LinearProgram<double> lp;
      LinearProgram<Rational> lq;
      lp.sense = lq.sense = ObjectiveSense::maximize;
      for (int j = 0; j < n; ++j) {
        lp.add_variable(c(j));
        lq.add_variable(Rational(c(j)));
      }
      for (int i = 0; i < m; ++i) {
        std::vector<Term> t;
        std::vector<LinearProgram<Rational>::Term> tq;
        for (int j = 0; j < n; ++j) {
          t.emplace_back(j, A(i, j));
          tq.emplace_back(j, Rational(A(i, j)));
        }
        lp.add_row(t, RowSense::less_equal, b(i));
        lq.add_row(tq, RowSense::less_equal, Rational(b(i)));
      }
      auto r = lp_solve(lp);
      auto q = lp_solve(lq);
      bool bounded = true;
      for (int j = 0; j < n; ++j) {
        if (c(j) > 0.0 && A.col(j).isZero()) bounded = false;
      }
      if (!bounded) {
        CHECK(r.status == SolveStatus::unbounded);
        CHECK(q.status == SolveStatus::unbounded);
        continue;
      }
      auto oracle = vertex_max(A, b, c);
      REQUIRE(oracle);
      REQUIRE(r.status == SolveStatus::optimal);
      REQUIRE(q.status == SolveStatus::optimal);
      CHECK(r.objective == Approx(*oracle).epsilon(1e-9));
      CHECK(q.objective.convert_to<double>() == Approx(*oracle).epsilon(1e-12));
      CHECK(r.primal_residual <= 1e-9);
      CHECK(r.dual_residual <= 1e-9);
      // Strong duality.
      CHECK(b.dot(r.duals) == Approx(r.objective).epsilon(1e-9));
    }
  }

  TEST_CASE("Bland-only pivoting reaches the same optimum") {
    LinearProgram<double> lp;
    lp.sense = ObjectiveSense::maximize;
    int x = lp.add_variable(10.0), y = lp.add_variable(-57.0), z = lp.add_variable(-9.0), w = lp.add_variable(-24.0);
    // Beale's cycling example.
    lp.add_row({{x, 0.5}, {y, -5.5}, {z, -2.5}, {w, 9.0}}, RowSense::less_equal, 0.0);
    lp.add_row({{x, 0.5}, {y, -1.5}, {z, -0.5}, {w, 1.0}}, RowSense::less_equal, 0.0);
    lp.add_row({{x, 1.0}}, RowSense::less_equal, 1.0);
    SimplexOptions bland;
    bland.bland_only = true;
    auto a = lp_solve(lp), b = lp_solve(lp, bland);
    REQUIRE(a.status == SolveStatus::optimal);
    REQUIRE(b.status == SolveStatus::optimal);
    CHECK(a.objective == Approx(1.0));
    CHECK(b.objective == Approx(1.0));
  }
}
