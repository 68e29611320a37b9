#include "vng/paths.hpp"

#include "vng/lp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace vng {

PrimalPath zero_path(const ScenarioTree& tree) {
  PrimalPath out;
  for (int t = 0; t <= tree.horizon(); ++t) out.x.push_back(zero_adapted(tree, t));
  return out;
}

DynkinDual zero_dynkin(const ScenarioTree& tree) {
  DynkinDual out;
  const int N = tree.horizon();
  out.p.push_back(AdaptedVector{0, Matrix()});
  for (int t = 1; t <= N; ++t) out.p.push_back(zero_adapted(tree, t));
  out.p.push_back(zero_adapted(tree, N));
  return out;
}

RadnerDual zero_radner(const ScenarioTree& tree) {
  RadnerDual out;
  for (int t = 0; t <= tree.horizon(); ++t) out.q.push_back(zero_adapted(tree, t));
  return out;
}

PrimalPath scaled(const PrimalPath& path, double factor) {
  PrimalPath out = path;
  for (auto& v : out.x) v.values *= factor;
  return out;
}

DynkinDual scaled(const DynkinDual& dual, double factor) {
  DynkinDual out = dual;
  for (auto& v : out.p) v.values *= factor;
  return out;
}

AdaptedVector next_expectation(const ScenarioTree& tree, const DynkinDual& dual, int t) {
  const int N = tree.horizon();
  if (t < 1 || t > N) throw std::invalid_argument("next_expectation: t out of range");
  if (t == N) return dual.p.at(N + 1);
  return cond_expectation(tree, dual.p.at(t + 1), t);
}

void CheckReport::record(NodeIndex node, int t, double residual, double tol, const std::string& what) {
  ++checked;
  worst_residual = std::max(worst_residual, residual);
  if (!(residual <= tol)) {  // NaN counts as a violation
    ok = false;
    violations.push_back(Violation{node, t, residual, what});
  }
}

namespace {

void require_levels(const ScenarioTree& tree, const PrimalPath& path) {
  if (path.horizon() != tree.horizon()) throw std::invalid_argument("path horizon does not match tree");
  for (int t = 0; t <= tree.horizon(); ++t) {
    if (path.x[t].time != t || path.x[t].values.rows() != tree.dim() ||
        path.x[t].values.cols() != static_cast<Eigen::Index>(tree.level(t).size())) {
      throw std::invalid_argument("path level " + std::to_string(t) + " misaligned");
    }
  }
}

void require_levels(const ScenarioTree& tree, const DynkinDual& dual) {
  const int N = tree.horizon();
  if (dual.horizon() != N) throw std::invalid_argument("dual horizon does not match tree");
  for (int t = 1; t <= N + 1; ++t) {
    int lvl = std::min(t, N);
    if (dual.p[t].values.rows() != tree.dim() ||
        dual.p[t].values.cols() != static_cast<Eigen::Index>(tree.level(lvl).size())) {
      throw std::invalid_argument("dual level " + std::to_string(t) + " misaligned");
    }
  }
}

double negativity(const Eigen::Ref<const Vector>& v) { return v.size() ? std::max(0.0, -v.minCoeff()) : 0.0; }

}  // namespace

CheckReport check_path(const Model& model, const PrimalPath& path, double tol) {
  const ScenarioTree& tree = model.tree;
  require_levels(tree, path);
  CheckReport rep;
  rep.record(tree.root(), 0, negativity(path.x[0].values.col(0)), tol, "negative state");
  for (int t = 1; t <= tree.horizon(); ++t) {
    for (NodeIndex nu : tree.level(t)) {
      Vector a = path.x[t - 1].at(tree, tree.parent(nu));
      Vector b = path.x[t].at(tree, nu);
      double neg = negativity(b);
      if (neg > tol) {
        rep.record(nu, t, neg, tol, "negative state");
        continue;
      }
      rep.record(nu, t, primal_distance(model.cones[nu], a, b), tol, "transition outside G_t");
    }
  }
  return rep;
}

CheckReport check_dynkin(const Model& model, const DynkinDual& dual, double tol) {
  const ScenarioTree& tree = model.tree;
  require_levels(tree, dual);
  CheckReport rep;
  for (int t = 1; t <= tree.horizon(); ++t) {
    AdaptedVector next = next_expectation(tree, dual, t);
    for (NodeIndex nu : tree.level(t)) {
      Vector c = dual.p[t].at(tree, nu);
      Vector d = next.at(tree, nu);
      const ConeSpec& cone = model.cones[nu];
      double res = std::max(negativity(c), negativity(d));
      if (cone.size() > 0) {
        res = std::max(res, (d.transpose() * cone.outputs - c.transpose() * cone.inputs).maxCoeff());
      }
      rep.record(nu, t, std::max(res, 0.0), tol, "(p_t, E_t p_{t+1}) outside dual cone");
    }
  }
  // p_{N+1} nonnegativity (no cone constraint of its own).
  for (NodeIndex nu : tree.level(tree.horizon())) {
    double neg = negativity(dual.p[tree.horizon() + 1].at(tree, nu));
    if (neg > 0.0) rep.record(nu, tree.horizon() + 1, neg, tol, "negative terminal price");
  }
  return rep;
}

CheckReport check_support(const ScenarioTree& tree, const PrimalPath& path, const DynkinDual& dual, double tol) {
  require_levels(tree, path);
  require_levels(tree, dual);
  const int N = tree.horizon();
  CheckReport rep;
  for (int t = 1; t <= N + 1; ++t) {
    int lvl = std::min(t, N);
    for (NodeIndex nu : tree.level(lvl)) {
      Vector x_prev = t <= N ? Vector(path.x[t - 1].at(tree, tree.parent(nu))) : Vector(path.x[N].at(tree, nu));
      if ((x_prev.array() == 0.0).all()) {
        rep.unsupportable.push_back(nu);
        rep.record(nu, t, std::numeric_limits<double>::infinity(), tol, "unsupportable node (x_{t-1} = 0)");
        continue;
      }
      double v = dual.p[t].at(tree, nu).dot(x_prev);
      rep.record(nu, t, std::abs(v - 1.0), tol, "p_t . x_{t-1} != 1");
    }
  }
  return rep;
}

CheckReport check_support(const ScenarioTree& tree, const PrimalPath& path, const RadnerDual& dual, double tol) {
  require_levels(tree, path);
  if (dual.horizon() != tree.horizon()) throw std::invalid_argument("R-dual horizon does not match tree");
  CheckReport rep;
  for (int t = 0; t <= tree.horizon(); ++t) {
    for (NodeIndex nu : tree.level(t)) {
      Vector x = path.x[t].at(tree, nu);
      if ((x.array() == 0.0).all()) {
        rep.unsupportable.push_back(nu);
        rep.record(nu, t, std::numeric_limits<double>::infinity(), tol, "unsupportable node (x_t = 0)");
        continue;
      }
      rep.record(nu, t, std::abs(dual.q[t].at(tree, nu).dot(x) - 1.0), tol, "q_t . x_t != 1");
    }
  }
  return rep;
}

CheckReport check_radner(const Model& model, const RadnerDual& dual, double tol) {
  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  if (dual.horizon() != tree.horizon()) throw std::invalid_argument("R-dual horizon does not match tree");
  CheckReport rep;
  for (int t = 0; t <= tree.horizon(); ++t) {
    for (NodeIndex nu : tree.level(t)) {
      double neg = negativity(dual.q[t].at(tree, nu));
      if (neg > 0.0) rep.record(nu, t, neg, tol, "negative R-dual price");
    }
  }
  using Term = LinearProgram<double>::Term;
  for (int t = 1; t <= tree.horizon(); ++t) {
    for (NodeIndex mu : tree.level(t - 1)) {
      // max sum_nu P(nu|mu) q_t(nu).v(nu) - q_{t-1}(mu).u, (u, v(nu)) in G_t(nu), |u| = 1.
      LinearProgram<double> lp;
      lp.sense = ObjectiveSense::maximize;
      Vector q_prev = dual.q[t - 1].at(tree, mu);
      std::vector<int> u(n);
      for (int i = 0; i < n; ++i) u[i] = lp.add_variable(-q_prev(i));
      std::vector<Term> norm;
      for (int i = 0; i < n; ++i) norm.emplace_back(u[i], 1.0);
      lp.add_row(std::move(norm), RowSense::equal, 1.0);
      for (NodeIndex nu : tree.children(mu)) {
        const ConeSpec& cone = model.cones[nu];
        Vector q = dual.q[t].at(tree, nu);
        int first = lp.num_variables();
        for (int k = 0; k < cone.size(); ++k) lp.add_variable(tree.cond_prob(nu) * q.dot(cone.output(k)));
        for (int i = 0; i < n; ++i) {
          std::vector<Term> terms;
          for (int k = 0; k < cone.size(); ++k) {
            if (cone.inputs(i, k) != 0.0) terms.emplace_back(first + k, cone.inputs(i, k));
          }
          terms.emplace_back(u[i], -1.0);
          lp.add_row(std::move(terms), RowSense::equal, 0.0);
        }
      }
      auto sol = lp_solve(lp);
      double res;
      if (sol.status == SolveStatus::optimal) res = std::max(0.0, sol.objective);
      else if (sol.status == SolveStatus::unbounded) res = std::numeric_limits<double>::infinity();
      else throw std::runtime_error("check_radner: LP engine failure at node " + tree.id(mu));
      rep.record(mu, t - 1, res, tol, "E_{t-1}(q_t v) > q_{t-1} u for some (u, v) in Z_t");
    }
  }
  return rep;
}

GrowthRates growth_rate(const ScenarioTree& tree, const DynkinDual& dual, const PrimalPath& y, int t) {
  require_levels(tree, y);
  require_levels(tree, dual);
  GrowthRates out;
  out.time = t;
  auto lvl = tree.level(t);
  out.ratio = Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(lvl.size()),
                                           std::numeric_limits<double>::quiet_NaN());
  AdaptedVector next = next_expectation(tree, dual, t);
  for (NodeIndex nu : lvl) {
    double den = dual.p[t].at(tree, nu).dot(y.x[t - 1].at(tree, tree.parent(nu)));
    if (!(den > 0.0)) {
      out.excluded.push_back(nu);
      continue;
    }
    out.ratio(tree.slot(nu)) = next.at(tree, nu).dot(y.x[t].at(tree, nu)) / den;
  }
  return out;
}

ScenarioOptimality scenariowise_optimality(const ScenarioTree& tree, int t, const std::vector<NodeProblem>& problems,
                                           const std::vector<Vector>& candidate, double tol) {
  auto lvl = tree.level(t);
  if (problems.size() != lvl.size() || candidate.size() != lvl.size()) {
    throw std::invalid_argument("scenariowise_optimality: one problem and candidate per node required");
  }
  ScenarioOptimality out;
  for (NodeIndex nu : lvl) {
    const auto& prob = problems[tree.slot(nu)];
    double pr = tree.unconditional_prob(nu);
    double cand = prob.objective(candidate[tree.slot(nu)]);
    double best = cand;
    for (const auto& z : prob.feasible) best = std::max(best, prob.objective(z));
    out.candidate_value += pr * cand;
    out.best_value += pr * best;
    if (best - cand > tol && out.nodewise_optimal) {
      out.nodewise_optimal = false;
      out.counterexample = nu;
    }
  }
  // The best adapted selection picks the node-wise argmax, so the expected
  // comparison is a single sum; both verdicts are reported independently.
  out.expectation_optimal = out.best_value - out.candidate_value <= tol;
  return out;
}

}  // namespace vng
