#include "vng/interior_point.hpp"
#include "vng/solver.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace vng {

TransitionLayout::TransitionLayout(const Model& model) {
  const ScenarioTree& tree = model.tree;
  first.assign(tree.size(), 0);
  used.assign(tree.size(), {});
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    first[nu] = size;
    const ConeSpec& cone = model.cones[nu];
    for (int k = 0; k < cone.size(); ++k) {
      if (l1_norm(cone.input(k)) > 0.0 || l1_norm(cone.output(k)) > 0.0) used[nu].push_back(k);
    }
    size += static_cast<int>(used[nu].size());
  }
}

PrimalPath path_from_weights(const Model& model, const TransitionLayout& layout, const Eigen::VectorXd& lambda) {
  const ScenarioTree& tree = model.tree;
  PrimalPath path = zero_path(tree);
  path.x[0].values.col(0) = model.x0;
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    auto col = path.x[tree.time(nu)].at(tree, nu);
    const ConeSpec& cone = model.cones[nu];
    for (std::size_t j = 0; j < layout.used[nu].size(); ++j) {
      col += std::max(0.0, lambda(layout.index(nu, j))) * cone.output(layout.used[nu][j]);
    }
  }
  return path;
}

namespace {

Vector default_weight(const Model& model, const Vector& w) {
  if (w.size() == 0) return Vector::Ones(model.dim());
  if (w.size() != model.dim() || (w.array() < 0.0).any() || !(w.sum() > 0.0)) {
    throw std::invalid_argument("weight must be a nonnegative, nonzero n-vector");
  }
  return w;
}

// Equality system of the path programs: per non-root node the input
// consumed equals the parent's output (x0 at level 1); per leaf the slack
// variable s equals w . x_N.
SeparableProgram path_program(const Model& model, const TransitionLayout& layout, const Vector& w) {
  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  const auto leaves = tree.level(tree.horizon());
  const int num_rows = n * (static_cast<int>(tree.size()) - 1) + static_cast<int>(leaves.size());
  const int num_cols = layout.size + static_cast<int>(leaves.size());

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_rows);
  auto row_of = [n](NodeIndex nu, int i) { return n * (nu - 1) + i; };
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    const ConeSpec& cone = model.cones[nu];
    for (std::size_t j = 0; j < layout.used[nu].size(); ++j) {
      int k = layout.used[nu][j];
      int col = layout.index(nu, j);
      for (int i = 0; i < n; ++i) {
        if (cone.inputs(i, k) != 0.0) trip.emplace_back(row_of(nu, i), col, cone.inputs(i, k));
      }
      for (NodeIndex child : tree.children(nu)) {
        for (int i = 0; i < n; ++i) {
          if (cone.outputs(i, k) != 0.0) trip.emplace_back(row_of(child, i), col, -cone.outputs(i, k));
        }
      }
    }
    if (tree.time(nu) == 1) {
      for (int i = 0; i < n; ++i) b(row_of(nu, i)) = model.x0(i);
    }
  }
  int leaf_row = n * (static_cast<int>(tree.size()) - 1);
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    NodeIndex leaf = leaves[l];
    int row = leaf_row + static_cast<int>(l);
    trip.emplace_back(row, layout.size + static_cast<int>(l), 1.0);
    const ConeSpec& cone = model.cones[leaf];
    for (std::size_t j = 0; j < layout.used[leaf].size(); ++j) {
      double v = w.dot(cone.output(layout.used[leaf][j]));
      if (v != 0.0) trip.emplace_back(row, layout.index(leaf, j), -v);
    }
  }
  SeparableProgram prog;
  prog.A.resize(num_rows, num_cols);
  prog.A.setFromTriplets(trip.begin(), trip.end());
  prog.b = b;
  prog.c = Eigen::VectorXd::Zero(num_cols);
  prog.log_weight = Eigen::VectorXd::Zero(num_cols);
  return prog;
}

bool has_free_output(const Model& model, const TransitionLayout& layout) {
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(model.tree.size()); ++nu) {
    for (int k : layout.used[nu]) {
      if (l1_norm(model.cones[nu].input(k)) == 0.0) return true;
    }
  }
  return false;
}

}  // namespace

SolveReport<double> max_terminal_value(const Model& model, const Vector& weight, double tol) {
  Vector w = default_weight(model, weight);
  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  TransitionLayout layout(model);
  if (has_free_output(model, layout)) {
    SolveReport<double> rep;
    rep.status = SolveStatus::unbounded;
    return rep;
  }
  // Vertex solution by simplex: the optimum is exact at the pivot tolerance.
  LinearProgram<double> lp;
  lp.sense = ObjectiveSense::maximize;
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    const ConeSpec& cone = model.cones[nu];
    const bool leaf = tree.time(nu) == tree.horizon();
    for (int k : layout.used[nu]) {
      lp.add_variable(leaf ? tree.unconditional_prob(nu) * w.dot(cone.output(k)) : 0.0);
    }
  }
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    const ConeSpec& cone = model.cones[nu];
    NodeIndex parent = tree.parent(nu);
    for (int i = 0; i < n; ++i) {
      std::vector<LinearProgram<double>::Term> terms;
      for (std::size_t j = 0; j < layout.used[nu].size(); ++j) {
        double a = cone.inputs(i, layout.used[nu][j]);
        if (a != 0.0) terms.emplace_back(layout.index(nu, j), a);
      }
      if (parent != tree.root()) {
        const ConeSpec& pc = model.cones[parent];
        for (std::size_t j = 0; j < layout.used[parent].size(); ++j) {
          double b = pc.outputs(i, layout.used[parent][j]);
          if (b != 0.0) terms.emplace_back(layout.index(parent, j), -b);
        }
      }
      lp.add_row(std::move(terms), RowSense::equal, parent == tree.root() ? model.x0(i) : 0.0);
    }
  }
  SolveReport<double> rep = lp_solve(lp);
  if (rep.status == SolveStatus::optimal && rep.objective <= tol) rep.status = SolveStatus::degenerate_model;
  return rep;
}

namespace {

// Node-wise lower bound of a feasible path: feed the largest multiple of the
// (G.3) witness input the parent state allows and consume the remainder
// through the (G.1) unit decomposition. Outputs are nonnegative, so s * b_hat
// bounds the state from below. Empty when some cone fails (G.1).
std::optional<std::vector<Vector>> witness_states(const Model& model) {
  const ScenarioTree& tree = model.tree;
  std::vector<Vector> low(tree.size());
  low[tree.root()] = model.x0;
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    const ConeSpec& cone = model.cones[nu];
    if (!validate_G1(cone)) return std::nullopt;
    G3Witness wit = node_G3(cone);
    const Vector& prev = low[tree.parent(nu)];
    double s = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tree.dim(); ++i) {
      if (wit.a_hat(i) > 0.0) s = std::min(s, prev(i) / wit.a_hat(i));
    }
    if (!std::isfinite(s)) s = 0.0;
    low[nu] = s * wit.b_hat;
  }
  return low;
}

double terminal_value(const Model& model, const std::vector<Vector>& states, const Vector& w) {
  double value = 0.0;
  for (NodeIndex leaf : model.tree.level(model.horizon())) {
    value += model.tree.unconditional_prob(leaf) * w.dot(states[leaf]);
  }
  return value;
}

}  // namespace

std::optional<double> terminal_lower_bound(const Model& model, const Vector& weight) {
  Vector w = default_weight(model, weight);
  auto low = witness_states(model);
  if (!low) return std::nullopt;
  return terminal_value(model, *low, w);
}

double expected_log_value(const Model& model, const PrimalPath& path, const Vector& weight) {
  Vector w = default_weight(model, weight);
  double v = 0.0;
  for (NodeIndex leaf : model.tree.level(model.horizon())) {
    double s = w.dot(path.x[model.horizon()].at(model.tree, leaf));
    if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
    v += model.tree.unconditional_prob(leaf) * std::log(s);
  }
  return v;
}

LogOptimalResult solve_log_optimal(const Model& model, const LogOptimalOptions& options) {
  Vector w = default_weight(model, options.weight);
  auto low = witness_states(model);
  if (!low || terminal_value(model, *low, w) <= kCertificationTolerance) {
    auto guard = max_terminal_value(model, w);
    if (guard.status == SolveStatus::degenerate_model) {
      throw SolverError(SolveStatus::degenerate_model, "degenerate model: max E[w.x_N] <= tolerance");
    }
    if (guard.status != SolveStatus::optimal) {
      throw SolverError(guard.status, "terminal-value guard failed (" + std::string(to_string(guard.status)) + ")");
    }
  }

  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  TransitionLayout layout(model);
  SeparableProgram prog = path_program(model, layout, w);
  const auto leaves = tree.level(tree.horizon());
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    prog.log_weight(layout.size + static_cast<int>(l)) = tree.unconditional_prob(leaves[l]);
  }

  // States grow geometrically along the tree and leaf probabilities shrink,
  // so the raw program is badly scaled for long horizons. Columns are scaled
  // by the magnitude of the state they consume (witness path), rows by the
  // state they balance, and the objective by the largest leaf probability.
  auto magnitude = [&](NodeIndex nu) {
    double m = low ? l1_norm((*low)[nu]) : 0.0;
    return m > 0.0 ? m : 1.0;
  };
  Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(prog.A.cols());
  Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(prog.A.rows());
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    double m = magnitude(tree.parent(nu));
    for (std::size_t j = 0; j < layout.used[nu].size(); ++j) col_scale(layout.index(nu, j)) = m;
    row_scale.segment(n * (nu - 1), n).setConstant(1.0 / m);
  }
  double max_prob = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    double v = low ? w.dot((*low)[leaves[l]]) : 0.0;
    if (!(v > 0.0)) v = magnitude(leaves[l]) * w.maxCoeff();
    col_scale(layout.size + static_cast<int>(l)) = v;
    row_scale(n * (static_cast<int>(tree.size()) - 1) + static_cast<int>(l)) = 1.0 / v;
    max_prob = std::max(max_prob, tree.unconditional_prob(leaves[l]));
  }
  SeparableProgram scaled_prog;
  scaled_prog.A = row_scale.asDiagonal() * prog.A * col_scale.asDiagonal();
  scaled_prog.b = row_scale.cwiseProduct(prog.b);
  scaled_prog.c = prog.c.cwiseProduct(col_scale);
  scaled_prog.log_weight = prog.log_weight / max_prob;

  InteriorPointOptions opt;
  opt.tolerance = options.tolerance;
  opt.max_iterations = options.max_iterations;
  auto ipm = solve_separable(scaled_prog, opt);
  ipm.x = col_scale.cwiseProduct(ipm.x);
  ipm.y = max_prob * row_scale.cwiseProduct(ipm.y);

  LogOptimalResult out;
  out.path = path_from_weights(model, layout, ipm.x.head(layout.size));
  out.objective = expected_log_value(model, out.path, w);
  out.iterations = ipm.iterations;
  out.primal_residual = ipm.primal_residual;
  out.stationarity = ipm.dual_residual;
  out.duality_gap = ipm.complementarity / (1.0 + std::abs(ipm.objective));
  out.converged = std::max({out.primal_residual, out.stationarity, out.duality_gap}) <= options.acceptable;
  if (!out.converged) {
    throw SolverError(SolveStatus::iteration_limit,
                      "expected-log program did not converge after " + std::to_string(ipm.iterations) +
                          " iterations (gap " + std::to_string(out.duality_gap) + ")");
  }

  // Price estimate p_t(node) = -y(node) / P(node); p_{N+1} = w / (w . x_N).
  out.price_estimate = zero_dynkin(tree);
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    out.price_estimate.p[tree.time(nu)].at(tree, nu) =
        -ipm.y.segment(n * (nu - 1), n) / tree.unconditional_prob(nu);
  }
  for (NodeIndex leaf : leaves) {
    double s = w.dot(out.path.x[tree.horizon()].at(tree, leaf));
    out.price_estimate.p[tree.horizon() + 1].at(tree, leaf) = w / s;
  }
  return out;
}

}  // namespace vng
