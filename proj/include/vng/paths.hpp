#pragma once

#include "vng/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vng {

/// x_0..x_N; x[t] lives on level t.
struct PrimalPath {
  std::vector<AdaptedVector> x;

  int horizon() const { return static_cast<int>(x.size()) - 1; }
  auto at(const ScenarioTree& tree, NodeIndex i) const { return x.at(tree.time(i)).at(tree, i); }
};

/// p_1..p_{N+1}. p[t] lives on level t for t <= N; p[N+1] is attached to the
/// time-N nodes. p[0] is unused.
struct DynkinDual {
  std::vector<AdaptedVector> p;

  int horizon() const { return static_cast<int>(p.size()) - 2; }
};

/// q_0..q_N; q[t] lives on level t.
struct RadnerDual {
  std::vector<AdaptedVector> q;

  int horizon() const { return static_cast<int>(q.size()) - 1; }
};

/// g_1..g_N with E_{t-1} g_t = 0; g[0] unused. The terminal multiplier
/// g_{N+1} = p_{N+1} - q_N is identically zero and not stored.
struct Multipliers {
  std::vector<AdaptedVector> g;
};

PrimalPath zero_path(const ScenarioTree& tree);
DynkinDual zero_dynkin(const ScenarioTree& tree);
RadnerDual zero_radner(const ScenarioTree& tree);

/// Scales every value; used for the (lambda x, p / lambda) invariance.
PrimalPath scaled(const PrimalPath& path, double factor);
DynkinDual scaled(const DynkinDual& dual, double factor);

/// E_t p_{t+1} at level t, for t = 1..N (identity on p_{N+1} at t = N).
AdaptedVector next_expectation(const ScenarioTree& tree, const DynkinDual& dual, int t);

struct Violation {
  NodeIndex node = kNoNode;
  int time = 0;
  double residual = 0.0;
  std::string what;
};

/// Structured checker output. `worst_residual` covers every checked node,
/// violating or not.
struct CheckReport {
  bool ok = true;
  double worst_residual = 0.0;
  std::size_t checked = 0;
  std::vector<Violation> violations;
  /// Nodes where x_{t-1} = 0 makes the support equation unsatisfiable.
  std::vector<NodeIndex> unsupportable;

  void record(NodeIndex node, int time, double residual, double tol, const std::string& what);
};

/// (x_{t-1}(parent), x_t(node)) in G_t(node) at every non-root node.
CheckReport check_path(const Model& model, const PrimalPath& path, double tol = kMembershipTolerance);

/// (p_t, E_t p_{t+1}) in the dual cone at every time-t node, t = 1..N.
CheckReport check_dynkin(const Model& model, const DynkinDual& dual, double tol = kMembershipTolerance);

/// p_t . x_{t-1} = 1 for t = 1..N+1.
CheckReport check_support(const ScenarioTree& tree, const PrimalPath& path, const DynkinDual& dual,
                          double tol = kMembershipTolerance);

/// q_t . x_t = 1 for t = 0..N.
CheckReport check_support(const ScenarioTree& tree, const PrimalPath& path, const RadnerDual& dual,
                          double tol = kMembershipTolerance);

/// E_{t-1}(q_t v) <= q_{t-1} u for every (u, v) in Z_t, checked exactly by one
/// LP per time-(t-1) node under the normalization |u| = 1. Also checks q >= 0.
CheckReport check_radner(const Model& model, const RadnerDual& dual, double tol = kMembershipTolerance);

/// Conditional growth rate E_t(p_{t+1} y_t) / (p_t y_{t-1}) at the time-t nodes.
struct GrowthRates {
  int time = 0;
  Eigen::RowVectorXd ratio;          // NaN where excluded
  std::vector<NodeIndex> excluded;   // p_t . y_{t-1} <= 0
};

GrowthRates growth_rate(const ScenarioTree& tree, const DynkinDual& dual, const PrimalPath& y, int t);

/// Node-wise maximization problem on a finite feasible set.
struct NodeProblem {
  std::vector<Vector> feasible;
  std::function<double(const Vector&)> objective;
};

struct ScenarioOptimality {
  bool nodewise_optimal = true;     // candidate attains the max at every node
  bool expectation_optimal = true;  // E f(candidate) >= E f(any selection)
  std::optional<NodeIndex> counterexample;
  double candidate_value = 0.0;     // E f(candidate)
  double best_value = 0.0;          // max over adapted selections of E f
};

/// Compares node-wise and in-expectation optimality of `candidate` over the
/// time-t nodes (problems and candidate indexed by slot).
ScenarioOptimality scenariowise_optimality(const ScenarioTree& tree, int t,
                                           const std::vector<NodeProblem>& problems,
                                           const std::vector<Vector>& candidate, double tol = 1e-12);

}  // namespace vng
