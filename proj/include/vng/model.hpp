#pragma once

#include "vng/cones.hpp"
#include "vng/scenario_tree.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vng {

/// Tree, per-node cones and initial state of a stochastic von Neumann-Gale
/// system. `stationary` allows extension beyond the declared horizon by
/// replicating the level-1 structure under every leaf.
struct Model {
  std::string name;
  ScenarioTree tree;
  RandomCone cones;
  Vector x0;
  bool stationary = false;
  bool free_disposal_closure = false;
  std::optional<double> declared_delta;
  std::optional<double> declared_D;

  int dim() const { return tree.dim(); }
  int horizon() const { return tree.horizon(); }
};

/// Truncates, or extends a stationary model, to horizon N. Extended nodes get
/// ids "<parent>/<level-1 id>" and copies of the level-1 probabilities and cones.
Model model_at_horizon(const Model& model, int horizon);

/// Structural checks: one cone per non-root node, dimensions, finiteness and
/// nonnegativity of generators and x0. Throws ModelError.
void check_structure(const Model& model);

/// Fills every GrowthConstants field. Throws ModelError(assumption) on a
/// (G.1)-(G.3) violation or when x0 is not strictly positive.
GrowthConstants compute_constants(const Model& model, double tol = kMembershipTolerance);

/// Non-throwing per-assumption verdicts, as printed by `vng validate`.
struct AssumptionReport {
  bool g1 = true;
  bool g2 = true;
  bool g3 = true;
  bool initial_state = true;
  std::vector<std::string> messages;
  std::optional<GrowthConstants> constants;

  bool ok() const { return g1 && g2 && g3 && initial_state; }
};

AssumptionReport assess_assumptions(const Model& model, double tol = kMembershipTolerance);

}  // namespace vng
