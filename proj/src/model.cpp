#include "vng/model.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

namespace vng {

Model model_at_horizon(const Model& model, int horizon) {
  const ScenarioTree& tree = model.tree;
  if (horizon < 1) throw std::invalid_argument("model_at_horizon: horizon must be >= 1");
  if (horizon == tree.horizon()) return model;

  Model out = model;
  if (horizon < tree.horizon()) {
    out.tree = tree.truncated(horizon);
    out.cones.at_node.resize(out.tree.size());
    return out;
  }
  if (!model.stationary) {
    throw ModelError(ModelError::Kind::schema, "stationary",
                     "horizon " + std::to_string(horizon) + " exceeds declared horizon " +
                         std::to_string(tree.horizon()) + " of a non-stationary model");
  }

  std::vector<ScenarioNode> records;
  std::unordered_map<std::string, NodeIndex> cone_source;
  records.reserve(tree.size() * 2);
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(tree.size()); ++i) {
    records.push_back(tree.node(i));
    cone_source.emplace(tree.id(i), i);
  }
  auto first_level = tree.level(1);
  std::vector<std::string> frontier;
  for (NodeIndex leaf : tree.level(tree.horizon())) frontier.push_back(tree.id(leaf));
  for (int t = tree.horizon() + 1; t <= horizon; ++t) {
    std::vector<std::string> next;
    for (const auto& pid : frontier) {
      for (NodeIndex c : first_level) {
        ScenarioNode nd;
        nd.id = pid + "/" + tree.id(c);
        nd.time = t;
        nd.parent = pid;
        nd.cond_prob = tree.cond_prob(c);
        cone_source.emplace(nd.id, c);
        next.push_back(nd.id);
        records.push_back(std::move(nd));
      }
    }
    frontier = std::move(next);
  }
  out.tree = build_tree(std::move(records), tree.dim());
  out.cones.at_node.assign(out.tree.size(), ConeSpec{});
  for (NodeIndex i = 1; i < static_cast<NodeIndex>(out.tree.size()); ++i) {
    out.cones[i] = model.cones[cone_source.at(out.tree.id(i))];
  }
  return out;
}

void check_structure(const Model& model) {
  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  if (model.x0.size() != n) {
    throw ModelError(ModelError::Kind::schema, "x0", "expected " + std::to_string(n) + " coordinates");
  }
  if (!model.x0.allFinite() || (model.x0.array() < 0.0).any()) {
    throw ModelError(ModelError::Kind::schema, "x0", "coordinates must be finite and nonnegative");
  }
  if (model.cones.at_node.size() != tree.size()) {
    throw ModelError(ModelError::Kind::schema, "nodes", "cone table does not match node table");
  }
  for (NodeIndex i = 1; i < static_cast<NodeIndex>(tree.size()); ++i) {
    const ConeSpec& c = model.cones[i];
    if (c.size() == 0) throw ModelError(ModelError::Kind::schema, tree.id(i), "missing cone generators");
    if (c.dim() != n) throw ModelError(ModelError::Kind::schema, tree.id(i), "generator dimension mismatch");
    if (!c.inputs.allFinite() || !c.outputs.allFinite() || (c.inputs.array() < 0.0).any() ||
        (c.outputs.array() < 0.0).any()) {
      throw ModelError(ModelError::Kind::schema, tree.id(i), "generators must be finite and nonnegative");
    }
  }
}

AssumptionReport assess_assumptions(const Model& model, double tol) {
  AssumptionReport rep;
  const ScenarioTree& tree = model.tree;
  for (int t = 1; t <= tree.horizon(); ++t) {
    for (NodeIndex nu : tree.level(t)) {
      if (!validate_G1(model.cones[nu])) {
        rep.g1 = false;
        rep.messages.push_back("G1-violation at node " + tree.id(nu));
      }
      try {
        validate_G2(model.cones[nu]);
      } catch (const ModelError& e) {
        rep.g2 = false;
        rep.messages.push_back(std::string(e.what()) + " at node " + tree.id(nu));
      }
      G3Witness w = node_G3(model.cones[nu]);
      if (w.gamma <= tol) {
        rep.g3 = false;
        std::ostringstream os;
        os << "G3-violation at node " << tree.id(nu) << " (gamma = " << w.gamma << ")";
        rep.messages.push_back(os.str());
      }
    }
  }
  if (model.x0.size() == 0 || !(model.x0.minCoeff() > 0.0)) {
    rep.initial_state = false;
    rep.messages.push_back("initial state is not strictly positive (delta <= 0)");
  }
  if (rep.ok()) {
    try {
      rep.constants = compute_constants(model, tol);
    } catch (const ModelError& e) {
      rep.initial_state = false;
      rep.messages.push_back(e.what());
    }
  }
  return rep;
}

}  // namespace vng
