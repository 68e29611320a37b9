#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vng {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using NodeIndex = int;

inline constexpr NodeIndex kNoNode = -1;

/// Probability tolerance for sibling sums and level totals.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Error raised while assembling or loading a model. `where` names the
/// offending node id or the JSON path of the offending field.
class ModelError : public std::runtime_error {
 public:
  enum class Kind { schema, tree, assumption };

  ModelError(Kind kind, std::string where, const std::string& message)
      : std::runtime_error(where.empty() ? message : where + ": " + message),
        kind_(kind),
        where_(std::move(where)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

 private:
  Kind kind_;
  std::string where_;
};

struct ScenarioNode {
  std::string id;
  int time = 0;
  std::optional<std::string> parent;
  double cond_prob = 1.0;
};

/// Finite event tree. Time-t nodes are the atoms of F_t; probabilities are
/// stored per edge (conditional on the parent).
class ScenarioTree {
 public:
  ScenarioTree() = default;

  int horizon() const noexcept { return static_cast<int>(levels_.size()) - 1; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  const ScenarioNode& node(NodeIndex i) const { return nodes_.at(i); }
  const std::string& id(NodeIndex i) const { return nodes_.at(i).id; }
  int time(NodeIndex i) const { return nodes_.at(i).time; }
  double cond_prob(NodeIndex i) const { return nodes_.at(i).cond_prob; }
  NodeIndex root() const noexcept { return 0; }
  NodeIndex parent(NodeIndex i) const { return parent_.at(i); }
  /// Position of the node inside its level; columns of an AdaptedVector.
  int slot(NodeIndex i) const { return slot_.at(i); }

  std::span<const NodeIndex> level(int t) const { return levels_.at(t); }
  std::span<const NodeIndex> children(NodeIndex i) const { return children_.at(i); }
  bool is_leaf(NodeIndex i) const { return children_.at(i).empty(); }

  /// Product of conditional probabilities along the root path.
  double unconditional_prob(NodeIndex i) const { return uncond_.at(i); }

  std::optional<NodeIndex> find(std::string_view id) const;

  /// Nodes with time <= horizon, same ids and probabilities.
  ScenarioTree truncated(int horizon) const;

  friend ScenarioTree build_tree(std::vector<ScenarioNode> records, int dim);

 private:
  int dim_ = 0;
  std::vector<ScenarioNode> nodes_;  // level order, root first
  std::vector<NodeIndex> parent_;
  std::vector<int> slot_;
  std::vector<double> uncond_;
  std::vector<std::vector<NodeIndex>> levels_;
  std::vector<std::vector<NodeIndex>> children_;
  std::unordered_map<std::string, NodeIndex> by_id_;
};

/// Validates records and returns the tree in level order (input order is
/// kept within a level). Throws ModelError(kind=tree) naming the node.
ScenarioTree build_tree(std::vector<ScenarioNode> records, int dim);

/// F_t-measurable vector function: column j holds the value at level(t)[j].
struct AdaptedVector {
  int time = 0;
  Matrix values;  // dim x |level(t)|

  auto at(const ScenarioTree& tree, NodeIndex i) { return values.col(tree.slot(i)); }
  auto at(const ScenarioTree& tree, NodeIndex i) const {
    return values.col(tree.slot(i));
  }
};

AdaptedVector zero_adapted(const ScenarioTree& tree, int t);

/// E_t w for w defined on level t+1.
AdaptedVector cond_expectation(const ScenarioTree& tree, const AdaptedVector& w, int t);

/// E w for w defined on level t.
Vector expectation(const ScenarioTree& tree, const AdaptedVector& w);

inline double unconditional_prob(const ScenarioTree& tree, NodeIndex i) {
  return tree.unconditional_prob(i);
}

/// Sum of absolute values of the coordinates.
template <class Derived>
double l1_norm(const Eigen::MatrixBase<Derived>& v) {
  return v.template lpNorm<1>();
}

}  // namespace vng
