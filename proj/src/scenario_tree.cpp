#include "vng/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vng {

namespace {

ModelError tree_error(const std::string& where, const std::string& message) {
  return ModelError(ModelError::Kind::tree, where, message);
}

}  // namespace

std::optional<NodeIndex> ScenarioTree::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

ScenarioTree build_tree(std::vector<ScenarioNode> records, int dim) {
  if (records.empty()) throw tree_error("", "empty node table");
  if (dim < 1) throw tree_error("", "state dimension must be >= 1");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.id.empty()) throw tree_error("", "node with empty id");
    if (!index.emplace(r.id, i).second) throw tree_error(r.id, "duplicate id");
    if (!(r.cond_prob > 0.0 && r.cond_prob <= 1.0) || !std::isfinite(r.cond_prob)) {
      throw tree_error(r.id, "cond_prob must lie in (0, 1]");
    }
    if (r.time < 0) throw tree_error(r.id, "negative time");
  }

  std::optional<std::size_t> root;
  int horizon = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    horizon = std::max(horizon, r.time);
    if (!r.parent) {
      if (root) throw tree_error(r.id, "second root (root already '" + records[*root].id + "')");
      if (r.time != 0) throw tree_error(r.id, "root must have time 0");
      root = i;
      continue;
    }
    auto it = index.find(*r.parent);
    if (it == index.end()) throw tree_error(r.id, "orphan node (parent '" + *r.parent + "' not found)");
    if (records[it->second].time != r.time - 1) {
      throw tree_error(r.id, "time gap (parent '" + *r.parent + "' is at time " +
                                 std::to_string(records[it->second].time) + ")");
    }
  }
  if (!root) throw tree_error("", "no root node (time 0, no parent)");
  if (horizon < 1) throw tree_error(records[*root].id, "horizon must be >= 1");

  ScenarioTree tree;
  tree.dim_ = dim;
  tree.levels_.resize(horizon + 1);

  // Level order: root, then nodes of each level in input order.
  std::vector<std::vector<std::size_t>> by_level(horizon + 1);
  for (std::size_t i = 0; i < records.size(); ++i) by_level[records[i].time].push_back(i);
  if (by_level[0].size() != 1) throw tree_error(records[by_level[0][1]].id, "second node at time 0");

  std::vector<NodeIndex> new_index(records.size(), kNoNode);
  for (int t = 0; t <= horizon; ++t) {
    if (by_level[t].empty()) throw tree_error("", "level " + std::to_string(t) + " is empty");
    for (std::size_t i : by_level[t]) {
      NodeIndex ni = static_cast<NodeIndex>(tree.nodes_.size());
      new_index[i] = ni;
      tree.slot_.push_back(static_cast<int>(tree.levels_[t].size()));
      tree.levels_[t].push_back(ni);
      tree.nodes_.push_back(records[i]);
    }
  }

  tree.parent_.assign(tree.nodes_.size(), kNoNode);
  tree.children_.assign(tree.nodes_.size(), {});
  tree.uncond_.assign(tree.nodes_.size(), 1.0);
  for (NodeIndex ni = 0; ni < static_cast<NodeIndex>(tree.nodes_.size()); ++ni) {
    const auto& nd = tree.nodes_[ni];
    tree.by_id_.emplace(nd.id, ni);
    if (!nd.parent) continue;
    NodeIndex pi = new_index[index.at(*nd.parent)];
    tree.parent_[ni] = pi;
    tree.children_[pi].push_back(ni);
    tree.uncond_[ni] = tree.uncond_[pi] * nd.cond_prob;  // parents precede children
  }
  if (tree.nodes_[0].cond_prob != 1.0) throw tree_error(tree.nodes_[0].id, "root cond_prob must be 1");

  for (NodeIndex ni = 0; ni < static_cast<NodeIndex>(tree.nodes_.size()); ++ni) {
    const auto& kids = tree.children_[ni];
    if (kids.empty()) {
      if (tree.nodes_[ni].time != horizon) {
        throw tree_error(tree.nodes_[ni].id, "leaf before horizon " + std::to_string(horizon));
      }
      continue;
    }
    double sum = 0.0;
    for (NodeIndex c : kids) sum += tree.nodes_[c].cond_prob;
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      std::ostringstream os;
      os.precision(15);
      os << "sibling probabilities sum " << sum;
      throw tree_error(tree.nodes_[ni].id, os.str());
    }
  }
  return tree;
}

ScenarioTree ScenarioTree::truncated(int h) const {
  if (h < 0 || h > horizon()) throw std::out_of_range("truncation horizon out of range");
  ScenarioTree out;
  out.dim_ = dim_;
  out.levels_.assign(levels_.begin(), levels_.begin() + h + 1);
  std::size_t count = 0;
  for (const auto& lvl : out.levels_) count += lvl.size();
  // Level order means the first `count` nodes are exactly the kept ones.
  out.nodes_.assign(nodes_.begin(), nodes_.begin() + count);
  out.parent_.assign(parent_.begin(), parent_.begin() + count);
  out.slot_.assign(slot_.begin(), slot_.begin() + count);
  out.uncond_.assign(uncond_.begin(), uncond_.begin() + count);
  out.children_.assign(children_.begin(), children_.begin() + count);
  for (NodeIndex i : out.levels_.back()) out.children_[i].clear();
  for (std::size_t i = 0; i < count; ++i) out.by_id_.emplace(out.nodes_[i].id, static_cast<NodeIndex>(i));
  return out;
}

AdaptedVector zero_adapted(const ScenarioTree& tree, int t) {
  return AdaptedVector{t, Matrix::Zero(tree.dim(), static_cast<Eigen::Index>(tree.level(t).size()))};
}

AdaptedVector cond_expectation(const ScenarioTree& tree, const AdaptedVector& w, int t) {
  if (t < 0 || t >= tree.horizon() || w.time != t + 1) {
    throw std::invalid_argument("cond_expectation: level mismatch (w at " + std::to_string(w.time) +
                                ", t = " + std::to_string(t) + ")");
  }
  if (w.values.rows() != tree.dim() ||
      w.values.cols() != static_cast<Eigen::Index>(tree.level(t + 1).size())) {
    throw std::invalid_argument("cond_expectation: shape mismatch");
  }
  AdaptedVector out = zero_adapted(tree, t);
  for (NodeIndex nu : tree.level(t)) {
    auto col = out.values.col(tree.slot(nu));
    for (NodeIndex mu : tree.children(nu)) col += tree.cond_prob(mu) * w.values.col(tree.slot(mu));
  }
  return out;
}

Vector expectation(const ScenarioTree& tree, const AdaptedVector& w) {
  if (w.time < 0 || w.time > tree.horizon() ||
      w.values.cols() != static_cast<Eigen::Index>(tree.level(w.time).size())) {
    throw std::invalid_argument("expectation: level mismatch");
  }
  Vector out = Vector::Zero(w.values.rows());
  for (NodeIndex nu : tree.level(w.time)) out += tree.unconditional_prob(nu) * w.values.col(tree.slot(nu));
  return out;
}

}  // namespace vng
