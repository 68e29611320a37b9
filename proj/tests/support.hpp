#pragma once

// Shared builders and oracles for the test binaries.

#include "vng/horizon.hpp"
#include "vng/model_io.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace vng::test {

inline std::string fixture(const std::string& name) { return std::string(VNG_FIXTURE_DIR) + "/" + name; }

inline Model load_fixture(const std::string& name) { return parse_model(read_json_file(fixture(name))); }

using Generator = std::pair<std::vector<double>, std::vector<double>>;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Deterministic chain of length N, the same cone at every step.
inline Model chain_model(int N, const std::vector<Generator>& gens, std::vector<double> x0 = {1.0}) {
  nlohmann::json nodes = nlohmann::json::array();
  nodes.push_back({{"id", "r"}, {"time", 0}, {"parent", nullptr}, {"cond_prob", 1.0}});
  std::string prev = "r";
  for (int t = 1; t <= N; ++t) {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& [a, b] : gens) g.push_back({{"a", a}, {"b", b}});
    std::string id = prev + ".1";
    nodes.push_back({{"id", id}, {"time", t}, {"parent", prev}, {"cond_prob", 1.0}, {"generators", g}});
    prev = id;
  }
  nlohmann::json doc = {{"schema_version", 1}, {"name", "chain"}, {"dim", x0.size()},
                        {"horizon", N},        {"x0", x0},         {"nodes", nodes}};
  return parse_model(doc);
}

// Binary tree of depth N with per-node cones from `cone_of(id)`.
template <class F>
Model binary_model(int N, std::vector<double> x0, F cone_of, std::vector<double> probs = {0.5, 0.5}) {
  nlohmann::json nodes = nlohmann::json::array();
  nodes.push_back({{"id", "r"}, {"time", 0}, {"parent", nullptr}, {"cond_prob", 1.0}});
  std::vector<std::string> level = {"r"};
  for (int t = 1; t <= N; ++t) {
    std::vector<std::string> next;
    for (const auto& parent : level) {
      for (std::size_t c = 0; c < probs.size(); ++c) {
        std::string id = parent + "." + std::to_string(c + 1);
        nlohmann::json g = nlohmann::json::array();
        for (const auto& [a, b] : cone_of(id)) g.push_back({{"a", a}, {"b", b}});
        nodes.push_back({{"id", id}, {"time", t}, {"parent", parent}, {"cond_prob", probs[c]}, {"generators", g}});
        next.push_back(id);
      }
    }
    level = std::move(next);
  }
  nlohmann::json doc = {{"schema_version", 1}, {"name", "binary"}, {"dim", x0.size()},
                        {"horizon", N},        {"x0", x0},         {"nodes", nodes}};
  return parse_model(doc);
}

inline Model chain2(int N) { return chain_model(N, {{{1.0}, {2.0}}}); }

inline Model generated(std::string_view kind, const ExampleParams& params, std::uint64_t seed) {
  return parse_model(generate_example(kind, params, seed));
}

// Generator weights lambda >= 0 with inputs * lambda = u: a few random
// draws along random generators, the rest through the unit decomposition.
inline Vector random_weights(const ConeSpec& cone, const Vector& u, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector lambda = Vector::Zero(cone.size());
  Vector rest = u;
  for (int draw = 0; draw < 3; ++draw) {
    int k = std::uniform_int_distribution<int>(0, cone.size() - 1)(rng);
    Vector a = cone.input(k);
    double cap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) > 0.0) cap = std::min(cap, rest(i) / a(i));
    }
    if (!std::isfinite(cap)) continue;
    double s = unit(rng) * cap;
    lambda(k) += s;
    rest = (rest - s * a).cwiseMax(0.0);
  }
  Matrix unit_dec = *unit_input_decomposition(cone);
  lambda += unit_dec * rest;
  return lambda;
}

// Random feasible path from y0 (default x0).
inline PrimalPath random_feasible_path(const Model& model, std::mt19937_64& rng, Vector y0 = Vector()) {
  const ScenarioTree& tree = model.tree;
  PrimalPath y = zero_path(tree);
  y.x[0].values.col(0) = y0.size() ? y0 : model.x0;
  for (int t = 1; t <= tree.horizon(); ++t) {
    for (NodeIndex i : tree.level(t)) {
      const ConeSpec& cone = model.cones[i];
      Vector u = y.at(tree, tree.parent(i));
      y.x[t].at(tree, i) = cone.outputs * random_weights(cone, u, rng);
    }
  }
  return y;
}

// Paths that push all input through one generator per node. Only defined
// for n = 1; generators with a = 0 are skipped.
inline std::vector<PrimalPath> selection_paths(const Model& model, std::size_t limit) {
  const ScenarioTree& tree = model.tree;
  std::vector<NodeIndex> order;
  for (int t = 1; t <= tree.horizon(); ++t) {
    for (NodeIndex i : tree.level(t)) order.push_back(i);
  }
  std::vector<std::vector<int>> choices;
  for (NodeIndex i : order) {
    std::vector<int> ks;
    for (int k = 0; k < model.cones[i].size(); ++k) {
      if (model.cones[i].inputs(0, k) > 0.0) ks.push_back(k);
    }
    choices.push_back(ks);
  }
  std::vector<PrimalPath> out;
  std::vector<std::size_t> pick(order.size(), 0);
  while (out.size() < limit) {
    PrimalPath y = zero_path(tree);
    y.x[0].values.col(0) = model.x0;
    for (std::size_t j = 0; j < order.size(); ++j) {
      NodeIndex i = order[j];
      const ConeSpec& cone = model.cones[i];
      int k = choices[j][pick[j]];
      double u = y.at(tree, tree.parent(i))(0);
      y.x[tree.time(i)].at(tree, i)(0) = u / cone.inputs(0, k) * cone.outputs(0, k);
    }
    out.push_back(std::move(y));
    std::size_t j = 0;
    while (j < pick.size() && ++pick[j] == choices[j].size()) pick[j++] = 0;
    if (j == pick.size()) break;
  }
  return out;
}

inline std::size_t selection_count(const Model& model) {
  std::size_t count = 1;
  for (std::size_t i = 1; i < model.tree.size(); ++i) {
    std::size_t k = 0;
    for (int j = 0; j < model.cones[static_cast<NodeIndex>(i)].size(); ++j) {
      if (model.cones[static_cast<NodeIndex>(i)].inputs(0, j) > 0.0) ++k;
    }
    count *= k;
    if (count > 1000000) return count;
  }
  return count;
}

// Largest violation of E_{t-1}(q_t v) <= q_{t-1} u over `samples` random
// adapted selections with |u| = 1.
inline double sampled_radner_violation(const Model& model, const RadnerDual& q, int samples, std::mt19937_64& rng) {
  const ScenarioTree& tree = model.tree;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    int t = 1 + s % tree.horizon();
    auto parents = tree.level(t - 1);
    NodeIndex mu = parents[static_cast<std::size_t>(s / tree.horizon()) % parents.size()];
    Vector u(tree.dim());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = unit(rng);
    u /= u.sum();
    double lhs = 0.0;
    for (NodeIndex nu : tree.children(mu)) {
      const ConeSpec& cone = model.cones[nu];
      Vector v = cone.outputs * random_weights(cone, u, rng);
      lhs += tree.cond_prob(nu) * q.q[t].at(tree, nu).dot(v);
    }
    worst = std::max(worst, lhs - q.q[t - 1].at(tree, mu).dot(u));
  }
  return worst;
}

inline bool is_deterministic(const ScenarioTree& tree) {
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (tree.children(static_cast<NodeIndex>(i)).size() > 1) return false;
  }
  return true;
}

}  // namespace vng::test
