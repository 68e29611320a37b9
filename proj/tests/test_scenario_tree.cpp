#include "support.hpp"

#include <doctest.h>

using namespace vng;
using doctest::Approx;

namespace {

ScenarioTree binary(double p1, double p2, int dim = 1) {
  return build_tree({{"r", 0, std::nullopt, 1.0}, {"a", 1, "r", p1}, {"b", 1, "r", p2}}, dim);
}

AdaptedVector level_values(const ScenarioTree& tree, int t, std::initializer_list<double> v) {
  AdaptedVector w = zero_adapted(tree, t);
  int j = 0;
  for (double x : v) w.values(0, j++) = x;
  return w;
}

std::string error_of(std::vector<ScenarioNode> records) {
  try {
    build_tree(std::move(records), 1);
  } catch (const ModelError& e) {
    CHECK(e.kind() == ModelError::Kind::tree);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("scenario_tree") {
  TEST_CASE("three-node chain has horizon 2") {
    ScenarioTree tree = build_tree({{"root", 0, std::nullopt, 1.0}, {"a", 1, "root", 1.0}, {"b", 2, "a", 1.0}}, 1);
    CHECK(tree.horizon() == 2);
    CHECK(tree.size() == 3);
    CHECK(tree.parent(*tree.find("b")) == *tree.find("a"));
    CHECK(tree.is_leaf(*tree.find("b")));
  }

  TEST_CASE("binary tree with even split") {
    ScenarioTree tree = binary(0.5, 0.5);
    CHECK(tree.horizon() == 1);
    CHECK(tree.level(1).size() == 2);
    CHECK(tree.unconditional_prob(*tree.find("a")) == 0.5);
  }

  TEST_CASE("structural errors name the node") {
    CHECK(error_of({{"r", 0, std::nullopt, 1.0}, {"a", 1, "r", 0.3}, {"b", 1, "r", 0.3}}).find(
              "sibling probabilities sum 0.6") != std::string::npos);
    CHECK(error_of({{"r", 0, std::nullopt, 1.0}, {"a", 1, "zz", 1.0}}).find("orphan") != std::string::npos);
    CHECK(error_of({{"r", 0, std::nullopt, 1.0}, {"a", 1, "r", 1.0}, {"a", 1, "r", 1.0}}).find("duplicate") !=
          std::string::npos);
    CHECK(error_of({{"r", 0, std::nullopt, 1.0}, {"a", 2, "r", 1.0}}).find("time gap") != std::string::npos);
    CHECK(error_of({{"r", 0, std::nullopt, 1.0}, {"a", 1, "r", 0.0}}).find("a: cond_prob") == 0);
    CHECK(error_of({}).find("empty") != std::string::npos);
  }

  TEST_CASE("leaves must all sit at the horizon") {
    CHECK(error_of({{"r", 0, std::nullopt, 1.0},
                    {"a", 1, "r", 0.5},
                    {"b", 1, "r", 0.5},
                    {"c", 2, "a", 1.0}})
              .find("leaf before horizon") != std::string::npos);
  }

  TEST_CASE("conditional expectation examples") {
    ScenarioTree tree = binary(0.5, 0.5);
    CHECK(cond_expectation(tree, level_values(tree, 1, {2.0, 4.0}), 0).values(0, 0) == 3.0);
    ScenarioTree skew = binary(0.25, 0.75);
    CHECK(cond_expectation(skew, level_values(skew, 1, {0.0, 4.0}), 0).values(0, 0) == 3.0);

    Model chain = test::chain2(3);
    AdaptedVector w = level_values(chain.tree, 2, {7.5});
    CHECK(cond_expectation(chain.tree, w, 1).values(0, 0) == 7.5);
  }

  TEST_CASE("conditional expectation rejects a level mismatch") {
    ScenarioTree tree = binary(0.5, 0.5);
    CHECK_THROWS_AS(cond_expectation(tree, zero_adapted(tree, 0), 0), std::invalid_argument);
  }

  TEST_CASE("expectation examples") {
    Model chain = test::chain2(4);
    for (int t = 0; t <= 4; ++t) CHECK(expectation(chain.tree, level_values(chain.tree, t, {5.0}))(0) == 5.0);
    ScenarioTree tree = binary(0.5, 0.5);
    CHECK(expectation(tree, level_values(tree, 1, {1.0, 3.0}))(0) == 2.0);
  }

  TEST_CASE("unconditional probabilities multiply along the path") {
    ScenarioTree tree = build_tree({{"r", 0, std::nullopt, 1.0},
                                    {"a", 1, "r", 0.5},
                                    {"b", 1, "r", 0.5},
                                    {"aa", 2, "a", 0.25},
                                    {"ab", 2, "a", 0.75},
                                    {"ba", 2, "b", 1.0}},
                                   1);
    CHECK(tree.unconditional_prob(tree.root()) == 1.0);
    CHECK(tree.unconditional_prob(*tree.find("b")) == 0.5);
    CHECK(tree.unconditional_prob(*tree.find("aa")) == 0.125);
  }

  TEST_CASE("level probabilities sum to one and the tower property holds") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ExampleParams params;
      params.horizon = 3;
      params.branching = 2 + static_cast<int>(seed % 2);
      Model m = test::generated("neumann", params, seed);
      const ScenarioTree& tree = m.tree;
      for (int t = 0; t <= tree.horizon(); ++t) {
        double s = 0.0;
        for (NodeIndex i : tree.level(t)) s += tree.unconditional_prob(i);
        CHECK(s == Approx(1.0).epsilon(1e-12));
      }
      for (int t = 0; t < tree.horizon(); ++t) {
        AdaptedVector u = zero_adapted(tree, t + 1), w = zero_adapted(tree, t + 1);
        u.values = u.values.unaryExpr([&](double) { return unit(rng); });
        w.values = w.values.unaryExpr([&](double) { return unit(rng); });
        Vector direct = expectation(tree, w);
        Vector tower = expectation(tree, cond_expectation(tree, w, t));
        CHECK((direct - tower).cwiseAbs().maxCoeff() <= 1e-12);
        // Linearity.
        AdaptedVector combo = u;
        combo.values = 2.0 * u.values - 3.0 * w.values;
        Matrix lhs = cond_expectation(tree, combo, t).values;
        Matrix rhs = 2.0 * cond_expectation(tree, u, t).values - 3.0 * cond_expectation(tree, w, t).values;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }

  TEST_CASE("truncation keeps ids and probabilities") {
    Model m = test::generated("neumann", {}, 4);
    ScenarioTree cut = m.tree.truncated(2);
    CHECK(cut.horizon() == 2);
    for (NodeIndex i : cut.level(2)) {
      NodeIndex j = *m.tree.find(cut.id(i));
      CHECK(cut.unconditional_prob(i) == m.tree.unconditional_prob(j));
    }
  }
}
