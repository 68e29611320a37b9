#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace vng;
using doctest::Approx;

namespace {

double pow2(int k) { return std::ldexp(1.0, k); }

double max_abs(const AdaptedVector& v) { return v.values.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("terminal value guard") {
    auto r = max_terminal_value(test::chain2(2));
    CHECK(r.status == SolveStatus::optimal);
    CHECK(r.objective == Approx(4.0).epsilon(1e-12));
    CHECK(max_terminal_value(test::load_fixture("degenerate.json")).status == SolveStatus::degenerate_model);
    CHECK(terminal_lower_bound(test::chain2(3)) == Approx(8.0));
  }

  TEST_CASE("terminal value never exceeds the state bound") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Model m = test::generated(seed % 2 ? "currency" : "neumann", {}, seed);
      GrowthConstants gc = compute_constants(m);
      auto r = max_terminal_value(m);
      REQUIRE(r.status == SolveStatus::optimal);
      CHECK(r.objective <= gc.M_cum[m.horizon()] * (1.0 + 1e-12));
      CHECK(*terminal_lower_bound(m) <= r.objective * (1.0 + 1e-9));
    }
  }

  TEST_CASE("log-optimal path on the doubling chain") {
    Model m = test::chain2(3);
    LogOptimalResult r = solve_log_optimal(m);
    CHECK(r.converged);
    for (int t = 0; t <= 3; ++t) CHECK(r.path.x[t].values(0, 0) == Approx(pow2(t)).epsilon(1e-9));
    CHECK(r.objective == Approx(3.0 * std::log(2.0)).epsilon(1e-9));
  }

  TEST_CASE("weight scaling shifts the objective and keeps the path") {
    Model m = test::generated("neumann", {}, 1);
    LogOptimalResult base = solve_log_optimal(m);
    LogOptimalOptions opt;
    opt.weight = Vector::Constant(m.dim(), 5.0);
    LogOptimalResult heavy = solve_log_optimal(m, opt);
    CHECK(heavy.objective == Approx(base.objective + std::log(5.0)).epsilon(1e-8));
    for (int t = 0; t <= m.horizon(); ++t) {
      CHECK((heavy.path.x[t].values - base.path.x[t].values).cwiseAbs().maxCoeff() <=
            1e-6 * (1.0 + max_abs(base.path.x[t])));
    }
  }

  TEST_CASE("log prefers the dominant generator") {
    Model m = test::load_fixture("two_generator.json");
    LogOptimalResult r = solve_log_optimal(m);
    CHECK(r.path.x[1].values(0, 0) == Approx(2.0).epsilon(1e-9));
  }

  TEST_CASE("log-optimal stationarity under feasible perturbations") {
    std::mt19937_64 rng(8);
    for (std::uint64_t seed = 30; seed < 34; ++seed) {
      Model m = test::generated("neumann", {}, seed);
      LogOptimalResult r = solve_log_optimal(m);
      double best = expected_log_value(m, r.path);
      for (int k = 0; k < 20; ++k) {
        // Convex combinations stay feasible: (1 - h) x + h y.
        PrimalPath y = test::random_feasible_path(m, rng);
        PrimalPath mix = r.path;
        for (int t = 0; t <= m.horizon(); ++t) mix.x[t].values = (1.0 - 1e-6) * r.path.x[t].values + 1e-6 * y.x[t].values;
        CHECK(expected_log_value(m, mix) <= best + 1e-12);
      }
    }
  }

  TEST_CASE("certification of the doubling path") {
    Model m = test::chain2(2);
    PrimalPath x = zero_path(m.tree);
    for (int t = 0; t <= 2; ++t) x.x[t].values(0, 0) = pow2(t);
    RapidCertificate c = certify_rapid(m, x);
    REQUIRE(c.certified);
    CHECK(c.total_slack == Approx(0.0));
    for (int t = 1; t <= 3; ++t) CHECK(c.dual.p[t].values(0, 0) == Approx(pow2(-(t - 1))).epsilon(1e-12));
  }

  TEST_CASE("the two-generator flat path is not rapid") {
    Model m = test::load_fixture("two_generator.json");
    PrimalPath x = zero_path(m.tree);
    x.x[0].values(0, 0) = 1.0;
    x.x[1].values(0, 0) = 1.0;
    RapidCertificate c = certify_rapid(m, x);
    CHECK_FALSE(c.certified);
    CHECK(c.total_slack > 0.1);
    CHECK_FALSE(c.certificate.empty());
    RapidCertificate exact = certify_rapid_exact(m, x);
    CHECK_FALSE(exact.certified);
    CHECK(exact.total_slack == Approx(c.total_slack).epsilon(1e-12));
  }

  TEST_CASE("zero path is unsupportable") {
    Model m = test::chain2(2);
    CHECK_THROWS_AS(certify_rapid(m, zero_path(m.tree)), SolverError);
  }

  TEST_CASE("Dynkin to Radner examples") {
    Model m = test::chain2(4);
    DynkinDual p = zero_dynkin(m.tree);
    for (int t = 1; t <= 5; ++t) p.p[t].values(0, 0) = pow2(-(t - 1));
    RadnerDual q = dynkin_to_radner(m.tree, p);
    for (int t = 0; t <= 4; ++t) {
      CHECK(q.q[t].values(0, 0) == pow2(-t));
      CHECK(q.q[t].values(0, 0) == p.p[t + 1].values(0, 0));
    }

    ScenarioTree tree = build_tree({{"r", 0, std::nullopt, 1.0}, {"a", 1, "r", 0.5}, {"b", 1, "r", 0.5}}, 1);
    DynkinDual pb = zero_dynkin(tree);
    pb.p[1].values << 0.4, 0.6;
    pb.p[2].values << 1.0, 1.0;
    CHECK(dynkin_to_radner(tree, pb).q[0].values(0, 0) == Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("Radner to Dynkin on the doubling chain has zero multipliers") {
    Model m = test::chain2(4);
    RapidSolution s = solve_rapid(m);
    RadnerToDynkin back = radner_to_dynkin(m, s.radner, s.path);
    for (int t = 1; t <= 4; ++t) {
      CHECK(back.multipliers.g[t].values.isZero(0.0));
      CHECK(back.dual.p[t].values(0, 0) == Approx(pow2(-(t - 1))).epsilon(1e-12));
    }
    CHECK(back.report.support.ok);
  }

  TEST_CASE("round trip on a two-branch model with distinct child cones") {
    Model m = test::binary_model(1, {1.0}, [](const std::string& id) {
      return id == "r.1" ? std::vector<test::Generator>{{{1.0}, {2.0}}} : std::vector<test::Generator>{{{1.0}, {1.0}}};
    });
    RapidSolution s = solve_rapid(m);
    CHECK(s.certificate.certified);
    RadnerToDynkin back = radner_to_dynkin(m, s.radner, s.path);
    CHECK(back.report.support.ok);
    CHECK(back.report.max_multiplier_mean <= 1e-9);
    CHECK(check_dynkin(m, back.dual).ok);
    CHECK(check_support(m.tree, s.path, back.dual, 1e-8).ok);
  }

  TEST_CASE("Radner to Dynkin rejects a dual that is not supporting") {
    Model m = test::chain2(2);
    RapidSolution s = solve_rapid(m);
    RadnerDual q = s.radner;
    q.q[1].values *= 3.0;
    CHECK_THROWS_AS(radner_to_dynkin(m, q, s.path), SolverError);
  }

  TEST_CASE("rapid solve of the doubling chain") {
    Model m = test::chain2(4);
    RapidSolution s = solve_rapid(m);
    for (int t = 0; t <= 4; ++t) {
      CHECK(s.path.x[t].values(0, 0) == Approx(pow2(t)).epsilon(1e-9));
      CHECK(s.radner.q[t].values(0, 0) == Approx(pow2(-t)).epsilon(1e-9));
    }
    for (int t = 1; t <= 5; ++t) CHECK(s.dynkin.p[t].values(0, 0) == Approx(pow2(-(t - 1))).epsilon(1e-9));
  }

  TEST_CASE("degenerate models fail loudly") {
    try {
      solve_rapid(test::load_fixture("degenerate.json"));
      FAIL("expected a degenerate-model error");
    } catch (const SolverError& e) {
      CHECK(e.status() == SolveStatus::degenerate_model);
    }
  }

  TEST_CASE("certified duals pass the checkers and the R-dual inequality") {
    std::mt19937_64 rng(99);
    for (std::uint64_t seed = 40; seed < 46; ++seed) {
      ExampleParams params;
      params.dim = 2 + static_cast<int>(seed % 2);
      Model m = test::generated(seed % 3 == 0 ? "currency" : "neumann", params, seed);
      RapidSolution s = solve_rapid(m);
      CHECK(check_dynkin(m, s.dynkin, 1e-7).ok);
      CHECK(check_support(m.tree, s.path, s.dynkin, 1e-7).ok);
      CHECK(check_radner(m, s.radner, 1e-9).ok);
      CHECK(test::sampled_radner_violation(m, s.radner, 500, rng) <= 1e-9);
    }
  }

  TEST_CASE("scaled selections never violate the expected R-dual inequality") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 3.0);
    for (std::uint64_t seed = 50; seed < 54; ++seed) {
      Model m = test::generated("neumann", {}, seed);
      RapidSolution s = solve_rapid(m);
      const ScenarioTree& tree = m.tree;
      for (int trial = 0; trial < 50; ++trial) {
        int t = 1 + trial % m.horizon();
        // E(q_t v) <= E(q_{t-1} u) for u, v chosen per parent and scaled by a
        // parent-measurable factor.
        double lhs = 0.0, rhs = 0.0;
        for (NodeIndex mu : tree.level(t - 1)) {
          double scale = unit(rng);
          Vector u = Vector::NullaryExpr(tree.dim(), [&] { return unit(rng); }) * scale;
          rhs += tree.unconditional_prob(mu) * s.radner.q[t - 1].at(tree, mu).dot(u);
          for (NodeIndex nu : tree.children(mu)) {
            Vector v = m.cones[nu].outputs * test::random_weights(m.cones[nu], u, rng);
            lhs += tree.unconditional_prob(nu) * s.radner.q[t].at(tree, nu).dot(v);
          }
        }
        CHECK(lhs <= rhs + 1e-9 * (1.0 + std::abs(rhs)));
      }
    }
  }

  TEST_CASE("solver output is deterministic") {
    Model m = test::generated("currency", {}, 3);
    RapidSolution a = solve_rapid(m), b = solve_rapid(m);
    for (int t = 0; t <= m.horizon(); ++t) CHECK(a.path.x[t].values == b.path.x[t].values);
    CHECK(a.certificate.total_slack == b.certificate.total_slack);
  }
}
