#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace vng;
using doctest::Approx;

TEST_SUITE("horizon") {
  TEST_CASE("doubling chain sweep is constant in N") {
    Model m = test::load_fixture("chain2.json");
    Sweep s = horizon_sweep(m, 5);
    REQUIRE(s.rows.size() == 5);
    for (const auto& row : s.rows) {
      REQUIRE(row.completed);
      CHECK(row.x.x[1].values(0, 0) == Approx(2.0).epsilon(1e-12));
      CHECK(row.p.p[1].values(0, 0) == Approx(1.0).epsilon(1e-12));
    }
    for (const auto& d : s.diameters) {
      CHECK(d.x <= 1e-9);
      CHECK(d.p <= 1e-9);
      CHECK(d.q <= 1e-9);
    }
  }

  TEST_CASE("doubling chain bounds are tight") {
    Model m = test::load_fixture("chain2.json");
    Sweep s = horizon_sweep(m, 4);
    BoundsReport b = bounds_check(s);
    CHECK(b.ok);
    CHECK(std::abs(b.worst_p_mean) <= 1e-9);
    CHECK(std::abs(b.worst_x) <= 1e-9);
    CHECK(std::abs(b.worst_q) <= 1e-9);
    CHECK(std::abs(b.worst_p1) <= 1e-9);
    CHECK(b.q0_reference(0) == 1.0);
    for (const auto& e : b.entries) {
      if (e.time == 1) {
        CHECK(e.mean_abs_p == Approx(1.0));
        CHECK(e.max_abs_x == Approx(2.0));
      }
    }
  }

  TEST_CASE("shrunken constants trip the audit") {
    Model m = test::load_fixture("chain2.json");
    Sweep s = horizon_sweep(m, 3);
    GrowthConstants gc = s.constants;
    for (double& c : gc.C_cum) c *= 0.5;
    BoundsReport b = bounds_check(s, gc);
    CHECK_FALSE(b.ok);
    CHECK_FALSE(b.violations.empty());
  }

  TEST_CASE("Radner field equals the conditional expectation") {
    ExampleParams params;
    params.stationary = true;
    params.horizon = 1;
    Model m = test::generated("neumann", params, 5);
    Sweep s = horizon_sweep(m, 4);
    for (const auto& row : s.rows) {
      REQUIRE(row.completed);
      for (int t = 0; t <= row.horizon; ++t) {
        Matrix expect = t < row.horizon ? cond_expectation(row.tree, row.p.p[t + 1], t).values : row.p.p[t + 1].values;
        CHECK((row.q.q[t].values - expect).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
    CHECK(s.diameters.size() == 5);
    CHECK(bounds_check(s).ok);
  }

  TEST_CASE("prefix extraction") {
    Model m = test::load_fixture("chain2.json");
    Sweep s = horizon_sweep(m, 4);
    Prefix p = prefix_extract(s, 2);
    CHECK(p.certified);
    CHECK(p.label == "prefix-certified infinite-path approximation");
    CHECK(p.path.x[2].values(0, 0) == Approx(4.0));
    CHECK(p.dual.p[1].values(0, 0) == Approx(1.0));
    CHECK(p.dual.p[2].values(0, 0) == Approx(0.5));
    CHECK(p.dual.p[3].values(0, 0) == Approx(0.25));

    Prefix zero = prefix_extract(s, 0);
    CHECK(zero.path.x.size() == 1);
    CHECK(zero.certified);
    CHECK_THROWS_AS(prefix_extract(s, 2 + 5), std::invalid_argument);
  }

  TEST_CASE("failed sweeps have no prefix") {
    Sweep s = horizon_sweep(test::load_fixture("degenerate.json"), 2);
    CHECK(s.last_completed() == nullptr);
    for (const auto& r : s.rows) CHECK_FALSE(r.failure.empty());
    CHECK_THROWS_WITH_AS(prefix_extract(s, 0), "no completed row", std::runtime_error);
  }

  TEST_CASE("single-row sweep and the CSV layout") {
    Model m = test::load_fixture("chain2.json");
    Sweep s = horizon_sweep(m, 1);
    CHECK(s.rows.size() == 1);
    std::ostringstream os;
    write_sweep_csv(os, s, s.constants);
    std::istringstream is(os.str());
    std::string header, line;
    std::getline(is, header);
    CHECK(header == "N,t,node_id,status,x,p,q,abs_x,M_cum,slack_x,abs_p,C_t,slack_q,mean_abs_p,C_cum,slack_p_mean,slack_p1");
    int lines = 0;
    while (std::getline(is, line)) {
      ++lines;
      CHECK(std::count(line.begin(), line.end(), ',') == 16);
    }
    CHECK(lines == 2);
  }

  TEST_CASE("stationary extension beyond the declared horizon") {
    Model m = test::load_fixture("chain2.json");
    Model longer = model_at_horizon(m, 9);
    CHECK(longer.horizon() == 9);
    Model plain = test::chain2(2);
    CHECK_THROWS_AS(model_at_horizon(plain, 3), ModelError);
  }
}
