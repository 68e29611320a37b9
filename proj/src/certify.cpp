#include "vng/rational.hpp"
#include "vng/solver.hpp"

#include <cmath>
#include <sstream>

namespace vng {

namespace {

// Variable layout of the rapidity LP: n prices per node for t = 1..N, then n
// terminal prices per leaf, then (s+, s-) per support row.
template <class Scalar>
struct CertificationProgram {
  LinearProgram<Scalar> lp;
  std::vector<int> price_first;     // per node (t >= 1)
  std::vector<int> terminal_first;  // per leaf slot
  int support_rows = 0;
};

template <class Scalar>
CertificationProgram<Scalar> build_certification(const Model& model, const PrimalPath& path) {
  using Traits = LpTraits<Scalar>;
  using Term = typename LinearProgram<Scalar>::Term;
  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  const int N = tree.horizon();
  if (path.horizon() != N) throw std::invalid_argument("certify_rapid: path horizon does not match model");

  CertificationProgram<Scalar> cp;
  auto& lp = cp.lp;
  lp.sense = ObjectiveSense::minimize;
  cp.price_first.assign(tree.size(), -1);
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    cp.price_first[nu] = lp.num_variables();
    for (int i = 0; i < n; ++i) lp.add_variable(Scalar(0));
  }
  auto leaves = tree.level(N);
  cp.terminal_first.assign(leaves.size(), -1);
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    cp.terminal_first[l] = lp.num_variables();
    for (int i = 0; i < n; ++i) lp.add_variable(Scalar(0));
  }

  auto conv = [](double v) { return Traits::from_double(v); };

  // (E_t p_{t+1}) . b_k - p_t . a_k <= 0 for every generator with b_k != 0.
  for (int t = 1; t <= N; ++t) {
    for (NodeIndex nu : tree.level(t)) {
      const ConeSpec& cone = model.cones[nu];
      for (int k = 0; k < cone.size(); ++k) {
        if (l1_norm(cone.output(k)) == 0.0) continue;  // implied by p >= 0
        std::vector<Term> terms;
        for (int i = 0; i < n; ++i) {
          if (cone.inputs(i, k) != 0.0) terms.emplace_back(cp.price_first[nu] + i, -conv(cone.inputs(i, k)));
        }
        if (t < N) {
          for (NodeIndex child : tree.children(nu)) {
            Scalar pr = conv(tree.cond_prob(child));
            for (int i = 0; i < n; ++i) {
              if (cone.outputs(i, k) != 0.0) {
                terms.emplace_back(cp.price_first[child] + i, pr * conv(cone.outputs(i, k)));
              }
            }
          }
        } else {
          int base = cp.terminal_first[tree.slot(nu)];
          for (int i = 0; i < n; ++i) {
            if (cone.outputs(i, k) != 0.0) terms.emplace_back(base + i, conv(cone.outputs(i, k)));
          }
        }
        lp.add_row(std::move(terms), RowSense::less_equal, Scalar(0));
      }
    }
  }

  // Support rows p . x_prev + s+ - s- = 1.
  auto support_row = [&](int base, const Vector& x_prev, NodeIndex nu) {
    if ((x_prev.array() == 0.0).all()) {
      throw SolverError(SolveStatus::infeasible, "unsupportable node " + tree.id(nu) + " (x_{t-1} = 0)");
    }
    std::vector<Term> terms;
    for (int i = 0; i < n; ++i) {
      if (x_prev(i) != 0.0) terms.emplace_back(base + i, conv(x_prev(i)));
    }
    int sp = lp.add_variable(Scalar(1));
    int sm = lp.add_variable(Scalar(1));
    terms.emplace_back(sp, Scalar(1));
    terms.emplace_back(sm, Scalar(-1));
    lp.add_row(std::move(terms), RowSense::equal, Scalar(1));
    ++cp.support_rows;
  };
  for (int t = 1; t <= N; ++t) {
    for (NodeIndex nu : tree.level(t)) {
      support_row(cp.price_first[nu], path.x[t - 1].at(tree, tree.parent(nu)), nu);
    }
  }
  for (NodeIndex leaf : leaves) support_row(cp.terminal_first[tree.slot(leaf)], path.x[N].at(tree, leaf), leaf);
  return cp;
}

template <class Scalar>
RapidCertificate run_certification(const Model& model, const PrimalPath& path, const SimplexOptions& simplex,
                                   double tolerance) {
  using Traits = LpTraits<Scalar>;
  auto cp = build_certification<Scalar>(model, path);
  auto rep = lp_solve(cp.lp, simplex);

  RapidCertificate out;
  out.lp_status = rep.status;
  out.lp_rows = cp.lp.num_rows();
  out.lp_variables = cp.lp.num_variables();
  out.iterations = rep.iterations;
  out.wall_seconds = rep.wall_seconds;
  if (rep.status != SolveStatus::optimal) {
    throw SolverError(rep.status, "rapidity LP failed (" + std::string(to_string(rep.status)) + ")");
  }
  out.total_slack = Traits::to_double(rep.objective);
  if constexpr (Traits::exact) out.certified = rep.objective == Scalar(0);
  else out.certified = out.total_slack <= tolerance;

  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  const int N = tree.horizon();
  out.dual = zero_dynkin(tree);
  for (NodeIndex nu = 1; nu < static_cast<NodeIndex>(tree.size()); ++nu) {
    auto col = out.dual.p[tree.time(nu)].at(tree, nu);
    for (int i = 0; i < n; ++i) col(i) = Traits::to_double(rep.primal(cp.price_first[nu] + i));
  }
  for (NodeIndex leaf : tree.level(N)) {
    auto col = out.dual.p[N + 1].at(tree, leaf);
    for (int i = 0; i < n; ++i) col(i) = Traits::to_double(rep.primal(cp.terminal_first[tree.slot(leaf)] + i));
  }
  if (out.certified && !Traits::exact) {
    // Floating pivots can drift; the dual is only accepted after an
    // independent re-check of both defining conditions.
    auto cone_check = check_dynkin(model, out.dual, tolerance);
    auto support = check_support(tree, path, out.dual, tolerance);
    if (!cone_check.ok || !support.ok) {
      out.certified = false;
      out.verification_failed = true;
    }
  }
  if (!out.certified) {
    out.certificate.reserve(rep.duals.size());
    for (Eigen::Index i = 0; i < rep.duals.size(); ++i) out.certificate.push_back(Traits::to_double(rep.duals(i)));
  }
  return out;
}

}  // namespace

RapidCertificate certify_rapid(const Model& model, const PrimalPath& path, const CertifyOptions& options) {
  return run_certification<double>(model, path, options.simplex, options.tolerance);
}

RapidCertificate certify_rapid_exact(const Model& model, const PrimalPath& path, const SimplexOptions& simplex) {
  return run_certification<Rational>(model, path, simplex, 0.0);
}

RadnerDual dynkin_to_radner(const ScenarioTree& tree, const DynkinDual& dual) {
  const int N = tree.horizon();
  RadnerDual out;
  out.q.reserve(N + 1);
  for (int t = 0; t < N; ++t) out.q.push_back(cond_expectation(tree, dual.p.at(t + 1), t));
  AdaptedVector last = dual.p.at(N + 1);
  last.time = N;
  out.q.push_back(std::move(last));
  return out;
}

RadnerToDynkin radner_to_dynkin(const Model& model, const RadnerDual& q, const PrimalPath& path, double tol) {
  using Term = LinearProgram<double>::Term;
  const ScenarioTree& tree = model.tree;
  const int n = tree.dim();
  const int N = tree.horizon();
  if (q.horizon() != N) throw std::invalid_argument("radner_to_dynkin: R-dual horizon does not match model");

  RadnerToDynkin out;
  out.dual = zero_dynkin(tree);
  out.multipliers.g.push_back(AdaptedVector{0, Matrix()});
  for (int t = 1; t <= N; ++t) out.multipliers.g.push_back(zero_adapted(tree, t));

  for (int t = 1; t <= N; ++t) {
    for (NodeIndex mu : tree.level(t - 1)) {
      Vector q_prev = q.q[t - 1].at(tree, mu);
      auto kids = tree.children(mu);

      if (kids.size() == 1 && tree.cond_prob(kids[0]) == 1.0) {
        // E_{t-1} p_t = q_{t-1} pins p_t; only the generator inequalities remain.
        NodeIndex nu = kids[0];
        out.dual.p[t].at(tree, nu) = q_prev;
        const ConeSpec& cone = model.cones[nu];
        Vector qt = q.q[t].at(tree, nu);
        double worst = (qt.transpose() * cone.outputs - q_prev.transpose() * cone.inputs).maxCoeff();
        out.report.max_slack = std::max(out.report.max_slack, std::max(0.0, worst));
        if (worst > tol) {
          out.report.feasible = false;
          out.report.failed_parent = mu;
          throw SolverError(SolveStatus::infeasible,
                            "conversion LP infeasible at node " + tree.id(mu) + ": q is not a supporting R-dual");
        }
        continue;
      }

      LinearProgram<double> lp;
      lp.sense = ObjectiveSense::minimize;
      std::vector<int> first;
      for (std::size_t c = 0; c < kids.size(); ++c) {
        first.push_back(lp.num_variables());
        for (int i = 0; i < n; ++i) lp.add_variable(0.0);
      }
      for (std::size_t c = 0; c < kids.size(); ++c) {
        NodeIndex nu = kids[c];
        const ConeSpec& cone = model.cones[nu];
        Vector qt = q.q[t].at(tree, nu);
        for (int k = 0; k < cone.size(); ++k) {
          double rhs = qt.dot(cone.output(k));
          std::vector<Term> terms;
          for (int i = 0; i < n; ++i) {
            if (cone.inputs(i, k) != 0.0) terms.emplace_back(first[c] + i, cone.inputs(i, k));
          }
          if (terms.empty() && rhs <= 0.0) continue;
          lp.add_row(std::move(terms), RowSense::greater_equal, rhs);
        }
      }
      for (int i = 0; i < n; ++i) {
        std::vector<Term> terms;
        for (std::size_t c = 0; c < kids.size(); ++c) terms.emplace_back(first[c] + i, tree.cond_prob(kids[c]));
        int sp = lp.add_variable(1.0);
        int sm = lp.add_variable(1.0);
        terms.emplace_back(sp, 1.0);
        terms.emplace_back(sm, -1.0);
        lp.add_row(std::move(terms), RowSense::equal, q_prev(i));
      }
      auto rep = lp_solve(lp);
      if (rep.status != SolveStatus::optimal || rep.objective > tol) {
        out.report.feasible = false;
        out.report.failed_parent = mu;
        std::ostringstream os;
        os << "conversion LP infeasible at node " << tree.id(mu) << " (slack " << rep.objective
           << "): q is not a supporting R-dual";
        throw SolverError(SolveStatus::infeasible, os.str());
      }
      out.report.max_slack = std::max(out.report.max_slack, rep.objective);
      for (std::size_t c = 0; c < kids.size(); ++c) {
        out.dual.p[t].at(tree, kids[c]) = rep.primal.segment(first[c], n);
      }
    }
  }
  out.dual.p[N + 1].values = q.q[N].values;

  for (int t = 1; t <= N; ++t) {
    for (NodeIndex nu : tree.level(t)) {
      out.multipliers.g[t].at(tree, nu) = out.dual.p[t].at(tree, nu) - q.q[t - 1].at(tree, tree.parent(nu));
    }
    AdaptedVector mean = cond_expectation(tree, out.multipliers.g[t], t - 1);
    if (mean.values.size()) {
      out.report.max_multiplier_mean =
          std::max(out.report.max_multiplier_mean, mean.values.lpNorm<Eigen::Infinity>());
    }
  }
  out.report.support = check_support(tree, path, out.dual, tol);
  return out;
}

RapidSolution solve_rapid(const Model& model, const RapidOptions& options) {
  RapidSolution sol;
  // Degeneracy is reported ahead of assumption failures: a model with no
  // positive terminal value has nothing to certify.
  auto lower = terminal_lower_bound(model, options.log_optimal.weight);
  if (!lower || !(*lower > kCertificationTolerance)) {
    auto guard = max_terminal_value(model, options.log_optimal.weight);
    if (guard.status == SolveStatus::degenerate_model) {
      throw SolverError(SolveStatus::degenerate_model, "degenerate model: max E[w.x_N] <= tolerance");
    }
  }
  sol.constants = compute_constants(model);
  sol.log_optimal = solve_log_optimal(model, options.log_optimal);
  sol.path = sol.log_optimal.path;
  sol.path_check = check_path(model, sol.path);
  sol.certificate = certify_rapid(model, sol.path, options.certify);
  if (!sol.certificate.certified) {
    std::ostringstream os;
    os << "expected-log path of model '" << model.name << "' is not certified rapid (total support slack "
       << sol.certificate.total_slack << ")";
    throw SolverError(SolveStatus::infeasible, os.str());
  }
  sol.dynkin = sol.certificate.dual;
  sol.radner = dynkin_to_radner(model.tree, sol.dynkin);
  const double tol = options.certify.tolerance;
  sol.dynkin_check = check_dynkin(model, sol.dynkin, tol);
  sol.support_check = check_support(model.tree, sol.path, sol.dynkin, tol);
  sol.radner_support_check = check_support(model.tree, sol.path, sol.radner, tol);
  if (options.verify_radner) sol.radner_check = check_radner(model, sol.radner, tol);
  return sol;
}

}  // namespace vng
