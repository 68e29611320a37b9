#include "vng/cones.hpp"

#include "vng/lp.hpp"
#include "vng/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace vng {

ConeSpec::ConeSpec(Matrix a, Matrix b) : inputs(std::move(a)), outputs(std::move(b)) {
  if (inputs.rows() != outputs.rows() || inputs.cols() != outputs.cols()) {
    throw std::invalid_argument("ConeSpec: input/output generator shapes differ");
  }
}

void ConeSpec::add(const Vector& a, const Vector& b) {
  if (inputs.size() == 0) {
    inputs.resize(a.size(), 0);
    outputs.resize(b.size(), 0);
  }
  if (a.size() != inputs.rows() || b.size() != outputs.rows()) {
    throw std::invalid_argument("ConeSpec::add: dimension mismatch");
  }
  inputs.conservativeResize(Eigen::NoChange, inputs.cols() + 1);
  outputs.conservativeResize(Eigen::NoChange, outputs.cols() + 1);
  inputs.col(inputs.cols() - 1) = a;
  outputs.col(outputs.cols() - 1) = b;
}

namespace {

void require_dim(const ConeSpec& cone, const Vector& u, const Vector& v, const char* what) {
  if (u.size() != cone.dim() || v.size() != cone.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

ModelError assumption_error(const std::string& where, const std::string& message) {
  return ModelError(ModelError::Kind::assumption, where, message);
}

}  // namespace

bool dual_contains(const ConeSpec& cone, const Vector& c, const Vector& d, double tol) {
  require_dim(cone, c, d, "dual_contains");
  if (c.size() > 0 && (c.minCoeff() < -tol || d.minCoeff() < -tol)) return false;
  for (int k = 0; k < cone.size(); ++k) {
    if (d.dot(cone.output(k)) - c.dot(cone.input(k)) > tol) return false;
  }
  return true;
}

double primal_distance(const ConeSpec& cone, const Vector& a, const Vector& b) {
  require_dim(cone, a, b, "primal_contains");
  const int n = cone.dim();
  const int K = cone.size();
  LinearProgram<double> lp;
  lp.sense = ObjectiveSense::minimize;
  for (int k = 0; k < K; ++k) lp.add_variable(0.0);
  int r = lp.add_variable(1.0);
  for (int part = 0; part < 2; ++part) {
    const Matrix& gens = part == 0 ? cone.inputs : cone.outputs;
    const Vector& target = part == 0 ? a : b;
    for (int i = 0; i < n; ++i) {
      std::vector<LinearProgram<double>::Term> terms;
      for (int k = 0; k < K; ++k) {
        if (gens(i, k) != 0.0) terms.emplace_back(k, gens(i, k));
      }
      auto lo = terms;
      terms.emplace_back(r, -1.0);
      lo.emplace_back(r, 1.0);
      lp.add_row(std::move(terms), RowSense::less_equal, target(i));
      lp.add_row(std::move(lo), RowSense::greater_equal, target(i));
    }
  }
  auto rep = lp_solve(lp);
  if (rep.status != SolveStatus::optimal) {
    throw std::runtime_error("primal_contains: LP engine failure (" + std::string(to_string(rep.status)) + ")");
  }
  return rep.objective;
}

bool primal_contains(const ConeSpec& cone, const Vector& a, const Vector& b, double tol) {
  return primal_distance(cone, a, b) <= tol;
}

std::optional<Matrix> unit_input_decomposition(const ConeSpec& cone) {
  const int n = cone.dim();
  const int K = cone.size();
  Matrix out = Matrix::Zero(K, n);
  for (int i = 0; i < n; ++i) {
    LinearProgram<double> lp;
    lp.sense = ObjectiveSense::feasibility;
    for (int k = 0; k < K; ++k) lp.add_variable();
    for (int row = 0; row < n; ++row) {
      std::vector<LinearProgram<double>::Term> terms;
      for (int k = 0; k < K; ++k) {
        if (cone.inputs(row, k) != 0.0) terms.emplace_back(k, cone.inputs(row, k));
      }
      lp.add_row(std::move(terms), RowSense::equal, row == i ? 1.0 : 0.0);
    }
    auto rep = lp_solve(lp);
    if (rep.status == SolveStatus::infeasible) return std::nullopt;
    if (rep.status != SolveStatus::optimal) throw std::runtime_error("validate_G1: LP engine failure");
    out.col(i) = rep.primal;
  }
  return out;
}

bool validate_G1(const ConeSpec& cone) { return cone.size() > 0 && unit_input_decomposition(cone).has_value(); }

double validate_G2(const ConeSpec& cone) {
  double M = 0.0;
  for (int k = 0; k < cone.size(); ++k) {
    double na = l1_norm(cone.input(k));
    double nb = l1_norm(cone.output(k));
    if (na == 0.0) {
      if (nb != 0.0) {
        std::ostringstream os;
        os << "G2-violation: generator " << k << " has a = 0 and b != 0";
        throw assumption_error("", os.str());
      }
      continue;
    }
    M = std::max(M, nb / na);
  }
  return M;
}

G3Witness node_G3(const ConeSpec& cone) {
  const int n = cone.dim();
  const int K = cone.size();
  LinearProgram<double> lp;
  lp.sense = ObjectiveSense::maximize;
  std::vector<int> var(K, -1);
  for (int k = 0; k < K; ++k) {
    if (l1_norm(cone.input(k)) > 0.0) var[k] = lp.add_variable(0.0);
  }
  int g = lp.add_variable(1.0);
  for (int i = 0; i < n; ++i) {
    std::vector<LinearProgram<double>::Term> terms;
    for (int k = 0; k < K; ++k) {
      if (var[k] >= 0 && cone.outputs(i, k) != 0.0) terms.emplace_back(var[k], cone.outputs(i, k));
    }
    terms.emplace_back(g, -1.0);
    lp.add_row(std::move(terms), RowSense::greater_equal, 0.0);
  }
  std::vector<LinearProgram<double>::Term> budget;
  for (int k = 0; k < K; ++k) {
    if (var[k] >= 0) budget.emplace_back(var[k], l1_norm(cone.input(k)));
  }
  lp.add_row(std::move(budget), RowSense::less_equal, 1.0);
  auto rep = lp_solve(lp);
  if (rep.status != SolveStatus::optimal) throw std::runtime_error("validate_G3: LP engine failure");

  G3Witness w;
  w.gamma = rep.objective;
  w.a_hat = Vector::Zero(n);
  w.b_hat = Vector::Zero(n);
  for (int k = 0; k < K; ++k) {
    if (var[k] < 0) continue;
    w.a_hat += rep.primal(var[k]) * cone.input(k);
    w.b_hat += rep.primal(var[k]) * cone.output(k);
  }
  return w;
}

G3Result validate_G3(const ScenarioTree& tree, const RandomCone& cones, int t, double tol) {
  if (t < 1 || t > tree.horizon()) throw std::invalid_argument("validate_G3: level out of range");
  G3Result out;
  out.gamma = std::numeric_limits<double>::infinity();
  for (NodeIndex nu : tree.level(t)) {
    G3Witness w = node_G3(cones[nu]);
    if (w.gamma <= tol) {
      std::ostringstream os;
      os << "G3-violation at node " << tree.id(nu) << " (gamma = " << w.gamma << ")";
      throw assumption_error(tree.id(nu), os.str());
    }
    out.gamma = std::min(out.gamma, w.gamma);
    out.nodes.push_back(nu);
    out.witnesses.push_back(std::move(w));
  }
  return out;
}

GrowthConstants compute_constants(const Model& model, double tol) {
  const ScenarioTree& tree = model.tree;
  const int N = tree.horizon();
  const int n = tree.dim();
  GrowthConstants gc;
  gc.dim = n;
  gc.horizon = N;
  gc.M.assign(N + 1, 0.0);
  gc.gamma.assign(N + 1, 0.0);
  gc.C.assign(N + 1, 0.0);
  gc.C_cum.assign(N + 2, 0.0);
  gc.M_cum.assign(N + 1, 0.0);
  gc.witness.assign(tree.size(), G3Witness{});

  for (int t = 1; t <= N; ++t) {
    for (NodeIndex nu : tree.level(t)) {
      if (!validate_G1(model.cones[nu])) {
        throw assumption_error(tree.id(nu), "G1-violation at node " + tree.id(nu));
      }
      try {
        gc.M[t] = std::max(gc.M[t], validate_G2(model.cones[nu]));
      } catch (const ModelError& e) {
        throw assumption_error(tree.id(nu), std::string(e.what()) + " at node " + tree.id(nu));
      }
    }
    G3Result g3 = validate_G3(tree, model.cones, t, tol);
    gc.gamma[t] = g3.gamma;
    double max_a = 0.0;
    for (std::size_t j = 0; j < g3.nodes.size(); ++j) {
      max_a = std::max(max_a, g3.witnesses[j].a_hat.maxCoeff());
      gc.witness[g3.nodes[j]] = g3.witnesses[j];
    }
    gc.C[t] = max_a / g3.gamma;
  }

  if (model.x0.size() != n) throw assumption_error("x0", "dimension mismatch");
  double lo = model.x0.minCoeff();
  double hi = model.x0.maxCoeff();
  if (model.declared_delta) {
    if (*model.declared_delta > lo + tol) {
      throw assumption_error("delta", "declared delta exceeds min coordinate of x0");
    }
    lo = *model.declared_delta;
  }
  if (model.declared_D) {
    if (*model.declared_D < hi - tol) throw assumption_error("D", "declared D below max coordinate of x0");
    hi = *model.declared_D;
  }
  if (!(lo > 0.0)) throw assumption_error("x0", "initial state is not strictly positive (delta <= 0)");
  gc.delta = lo;
  gc.D = hi;

  gc.C_cum[1] = 1.0 / gc.delta;
  for (int t = 2; t <= N + 1; ++t) gc.C_cum[t] = gc.C[t - 1] * gc.C_cum[t - 1];
  gc.M_cum[0] = n * gc.D;
  for (int t = 1; t <= N; ++t) gc.M_cum[t] = gc.M[t] * gc.M_cum[t - 1];
  return gc;
}

}  // namespace vng
