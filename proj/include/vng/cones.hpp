#pragma once

#include "vng/scenario_tree.hpp"

#include <vector>

namespace vng {

/// Default tolerances: membership tests and aggregate certification.
inline constexpr double kMembershipTolerance = 1e-9;
inline constexpr double kCertificationTolerance = 1e-7;

/// Conic hull of finitely many generator pairs (a_k, b_k) in R^n_+ x R^n_+.
/// Column k of `inputs` is a_k, column k of `outputs` is b_k.
struct ConeSpec {
  Matrix inputs;
  Matrix outputs;

  ConeSpec() = default;
  ConeSpec(Matrix a, Matrix b);

  int dim() const { return static_cast<int>(inputs.rows()); }
  int size() const { return static_cast<int>(inputs.cols()); }
  auto input(int k) const { return inputs.col(k); }
  auto output(int k) const { return outputs.col(k); }

  /// Appends one generator.
  void add(const Vector& a, const Vector& b);
};

/// One cone per non-root node (entry for the root stays empty).
struct RandomCone {
  std::vector<ConeSpec> at_node;

  const ConeSpec& operator[](NodeIndex i) const { return at_node.at(i); }
  ConeSpec& operator[](NodeIndex i) { return at_node.at(i); }
};

/// (c, d) in the dual cone: c, d >= -tol and d.b_k - c.a_k <= tol for all k.
bool dual_contains(const ConeSpec& cone, const Vector& c, const Vector& d,
                   double tol = kMembershipTolerance);

/// Smallest max-coordinate residual of sum_k lambda_k (a_k, b_k) = (a, b)
/// over lambda >= 0 (an LP).
double primal_distance(const ConeSpec& cone, const Vector& a, const Vector& b);

/// (a, b) in the cone up to `tol` per coordinate.
bool primal_contains(const ConeSpec& cone, const Vector& a, const Vector& b,
                     double tol = kMembershipTolerance);

/// Every unit vector lies in the conic hull of the input parts.
bool validate_G1(const ConeSpec& cone);

/// Decomposition of each unit vector e_i over the inputs: column i of the
/// result is lambda >= 0 with inputs * lambda = e_i. Empty optional when
/// some e_i is not representable.
std::optional<Matrix> unit_input_decomposition(const ConeSpec& cone);

/// Smallest M with |b| <= M |a| on the cone. Throws ModelError(assumption)
/// when some generator has a = 0 and b != 0.
double validate_G2(const ConeSpec& cone);

/// Per-node solution of max gamma s.t. sum lambda_k b_k >= gamma e,
/// sum lambda_k |a_k| <= 1.
struct G3Witness {
  double gamma = 0.0;
  Vector a_hat;
  Vector b_hat;
};

G3Witness node_G3(const ConeSpec& cone);

struct G3Result {
  double gamma = 0.0;                  // min over the level
  std::vector<NodeIndex> nodes;        // level order
  std::vector<G3Witness> witnesses;    // aligned with nodes
};

/// Throws ModelError(assumption) naming the node when gamma <= tol.
G3Result validate_G3(const ScenarioTree& tree, const RandomCone& cones, int t,
                     double tol = kMembershipTolerance);

/// Constants of the growth estimates. Index t runs 1..N for the per-step
/// quantities (entry 0 unused); cumulative C^t is defined for t = 1..N+1.
struct GrowthConstants {
  std::vector<double> M;       // (G.2) bound per step
  std::vector<double> gamma;   // (G.3) output floor per step
  std::vector<double> C;       // dual contraction |d| <= C_t |c|
  std::vector<double> C_cum;   // C^t
  std::vector<double> M_cum;   // M^t, with M_cum[0] = n D
  std::vector<G3Witness> witness;  // per node (root entry unused)
  double delta = 0.0;
  double D = 0.0;
  int dim = 0;
  int horizon = 0;
};

}  // namespace vng
