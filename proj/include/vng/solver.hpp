#pragma once

#include "vng/lp.hpp"
#include "vng/paths.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace vng {

/// Failure of a solver stage; `status` carries the SolveReport status
/// (degenerate-model, infeasible, iteration-limit, ...).
class SolverError : public std::runtime_error {
 public:
  SolverError(SolveStatus status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  SolveStatus status() const noexcept { return status_; }

 private:
  SolveStatus status_;
};

/// Index map of the generator weights lambda_k(node) used by the path programs.
struct TransitionLayout {
  std::vector<int> first;              // per node, first weight index
  std::vector<std::vector<int>> used;  // per node, generator ids with (a_k, b_k) != 0
  int size = 0;

  explicit TransitionLayout(const Model& model);
  int index(NodeIndex node, std::size_t j) const { return first[node] + static_cast<int>(j); }
};

/// Builds the path x from generator weights: x_t(node) = sum_k lambda_k b_k.
PrimalPath path_from_weights(const Model& model, const TransitionLayout& layout, const Eigen::VectorXd& lambda);

/// max E[w . x_N] over feasible paths from x0. Status degenerate-model when
/// the optimum is <= tol.
SolveReport<double> max_terminal_value(const Model& model, const Vector& weight = Vector(),
                                       double tol = kCertificationTolerance);

/// E[w . x_N] of a constructive path built from the (G.3) witnesses; a
/// lower bound for max_terminal_value. Empty when some cone fails (G.1).
std::optional<double> terminal_lower_bound(const Model& model, const Vector& weight = Vector());

struct LogOptimalOptions {
  Vector weight;  // defaults to e
  double tolerance = 1e-13;
  double acceptable = 1e-9;  // contract: relative suboptimality certificate
  int max_iterations = 300;
};

struct LogOptimalResult {
  PrimalPath path;
  double objective = 0.0;          // sum_leaves P ln(w . x_N)
  double duality_gap = 0.0;        // relative, x.z / (1 + |objective|)
  double primal_residual = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  bool converged = false;
  DynkinDual price_estimate;       // from the equality multipliers; diagnostic only
};

/// Expected-log-growth maximizer over feasible paths from x0.
/// Throws SolverError(degenerate-model) or SolverError(iteration-limit).
LogOptimalResult solve_log_optimal(const Model& model, const LogOptimalOptions& options = {});

/// sum_leaves P(leaf) ln(w . x_N(leaf)); -inf if some value is <= 0.
double expected_log_value(const Model& model, const PrimalPath& path, const Vector& weight = Vector());

struct CertifyOptions {
  double tolerance = kCertificationTolerance;  // admissible total support slack
  SimplexOptions simplex;
};

/// Outcome of the tree-wide rapidity LP. `dual` is "a" supporting dual when
/// certified; otherwise `certificate` holds LP multipliers proving that the
/// total support slack cannot go below `total_slack`.
struct RapidCertificate {
  bool certified = false;
  bool verification_failed = false;  // LP claimed success but the re-check did not
  double total_slack = 0.0;
  DynkinDual dual;
  std::vector<double> certificate;
  SolveStatus lp_status = SolveStatus::numerical_failure;
  int lp_rows = 0;
  int lp_variables = 0;
  int iterations = 0;
  double wall_seconds = 0.0;
};

/// Double precision certification (slack tolerance from options).
RapidCertificate certify_rapid(const Model& model, const PrimalPath& path, const CertifyOptions& options = {});

/// Exact rational certification of the same LP (data converted exactly from
/// doubles); certified iff the optimal slack is exactly zero.
RapidCertificate certify_rapid_exact(const Model& model, const PrimalPath& path, const SimplexOptions& simplex = {});

/// q_t = E_t p_{t+1}, t = 0..N.
RadnerDual dynkin_to_radner(const ScenarioTree& tree, const DynkinDual& dual);

struct ConversionReport {
  bool feasible = true;
  std::optional<NodeIndex> failed_parent;
  double max_slack = 0.0;
  double max_multiplier_mean = 0.0;  // max |E_{t-1} g_t|
  CheckReport support;               // support re-check of the new p
};

struct RadnerToDynkin {
  DynkinDual dual;
  Multipliers multipliers;
  ConversionReport report;
};

/// One LP per time-(t-1) node: p_t >= 0 on the children with q_t.b <= p_t.a for
/// every generator and E_{t-1} p_t = q_{t-1}. Throws SolverError(infeasible)
/// naming the parent when the LP has no solution.
RadnerToDynkin radner_to_dynkin(const Model& model, const RadnerDual& q, const PrimalPath& path,
                                double tol = kCertificationTolerance);

struct RapidSolution {
  PrimalPath path;
  DynkinDual dynkin;
  RadnerDual radner;
  LogOptimalResult log_optimal;
  RapidCertificate certificate;
  GrowthConstants constants;
  CheckReport path_check;
  CheckReport dynkin_check;
  CheckReport support_check;
  CheckReport radner_support_check;
  CheckReport radner_check;
};

struct RapidOptions {
  LogOptimalOptions log_optimal;
  CertifyOptions certify;
  bool verify_radner = true;  // exact R-dual inequality LP per parent
};

/// solve_log_optimal -> certify_rapid -> dynkin_to_radner. Throws
/// SolverError(infeasible) when the candidate cannot be certified.
RapidSolution solve_rapid(const Model& model, const RapidOptions& options = {});

}  // namespace vng
