#pragma once

#include "vng/solver.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace vng {

inline constexpr std::string_view kPrefixLabel = "prefix-certified infinite-path approximation";

/// Solution of the horizon-N problem. `tree` is the horizon-N tree; node ids
/// at levels t <= N agree across rows.
struct SweepRow {
  int horizon = 0;
  bool completed = false;
  std::string failure;  // solver message when !completed
  ScenarioTree tree;
  PrimalPath x;
  DynkinDual p;
  RadnerDual q;  // q_t = E_t p_{t+1}
  double certification_slack = 0.0;
};

/// Sup-norm spread of {v_t(N)} over the trailing half of the completed rows
/// with N >= t. Informational only.
struct Diameter {
  int time = 0;
  int samples = 0;
  int first_horizon = 0;
  double x = 0.0;
  double p = 0.0;  // t >= 1
  double q = 0.0;
};

struct Sweep {
  Model model;  // at the largest horizon
  GrowthConstants constants;  // empty when the model violates an assumption
  std::vector<SweepRow> rows;
  std::vector<Diameter> diameters;  // t = 0..N_max

  const SweepRow* last_completed() const;
};

/// Runs solve_rapid for N = 1..max_horizon. A failing N is recorded in its
/// row and the sweep continues. Throws ModelError when the model cannot be
/// extended to max_horizon.
Sweep horizon_sweep(const Model& model, int max_horizon, const RapidOptions& options = {});

/// One (N, t) line of the bound audit. Slacks are bound minus value; a
/// family that does not apply at (N, t) keeps +inf.
struct BoundEntry {
  int horizon = 0;
  int time = 0;
  double mean_abs_p = 0.0;   // E|p_t|
  double max_abs_x = 0.0;    // max over nodes |x_t|
  double slack_p_mean = 0.0;   // C^t - E|p_t|
  double slack_x = 0.0;        // M^t - |x_t|, worst node
  double slack_q = 0.0;        // C_t |p_t| - |q_t|, worst node
  double slack_p1 = 0.0;       // 1/delta - |p_1|, worst node (t = 1)
  double slack_q_mean = 0.0;   // C^{t+1} - E|q_t|
};

struct BoundsReport {
  bool ok = true;
  double tolerance = 0.0;
  std::vector<BoundEntry> entries;
  double worst_p_mean = 0.0;
  double worst_x = 0.0;
  double worst_q = 0.0;
  double worst_p1 = 0.0;
  double worst_q_mean = 0.0;
  Vector q0_reference;  // delta^{-1} e
  std::vector<std::string> violations;
};

/// Audits every completed row against the growth estimates built from
/// `constants` (norms are coordinate sums). A slack below -tol is a violation.
BoundsReport bounds_check(const Sweep& sweep, const GrowthConstants& constants, double tol = 1e-9);
inline BoundsReport bounds_check(const Sweep& sweep, double tol = 1e-9) {
  return bounds_check(sweep, sweep.constants, tol);
}

struct Prefix {
  int t_cut = 0;
  int source_horizon = 0;
  std::string label;
  Model model;      // truncated to t_cut (unused when t_cut = 0)
  PrimalPath path;  // x_0..x_{t_cut}
  DynkinDual dual;  // p_1..p_{t_cut}, then q_{t_cut}(N) as the terminal price
  CheckReport path_check;
  CheckReport dynkin_check;
  CheckReport support_check;
  bool certified = false;
};

/// Prefix of the last completed row, re-verified on the truncated horizon.
/// Throws std::runtime_error("no completed row") for an empty or failed
/// sweep and std::invalid_argument when t_cut exceeds the horizon of that
/// row.
Prefix prefix_extract(const Sweep& sweep, int t_cut, double tol = kCertificationTolerance);

/// Column order: N,t,node_id,status,x,p,q,abs_x,M_cum,slack_x,abs_p,C_t,
/// slack_q,mean_abs_p,C_cum,slack_p_mean,slack_p1. Vectors are ';'-joined;
/// cells that do not apply are empty. A failed row is one line with status
/// "failed" and empty t.
void write_sweep_csv(std::ostream& out, const Sweep& sweep, const GrowthConstants& constants);

}  // namespace vng
