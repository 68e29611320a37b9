#include "vng/horizon.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace vng {

const SweepRow* Sweep::last_completed() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->completed) return &*it;
  }
  return nullptr;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Values of a level-t quantity keyed by node id, so rows with different
// horizons can be compared.
double spread(const std::vector<const SweepRow*>& rows, int t,
              const std::function<const AdaptedVector&(const SweepRow&)>& pick) {
  double d = 0.0;
  const ScenarioTree& ref = rows.front()->tree;
  for (NodeIndex i : ref.level(t)) {
    const std::string& id = ref.id(i);
    Vector lo, hi;
    for (const SweepRow* r : rows) {
      Vector v = pick(*r).at(r->tree, *r->tree.find(id));
      if (lo.size() == 0) {
        lo = hi = v;
      } else {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
    }
    d = std::max(d, (hi - lo).lpNorm<Eigen::Infinity>());
  }
  return d;
}

std::vector<Diameter> diameters(const std::vector<SweepRow>& rows, int max_horizon) {
  std::vector<Diameter> out;
  for (int t = 0; t <= max_horizon; ++t) {
    std::vector<const SweepRow*> use;
    for (const auto& r : rows) {
      if (r.completed && r.horizon >= t && r.horizon >= 1) use.push_back(&r);
    }
    Diameter d;
    d.time = t;
    if (use.empty()) {
      out.push_back(d);
      continue;
    }
    // Trailing half: the last ceil(k / 2) rows.
    use.erase(use.begin(), use.begin() + static_cast<std::ptrdiff_t>(use.size() / 2));
    d.samples = static_cast<int>(use.size());
    d.first_horizon = use.front()->horizon;
    d.x = spread(use, t, [t](const SweepRow& r) -> const AdaptedVector& { return r.x.x[t]; });
    if (t >= 1) d.p = spread(use, t, [t](const SweepRow& r) -> const AdaptedVector& { return r.p.p[t]; });
    d.q = spread(use, t, [t](const SweepRow& r) -> const AdaptedVector& { return r.q.q[t]; });
    out.push_back(d);
  }
  return out;
}

double column_l1(const AdaptedVector& v, const ScenarioTree& tree, NodeIndex i) { return l1_norm(v.at(tree, i)); }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string joined(const Eigen::Ref<const Vector>& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += fmt(v(i));
  }
  return s;
}

}  // namespace

Sweep horizon_sweep(const Model& model, int max_horizon, const RapidOptions& options) {
  if (max_horizon < 1) throw std::invalid_argument("horizon_sweep: max horizon must be >= 1");
  Sweep sweep;
  sweep.model = model_at_horizon(model, max_horizon);
  try {
    sweep.constants = compute_constants(sweep.model);
  } catch (const ModelError& e) {
    // Every row will fail with its own message; there are no bounds to audit.
    if (e.kind() != ModelError::Kind::assumption) throw;
  }
  // Rows are solved in order; each is independent of the others.
  for (int N = 1; N <= max_horizon; ++N) {
    SweepRow row;
    row.horizon = N;
    Model mN = model_at_horizon(sweep.model, N);
    row.tree = mN.tree;
    try {
      RapidSolution sol = solve_rapid(mN, options);
      row.x = std::move(sol.path);
      row.p = std::move(sol.dynkin);
      row.q = std::move(sol.radner);
      row.certification_slack = sol.certificate.total_slack;
      row.completed = true;
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    sweep.rows.push_back(std::move(row));
  }
  sweep.diameters = diameters(sweep.rows, max_horizon);
  return sweep;
}

BoundsReport bounds_check(const Sweep& sweep, const GrowthConstants& gc, double tol) {
  BoundsReport rep;
  rep.tolerance = tol;
  rep.worst_p_mean = rep.worst_x = rep.worst_q = rep.worst_p1 = rep.worst_q_mean = kInf;
  rep.q0_reference = Vector::Constant(gc.dim, 1.0 / gc.delta);
  auto note = [&](double slack, double& worst, const SweepRow& r, int t, const char* what) {
    worst = std::min(worst, slack);
    if (slack < -tol) {
      rep.ok = false;
      std::ostringstream os;
      os << what << " violated at N=" << r.horizon << ", t=" << t << " (slack " << slack << ")";
      rep.violations.push_back(os.str());
    }
  };
  for (const SweepRow& r : sweep.rows) {
    if (!r.completed) continue;
    const ScenarioTree& tree = r.tree;
    for (int t = 0; t <= r.horizon; ++t) {
      BoundEntry e;
      e.horizon = r.horizon;
      e.time = t;
      e.slack_p_mean = e.slack_x = e.slack_q = e.slack_p1 = e.slack_q_mean = kInf;
      double mean_q = 0.0;
      for (NodeIndex i : tree.level(t)) {
        double P = tree.unconditional_prob(i);
        double ax = column_l1(r.x.x[t], tree, i);
        double aq = column_l1(r.q.q[t], tree, i);
        e.max_abs_x = std::max(e.max_abs_x, ax);
        e.slack_x = std::min(e.slack_x, gc.M_cum[t] - ax);
        mean_q += P * aq;
        if (t >= 1) {
          double ap = column_l1(r.p.p[t], tree, i);
          e.mean_abs_p += P * ap;
          e.slack_q = std::min(e.slack_q, gc.C[t] * ap - aq);
          if (t == 1) e.slack_p1 = std::min(e.slack_p1, 1.0 / gc.delta - ap);
        }
      }
      if (t >= 1) e.slack_p_mean = gc.C_cum[t] - e.mean_abs_p;
      e.slack_q_mean = gc.C_cum[t + 1] - mean_q;
      note(e.slack_x, rep.worst_x, r, t, "|x_t| <= M^t");
      if (t >= 1) {
        note(e.slack_p_mean, rep.worst_p_mean, r, t, "E|p_t| <= C^t");
        note(e.slack_q, rep.worst_q, r, t, "|q_t| <= C_t |p_t|");
      }
      if (t == 1) note(e.slack_p1, rep.worst_p1, r, t, "|p_1| <= 1/delta");
      note(e.slack_q_mean, rep.worst_q_mean, r, t, "E|q_t| <= C^{t+1}");
      rep.entries.push_back(e);
    }
  }
  return rep;
}

Prefix prefix_extract(const Sweep& sweep, int t_cut, double tol) {
  const SweepRow* last = sweep.last_completed();
  if (!last) throw std::runtime_error("no completed row");
  if (t_cut < 0 || t_cut > last->horizon) {
    throw std::invalid_argument("prefix_extract: t_cut must lie in 0.." + std::to_string(last->horizon));
  }

  Prefix out;
  out.t_cut = t_cut;
  out.source_horizon = last->horizon;
  out.label = std::string(kPrefixLabel);
  const ScenarioTree& full = last->tree;

  if (t_cut == 0) {
    // Only x_0 and the root price q_0 = E_0 p_1 remain; support is q_0 . x_0 = 1.
    out.path.x = {last->x.x[0]};
    out.dual.p = {zero_adapted(full, 0), last->q.q[0]};
    double r = std::abs(last->q.q[0].values.col(0).dot(last->x.x[0].values.col(0)) - 1.0);
    out.path_check.checked = 0;
    out.dynkin_check.checked = 0;
    out.support_check.record(full.root(), 0, r, tol, "support");
    out.certified = out.support_check.ok;
    return out;
  }

  out.model = model_at_horizon(sweep.model, t_cut);
  const ScenarioTree& tree = out.model.tree;
  out.path = zero_path(tree);
  out.dual = zero_dynkin(tree);
  auto copy_level = [&](const AdaptedVector& src, AdaptedVector& dst, int level) {
    for (NodeIndex i : tree.level(level)) dst.at(tree, i) = src.at(full, *full.find(tree.id(i)));
  };
  for (int t = 0; t <= t_cut; ++t) copy_level(last->x.x[t], out.path.x[t], t);
  for (int t = 1; t <= t_cut; ++t) copy_level(last->p.p[t], out.dual.p[t], t);
  copy_level(last->q.q[t_cut], out.dual.p[t_cut + 1], t_cut);

  out.path_check = check_path(out.model, out.path, kMembershipTolerance);
  out.dynkin_check = check_dynkin(out.model, out.dual, tol);
  out.support_check = check_support(tree, out.path, out.dual, tol);
  out.certified = out.path_check.ok && out.dynkin_check.ok && out.support_check.ok;
  return out;
}

void write_sweep_csv(std::ostream& out, const Sweep& sweep, const GrowthConstants& gc) {
  out << "N,t,node_id,status,x,p,q,abs_x,M_cum,slack_x,abs_p,C_t,slack_q,mean_abs_p,C_cum,slack_p_mean,slack_p1\n";
  for (const SweepRow& r : sweep.rows) {
    if (!r.completed) {
      out << r.horizon << ",,,failed,,,,,,,,,,,,,\n";
      continue;
    }
    const ScenarioTree& tree = r.tree;
    for (int t = 0; t <= r.horizon; ++t) {
      double mean_p = 0.0;
      if (t >= 1) {
        for (NodeIndex i : tree.level(t)) mean_p += tree.unconditional_prob(i) * column_l1(r.p.p[t], tree, i);
      }
      for (NodeIndex i : tree.level(t)) {
        double ax = column_l1(r.x.x[t], tree, i);
        out << r.horizon << ',' << t << ',' << tree.id(i) << ",certified," << joined(r.x.x[t].at(tree, i)) << ',';
        if (t >= 1) out << joined(r.p.p[t].at(tree, i));
        out << ',' << joined(r.q.q[t].at(tree, i)) << ',' << fmt(ax) << ',' << fmt(gc.M_cum[t]) << ','
            << fmt(gc.M_cum[t] - ax) << ',';
        if (t >= 1) {
          double ap = column_l1(r.p.p[t], tree, i);
          double aq = column_l1(r.q.q[t], tree, i);
          out << fmt(ap) << ',' << fmt(gc.C[t]) << ',' << fmt(gc.C[t] * ap - aq) << ',' << fmt(mean_p) << ','
              << fmt(gc.C_cum[t]) << ',' << fmt(gc.C_cum[t] - mean_p) << ',';
          if (t == 1) out << fmt(1.0 / gc.delta - ap);
        } else {
          out << ",,,,,,";
        }
        out << '\n';
      }
    }
  }
}

}  // namespace vng
