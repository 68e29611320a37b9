#include "vng/interior_point.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdlib>

namespace vng {

namespace {

using Eigen::VectorXd;

double max_step(const VectorXd& v, const VectorXd& dv) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  }
  return a;
}

double objective_value(const SeparableProgram& p, const VectorXd& x) {
  double v = p.c.dot(x);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (p.log_weight(j) > 0.0) v -= p.log_weight(j) * std::log(x(j));
  }
  return v;
}

// Mehrotra's heuristic: least-norm x for Ax = b and least-squares duals for
// the gradient at e, shifted into the interior and balanced.
void starting_point(const SeparableProgram& prog, const Eigen::SparseMatrix<double>& At, VectorXd& x, VectorXd& y,
                    VectorXd& z) {
  const Eigen::Index m = prog.A.rows();
  const Eigen::Index nv = prog.A.cols();
  Eigen::SparseMatrix<double> aat = prog.A * At;
  for (Eigen::Index i = 0; i < m; ++i) aat.coeffRef(i, i) += 1e-10 * (1.0 + aat.coeff(i, i));
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> f(aat);
  if (f.info() != Eigen::Success) {
    x = VectorXd::Ones(nv);
    z = VectorXd::Ones(nv);
    y = VectorXd::Zero(m);
    return;
  }
  VectorXd g = prog.c - prog.log_weight;
  x = At * f.solve(prog.b);
  y = f.solve(prog.A * g);
  z = g - At * y;
  double sx = std::max(-1.5 * x.minCoeff(), 0.0);
  double sz = std::max(-1.5 * z.minCoeff(), 0.0);
  x.array() += sx;
  z.array() += sz;
  double xz = x.dot(z);
  x.array() += 0.5 * xz / std::max(z.sum(), 1e-300);
  z.array() += 0.5 * xz / std::max(x.sum(), 1e-300);
  // Degenerate data (b = 0 or g = 0) leaves a zero vector; fall back to e.
  if (!(x.minCoeff() > 0.0)) x = VectorXd::Ones(nv);
  if (!(z.minCoeff() > 0.0)) z = VectorXd::Ones(nv);
}

}  // namespace

InteriorPointResult solve_separable(const SeparableProgram& prog, const InteriorPointOptions& opt) {
  const Eigen::Index m = prog.A.rows();
  const Eigen::Index nv = prog.A.cols();
  const Eigen::SparseMatrix<double> At = prog.A.transpose();
  const double b_scale = 1.0 + (prog.b.size() ? prog.b.lpNorm<Eigen::Infinity>() : 0.0);

  InteriorPointResult res;
  const bool linear = (prog.log_weight.array() == 0.0).all();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  VectorXd x, y, z;
  starting_point(prog, At, x, y, z);
  double best_merit = std::numeric_limits<double>::infinity();  // of the reported iterate
  double progress_mark = best_merit;
  int stalled = 0;

  for (int it = 0; it <= opt.max_iterations; ++it) {
    VectorXd grad = prog.c - (prog.log_weight.array() / x.array()).matrix();
    VectorXd rp = prog.A * x - prog.b;
    VectorXd rd = grad - At * y - z;
    double gap = x.dot(z);
    double obj = objective_value(prog, x);

    InteriorPointResult cur;
    cur.iterations = it;
    cur.primal_residual = rp.lpNorm<Eigen::Infinity>() / b_scale;
    cur.dual_residual = rd.lpNorm<Eigen::Infinity>() / (1.0 + grad.lpNorm<Eigen::Infinity>());
    cur.complementarity = gap;
    cur.objective = obj;
    double rel_gap = gap / (1.0 + std::abs(obj));
    double merit = std::max({cur.primal_residual, cur.dual_residual, rel_gap});
    if (merit < best_merit) {
      best_merit = merit;
      // Late iterates can lose accuracy as the normal matrix degenerates;
      // the best one seen is what gets reported.
      cur.x = x;
      cur.y = y;
      cur.z = z;
      res = std::move(cur);
    }
    res.iterations = it;
    if (merit <= opt.tolerance) {
      res.converged = true;
      return res;
    }
    if (merit < 0.5 * progress_mark) {
      progress_mark = merit;
      stalled = 0;
    } else if (++stalled > (best_merit < 1e-8 ? 4 : 40)) {
      break;  // no progress; caller judges the residuals
    }
    if (it == opt.max_iterations) break;

    const double mu = gap / static_cast<double>(nv);
    VectorXd hess = (prog.log_weight.array() / x.array().square()).matrix();
    VectorXd dinv = hess + (z.array() / x.array()).matrix();

    // Quasi-definite augmented system [-(Dinv + r) A^T; A r] with small
    // regularization r; stays factorizable without pivoting however extreme
    // Dinv gets, unlike the normal equations A D A^T.
    Eigen::SparseMatrix<double> kkt(nv + m, nv + m);
    bool factored = false;
    for (double reg = 1e-12; reg <= 1e-6 && !factored; reg *= 100.0) {
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(static_cast<std::size_t>(nv + m + 2 * prog.A.nonZeros()));
      for (Eigen::Index j = 0; j < nv; ++j) trip.emplace_back(j, j, -(dinv(j) + reg));
      for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(nv + i, nv + i, reg);
      for (Eigen::Index j = 0; j < prog.A.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator e(prog.A, j); e; ++e) {
          trip.emplace_back(nv + e.row(), j, e.value());
          trip.emplace_back(j, nv + e.row(), e.value());
        }
      }
      kkt.setFromTriplets(trip.begin(), trip.end());
      ldlt.compute(kkt);
      factored = ldlt.info() == Eigen::Success;
    }
    if (!factored) break;

    auto direction = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy, VectorXd& dz) {
      VectorXd rhat = rd + (rc.array() / x.array()).matrix();
      VectorXd rhs(nv + m);
      rhs << rhat, -rp;
      VectorXd sol = ldlt.solve(rhs);
      // Refinement against the unregularized system.
      for (int r = 0; r < 3; ++r) {
        VectorXd sx = sol.head(nv);
        VectorXd sy = sol.tail(m);
        VectorXd res(nv + m);
        res << rhat - (-dinv.cwiseProduct(sx) + At * sy), -rp - prog.A * sx;
        sol += ldlt.solve(res);
      }
      dx = sol.head(nv);
      dy = sol.tail(m);
      dz = -((rc + z.cwiseProduct(dx)).array() / x.array()).matrix();
    };

    VectorXd dx_aff, dy_aff, dz_aff;
    VectorXd rc = x.cwiseProduct(z);
    direction(rc, dx_aff, dy_aff, dz_aff);
    double a_aff = std::min({1.0, max_step(x, dx_aff), max_step(z, dz_aff)});
    double mu_aff = (x + a_aff * dx_aff).dot(z + a_aff * dz_aff) / static_cast<double>(nv);
    double sigma = std::clamp(std::pow(mu_aff / std::max(mu, 1e-300), 3.0), 0.0, 1.0);

    VectorXd dx, dy, dz;
    rc = x.cwiseProduct(z) + dx_aff.cwiseProduct(dz_aff) - VectorXd::Constant(nv, sigma * mu);
    direction(rc, dx, dy, dz);
    double ap = std::min(1.0, opt.step_fraction * max_step(x, dx));
    double ad = std::min(1.0, opt.step_fraction * max_step(z, dz));
    // Separate step lengths are only valid when the gradient does not
    // depend on x.
    if (!linear) ap = ad = std::min(ap, ad);
    x += ap * dx;
    y += ad * dy;
    z += ad * dz;
  }
  return res;
}

}  // namespace vng
