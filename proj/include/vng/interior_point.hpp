#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace vng {

/// minimize  c.x - sum_j w_j ln x_j   subject to  A x = b,  x >= 0,
/// with w >= 0. Variables with w_j > 0 stay strictly positive.
struct SeparableProgram {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd log_weight;
};

struct InteriorPointOptions {
  int max_iterations = 200;
  double tolerance = 1e-13;  // relative residuals and complementarity
  double step_fraction = 0.995;
};

struct InteriorPointResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // equality multipliers: grad = A^T y + z
  Eigen::VectorXd z;  // bound multipliers
  double objective = 0.0;
  double primal_residual = 0.0;  // ||Ax - b||_inf / (1 + ||b||_inf)
  double dual_residual = 0.0;    // ||grad - A^T y - z||_inf / (1 + ||grad||_inf)
  double complementarity = 0.0;  // x.z
  int iterations = 0;
  bool converged = false;
};

/// Mehrotra predictor-corrector on the normal equations, factored with a
/// sparse LDL^T.
InteriorPointResult solve_separable(const SeparableProgram& program, const InteriorPointOptions& options = {});

}  // namespace vng
