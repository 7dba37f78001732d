#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "mvrec/layout.hpp"

namespace mvrec {

// One recognition subproblem: reconstruct the object descriptor o from the
// rows of X (one feature vector per view) while jointly weighting views
// and feature modalities.
struct ProblemInstance {
  Eigen::MatrixXd X;      // n x d, rows are view feature vectors
  Eigen::VectorXd o;      // length d, one object descriptor
  ModalityLayout layout;  // block structure of the d feature dimensions

  ProblemInstance(Eigen::MatrixXd x, Eigen::VectorXd obj, ModalityLayout l);

  Eigen::Index views() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

// Strategy for the d x d feature-weight system. kAuto picks kDirect for
// small systems and kWoodbury when d is much larger than n (exploiting the
// diagonal-plus-low-rank structure). kGramCg caches the d x d Gram matrix
// and solves by preconditioned CG with one dense matvec per step, so its
// per-iteration cost scales with d^2; all three produce the same solution
// up to rounding.
enum class USolveMethod { kAuto, kDirect, kWoodbury, kGramCg };

struct SolverConfig {
  double lambda1 = 0.1;  // view-sparsity weight
  double lambda2 = 0.1;  // modality-sparsity weight
  double epsilon = 1e-8;  // reweighting smoothing floor
  double delta = 1e-10;   // numerical ridge on both linear systems
  double tol = 1e-6;      // relative convergence tolerance
  int max_iter = 100;
  USolveMethod u_method = USolveMethod::kAuto;

  void validate() const;  // throws ConfigError
};

struct SolverResult {
  Eigen::VectorXd w;  // view weights, length n
  Eigen::VectorXd u;  // feature weights, length d
  double objective = 0.0;  // exact (unsmoothed) objective at (w, u)
  std::vector<double> smoothed_trace;  // smoothed objective; [0] is the initial point
  int iterations = 0;
  bool converged = false;
};

// |X^T w - o|^2 + |X u - w|^2 + lambda1 |w|_1 + lambda2 sum_i |u^i|_2.
double objective(const ProblemInstance& inst, const Eigen::VectorXd& w,
                 const Eigen::VectorXd& u, double lambda1, double lambda2);

// Same with |w_i| -> sqrt(w_i^2 + eps^2) and |u^i|_2 -> sqrt(|u^i|^2 + eps^2),
// the surrogate whose monotone decrease the iteration guarantees.
double smoothed_objective(const ProblemInstance& inst, const Eigen::VectorXd& w,
                          const Eigen::VectorXd& u, double lambda1, double lambda2,
                          double eps);

// Analytic gradient of the smoothed objective.
void smoothed_gradient(const ProblemInstance& inst, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& u, double lambda1, double lambda2,
                       double eps, Eigen::VectorXd& grad_w, Eigen::VectorXd& grad_u);

// Diagonal of the view reweighting matrix: 1 / (2 sqrt(w_i^2 + eps^2)).
Eigen::VectorXd compute_dw(const Eigen::VectorXd& w, double eps);

// Per-block scalars of the modality reweighting matrix:
// 1 / (2 sqrt(|u^i|_2^2 + eps^2)), length m.
Eigen::VectorXd compute_du(const Eigen::VectorXd& u, const ModalityLayout& layout,
                           double eps);

// Solves (X X^T + I + lambda1 diag(dw) + delta I) w = X (o + u).
// dw already carries the 1/2 factor, so the effective penalty on w_i is
// lambda1 / (2 sqrt(w_i^2 + eps^2)), the exact majorizer step for the
// smoothed l1 term.
Eigen::VectorXd update_w(const ProblemInstance& inst, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& dw, double lambda1, double delta);

// Solves (X^T X + lambda2 Du + delta I) u = X^T w, where Du expands the
// per-block scalars du over their blocks. Singular when lambda2 = 0,
// delta = 0 and d > n; that case raises NumericalError advising delta > 0.
Eigen::VectorXd update_u(const ProblemInstance& inst, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& du, double lambda2, double delta,
                         USolveMethod method = USolveMethod::kAuto);

// w0 from the ridge-regularized view regression (X X^T + delta I) w0 = X o,
// then u0 = X^T (X X^T + delta I)^{-1} w0, the dual form of the
// ridge-regularized feature regression.
std::pair<Eigen::VectorXd, Eigen::VectorXd> init_weights(const ProblemInstance& inst,
                                                         double delta);

// Alternates reweighting and the two closed-form updates until either the
// largest per-coordinate (per-block for u) parameter change relative to the
// smoothing scale, or the relative smoothed-objective change, drops below
// tol, or max_iter is reached. Non-convergence is reported, not thrown.
SolverResult solve(const ProblemInstance& inst, const SolverConfig& cfg);

}  // namespace mvrec
