#include "mvrec/solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "mvrec/errors.hpp"

namespace mvrec {

namespace {

void check_dims(const ProblemInstance& inst, const Eigen::VectorXd& w,
                const Eigen::VectorXd& u) {
  if (w.size() != inst.views() || u.size() != inst.dim())
    throw InvalidInputError("solver: weight vector dimensions do not match instance");
}

// LDLT solve that insists on a positive-definite matrix.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const char* context) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
    throw NumericalError(std::string(context) +
                         ": system matrix is not positive definite; set delta > 0");
  return ldlt.solve(b);
}

// Per-coordinate diagonal lambda2 * du[block(j)] + delta.
Eigen::ArrayXd expand_diag(const Eigen::VectorXd& du, const ModalityLayout& layout,
                           double lambda2, double delta) {
  Eigen::ArrayXd dt(layout.dim());
  for (std::size_t i = 0; i < layout.block_count(); ++i) {
    const auto& e = layout.entry(i);
    dt.segment(e.offset, e.length)
        .setConstant(lambda2 * du[static_cast<Eigen::Index>(i)] + delta);
  }
  return dt;
}

USolveMethod resolve_u_method(USolveMethod m, Eigen::Index n, Eigen::Index d,
                              double lambda2, double delta) {
  if (m != USolveMethod::kAuto) return m;
  if (lambda2 == 0.0 && delta == 0.0) return USolveMethod::kDirect;
  if (d <= 3 * n || d <= 128) return USolveMethod::kDirect;
  return USolveMethod::kWoodbury;
}

Eigen::VectorXd u_solve_direct(const Eigen::MatrixXd& X, const Eigen::ArrayXd& dtilde,
                               const Eigen::VectorXd& b) {
  Eigen::MatrixXd A = X.transpose() * X;
  A.diagonal() += dtilde.matrix();
  return solve_spd(A, b, "update_u");
}

Eigen::VectorXd u_solve_woodbury(const Eigen::MatrixXd& X, const Eigen::ArrayXd& dtilde,
                                 const Eigen::VectorXd& b) {
  if (!(dtilde.minCoeff() > 0.0))
    throw NumericalError("update_u: diagonal term vanishes; set delta > 0");
  const Eigen::VectorXd binv = (b.array() / dtilde).matrix();
  const Eigen::MatrixXd Xdinv = X * dtilde.inverse().matrix().asDiagonal();
  Eigen::MatrixXd M = Xdinv * X.transpose();
  M.diagonal().array() += 1.0;
  const Eigen::VectorXd y = solve_spd(M, X * binv, "update_u (reduced system)");
  return binv - Xdinv.transpose() * y;
}

// Jacobi-preconditioned CG on (Gram + diag) u = b with the Gram matrix held
// dense. The preconditioned operator is identity plus a rank-n term, so the
// iteration terminates in about rank(X) + 1 steps independent of d.
Eigen::VectorXd u_solve_gram_cg(const Eigen::MatrixXd& gram_lower,
                                const Eigen::ArrayXd& dtilde, const Eigen::VectorXd& b,
                                Eigen::Index n) {
  if (!(dtilde.minCoeff() > 0.0))
    throw NumericalError("update_u: diagonal term vanishes; set delta > 0");
  const Eigen::Index d = b.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = (r.array() / dtilde).matrix();
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  const int max_steps = static_cast<int>(std::min<Eigen::Index>(d, n + 40));
  for (int it = 0; it < max_steps; ++it) {
    const Eigen::VectorXd Ap =
        gram_lower.selfadjointView<Eigen::Lower>() * p + (dtilde * p.array()).matrix();
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) throw NumericalError("update_u: CG lost positive definiteness");
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    if (r.norm() <= 1e-13 * bnorm) break;
    z = (r.array() / dtilde).matrix();
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  if (r.norm() > 1e-8 * bnorm) throw NumericalError("update_u: CG failed to converge");
  return x;
}

struct USolveContext {
  USolveMethod method = USolveMethod::kDirect;
  Eigen::MatrixXd gram;  // lower triangle of X^T X, kGramCg only

  USolveContext(const ProblemInstance& inst, USolveMethod requested, double lambda2,
                double delta) {
    method = resolve_u_method(requested, inst.views(), inst.dim(), lambda2, delta);
    if (method == USolveMethod::kGramCg) {
      gram = Eigen::MatrixXd::Zero(inst.dim(), inst.dim());
      gram.selfadjointView<Eigen::Lower>().rankUpdate(inst.X.transpose());
    }
  }
};

Eigen::VectorXd update_u_with(const ProblemInstance& inst, const Eigen::VectorXd& w,
                              const Eigen::VectorXd& du, double lambda2, double delta,
                              const USolveContext& ctx) {
  if (w.size() != inst.views())
    throw InvalidInputError("update_u: w length does not match instance");
  if (du.size() != static_cast<Eigen::Index>(inst.layout.block_count()))
    throw InvalidInputError("update_u: du length does not match modality count");
  if (!w.allFinite() || !du.allFinite())
    throw NumericalError("update_u: non-finite input");
  if (lambda2 == 0.0 && delta == 0.0 && inst.dim() > inst.views())
    throw NumericalError(
        "update_u: singular system (lambda2 = 0, delta = 0, d > n); set delta > 0");

  const Eigen::ArrayXd dtilde = expand_diag(du, inst.layout, lambda2, delta);
  const Eigen::VectorXd b = inst.X.transpose() * w;
  switch (ctx.method) {
    case USolveMethod::kWoodbury:
      return u_solve_woodbury(inst.X, dtilde, b);
    case USolveMethod::kGramCg:
      return u_solve_gram_cg(ctx.gram, dtilde, b, inst.views());
    default:
      return u_solve_direct(inst.X, dtilde, b);
  }
}

double modality_norm_smoothed(const Eigen::VectorXd& u, const ModalityLayout& layout,
                              double eps) {
  double s = 0.0;
  for (std::size_t i = 0; i < layout.block_count(); ++i)
    s += std::sqrt(layout.block(u, i).squaredNorm() + eps * eps);
  return s;
}

double modality_norm(const Eigen::VectorXd& u, const ModalityLayout& layout) {
  double s = 0.0;
  for (std::size_t i = 0; i < layout.block_count(); ++i) s += layout.block(u, i).norm();
  return s;
}

}  // namespace

ProblemInstance::ProblemInstance(Eigen::MatrixXd x, Eigen::VectorXd obj, ModalityLayout l)
    : X(std::move(x)), o(std::move(obj)), layout(std::move(l)) {
  if (X.rows() < 1 || X.cols() < 1)
    throw InvalidInputError("instance: X must be at least 1x1");
  if (o.size() != X.cols())
    throw InvalidInputError("instance: object descriptor length does not match X columns");
  if (layout.dim() != X.cols())
    throw InvalidInputError("instance: layout dimension does not match X columns");
  if (!X.allFinite() || !o.allFinite())
    throw InvalidInputError("instance: non-finite entries");
}

void SolverConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0)
    throw ConfigError("solver config: lambda1 and lambda2 must be nonnegative");
  if (!(epsilon > 0)) throw ConfigError("solver config: epsilon must be positive");
  if (delta < 0) throw ConfigError("solver config: delta must be nonnegative");
  if (!(tol > 0)) throw ConfigError("solver config: tol must be positive");
  if (max_iter < 1) throw ConfigError("solver config: max_iter must be >= 1");
}

double objective(const ProblemInstance& inst, const Eigen::VectorXd& w,
                 const Eigen::VectorXd& u, double lambda1, double lambda2) {
  check_dims(inst, w, u);
  const double fit = (inst.X.transpose() * w - inst.o).squaredNorm();
  const double coupling = (inst.X * u - w).squaredNorm();
  return fit + coupling + lambda1 * w.lpNorm<1>() + lambda2 * modality_norm(u, inst.layout);
}

double smoothed_objective(const ProblemInstance& inst, const Eigen::VectorXd& w,
                          const Eigen::VectorXd& u, double lambda1, double lambda2,
                          double eps) {
  check_dims(inst, w, u);
  if (!(eps > 0)) throw InvalidInputError("smoothed objective: eps must be positive");
  const double fit = (inst.X.transpose() * w - inst.o).squaredNorm();
  const double coupling = (inst.X * u - w).squaredNorm();
  const double w_term = (w.array().square() + eps * eps).sqrt().sum();
  return fit + coupling + lambda1 * w_term +
         lambda2 * modality_norm_smoothed(u, inst.layout, eps);
}

void smoothed_gradient(const ProblemInstance& inst, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& u, double lambda1, double lambda2,
                       double eps, Eigen::VectorXd& grad_w, Eigen::VectorXd& grad_u) {
  check_dims(inst, w, u);
  if (!(eps > 0)) throw InvalidInputError("smoothed gradient: eps must be positive");
  const Eigen::VectorXd fit_res = inst.X.transpose() * w - inst.o;
  const Eigen::VectorXd coupling_res = inst.X * u - w;
  grad_w = 2.0 * (inst.X * fit_res) - 2.0 * coupling_res +
           lambda1 * (w.array() / (w.array().square() + eps * eps).sqrt()).matrix();
  grad_u = 2.0 * (inst.X.transpose() * coupling_res);
  for (std::size_t i = 0; i < inst.layout.block_count(); ++i) {
    const auto& e = inst.layout.entry(i);
    const double denom = std::sqrt(u.segment(e.offset, e.length).squaredNorm() + eps * eps);
    grad_u.segment(e.offset, e.length) += (lambda2 / denom) * u.segment(e.offset, e.length);
  }
}

Eigen::VectorXd compute_dw(const Eigen::VectorXd& w, double eps) {
  if (!(eps > 0)) throw InvalidInputError("compute_dw: eps must be positive");
  return (0.5 / (w.array().square() + eps * eps).sqrt()).matrix();
}

Eigen::VectorXd compute_du(const Eigen::VectorXd& u, const ModalityLayout& layout,
                           double eps) {
  if (!(eps > 0)) throw InvalidInputError("compute_du: eps must be positive");
  if (u.size() != layout.dim())
    throw InvalidInputError("compute_du: u length does not match layout");
  Eigen::VectorXd du(static_cast<Eigen::Index>(layout.block_count()));
  for (std::size_t i = 0; i < layout.block_count(); ++i)
    du[static_cast<Eigen::Index>(i)] =
        0.5 / std::sqrt(layout.block(u, i).squaredNorm() + eps * eps);
  return du;
}

Eigen::VectorXd update_w(const ProblemInstance& inst, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& dw, double lambda1, double delta) {
  check_dims(inst, dw, u);
  if (!u.allFinite() || !dw.allFinite())
    throw NumericalError("update_w: non-finite input");
  Eigen::MatrixXd A = inst.X * inst.X.transpose();
  A.diagonal().array() += 1.0 + delta;
  A.diagonal() += lambda1 * dw;
  return solve_spd(A, inst.X * (inst.o + u), "update_w");
}

Eigen::VectorXd update_u(const ProblemInstance& inst, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& du, double lambda2, double delta,
                         USolveMethod method) {
  const USolveContext ctx(inst, method, lambda2, delta);
  return update_u_with(inst, w, du, lambda2, delta, ctx);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> init_weights(const ProblemInstance& inst,
                                                         double delta) {
  Eigen::MatrixXd A = inst.X * inst.X.transpose();
  A.diagonal().array() += delta;
  const Eigen::VectorXd w0 = solve_spd(A, inst.X * inst.o, "init_weights");
  // u0 = (X^T X + delta I)^{-1} X^T w0 evaluated through the n x n dual
  // system; the two forms are algebraically identical.
  const Eigen::VectorXd u0 = inst.X.transpose() * solve_spd(A, w0, "init_weights");
  return {w0, u0};
}

SolverResult solve(const ProblemInstance& inst, const SolverConfig& cfg) {
  cfg.validate();
  const USolveContext ctx(inst, cfg.u_method, cfg.lambda2, cfg.delta);

  // The n x n system matrix shares this base across iterations.
  Eigen::MatrixXd xxt = inst.X * inst.X.transpose();
  const Eigen::VectorXd xo = inst.X * inst.o;

  auto [w, u] = init_weights(inst, cfg.delta);

  SolverResult result;
  result.smoothed_trace.reserve(static_cast<std::size_t>(cfg.max_iter) + 1);
  double f_prev = smoothed_objective(inst, w, u, cfg.lambda1, cfg.lambda2, cfg.epsilon);
  result.smoothed_trace.push_back(f_prev);

  for (int it = 0; it < cfg.max_iter; ++it) {
    const Eigen::VectorXd dw = compute_dw(w, cfg.epsilon);
    const Eigen::VectorXd du = compute_du(u, inst.layout, cfg.epsilon);

    Eigen::MatrixXd A = xxt;
    A.diagonal().array() += 1.0 + cfg.delta;
    A.diagonal() += cfg.lambda1 * dw;
    const Eigen::VectorXd w_next = solve_spd(A, xo + inst.X * u, "update_w");
    const Eigen::VectorXd u_next =
        update_u_with(inst, w_next, du, cfg.lambda2, cfg.delta, ctx);

    // Largest per-coordinate (per-block for u) change, relative to the
    // smoothing scale; a stop on this measure certifies stationarity of
    // the smoothed objective down at the epsilon floor.
    double rel_w = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      rel_w = std::max(rel_w, std::abs(w_next[i] - w[i]) /
                                  std::sqrt(w[i] * w[i] + cfg.epsilon * cfg.epsilon));
    double rel_u = 0.0;
    for (std::size_t b = 0; b < inst.layout.block_count(); ++b) {
      const auto& e = inst.layout.entry(b);
      rel_u = std::max(rel_u, (u_next.segment(e.offset, e.length) -
                               u.segment(e.offset, e.length))
                                  .norm() /
                                  std::sqrt(u.segment(e.offset, e.length).squaredNorm() +
                                            cfg.epsilon * cfg.epsilon));
    }
    w = w_next;
    u = u_next;
    result.iterations = it + 1;

    const double f = smoothed_objective(inst, w, u, cfg.lambda1, cfg.lambda2, cfg.epsilon);
    result.smoothed_trace.push_back(f);
    const double rel_f = std::abs(f - f_prev) / std::max(std::abs(f_prev), 1e-30);
    f_prev = f;

    if (std::max(rel_w, rel_u) < cfg.tol || rel_f < cfg.tol) {
      result.converged = true;
      break;
    }
  }

  result.w = std::move(w);
  result.u = std::move(u);
  result.objective = objective(inst, result.w, result.u, cfg.lambda1, cfg.lambda2);
  return result;
}

}  // namespace mvrec
