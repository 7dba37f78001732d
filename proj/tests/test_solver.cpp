#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mvrec/dataset.hpp"
#include "mvrec/errors.hpp"
#include "mvrec/rng.hpp"
#include "mvrec/solver.hpp"
#include "test_helpers.hpp"

using namespace mvrec;
using testutil::even_layout;
using testutil::random_instance;

namespace {

ProblemInstance tiny_two_block() {
  Eigen::MatrixXd X(1, 2);
  X << 1, 0;
  Eigen::VectorXd o(2);
  o << 1, 0;
  return ProblemInstance(X, o, even_layout(2, 2));
}

}  // namespace

TEST_CASE("objective at zero weights is the descriptor energy") {
  Rng rng(10);
  const auto inst = random_instance(rng, 4, 9, 3);
  const double f = objective(inst, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(9), 0.7, 0.3);
  CHECK(f == doctest::Approx(inst.o.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("objective vanishes on a planted exact fit") {
  const auto inst = tiny_two_block();
  Eigen::VectorXd w(1), u(2);
  w << 1;
  u << 1, 0;
  CHECK(objective(inst, w, u, 0, 0) == doctest::Approx(0.0));
  // With both penalties at 1: |w|_1 = 1 and the modality norm is 1 + 0.
  CHECK(objective(inst, w, u, 1, 1) == doctest::Approx(2.0));
}

TEST_CASE("objective rejects mismatched dimensions") {
  const auto inst = tiny_two_block();
  CHECK_THROWS_AS(objective(inst, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), 0, 0),
                  InvalidInputError);
}

TEST_CASE("smoothed objective approaches the exact one as eps vanishes") {
  Rng rng(11);
  const auto inst = random_instance(rng, 3, 8, 2);
  Eigen::VectorXd w(3), u(8);
  for (int i = 0; i < 3; ++i) w[i] = rng.normal();
  for (int i = 0; i < 8; ++i) u[i] = rng.normal();
  const double exact = objective(inst, w, u, 0.5, 0.5);
  const double smooth = smoothed_objective(inst, w, u, 0.5, 0.5, 1e-12);
  CHECK(std::abs(smooth - exact) < 1e-6);
  CHECK(smooth >= exact);
}

TEST_CASE("smoothed objective at zero weights adds one eps per view and block") {
  Rng rng(12);
  const auto inst = random_instance(rng, 2, 6, 1);
  const double eps = 1e-3;
  const double f =
      smoothed_objective(inst, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(6), 1, 1, eps);
  CHECK(f == doctest::Approx(inst.o.squaredNorm() + 2 * eps + eps).epsilon(1e-12));
}

TEST_CASE("smoothed objective is monotone in eps") {
  Rng rng(13);
  const auto inst = random_instance(rng, 3, 6, 2);
  Eigen::VectorXd w(3), u(6);
  for (int i = 0; i < 3; ++i) w[i] = rng.normal();
  for (int i = 0; i < 6; ++i) u[i] = rng.normal();
  CHECK(smoothed_objective(inst, w, u, 1, 1, 1e-3) >=
        smoothed_objective(inst, w, u, 1, 1, 1e-6));
}

TEST_CASE("compute_dw matches the reweighting formula") {
  Eigen::VectorXd w(2);
  w << 1, -1;
  const auto dw = compute_dw(w, 1e-12);
  CHECK(dw[0] == doctest::Approx(0.5));
  CHECK(dw[1] == doctest::Approx(0.5));

  Eigen::VectorXd zero(1);
  zero << 0;
  CHECK(compute_dw(zero, 1e-8)[0] == doctest::Approx(5e7));

  Rng rng(14);
  Eigen::VectorXd r(20);
  for (int i = 0; i < 20; ++i) r[i] = 10 * rng.normal();
  const auto dr = compute_dw(r, 1e-8);
  CHECK(dr.minCoeff() > 0.0);
  CHECK(dr.allFinite());
}

TEST_CASE("compute_du matches the per-block formula") {
  const ModalityLayout single({{"m0", 2}});
  Eigen::VectorXd u(2);
  u << 3, 4;
  CHECK(compute_du(u, single, 1e-9)[0] == doctest::Approx(0.1));

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(compute_du(zero, single, 1e-8)[0] == doctest::Approx(5e7));

  const ModalityLayout two({{"a", 2}, {"b", 2}});
  Eigen::VectorXd mirrored(4);
  mirrored << 1, 2, 2, 1;
  const auto du = compute_du(mirrored, two, 1e-8);
  CHECK(du[0] == doctest::Approx(du[1]));
}

TEST_CASE("update_w with identity views halves the descriptor") {
  const Eigen::Index n = 3;
  const ProblemInstance inst(Eigen::MatrixXd::Identity(n, n),
                             Eigen::VectorXd::LinSpaced(n, 1, 3), even_layout(n, 1));
  const auto w = update_w(inst, Eigen::VectorXd::Zero(n),
                          compute_dw(Eigen::VectorXd::Zero(n), 1e-8), 0.0, 0.0);
  CHECK((w - inst.o / 2).norm() < 1e-12);
}

TEST_CASE("update_w equals a dense direct solve of the same system") {
  Rng rng(15);
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = random_instance(rng, 5, 11, 2);
    Eigen::VectorXd u(11), wprev(5);
    for (int i = 0; i < 11; ++i) u[i] = rng.normal();
    for (int i = 0; i < 5; ++i) wprev[i] = rng.normal();
    const double lambda1 = 0.4;
    const double delta = 1e-10;
    const auto dw = compute_dw(wprev, 1e-8);
    const auto w = update_w(inst, u, dw, lambda1, delta);

    Eigen::MatrixXd A = inst.X * inst.X.transpose();
    A.diagonal().array() += 1.0 + delta;
    A.diagonal() += lambda1 * dw;
    const Eigen::VectorXd ref = Eigen::FullPivLU<Eigen::MatrixXd>(A).solve(
        inst.X * (inst.o + u));
    CHECK((w - ref).norm() / ref.norm() < 1e-10);
  }
}

TEST_CASE("update_w scalar case matches the closed formula") {
  Rng rng(16);
  Eigen::MatrixXd X(1, 3);
  Eigen::VectorXd o(3), u(3);
  for (int i = 0; i < 3; ++i) {
    X(0, i) = rng.normal();
    o[i] = rng.normal();
    u[i] = rng.normal();
  }
  const ProblemInstance inst(X, o, even_layout(3, 1));
  const double wprev = 0.3;
  const double lambda1 = 0.7;
  const double delta = 1e-10;
  const double eps = 1e-8;
  Eigen::VectorXd wp(1);
  wp << wprev;
  const auto w = update_w(inst, u, compute_dw(wp, eps), lambda1, delta);
  const double expected = X.row(0).dot(o + u) /
                          (X.row(0).squaredNorm() + 1.0 +
                           lambda1 / (2.0 * std::sqrt(wprev * wprev + eps * eps)) + delta);
  CHECK(w[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("update_u returns zero for a zero right-hand side") {
  Rng rng(17);
  const auto inst = random_instance(rng, 3, 9, 3);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(9);
  const auto u = update_u(inst, Eigen::VectorXd::Zero(3), compute_du(u0, inst.layout, 1e-8),
                          0.5, 1e-10);
  CHECK(u.norm() == doctest::Approx(0.0));
}

TEST_CASE("update_u with identity views and no penalty returns w") {
  const Eigen::Index n = 4;
  const ProblemInstance inst(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Ones(n),
                             even_layout(n, 2));
  Eigen::VectorXd w(n);
  w << 1, -2, 3, -4;
  const Eigen::VectorXd uprev = Eigen::VectorXd::Zero(n);
  const auto u = update_u(inst, w, compute_du(uprev, inst.layout, 1e-8), 0.0, 0.0);
  CHECK((u - w).norm() < 1e-12);
}

TEST_CASE("update_u strategies all match the dense direct solve") {
  Rng rng(18);
  const auto inst = random_instance(rng, 4, 14, 3);
  Eigen::VectorXd w(4), uprev(14);
  for (int i = 0; i < 4; ++i) w[i] = rng.normal();
  for (int i = 0; i < 14; ++i) uprev[i] = rng.normal();
  const double lambda2 = 0.3;
  const double delta = 1e-10;
  const auto du = compute_du(uprev, inst.layout, 1e-8);

  Eigen::MatrixXd A = inst.X.transpose() * inst.X;
  for (std::size_t b = 0; b < inst.layout.block_count(); ++b) {
    const auto& e = inst.layout.entry(b);
    A.diagonal().segment(e.offset, e.length).array() +=
        lambda2 * du[static_cast<Eigen::Index>(b)] + delta;
  }
  const Eigen::VectorXd ref =
      Eigen::FullPivLU<Eigen::MatrixXd>(A).solve(inst.X.transpose() * w);

  for (auto method : {USolveMethod::kDirect, USolveMethod::kWoodbury, USolveMethod::kGramCg}) {
    const auto u = update_u(inst, w, du, lambda2, delta, method);
    CHECK((u - ref).norm() / ref.norm() < 1e-10);
  }
}

TEST_CASE("update_u reports the singular unregularized case") {
  Rng rng(19);
  const auto inst = random_instance(rng, 2, 8, 2);
  const Eigen::VectorXd uprev = Eigen::VectorXd::Zero(8);
  Eigen::VectorXd w(2);
  w << 1, 1;
  CHECK_THROWS_AS(update_u(inst, w, compute_du(uprev, inst.layout, 1e-8), 0.0, 0.0),
                  NumericalError);
}

TEST_CASE("init_weights recovers projection coefficients for orthonormal rows") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 5);
  X(0, 0) = 1;
  X(1, 2) = 1;
  Eigen::VectorXd o(5);
  o << 0.3, 0.1, -0.7, 0.2, 0.9;
  const ProblemInstance inst(X, o, even_layout(5, 1));
  const auto [w0, u0] = init_weights(inst, 1e-12);
  CHECK((w0 - X * o).norm() < 1e-9);
}

TEST_CASE("init_weights vanishes when the descriptor is orthogonal to the views") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 4);
  X(0, 0) = 1;
  Eigen::VectorXd o(4);
  o << 0, 1, 1, 0;
  const ProblemInstance inst(X, o, even_layout(4, 1));
  const auto [w0, u0] = init_weights(inst, 1e-12);
  CHECK(std::abs(w0[0]) < 1e-9);
}

TEST_CASE("init_weights scalar case matches the normal equation") {
  Rng rng(20);
  Eigen::MatrixXd X(1, 6);
  Eigen::VectorXd o(6);
  for (int i = 0; i < 6; ++i) {
    X(0, i) = rng.normal();
    o[i] = rng.normal();
  }
  const double delta = 1e-4;
  const ProblemInstance inst(X, o, even_layout(6, 2));
  const auto [w0, u0] = init_weights(inst, delta);
  CHECK(w0[0] == doctest::Approx(X.row(0).dot(o) / (X.row(0).squaredNorm() + delta))
                     .epsilon(1e-10));
}

TEST_CASE("solve puts the largest view weight on a planted matching row") {
  Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index n = 5;
    const Eigen::Index d = 16;
    Eigen::VectorXd o(d);
    for (Eigen::Index i = 0; i < d; ++i) o[i] = rng.normal();
    o /= o.norm();
    Eigen::MatrixXd X(n, d);
    X.row(0) = o.transpose();
    for (Eigen::Index i = 1; i < n; ++i) {
      Eigen::VectorXd v(d);
      for (Eigen::Index j = 0; j < d; ++j) v[j] = rng.normal();
      v -= v.dot(o) * o;  // orthogonal noise rows
      X.row(i) = (v / v.norm()).transpose();
    }
    const ProblemInstance inst(X, o, even_layout(d, 2));
    SolverConfig cfg;
    cfg.lambda1 = cfg.lambda2 = 0.1;
    const auto res = solve(inst, cfg);
    Eigen::Index best = 0;
    res.w.cwiseAbs().maxCoeff(&best);
    CHECK(best == 0);
  }
}

TEST_CASE("solve without penalties reaches the joint fixed point") {
  Rng rng(22);
  const auto inst = random_instance(rng, 4, 10, 2);
  SolverConfig cfg;
  cfg.lambda1 = cfg.lambda2 = 0.0;
  cfg.delta = 1e-10;
  cfg.tol = 1e-10;
  cfg.max_iter = 5000;
  const auto res = solve(inst, cfg);
  // Stationarity of both quadratic subproblems at the solution.
  const Eigen::VectorXd rw =
      (inst.X * inst.X.transpose() + Eigen::MatrixXd::Identity(4, 4)) * res.w -
      inst.X * (inst.o + res.u);
  const Eigen::VectorXd ru = inst.X.transpose() * (inst.X * res.u - res.w);
  CHECK(rw.norm() < 1e-6);
  CHECK(ru.norm() < 1e-6);
}

TEST_CASE("smoothed objective trace is non-increasing across random instances") {
  Rng rng(23);
  const double lambdas[3] = {0.0, 0.1, 1.0};
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(9));
    const Eigen::Index d = 4 + static_cast<Eigen::Index>(rng.below(27));
    const int m = 1 + static_cast<int>(rng.below(3));
    const auto inst = random_instance(rng, n, d, std::min<int>(m, static_cast<int>(d)));
    SolverConfig cfg;
    cfg.lambda1 = lambdas[rng.below(3)];
    cfg.lambda2 = lambdas[rng.below(3)];
    const auto res = solve(inst, cfg);
    for (std::size_t t = 1; t < res.smoothed_trace.size(); ++t)
      CHECK(res.smoothed_trace[t] <= res.smoothed_trace[t - 1] + 1e-9);
  }
}

TEST_CASE("solve is equivariant under view permutation") {
  Rng rng(24);
  const auto inst = random_instance(rng, 6, 12, 3);
  SolverConfig cfg;
  cfg.lambda1 = cfg.lambda2 = 0.1;
  const auto base = solve(inst, cfg);

  std::vector<Eigen::Index> perm = {3, 0, 5, 1, 4, 2};
  Eigen::MatrixXd Xp(6, 12);
  for (Eigen::Index i = 0; i < 6; ++i) Xp.row(i) = inst.X.row(perm[i]);
  const ProblemInstance pinst(Xp, inst.o, inst.layout);
  const auto permuted = solve(pinst, cfg);

  for (Eigen::Index i = 0; i < 6; ++i)
    CHECK(permuted.w[i] == doctest::Approx(base.w[perm[i]]).epsilon(1e-6));
  CHECK((permuted.u - base.u).norm() < 1e-6 * (1 + base.u.norm()));
  CHECK(permuted.objective == doctest::Approx(base.objective).epsilon(1e-8));
}

TEST_CASE("the view penalty shrinks the active view fraction") {
  double active_free = 0;
  double active_reg = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    SyntheticSceneParams params;
    params.views = 6;
    params.occluded_views = 2;
    params.noise_sigma = 0.02;
    params.categories = 4;
    const auto scene = generate_synthetic_scene(params, 1000 + s);
    const ProblemInstance inst(scene.views.X,
                               scene.library.descriptors.col(0), scene.library.layout);
    auto frac_active = [&](double lambda1) {
      SolverConfig cfg;
      cfg.lambda1 = lambda1;
      cfg.lambda2 = 0.1;
      const auto res = solve(inst, cfg);
      const double thresh = 0.01 * res.w.cwiseAbs().maxCoeff();
      int active = 0;
      for (Eigen::Index i = 0; i < res.w.size(); ++i)
        if (std::abs(res.w[i]) > thresh) ++active;
      return static_cast<double>(active) / static_cast<double>(res.w.size());
    };
    active_free += frac_active(0.0);
    active_reg += frac_active(1.0);
  }
  CHECK(active_reg / seeds <= active_free / seeds);
}

// The objective-change stop can fire while near-zero view weights are still
// decaying through the smoothing scale, so the gradient bound is asserted at
// the iteration's limit point: the solve is extended with the same public
// updates until the per-coordinate parameter criterion alone fires.
TEST_CASE("the iteration's limit point is stationary for the smoothed objective") {
  Rng rng(25);
  for (double lambda : {0.1, 1.0}) {
    for (int rep = 0; rep < 6; ++rep) {
      const auto inst = random_instance(rng, 5, 14, 2);
      SolverConfig cfg;
      cfg.lambda1 = cfg.lambda2 = lambda;
      const auto res = solve(inst, cfg);

      Eigen::VectorXd w = res.w;
      Eigen::VectorXd u = res.u;
      const double eps = cfg.epsilon;
      for (int it = 0; it < 5000; ++it) {
        const auto dw = compute_dw(w, eps);
        const auto du = compute_du(u, inst.layout, eps);
        const auto w_next = update_w(inst, u, dw, cfg.lambda1, cfg.delta);
        const auto u_next = update_u(inst, w_next, du, cfg.lambda2, cfg.delta);
        double rel = 0;
        for (Eigen::Index i = 0; i < w.size(); ++i)
          rel = std::max(rel, std::abs(w_next[i] - w[i]) / std::hypot(w[i], eps));
        for (std::size_t b = 0; b < inst.layout.block_count(); ++b) {
          const auto& e = inst.layout.entry(b);
          rel = std::max(rel,
                         (u_next.segment(e.offset, e.length) - u.segment(e.offset, e.length))
                                 .norm() /
                             std::hypot(u.segment(e.offset, e.length).norm(), eps));
        }
        w = w_next;
        u = u_next;
        if (rel < cfg.tol) break;
      }

      Eigen::VectorXd gw, gu;
      smoothed_gradient(inst, w, u, cfg.lambda1, cfg.lambda2, eps, gw, gu);
      const double bound = 10 * cfg.tol * (1 + inst.X.norm());
      CHECK(gw.lpNorm<Eigen::Infinity>() <= bound);
      CHECK(gu.lpNorm<Eigen::Infinity>() <= bound);
    }
  }
}

TEST_CASE("analytic smoothed gradient matches central differences") {
  Rng rng(26);
  const auto inst = random_instance(rng, 4, 9, 3);
  const double l1 = 0.4;
  const double l2 = 0.8;
  const double eps = 1e-8;
  Eigen::VectorXd w(4), u(9);
  for (int i = 0; i < 4; ++i) w[i] = rng.normal() + (rng.normal() > 0 ? 0.5 : -0.5);
  for (int i = 0; i < 9; ++i) u[i] = rng.normal() + (rng.normal() > 0 ? 0.5 : -0.5);

  Eigen::VectorXd gw, gu;
  smoothed_gradient(inst, w, u, l1, l2, eps, gw, gu);

  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    const double fd = (smoothed_objective(inst, wp, u, l1, l2, eps) -
                       smoothed_objective(inst, wm, u, l1, l2, eps)) /
                      (2 * h);
    CHECK(gw[i] == doctest::Approx(fd).epsilon(1e-4));
  }
  for (int i = 0; i < 9; ++i) {
    Eigen::VectorXd up = u, um = u;
    up[i] += h;
    um[i] -= h;
    const double fd = (smoothed_objective(inst, w, up, l1, l2, eps) -
                       smoothed_objective(inst, w, um, l1, l2, eps)) /
                      (2 * h);
    CHECK(gu[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("hitting max_iter is reported, not thrown") {
  Rng rng(27);
  const auto inst = random_instance(rng, 5, 20, 2);
  SolverConfig cfg;
  cfg.tol = 1e-16;
  cfg.max_iter = 1;
  const auto res = solve(inst, cfg);
  CHECK(!res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.smoothed_trace.size() == 2);
}

TEST_CASE("solver strategies agree on the full iteration") {
  Rng rng(28);
  const auto inst = random_instance(rng, 4, 40, 2);
  SolverConfig cfg;
  cfg.lambda1 = cfg.lambda2 = 0.1;
  cfg.u_method = USolveMethod::kDirect;
  const auto a = solve(inst, cfg);
  cfg.u_method = USolveMethod::kWoodbury;
  const auto b = solve(inst, cfg);
  cfg.u_method = USolveMethod::kGramCg;
  const auto c = solve(inst, cfg);
  CHECK((a.w - b.w).norm() < 1e-8);
  CHECK((a.u - b.u).norm() < 1e-8);
  CHECK((a.w - c.w).norm() < 1e-8);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-10));
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.lambda1 = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.epsilon = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
