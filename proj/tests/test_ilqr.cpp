#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "tracker/ilqr.hpp"
#include "tracker/verify.hpp"

using namespace tracker;

namespace {

std::vector<Eigen::VectorXd> constant_controls(int count, int m, double value) {
  return std::vector<Eigen::VectorXd>(count,
                                      Eigen::VectorXd::Constant(m, value));
}

// Rolls the exact affine policy u = K x + d through the affine dynamics and
// accumulates the cost by plain summation — an accounting route independent
// of the value recursion that produced the policy.
double policy_rollout_cost(const LqProblem& p, const LqSolution& sol) {
  Eigen::VectorXd x = p.x0;
  double cost = 0.0;
  for (int i = 0; i < p.N - 1; ++i) {
    const Eigen::VectorXd u = sol.K[i] * x + sol.d[i];
    cost += x.dot(p.Q * x) + u.dot(p.R * u) + p.q.dot(x) + p.r.dot(u);
    x = p.A * x + p.B * u + p.c;
  }
  cost += x.dot(p.Qf * x) + p.qf.dot(x);
  return cost;
}

std::vector<Eigen::VectorXd> policy_controls(const LqProblem& p,
                                             const LqSolution& sol) {
  std::vector<Eigen::VectorXd> controls;
  Eigen::VectorXd x = p.x0;
  for (int i = 0; i < p.N - 1; ++i) {
    controls.push_back(sol.K[i] * x + sol.d[i]);
    x = p.A * x + p.B * controls.back() + p.c;
  }
  return controls;
}

double stacked_cost(const OcProblem& oc, const Eigen::VectorXd& x0,
                    const Eigen::VectorXd& z) {
  std::vector<Eigen::VectorXd> controls;
  for (int i = 0; i < oc.N - 1; ++i) {
    controls.push_back(z.segment(i * oc.m, oc.m));
  }
  return total_cost(oc, rollout(oc, x0, controls));
}

double max_rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("value recursion agrees with direct minimization of the stacked cost") {
  const LqProblem p = make_random_lq(2, 1, 4, 5);
  const LqSolution sol = solve_lq_riccati(p);
  const OcProblem oc = lq_to_oc(p);

  // The objective is an exact quadratic in the three stacked controls, so
  // finite differences recover its gradient and Hessian to roundoff and one
  // linear solve lands on the unconstrained optimum.
  const int dim = (p.N - 1) * 1;
  const double h = 1e-2;
  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd grad(dim);
  Eigen::MatrixXd hess(dim, dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd ei = Eigen::VectorXd::Zero(dim);
    ei[i] = h;
    grad[i] = (stacked_cost(oc, p.x0, z0 + ei) -
               stacked_cost(oc, p.x0, z0 - ei)) /
              (2.0 * h);
    for (int j = 0; j < dim; ++j) {
      Eigen::VectorXd ej = Eigen::VectorXd::Zero(dim);
      ej[j] = h;
      hess(i, j) = (stacked_cost(oc, p.x0, z0 + ei + ej) -
                    stacked_cost(oc, p.x0, z0 + ei - ej) -
                    stacked_cost(oc, p.x0, z0 - ei + ej) +
                    stacked_cost(oc, p.x0, z0 - ei - ej)) /
                   (4.0 * h * h);
    }
  }
  const Eigen::VectorXd z_star = hess.ldlt().solve(-grad);
  const double direct = stacked_cost(oc, p.x0, z_star);

  CHECK(sol.optimal_cost == doctest::Approx(direct).epsilon(1e-8));
  // The policy rollout re-derives the same number by plain accumulation.
  CHECK(policy_rollout_cost(p, sol) ==
        doctest::Approx(sol.optimal_cost).epsilon(1e-10));
}

TEST_CASE("backward pass reproduces the optimal linear-quadratic feedback") {
  const LqProblem p = make_random_lq(9, 3, 40, 42);
  const LqSolution lq = solve_lq_riccati(p);
  const OcProblem oc = lq_to_oc(p);

  // On the optimal trajectory the gradient vanishes, so the feedforward must
  // vanish and the feedback must equal the exact policy gain stage by stage.
  const NominalTrajectory traj = rollout(oc, p.x0, policy_controls(p, lq));
  GainSchedule gains;
  double d1 = 0.0, d2 = 0.0;
  REQUIRE(backward_pass(oc, traj, 0.0, gains, d1, d2));

  double worst_K = 0.0, worst_k = 0.0;
  for (int i = 0; i < p.N - 1; ++i) {
    worst_K = std::max(worst_K, max_rel_err(gains.K[i], lq.K[i]));
    worst_k = std::max(worst_k, gains.k[i].cwiseAbs().maxCoeff());
  }
  CHECK(worst_K < 1e-8);
  CHECK(worst_k < 1e-8);
  CHECK(std::abs(d1) < 1e-12);
}

TEST_CASE("solver reaches the riccati optimum from arbitrary controls in two iterations") {
  const LqProblem p = make_random_lq(9, 3, 40, 42);
  const LqSolution lq = solve_lq_riccati(p);
  const OcProblem oc = lq_to_oc(p);

  const auto t0 = std::chrono::steady_clock::now();
  const IlqrSolution sol =
      solve(oc, p.x0, constant_controls(p.N - 1, 3, 0.25), SolverConfig());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  CHECK(sol.converged);
  CHECK(sol.iterations <= 2);
  CHECK(std::abs(sol.cost - lq.optimal_cost) <=
        1e-8 * std::max(1.0, std::abs(lq.optimal_cost)));
  for (int i = 0; i < p.N - 1; ++i) {
    CHECK(max_rel_err(sol.gains.K[i], lq.K[i]) < 1e-8);
  }
  CHECK(seconds < 1.0);
}

TEST_CASE("feedforward shrinks in proportion to heavy regularization") {
  // Three random problems built so the control Jacobian has singular values
  // at least one: f_u = [I; G] gives f_u' f_u = I + G'G. The regularized
  // control Hessian then dominates mu * I and the feedforward obeys
  // ||k|| <= ||Q_u|| / mu up to the cost curvature's positive contribution.
  for (const std::uint64_t seed : {11u, 12u, 13u}) {
    LqProblem p = make_random_lq(5, 2, 12, seed);
    p.B.topRows(2) = Eigen::MatrixXd::Identity(2, 2);
    const OcProblem oc = lq_to_oc(p);
    const NominalTrajectory traj =
        rollout(oc, p.x0, constant_controls(p.N - 1, 2, 0.4));

    const double mu = 1e9;
    GainSchedule gains;
    double d1 = 0.0, d2 = 0.0;
    REQUIRE(backward_pass(oc, traj, mu, gains, d1, d2));

    // Independent replica of the regularized recursion, kept only to expose
    // the per-stage gradient this pass actually used.
    Eigen::VectorXd V_x;
    Eigen::MatrixXd V_xx;
    oc.final_cost_derivs(traj.X[p.N - 1], V_x, V_xx);
    std::vector<Eigen::VectorXd> q_u(p.N - 1);
    for (int i = p.N - 2; i >= 0; --i) {
      Eigen::MatrixXd f_x, f_u;
      oc.dynamics_jacobians(traj.X[i], traj.U[i], i, f_x, f_u);
      Eigen::VectorXd l_x, l_u;
      Eigen::MatrixXd l_xx, l_uu, l_ux;
      oc.stage_cost_derivs(traj.X[i], traj.U[i], i, l_x, l_u, l_xx, l_uu,
                           l_ux);
      const Eigen::VectorXd Q_u = l_u + f_u.transpose() * V_x;
      const Eigen::VectorXd Q_x = l_x + f_x.transpose() * V_x;
      const Eigen::MatrixXd Q_uu = l_uu + f_u.transpose() * V_xx * f_u;
      const Eigen::MatrixXd Q_ux = l_ux + f_u.transpose() * V_xx * f_x;
      const Eigen::MatrixXd Q_xx = l_xx + f_x.transpose() * V_xx * f_x;
      q_u[i] = Q_u;
      const Eigen::MatrixXd& K = gains.K[i];
      const Eigen::VectorXd& k = gains.k[i];
      V_x = Q_x + K.transpose() * (Q_uu * k) + K.transpose() * Q_u +
            Q_ux.transpose() * k;
      const Eigen::MatrixXd Vn = Q_xx + K.transpose() * Q_uu * K +
                                 K.transpose() * Q_ux + Q_ux.transpose() * K;
      V_xx = 0.5 * (Vn + Vn.transpose());
    }
    for (int i = 0; i < p.N - 1; ++i) {
      CHECK(gains.k[i].norm() <= q_u[i].norm() / mu * 1.01);
    }
  }
}

TEST_CASE("zero gains reproduce the input trajectory bit for bit") {
  const LqProblem p = make_random_lq(4, 2, 10, 3);
  const OcProblem oc = lq_to_oc(p);
  const NominalTrajectory traj =
      rollout(oc, p.x0, constant_controls(p.N - 1, 2, -0.3));

  GainSchedule zero;
  zero.k.assign(p.N - 1, Eigen::VectorXd::Zero(2));
  zero.K.assign(p.N - 1, Eigen::MatrixXd::Zero(2, 4));
  const auto result = forward_pass(oc, traj, zero, 0.7);
  REQUIRE(result.has_value());
  for (int i = 0; i < p.N - 1; ++i) {
    CHECK((result->first.U[i] - traj.U[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  for (int i = 0; i < p.N; ++i) {
    CHECK((result->first.X[i] - traj.X[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(result->second == total_cost(oc, traj));
}

TEST_CASE("controls clip to the box before propagation") {
  // Scalar system with pedal-style bounds: a candidate of 1.4 must be
  // applied as exactly 1.0 and that clipped value must drive the state.
  OcProblem oc;
  oc.n = 1;
  oc.m = 1;
  oc.N = 3;
  oc.dynamics = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    return Eigen::VectorXd::Constant(1, x[0] + 2.0 * u[0]);
  };
  oc.dynamics_jacobians = [](const Eigen::VectorXd&, const Eigen::VectorXd&,
                             int, Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
    f_x = Eigen::MatrixXd::Constant(1, 1, 1.0);
    f_u = Eigen::MatrixXd::Constant(1, 1, 2.0);
  };
  oc.stage_cost = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    return x[0] * x[0] + u[0] * u[0];
  };
  oc.stage_cost_derivs = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            int, Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                            Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                            Eigen::MatrixXd& l_ux) {
    l_x = 2.0 * x;
    l_u = 2.0 * u;
    l_xx = Eigen::MatrixXd::Constant(1, 1, 2.0);
    l_uu = Eigen::MatrixXd::Constant(1, 1, 2.0);
    l_ux = Eigen::MatrixXd::Zero(1, 1);
  };
  oc.final_cost = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  oc.final_cost_derivs = [](const Eigen::VectorXd& x, Eigen::VectorXd& l_x,
                            Eigen::MatrixXd& l_xx) {
    l_x = 2.0 * x;
    l_xx = Eigen::MatrixXd::Constant(1, 1, 2.0);
  };
  oc.u_min = Eigen::VectorXd::Constant(1, 0.0);
  oc.u_max = Eigen::VectorXd::Constant(1, 1.0);

  const NominalTrajectory traj =
      rollout(oc, Eigen::VectorXd::Constant(1, 0.5),
              constant_controls(2, 1, 0.9));
  GainSchedule gains;
  gains.k.assign(2, Eigen::VectorXd::Constant(1, 0.5));  // 0.9 + 0.5 = 1.4
  gains.K.assign(2, Eigen::MatrixXd::Zero(1, 1));
  const auto result = forward_pass(oc, traj, gains, 1.0);
  REQUIRE(result.has_value());
  CHECK(result->first.U[0][0] == 1.0);
  CHECK(result->first.X[1][0] == 0.5 + 2.0 * 1.0);

  // Rollout clips on entry the same way.
  const NominalTrajectory clipped =
      rollout(oc, Eigen::VectorXd::Constant(1, 0.5),
              constant_controls(2, 1, 1.4));
  CHECK(clipped.U[0][0] == 1.0);
}

TEST_CASE("line search prediction is exact on a quadratic objective") {
  const LqProblem p = make_random_lq(6, 2, 15, 21);
  const OcProblem oc = lq_to_oc(p);
  const NominalTrajectory traj =
      rollout(oc, p.x0, constant_controls(p.N - 1, 2, 0.0));
  const double base = total_cost(oc, traj);

  GainSchedule gains;
  double d1 = 0.0, d2 = 0.0;
  REQUIRE(backward_pass(oc, traj, 0.0, gains, d1, d2));

  // With affine dynamics and quadratic costs the cost along the update
  // direction is exactly quadratic in alpha, so the predicted change
  // alpha*d1 + alpha^2*d2 matches the rollout to roundoff.
  for (const double alpha : {1.0, 0.5, 0.25}) {
    const auto result = forward_pass(oc, traj, gains, alpha);
    REQUIRE(result.has_value());
    const double actual = result->second - base;
    const double predicted = alpha * d1 + alpha * alpha * d2;
    CHECK(actual ==
          doctest::Approx(predicted).epsilon(1e-9).scale(std::abs(base)));
  }

  // The full step solves the quadratic subproblem: half steps cannot beat it.
  const double full = forward_pass(oc, traj, gains, 1.0)->second;
  const double half = forward_pass(oc, traj, gains, 0.5)->second;
  CHECK(full < base);
  CHECK(half >= full);
  // Gauss-Newton geometry of the exact quadratic: d2 = -d1/2.
  CHECK(d2 == doctest::Approx(-0.5 * d1).epsilon(1e-10));
}

TEST_CASE("already optimal controls converge without motion") {
  const LqProblem p = make_random_lq(5, 2, 18, 8);
  const LqSolution lq = solve_lq_riccati(p);
  const OcProblem oc = lq_to_oc(p);

  const IlqrSolution sol =
      solve(oc, p.x0, policy_controls(p, lq), SolverConfig());
  CHECK(sol.converged);
  CHECK(sol.iterations <= 1);
  CHECK(std::abs(sol.cost - lq.optimal_cost) <=
        1e-12 * std::max(1.0, std::abs(lq.optimal_cost)));
  CHECK(sol.cost_history.size() == 1);
}

TEST_CASE("solver beats fifty thousand random rollouts on a unicycle") {
  OcProblem oc;
  oc.n = 3;
  oc.m = 2;
  oc.N = 25;
  const double dt = 0.3;
  const Eigen::Vector3d target(2.0, 1.0, M_PI / 2.0);
  oc.dynamics = [dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    Eigen::VectorXd next(3);
    next[0] = x[0] + u[0] * std::cos(x[2]) * dt;
    next[1] = x[1] + u[0] * std::sin(x[2]) * dt;
    next[2] = x[2] + u[1] * dt;
    return next;
  };
  oc.dynamics_jacobians = [dt](const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u, int,
                               Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
    f_x = Eigen::MatrixXd::Identity(3, 3);
    f_x(0, 2) = -u[0] * std::sin(x[2]) * dt;
    f_x(1, 2) = u[0] * std::cos(x[2]) * dt;
    f_u = Eigen::MatrixXd::Zero(3, 2);
    f_u(0, 0) = std::cos(x[2]) * dt;
    f_u(1, 0) = std::sin(x[2]) * dt;
    f_u(2, 1) = dt;
  };
  oc.stage_cost = [target](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           int) {
    return 0.05 * (x - target).squaredNorm() + 0.05 * u.squaredNorm();
  };
  oc.stage_cost_derivs = [target](const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u, int,
                                  Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                                  Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                                  Eigen::MatrixXd& l_ux) {
    l_x = 0.1 * (x - target);
    l_u = 0.1 * u;
    l_xx = 0.1 * Eigen::MatrixXd::Identity(3, 3);
    l_uu = 0.1 * Eigen::MatrixXd::Identity(2, 2);
    l_ux = Eigen::MatrixXd::Zero(2, 3);
  };
  oc.final_cost = [target](const Eigen::VectorXd& x) {
    return 10.0 * (x - target).squaredNorm();
  };
  oc.final_cost_derivs = [target](const Eigen::VectorXd& x,
                                  Eigen::VectorXd& l_x, Eigen::MatrixXd& l_xx) {
    l_x = 20.0 * (x - target);
    l_xx = 20.0 * Eigen::MatrixXd::Identity(3, 3);
  };
  oc.u_min = Eigen::Vector2d(-1.0, -1.5);
  oc.u_max = Eigen::Vector2d(2.0, 1.5);

  const Eigen::Vector3d x0(0.0, 0.0, 0.0);
  SolverConfig config;
  config.max_iterations = 200;
  const IlqrSolution sol = solve(oc, x0, constant_controls(24, 2, 0.0), config);

  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> v_dist(-1.0, 2.0);
  std::uniform_real_distribution<double> w_dist(-1.5, 1.5);
  double best_random = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> controls(24);
  for (int trial = 0; trial < 50000; ++trial) {
    for (auto& u : controls) u = Eigen::Vector2d(v_dist(rng), w_dist(rng));
    best_random =
        std::min(best_random, total_cost(oc, rollout(oc, x0, controls)));
  }
  CHECK(sol.cost <= best_random);
  CHECK(sol.converged);
}

TEST_CASE("cost history is monotone and controls stay in the box") {
  LqProblem p = make_random_lq(6, 2, 20, 77);
  p.x0 *= 3.0;  // push the unconstrained optimum outside the box
  const OcProblem oc = lq_to_oc(p, 0.3);

  const IlqrSolution sol =
      solve(oc, p.x0, constant_controls(p.N - 1, 2, 0.0), SolverConfig());
  REQUIRE(sol.cost_history.size() >= 2);
  for (std::size_t i = 1; i < sol.cost_history.size(); ++i) {
    CHECK(sol.cost_history[i] <= sol.cost_history[i - 1]);
  }
  bool some_clipped = false;
  for (const auto& u : sol.trajectory.U) {
    CHECK((u.array() >= oc.u_min.array()).all());
    CHECK((u.array() <= oc.u_max.array()).all());
    some_clipped =
        some_clipped || (u.array() == oc.u_min.array()).any() ||
        (u.array() == oc.u_max.array()).any();
  }
  CHECK(some_clipped);
  // Dynamic consistency through the same code path, bit for bit.
  for (int i = 0; i < p.N - 1; ++i) {
    const Eigen::VectorXd re =
        oc.dynamics(sol.trajectory.X[i], sol.trajectory.U[i], i);
    CHECK((re - sol.trajectory.X[i + 1]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("indefinite stage cost triggers regularization retries") {
  // Negative control curvature makes the unregularized Hessian indefinite at
  // every stage; the box keeps the objective bounded.
  OcProblem oc;
  oc.n = 2;
  oc.m = 2;
  oc.N = 6;
  const Eigen::Matrix2d A = 0.9 * Eigen::Matrix2d::Identity();
  oc.dynamics = [A](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    return Eigen::VectorXd(A * x + u);
  };
  oc.dynamics_jacobians = [A](const Eigen::VectorXd&, const Eigen::VectorXd&,
                              int, Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
    f_x = A;
    f_u = Eigen::Matrix2d::Identity();
  };
  oc.stage_cost = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    return x.squaredNorm() - u.squaredNorm();
  };
  oc.stage_cost_derivs = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            int, Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                            Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                            Eigen::MatrixXd& l_ux) {
    l_x = 2.0 * x;
    l_u = -2.0 * u;
    l_xx = 2.0 * Eigen::Matrix2d::Identity();
    l_uu = -2.0 * Eigen::Matrix2d::Identity();
    l_ux = Eigen::MatrixXd::Zero(2, 2);
  };
  oc.final_cost = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  oc.final_cost_derivs = [](const Eigen::VectorXd& x, Eigen::VectorXd& l_x,
                            Eigen::MatrixXd& l_xx) {
    l_x = 2.0 * x;
    l_xx = 2.0 * Eigen::Matrix2d::Identity();
  };
  oc.u_min = Eigen::Vector2d(-1.0, -1.0);
  oc.u_max = Eigen::Vector2d(1.0, 1.0);

  const Eigen::Vector2d x0(1.0, -0.5);
  const NominalTrajectory traj = rollout(oc, x0, constant_controls(5, 2, 0.0));
  GainSchedule gains;
  double d1 = 0.0, d2 = 0.0;
  CHECK_FALSE(backward_pass(oc, traj, 0.0, gains, d1, d2));
  CHECK(backward_pass(oc, traj, 50.0, gains, d1, d2));

  const IlqrSolution sol =
      solve(oc, x0, constant_controls(5, 2, 0.0), SolverConfig());
  CHECK(std::isfinite(sol.cost));
  CHECK(sol.cost <= total_cost(oc, traj));
  for (const auto& u : sol.trajectory.U) {
    CHECK((u.array() >= -1.0).all());
    CHECK((u.array() <= 1.0).all());
  }
}

TEST_CASE("persistent factorization failure returns best effort") {
  // The control never enters the dynamics, so no amount of regularization
  // can cure the negative control curvature.
  OcProblem oc;
  oc.n = 1;
  oc.m = 1;
  oc.N = 4;
  oc.dynamics = [](const Eigen::VectorXd& x, const Eigen::VectorXd&, int) {
    return Eigen::VectorXd::Constant(1, 0.5 * x[0]);
  };
  oc.dynamics_jacobians = [](const Eigen::VectorXd&, const Eigen::VectorXd&,
                             int, Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
    f_x = Eigen::MatrixXd::Constant(1, 1, 0.5);
    f_u = Eigen::MatrixXd::Zero(1, 1);
  };
  oc.stage_cost = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    return x[0] * x[0] - u[0] * u[0];
  };
  oc.stage_cost_derivs = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            int, Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                            Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                            Eigen::MatrixXd& l_ux) {
    l_x = 2.0 * x;
    l_u = -2.0 * u;
    l_xx = Eigen::MatrixXd::Constant(1, 1, 2.0);
    l_uu = Eigen::MatrixXd::Constant(1, 1, -2.0);
    l_ux = Eigen::MatrixXd::Zero(1, 1);
  };
  oc.final_cost = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  oc.final_cost_derivs = [](const Eigen::VectorXd& x, Eigen::VectorXd& l_x,
                            Eigen::MatrixXd& l_xx) {
    l_x = 2.0 * x;
    l_xx = Eigen::MatrixXd::Constant(1, 1, 2.0);
  };
  oc.u_min = Eigen::VectorXd::Constant(1, -1.0);
  oc.u_max = Eigen::VectorXd::Constant(1, 1.0);

  SolverConfig config;
  config.mu_max = 1e3;
  const IlqrSolution sol = solve(oc, Eigen::VectorXd::Constant(1, 1.0),
                                 constant_controls(3, 1, 0.0), config);
  CHECK_FALSE(sol.converged);
  CHECK(sol.cost_history.size() == 1);
  CHECK(sol.gains.k.empty());
  CHECK(std::isfinite(sol.cost));
}

TEST_CASE("solver trace reports iterations as json lines") {
  const LqProblem p = make_random_lq(4, 2, 12, 31);
  const OcProblem oc = lq_to_oc(p);
  std::ostringstream trace;
  SolverConfig config;
  config.trace = &trace;
  const IlqrSolution sol =
      solve(oc, p.x0, constant_controls(p.N - 1, 2, 0.5), config);
  REQUIRE(sol.converged);

  std::istringstream lines(trace.str());
  std::string line;
  int count = 0;
  int last_iteration = 0;
  while (std::getline(lines, line)) {
    const nlohmann::json entry = nlohmann::json::parse(line);
    REQUIRE(entry.contains("iteration"));
    REQUIRE(entry.contains("mu"));
    REQUIRE(entry.contains("alpha"));
    REQUIRE(entry.contains("cost"));
    CHECK(entry["iteration"].get<int>() > last_iteration);
    last_iteration = entry["iteration"].get<int>();
    ++count;
  }
  CHECK(count == sol.iterations);
  CHECK(count >= 2);
}

TEST_CASE("malformed problems are rejected") {
  const LqProblem p = make_random_lq(3, 2, 8, 1);
  OcProblem oc = lq_to_oc(p);
  oc.N = 1;
  CHECK_THROWS_AS(oc.validate(), std::invalid_argument);
  oc = lq_to_oc(p);
  oc.u_min = oc.u_max;
  CHECK_THROWS_AS(oc.validate(), std::invalid_argument);
  oc = lq_to_oc(p);
  oc.dynamics = nullptr;
  CHECK_THROWS_AS(oc.validate(), std::invalid_argument);
  oc = lq_to_oc(p);
  CHECK_THROWS_AS(
      solve(oc, p.x0, constant_controls(2, 2, 0.0), SolverConfig()),
      std::invalid_argument);
}
