#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace tracker {

// Discrete-time optimal-control problem over a horizon of N states and N-1
// controls. Dynamics and stage costs take the step index so schedules that
// vary along the horizon (e.g. a progress-dependent reference speed) can be
// baked into the problem.
struct OcProblem {
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  int N = 0;  // number of states; controls run 0..N-2

  std::function<Eigen::VectorXd(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u, int i)>
      dynamics;
  std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& u, int i,
                     Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u)>
      dynamics_jacobians;

  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       int i)>
      stage_cost;
  std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& u, int i,
                     Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                     Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                     Eigen::MatrixXd& l_ux)>
      stage_cost_derivs;

  std::function<double(const Eigen::VectorXd& x)> final_cost;
  std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& l_x,
                     Eigen::MatrixXd& l_xx)>
      final_cost_derivs;

  Eigen::VectorXd u_min, u_max;  // elementwise box, clipped in every rollout

  void validate() const;  // throws std::invalid_argument on bad shapes
};

struct NominalTrajectory {
  std::vector<Eigen::VectorXd> X;  // N states
  std::vector<Eigen::VectorXd> U;  // N-1 controls
};

struct GainSchedule {
  std::vector<Eigen::VectorXd> k;  // feedforward, N-1 entries
  std::vector<Eigen::MatrixXd> K;  // feedback, N-1 entries
};

struct SolverConfig {
  // Levenberg-Marquardt schedule: raise fast on failure, lower slowly on
  // success, and let the parameter drop all the way to zero once it
  // undershoots mu_min so the final iterations take pure Gauss-Newton steps.
  double mu_init = 1e-6;
  double mu_min = 1e-6;
  double mu_max = 1e10;
  double mu_increase = 10.0;
  double mu_decrease = 2.0;
  std::vector<double> alphas;  // backtracking steps; default 1, 1/2, .. 2^-10
  int max_iterations = 100;
  double cost_tolerance = 1e-9;  // relative improvement threshold
  std::ostream* trace = nullptr;  // JSON lines (iteration, mu, alpha, cost)

  SolverConfig();
};

struct IlqrSolution {
  NominalTrajectory trajectory;
  GainSchedule gains;  // from the final backward pass
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // initial cost, then accepted iterations
};

// Rolls controls (clipped to the problem box) out of x0 through the dynamics.
NominalTrajectory rollout(const OcProblem& problem, const Eigen::VectorXd& x0,
                          const std::vector<Eigen::VectorXd>& controls);

double total_cost(const OcProblem& problem, const NominalTrajectory& traj);

// Regularized backward recursion. Fills gains and the expected-improvement
// coefficients (predicted cost change at step length alpha is
// alpha*d1 + alpha^2*d2). Returns false if any regularized control Hessian
// fails its Cholesky factorization; the caller raises mu and retries.
bool backward_pass(const OcProblem& problem, const NominalTrajectory& traj,
                   double mu, GainSchedule& gains, double& d1, double& d2);

// Control-update rollout at step length alpha. Controls are clipped before
// propagation, so the returned pair (trajectory, cost) is dynamically
// consistent. Returns nullopt when the rollout leaves finite range.
std::optional<std::pair<NominalTrajectory, double>> forward_pass(
    const OcProblem& problem, const NominalTrajectory& traj,
    const GainSchedule& gains, double alpha);

IlqrSolution solve(const OcProblem& problem, const Eigen::VectorXd& x0,
                   const std::vector<Eigen::VectorXd>& initial_controls,
                   const SolverConfig& config);

}  // namespace tracker
