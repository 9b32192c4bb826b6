#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "tracker/ilqr.hpp"

namespace tracker {

// Affine-quadratic control problem: dynamics x' = A x + B u + c with stage
// cost x'Qx + u'Ru + q'x + r'u and final cost x'Qf x + qf'x. Solved exactly
// by backward value recursion, independently of the iterative solver, so the
// two can be checked against each other.
struct LqProblem {
  Eigen::MatrixXd A, B;
  Eigen::VectorXd c;
  Eigen::MatrixXd Q, R;
  Eigen::VectorXd q, r;
  Eigen::MatrixXd Qf;
  Eigen::VectorXd qf;
  int N = 0;
  Eigen::VectorXd x0;
};

// Exact solution: optimal affine policy u_i = K[i] x + d[i] and the value of
// the optimum from x0.
struct LqSolution {
  std::vector<Eigen::MatrixXd> K;
  std::vector<Eigen::VectorXd> d;
  double optimal_cost = 0.0;
};

LqSolution solve_lq_riccati(const LqProblem& p);

// Seeded random instance with a stable A, positive-definite R, and positive
// semidefinite Q — the standing reference problem for solver equivalence.
LqProblem make_random_lq(int n, int m, int N, std::uint64_t seed);

// Wraps the affine-quadratic problem as a solver problem with the given
// symmetric control box.
OcProblem lq_to_oc(const LqProblem& p, double control_bound = 1e9);

}  // namespace tracker
