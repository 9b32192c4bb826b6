#include "tracker/verify.hpp"

#include <Eigen/Dense>
#include <random>
#include <stdexcept>

namespace tracker {

LqSolution solve_lq_riccati(const LqProblem& p) {
  const auto n = p.A.rows();
  const auto m = p.B.cols();
  if (p.N < 2) throw std::invalid_argument("lq horizon must be at least 2");

  LqSolution sol;
  sol.K.assign(p.N - 1, Eigen::MatrixXd());
  sol.d.assign(p.N - 1, Eigen::VectorXd());

  // Value function carried backward as V(x) = x'P x + pv'x + cv.
  Eigen::MatrixXd P = p.Qf;
  Eigen::VectorXd pv = p.qf;
  double cv = 0.0;

  for (int i = p.N - 2; i >= 0; --i) {
    // Expand l(x,u) + V(Ax + Bu + c) as a quadratic in (x, u).
    const Eigen::MatrixXd Muu = p.R + p.B.transpose() * P * p.B;
    const Eigen::MatrixXd Mux = p.B.transpose() * P * p.A;
    const Eigen::MatrixXd Mxx = p.Q + p.A.transpose() * P * p.A;
    const Eigen::VectorXd Pc2 = 2.0 * (P * p.c) + pv;
    const Eigen::VectorXd mu_lin = p.r + p.B.transpose() * Pc2;
    const Eigen::VectorXd mx_lin = p.q + p.A.transpose() * Pc2;
    const double mc = cv + p.c.dot(P * p.c) + pv.dot(p.c);

    const Eigen::LLT<Eigen::MatrixXd> llt(Muu);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("riccati recursion hit a non-PD control block");
    }
    const Eigen::MatrixXd K = -llt.solve(Mux);
    const Eigen::VectorXd d = -0.5 * llt.solve(mu_lin);
    sol.K[i] = K;
    sol.d[i] = d;

    Eigen::MatrixXd Pn = Mxx + K.transpose() * Muu * K + K.transpose() * Mux +
                         Mux.transpose() * K;
    P = 0.5 * (Pn + Pn.transpose());
    pv = mx_lin + 2.0 * (K.transpose() * (Muu * d)) + K.transpose() * mu_lin +
         2.0 * (Mux.transpose() * d);
    cv = mc + d.dot(Muu * d) + mu_lin.dot(d);
  }

  (void)n;
  (void)m;
  sol.optimal_cost = p.x0.dot(P * p.x0) + pv.dot(p.x0) + cv;
  return sol;
}

LqProblem make_random_lq(int n, int m, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto mat = [&](int r, int c) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = g(rng);
    return M;
  };
  const auto vec = [&](int r) {
    Eigen::VectorXd v(r);
    for (int i = 0; i < r; ++i) v[i] = g(rng);
    return v;
  };

  LqProblem p;
  p.A = mat(n, n);
  // Scale to spectral radius 0.95 so long horizons stay well conditioned.
  const double rho = p.A.eigenvalues().cwiseAbs().maxCoeff();
  if (rho > 1e-12) p.A *= 0.95 / rho;
  p.B = mat(n, m);
  p.c = Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXd G = mat(n, n);
  p.Q = G.transpose() * G / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd H = mat(m, m);
  p.R = H.transpose() * H / m + 0.5 * Eigen::MatrixXd::Identity(m, m);
  p.q = 0.1 * vec(n);
  p.r = 0.1 * vec(m);
  const Eigen::MatrixXd Gf = mat(n, n);
  p.Qf = Gf.transpose() * Gf / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.qf = 0.1 * vec(n);
  p.N = N;
  p.x0 = vec(n);
  return p;
}

OcProblem lq_to_oc(const LqProblem& p, double control_bound) {
  const int n = static_cast<int>(p.A.rows());
  const int m = static_cast<int>(p.B.cols());
  OcProblem oc;
  oc.n = n;
  oc.m = m;
  oc.N = p.N;
  oc.dynamics = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    return Eigen::VectorXd(p.A * x + p.B * u + p.c);
  };
  oc.dynamics_jacobians = [p](const Eigen::VectorXd&, const Eigen::VectorXd&,
                              int, Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
    f_x = p.A;
    f_u = p.B;
  };
  oc.stage_cost = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) {
    return x.dot(p.Q * x) + u.dot(p.R * u) + p.q.dot(x) + p.r.dot(u);
  };
  oc.stage_cost_derivs = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             int, Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                             Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                             Eigen::MatrixXd& l_ux) {
    l_x = 2.0 * (p.Q * x) + p.q;
    l_u = 2.0 * (p.R * u) + p.r;
    l_xx = 2.0 * p.Q;
    l_uu = 2.0 * p.R;
    l_ux = Eigen::MatrixXd::Zero(u.size(), x.size());
  };
  oc.final_cost = [p](const Eigen::VectorXd& x) {
    return x.dot(p.Qf * x) + p.qf.dot(x);
  };
  oc.final_cost_derivs = [p](const Eigen::VectorXd& x, Eigen::VectorXd& l_x,
                             Eigen::MatrixXd& l_xx) {
    l_x = 2.0 * (p.Qf * x) + p.qf;
    l_xx = 2.0 * p.Qf;
  };
  oc.u_min = Eigen::VectorXd::Constant(m, -control_bound);
  oc.u_max = Eigen::VectorXd::Constant(m, control_bound);
  return oc;
}

}  // namespace tracker
