#include "tracker/plants.hpp"

#include <algorithm>
#include <cmath>

namespace tracker {

Eigen::MatrixXd DynamicsModel::jacobian_x(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) const {
  Eigen::MatrixXd f_x, f_u;
  finite_diff_jacobians(*this, x, u, f_x, f_u);
  return f_x;
}

Eigen::MatrixXd DynamicsModel::jacobian_u(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) const {
  Eigen::MatrixXd f_x, f_u;
  finite_diff_jacobians(*this, x, u, f_x, f_u);
  return f_u;
}

void finite_diff_jacobians(const DynamicsModel& model, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u, Eigen::MatrixXd& f_x,
                           Eigen::MatrixXd& f_u, double eps) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  f_x.resize(n, n);
  f_u.resize(n, m);
  Eigen::VectorXd xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    xp[j] = x[j] + eps;
    xm[j] = x[j] - eps;
    f_x.col(j) = (model.step(xp, u) - model.step(xm, u)) / (2.0 * eps);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  Eigen::VectorXd up = u, um = u;
  for (int j = 0; j < m; ++j) {
    up[j] = u[j] + eps;
    um[j] = u[j] - eps;
    f_u.col(j) = (model.step(x, up) - model.step(x, um)) / (2.0 * eps);
    up[j] = u[j];
    um[j] = u[j];
  }
}

Eigen::Vector2d warthog_plant_step(const Eigen::Vector2d& state,
                                   const Eigen::Vector2d& control,
                                   const WarthogPlantParams& params) {
  const double av = 1.0 - std::exp(-params.dt / params.tau_v);
  const double aw = 1.0 - std::exp(-params.dt / params.tau_w);
  double v = state[0] + (control[0] - state[0]) * av;
  double w = state[1] + (params.slip_gain * control[1] - state[1]) * aw;
  v = std::clamp(v, limits::kWarthogSpeedMin, limits::kWarthogSpeedMax);
  w = std::clamp(w, -limits::kWarthogOmegaMax, limits::kWarthogOmegaMax);
  return {v, w};
}

Eigen::Vector2d gem_plant_step(const Eigen::Vector2d& state,
                               const Eigen::Vector3d& control,
                               const GemPlantParams& params) {
  const double accel = params.accel_gain * control[0] -
                       params.brake_gain * control[1] - params.drag * state[0];
  const double v = std::max(0.0, state[0] + params.dt * accel);
  const double a = 1.0 - std::exp(-params.dt / params.tau_phidot);
  const double phi_dot = state[1] + (control[2] - state[1]) * a;
  return {v, phi_dot};
}

Eigen::VectorXd WarthogPlant::step(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u) const {
  return warthog_plant_step(x, u, params_);
}

Eigen::MatrixXd WarthogPlant::jacobian_x(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
  // Derivative of the lag update; rows hitting the state clamp go flat.
  const Eigen::Vector2d next = warthog_plant_step(x, u, params_);
  Eigen::Matrix2d f_x = Eigen::Matrix2d::Zero();
  if (next[0] > limits::kWarthogSpeedMin && next[0] < limits::kWarthogSpeedMax)
    f_x(0, 0) = std::exp(-params_.dt / params_.tau_v);
  if (std::abs(next[1]) < limits::kWarthogOmegaMax)
    f_x(1, 1) = std::exp(-params_.dt / params_.tau_w);
  return f_x;
}

Eigen::MatrixXd WarthogPlant::jacobian_u(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
  const Eigen::Vector2d next = warthog_plant_step(x, u, params_);
  Eigen::Matrix2d f_u = Eigen::Matrix2d::Zero();
  if (next[0] > limits::kWarthogSpeedMin && next[0] < limits::kWarthogSpeedMax)
    f_u(0, 0) = 1.0 - std::exp(-params_.dt / params_.tau_v);
  if (std::abs(next[1]) < limits::kWarthogOmegaMax)
    f_u(1, 1) =
        params_.slip_gain * (1.0 - std::exp(-params_.dt / params_.tau_w));
  return f_u;
}

Eigen::VectorXd GemPlant::step(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) const {
  return gem_plant_step(x, Eigen::Vector3d(u), params_);
}

Eigen::MatrixXd GemPlant::jacobian_x(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) const {
  const Eigen::Vector2d next = gem_plant_step(x, Eigen::Vector3d(u), params_);
  Eigen::Matrix2d f_x = Eigen::Matrix2d::Zero();
  if (next[0] > 0.0) f_x(0, 0) = 1.0 - params_.dt * params_.drag;
  f_x(1, 1) = std::exp(-params_.dt / params_.tau_phidot);
  return f_x;
}

Eigen::MatrixXd GemPlant::jacobian_u(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) const {
  const Eigen::Vector2d next = gem_plant_step(x, Eigen::Vector3d(u), params_);
  Eigen::Matrix<double, 2, 3> f_u = Eigen::Matrix<double, 2, 3>::Zero();
  if (next[0] > 0.0) {
    f_u(0, 0) = params_.dt * params_.accel_gain;
    f_u(0, 1) = -params_.dt * params_.brake_gain;
  }
  f_u(1, 2) = 1.0 - std::exp(-params_.dt / params_.tau_phidot);
  return f_u;
}

}  // namespace tracker
