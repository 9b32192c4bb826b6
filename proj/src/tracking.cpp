#include "tracker/tracking.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "tracker/angles.hpp"

namespace tracker {

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& u, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  return u.cwiseMax(lo).cwiseMin(hi);
}

// Shifted warm start: drop the first control, repeat the last.
std::vector<Eigen::VectorXd> shift_controls(
    const std::vector<Eigen::VectorXd>& prev, int count) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::size_t j = std::min<std::size_t>(i + 1, prev.size() - 1);
    out.push_back(prev[j]);
  }
  return out;
}

}  // namespace

Eigen::VectorXd ErrorState::vec() const {
  Eigen::VectorXd psi(9);
  psi << d_e, theta_e, v_e, d_e_dot, theta_e_dot, v_e_dot, v, phi_dot, phi;
  return psi;
}

ErrorState ErrorState::from_vec(const Eigen::VectorXd& psi) {
  if (psi.size() != 9) {
    throw std::invalid_argument("error state must have 9 components");
  }
  ErrorState out;
  out.d_e = psi[0];
  out.theta_e = psi[1];
  out.v_e = psi[2];
  out.d_e_dot = psi[3];
  out.theta_e_dot = psi[4];
  out.v_e_dot = psi[5];
  out.v = psi[6];
  out.phi_dot = psi[7];
  out.phi = psi[8];
  return out;
}

Eigen::VectorXd WarthogErrorState::vec() const {
  Eigen::VectorXd psi(6);
  psi << d_e, theta_e, v_e, theta_e_dot, v, omega;
  return psi;
}

WarthogErrorState WarthogErrorState::from_vec(const Eigen::VectorXd& psi) {
  if (psi.size() != 6) {
    throw std::invalid_argument("error state must have 6 components");
  }
  WarthogErrorState out;
  out.d_e = psi[0];
  out.theta_e = psi[1];
  out.v_e = psi[2];
  out.theta_e_dot = psi[3];
  out.v = psi[4];
  out.omega = psi[5];
  return out;
}

TrackingWeights TrackingWeights::gem_default() {
  TrackingWeights w;
  w.A = Eigen::VectorXd(9);
  w.A << 10.0, 5.0, 2.0, 1.0, 1.0, 0.5, 0.0, 0.0, 0.0;
  w.B = Eigen::VectorXd(3);
  w.B << 0.5, 0.5, 0.1;
  return w;
}

TrackingWeights TrackingWeights::warthog_default() {
  TrackingWeights w;
  w.A = Eigen::VectorXd(6);
  w.A << 10.0, 5.0, 2.0, 0.5, 0.0, 0.0;
  w.B = Eigen::VectorXd(2);
  w.B << 0.01, 0.05;
  return w;
}

void TrackingWeights::validate(int state_dim, int control_dim,
                               int copied) const {
  if (A.size() != state_dim || B.size() != control_dim) {
    throw std::invalid_argument("weight diagonal sizes do not match problem");
  }
  if (!A.allFinite() || !B.allFinite() || (A.array() < 0.0).any() ||
      (B.array() < 0.0).any()) {
    throw std::invalid_argument("weights must be finite and nonnegative");
  }
  for (int i = state_dim - copied; i < state_dim; ++i) {
    if (A[i] != 0.0) {
      throw std::invalid_argument(
          "weights on raw model states must be zero; they are dynamics "
          "inputs, not tracking objectives");
    }
  }
}

void MpcConfig::validate() const {
  if (horizon < 5) {
    throw std::invalid_argument("horizon must be at least 5 steps");
  }
  if (replan_every < 1 || replan_every >= horizon) {
    throw std::invalid_argument("replan_every must be in [1, horizon)");
  }
}

// --- Ackermann platform -----------------------------------------------

GemState full_state_step(const GemState& s, const GemControl& u,
                         const MlpModel& learned, const BicycleParams& params) {
  const double dt = params.dt;
  const Eigen::Vector2d model_state(s.v, s.phi_dot);
  const Eigen::VectorXd next = mlp_forward(learned, model_state, u.vec());
  GemState out;
  out.x = s.x + s.v * std::cos(s.theta) * dt;
  out.y = s.y + s.v * std::sin(s.theta) * dt;
  out.theta = wrap_angle(s.theta + s.v * std::tan(s.phi) / params.L * dt);
  out.phi = s.phi + s.phi_dot * dt;
  out.v = next[0];
  out.phi_dot = next[1];
  return out;
}

ErrorState compute_error_state(const GemState& s,
                               const ReferenceTrajectory& ref,
                               const BicycleParams& params,
                               const ErrorState* prev,
                               std::optional<double> s_hint, double* s_out) {
  const ProjectionResult proj = ref.project(s.x, s.y, s_hint);
  ErrorState psi;
  psi.d_e = proj.d_e;
  psi.theta_e = heading_error(s.theta, proj.theta_ref);
  psi.v_e = s.v - proj.v_p;
  psi.d_e_dot = s.v * std::sin(psi.theta_e);
  psi.theta_e_dot = s.v * std::tan(s.phi) / params.L;
  psi.v_e_dot = prev ? (psi.v_e - prev->v_e) / params.dt : 0.0;
  psi.v = s.v;
  psi.phi_dot = s.phi_dot;
  psi.phi = s.phi;
  if (s_out) *s_out = proj.s;
  return psi;
}

ErrorState gamma_step(const ErrorState& psi, const GemControl& u,
                      const MlpModel& learned, const BicycleParams& params,
                      double v_p) {
  const double dt = params.dt;
  const Eigen::Vector2d model_state(psi.v, psi.phi_dot);
  const Eigen::VectorXd next = mlp_forward(learned, model_state, u.vec());
  const double v_next = next[0];
  const double phi_dot_next = next[1];

  const double speed = psi.v_e + psi.v_e_dot * dt + v_p;
  const double heading = psi.theta_e + psi.theta_e_dot * dt;
  const double steer = psi.phi + psi.phi_dot * dt;

  ErrorState out;
  out.d_e = psi.d_e + psi.d_e_dot * dt;
  out.theta_e = psi.theta_e + psi.theta_e_dot * dt;
  out.v_e = psi.v_e + psi.v_e_dot * dt;
  out.d_e_dot = speed * std::sin(heading);
  out.theta_e_dot = speed * std::tan(steer) / params.L;
  out.v_e_dot = (v_next - psi.v) / dt;
  out.v = v_next;
  out.phi_dot = phi_dot_next;
  out.phi = psi.phi + psi.phi_dot * dt;
  return out;
}

void gamma_jacobians(const ErrorState& psi, const GemControl& u,
                     const MlpModel& learned, const BicycleParams& params,
                     double v_p, Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
  const double dt = params.dt;
  Eigen::MatrixXd m_x, m_u;  // learned model: (v, phi_dot) x u -> (v', phi_dot')
  mlp_jacobians(learned, Eigen::Vector2d(psi.v, psi.phi_dot), u.vec(), m_x,
                m_u);

  const double speed = psi.v_e + psi.v_e_dot * dt + v_p;
  const double heading = psi.theta_e + psi.theta_e_dot * dt;
  const double steer = psi.phi + psi.phi_dot * dt;
  const double cos_h = std::cos(heading);
  const double sin_h = std::sin(heading);
  const double tan_s = std::tan(steer);
  const double sec2_s = 1.0 + tan_s * tan_s;

  f_x = Eigen::MatrixXd::Zero(9, 9);
  f_u = Eigen::MatrixXd::Zero(9, 3);

  // Indices: 0 d_e, 1 theta_e, 2 v_e, 3 d_e_dot, 4 theta_e_dot, 5 v_e_dot,
  //          6 v, 7 phi_dot, 8 phi.
  f_x(0, 0) = 1.0;
  f_x(0, 3) = dt;
  f_x(1, 1) = 1.0;
  f_x(1, 4) = dt;
  f_x(2, 2) = 1.0;
  f_x(2, 5) = dt;

  f_x(3, 1) = speed * cos_h;
  f_x(3, 2) = sin_h;
  f_x(3, 4) = speed * cos_h * dt;
  f_x(3, 5) = sin_h * dt;

  f_x(4, 1) = 0.0;
  f_x(4, 2) = tan_s / params.L;
  f_x(4, 5) = tan_s / params.L * dt;
  f_x(4, 7) = speed * sec2_s / params.L * dt;
  f_x(4, 8) = speed * sec2_s / params.L;

  f_x(5, 6) = (m_x(0, 0) - 1.0) / dt;
  f_x(5, 7) = m_x(0, 1) / dt;

  f_x(6, 6) = m_x(0, 0);
  f_x(6, 7) = m_x(0, 1);
  f_x(7, 6) = m_x(1, 0);
  f_x(7, 7) = m_x(1, 1);

  f_x(8, 7) = dt;
  f_x(8, 8) = 1.0;

  f_u.row(5) = m_u.row(0) / dt;
  f_u.row(6) = m_u.row(0);
  f_u.row(7) = m_u.row(1);
}

// --- Skid-steer platform ----------------------------------------------

WarthogState warthog_full_state_step(const WarthogState& s,
                                     const WarthogControl& u,
                                     const MlpModel& learned,
                                     const WarthogParams& params) {
  const double dt = params.dt;
  const Eigen::VectorXd next =
      mlp_forward(learned, Eigen::Vector2d(s.v, s.omega), u.vec());
  WarthogState out;
  out.x = s.x + s.v * std::cos(s.theta) * dt;
  out.y = s.y + s.v * std::sin(s.theta) * dt;
  out.theta = wrap_angle(s.theta + s.omega * dt);
  out.v = next[0];
  out.omega = next[1];
  return out;
}

WarthogErrorState warthog_compute_error_state(const WarthogState& s,
                                              const ReferenceTrajectory& ref,
                                              std::optional<double> s_hint,
                                              double* s_out) {
  const ProjectionResult proj = ref.project(s.x, s.y, s_hint);
  WarthogErrorState psi;
  psi.d_e = proj.d_e;
  psi.theta_e = heading_error(s.theta, proj.theta_ref);
  psi.v_e = s.v - proj.v_p;
  psi.theta_e_dot = s.omega;
  psi.v = s.v;
  psi.omega = s.omega;
  if (s_out) *s_out = proj.s;
  return psi;
}

WarthogErrorState warthog_gamma_step(const WarthogErrorState& psi,
                                     const WarthogControl& u,
                                     const MlpModel& learned,
                                     const WarthogParams& params, double v_p) {
  const double dt = params.dt;
  const Eigen::VectorXd next =
      mlp_forward(learned, Eigen::Vector2d(psi.v, psi.omega), u.vec());
  WarthogErrorState out;
  out.d_e = psi.d_e + (psi.v_e + v_p) * std::sin(psi.theta_e) * dt;
  out.theta_e = psi.theta_e + psi.theta_e_dot * dt;
  out.v_e = psi.v_e + (next[0] - psi.v);
  out.theta_e_dot = next[1];
  out.v = next[0];
  out.omega = next[1];
  return out;
}

void warthog_gamma_jacobians(const WarthogErrorState& psi,
                             const WarthogControl& u, const MlpModel& learned,
                             const WarthogParams& params, double v_p,
                             Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
  const double dt = params.dt;
  Eigen::MatrixXd m_x, m_u;
  mlp_jacobians(learned, Eigen::Vector2d(psi.v, psi.omega), u.vec(), m_x, m_u);

  f_x = Eigen::MatrixXd::Zero(6, 6);
  f_u = Eigen::MatrixXd::Zero(6, 2);

  // Indices: 0 d_e, 1 theta_e, 2 v_e, 3 theta_e_dot, 4 v, 5 omega.
  f_x(0, 0) = 1.0;
  f_x(0, 1) = (psi.v_e + v_p) * std::cos(psi.theta_e) * dt;
  f_x(0, 2) = std::sin(psi.theta_e) * dt;
  f_x(1, 1) = 1.0;
  f_x(1, 3) = dt;

  f_x(2, 2) = 1.0;
  f_x(2, 4) = m_x(0, 0) - 1.0;
  f_x(2, 5) = m_x(0, 1);
  f_x(3, 4) = m_x(1, 0);
  f_x(3, 5) = m_x(1, 1);
  f_x(4, 4) = m_x(0, 0);
  f_x(4, 5) = m_x(0, 1);
  f_x(5, 4) = m_x(1, 0);
  f_x(5, 5) = m_x(1, 1);

  f_u.row(2) = m_u.row(0);
  f_u.row(3) = m_u.row(1);
  f_u.row(4) = m_u.row(0);
  f_u.row(5) = m_u.row(1);
}

// --- Quadratic tracking cost ------------------------------------------

double tracking_stage_cost(const Eigen::VectorXd& psi, const Eigen::VectorXd& u,
                           const TrackingWeights& weights) {
  return psi.dot(weights.A.cwiseProduct(psi)) +
         u.dot(weights.B.cwiseProduct(u));
}

void tracking_stage_derivs(const Eigen::VectorXd& psi, const Eigen::VectorXd& u,
                           const TrackingWeights& weights, Eigen::VectorXd& l_x,
                           Eigen::VectorXd& l_u, Eigen::MatrixXd& l_xx,
                           Eigen::MatrixXd& l_uu, Eigen::MatrixXd& l_ux) {
  l_x = 2.0 * weights.A.cwiseProduct(psi);
  l_u = 2.0 * weights.B.cwiseProduct(u);
  l_xx = (2.0 * weights.A).asDiagonal();
  l_uu = (2.0 * weights.B).asDiagonal();
  l_ux = Eigen::MatrixXd::Zero(u.size(), psi.size());
}

double tracking_final_cost(const Eigen::VectorXd& psi,
                           const TrackingWeights& weights) {
  return psi.dot(weights.A.cwiseProduct(psi));
}

void tracking_final_derivs(const Eigen::VectorXd& psi,
                           const TrackingWeights& weights, Eigen::VectorXd& l_x,
                           Eigen::MatrixXd& l_xx) {
  l_x = 2.0 * weights.A.cwiseProduct(psi);
  l_xx = (2.0 * weights.A).asDiagonal();
}

// --- Problem assembly --------------------------------------------------

namespace {

// Freezes the per-step profile speed by advancing the predicted arc length
// with (v_e + v_p) while rolling the provided controls through the
// error-state transition.
template <typename Psi, typename StepFn>
std::vector<double> freeze_speed_schedule(
    const ReferenceTrajectory& ref, const Psi& psi0, double s0, int horizon,
    double dt, const std::vector<Eigen::VectorXd>& controls,
    const StepFn& step) {
  std::vector<double> v_p(horizon);
  Psi psi = psi0;
  double s = s0;
  for (int i = 0; i < horizon; ++i) {
    v_p[i] = ref.speed(s);
    if (i + 1 < horizon) {
      const double advance = (psi.v_e + v_p[i]) * dt;
      s += std::max(advance, 0.0);
      if (ref.closed()) {
        s = std::fmod(s, ref.total_length());
      } else {
        s = std::min(s, ref.total_length());
      }
      psi = step(psi, controls[std::min<int>(i, controls.size() - 1)], v_p[i]);
    }
  }
  return v_p;
}

}  // namespace

TrackingProblem build_tracking_problem(
    const GemState& current, const ReferenceTrajectory& ref,
    const MlpModel& learned, const TrackingWeights& weights,
    const MpcConfig& config, const BicycleParams& params,
    const ErrorState* prev, std::optional<double> s_hint,
    const std::vector<Eigen::VectorXd>* warm) {
  config.validate();
  weights.validate(9, 3, 3);

  TrackingProblem tp;
  tp.psi0 = compute_error_state(current, ref, params, prev, s_hint, &tp.s0);

  const int N = config.horizon;
  if (warm && !warm->empty()) {
    tp.initial_controls = shift_controls(*warm, N - 1);
    for (auto& u : tp.initial_controls) {
      u = clamp_box(u, gem_control_lower(), gem_control_upper());
    }
  } else {
    tp.initial_controls.assign(N - 1, Eigen::Vector3d::Zero());  // coast
  }

  tp.v_p_schedule = freeze_speed_schedule(
      ref, tp.psi0, tp.s0, N, params.dt, tp.initial_controls,
      [&](const ErrorState& psi, const Eigen::VectorXd& u, double v_p) {
        return gamma_step(psi, GemControl::from_vec(u), learned, params, v_p);
      });

  OcProblem& oc = tp.oc;
  oc.n = 9;
  oc.m = 3;
  oc.N = N;
  oc.u_min = gem_control_lower();
  oc.u_max = gem_control_upper();
  const auto model = std::make_shared<const MlpModel>(learned);
  const std::vector<double> schedule = tp.v_p_schedule;
  oc.dynamics = [model, params, schedule](const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u, int i) {
    const double v_p = schedule[std::min<std::size_t>(i, schedule.size() - 1)];
    return gamma_step(ErrorState::from_vec(x), GemControl::from_vec(u), *model,
                      params, v_p)
        .vec();
  };
  oc.dynamics_jacobians = [model, params, schedule](
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, int i,
                              Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
    const double v_p = schedule[std::min<std::size_t>(i, schedule.size() - 1)];
    gamma_jacobians(ErrorState::from_vec(x), GemControl::from_vec(u), *model,
                    params, v_p, f_x, f_u);
  };
  oc.stage_cost = [weights](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            int) { return tracking_stage_cost(x, u, weights); };
  oc.stage_cost_derivs =
      [weights](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int,
                Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                Eigen::MatrixXd& l_ux) {
        tracking_stage_derivs(x, u, weights, l_x, l_u, l_xx, l_uu, l_ux);
      };
  oc.final_cost = [weights](const Eigen::VectorXd& x) {
    return tracking_final_cost(x, weights);
  };
  oc.final_cost_derivs = [weights](const Eigen::VectorXd& x,
                                   Eigen::VectorXd& l_x,
                                   Eigen::MatrixXd& l_xx) {
    tracking_final_derivs(x, weights, l_x, l_xx);
  };
  return tp;
}

WarthogTrackingProblem build_warthog_tracking_problem(
    const WarthogState& current, const ReferenceTrajectory& ref,
    const MlpModel& learned, const TrackingWeights& weights,
    const MpcConfig& config, const WarthogParams& params,
    std::optional<double> s_hint, const std::vector<Eigen::VectorXd>* warm) {
  config.validate();
  weights.validate(6, 2, 2);

  WarthogTrackingProblem tp;
  tp.psi0 = warthog_compute_error_state(current, ref, s_hint, &tp.s0);

  const int N = config.horizon;
  if (warm && !warm->empty()) {
    tp.initial_controls = shift_controls(*warm, N - 1);
    for (auto& u : tp.initial_controls) {
      u = clamp_box(u, warthog_control_lower(), warthog_control_upper());
    }
  } else {
    // Neutral start: command the local profile speed, no turn.
    const double v0 = std::clamp(ref.speed(tp.s0), limits::kWarthogSpeedMin,
                                 limits::kWarthogSpeedMax);
    tp.initial_controls.assign(N - 1, Eigen::Vector2d(v0, 0.0));
  }

  tp.v_p_schedule = freeze_speed_schedule(
      ref, tp.psi0, tp.s0, N, params.dt, tp.initial_controls,
      [&](const WarthogErrorState& psi, const Eigen::VectorXd& u, double v_p) {
        return warthog_gamma_step(psi, WarthogControl::from_vec(u), learned,
                                  params, v_p);
      });

  OcProblem& oc = tp.oc;
  oc.n = 6;
  oc.m = 2;
  oc.N = N;
  oc.u_min = warthog_control_lower();
  oc.u_max = warthog_control_upper();
  const auto model = std::make_shared<const MlpModel>(learned);
  const std::vector<double> schedule = tp.v_p_schedule;
  oc.dynamics = [model, params, schedule](const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u, int i) {
    const double v_p = schedule[std::min<std::size_t>(i, schedule.size() - 1)];
    return warthog_gamma_step(WarthogErrorState::from_vec(x),
                              WarthogControl::from_vec(u), *model, params, v_p)
        .vec();
  };
  oc.dynamics_jacobians = [model, params, schedule](
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, int i,
                              Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u) {
    const double v_p = schedule[std::min<std::size_t>(i, schedule.size() - 1)];
    warthog_gamma_jacobians(WarthogErrorState::from_vec(x),
                            WarthogControl::from_vec(u), *model, params, v_p,
                            f_x, f_u);
  };
  oc.stage_cost = [weights](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            int) { return tracking_stage_cost(x, u, weights); };
  oc.stage_cost_derivs =
      [weights](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int,
                Eigen::VectorXd& l_x, Eigen::VectorXd& l_u,
                Eigen::MatrixXd& l_xx, Eigen::MatrixXd& l_uu,
                Eigen::MatrixXd& l_ux) {
        tracking_stage_derivs(x, u, weights, l_x, l_u, l_xx, l_uu, l_ux);
      };
  oc.final_cost = [weights](const Eigen::VectorXd& x) {
    return tracking_final_cost(x, weights);
  };
  oc.final_cost_derivs = [weights](const Eigen::VectorXd& x,
                                   Eigen::VectorXd& l_x,
                                   Eigen::MatrixXd& l_xx) {
    tracking_final_derivs(x, weights, l_x, l_xx);
  };
  return tp;
}

// --- Receding horizon ---------------------------------------------------

MpcStepResult mpc_step(const GemState& current, const ReferenceTrajectory& ref,
                       const MlpModel& learned, const TrackingWeights& weights,
                       const MpcConfig& config, const BicycleParams& params,
                       const ErrorState* prev, std::optional<double> s_hint,
                       const std::vector<Eigen::VectorXd>* warm) {
  TrackingProblem tp = build_tracking_problem(current, ref, learned, weights,
                                              config, params, prev, s_hint,
                                              config.warm_start ? warm : nullptr);
  MpcStepResult out;
  out.psi = tp.psi0;
  out.s = tp.s0;
  out.solution =
      solve(tp.oc, tp.psi0.vec(), tp.initial_controls, config.solver);
  out.warning = !out.solution.converged;
  out.control = GemControl::from_vec(out.solution.trajectory.U.front());
  return out;
}

WarthogMpcStepResult warthog_mpc_step(
    const WarthogState& current, const ReferenceTrajectory& ref,
    const MlpModel& learned, const TrackingWeights& weights,
    const MpcConfig& config, const WarthogParams& params,
    std::optional<double> s_hint, const std::vector<Eigen::VectorXd>* warm) {
  WarthogTrackingProblem tp = build_warthog_tracking_problem(
      current, ref, learned, weights, config, params, s_hint,
      config.warm_start ? warm : nullptr);
  WarthogMpcStepResult out;
  out.psi = tp.psi0;
  out.s = tp.s0;
  out.solution =
      solve(tp.oc, tp.psi0.vec(), tp.initial_controls, config.solver);
  out.warning = !out.solution.converged;
  out.control = WarthogControl::from_vec(out.solution.trajectory.U.front());
  return out;
}

GemMpc::GemMpc(ReferenceTrajectory ref, MlpModel learned,
               TrackingWeights weights, MpcConfig config, BicycleParams params)
    : ref_(std::move(ref)),
      learned_(std::move(learned)),
      weights_(std::move(weights)),
      config_(config),
      params_(params) {
  config_.validate();
  weights_.validate(9, 3, 3);
}

void GemMpc::reset() {
  prev_psi_.reset();
  s_hint_.reset();
  has_plan_ = false;
  steps_since_plan_ = 0;
}

MpcStepResult GemMpc::step(const GemState& current) {
  const bool replan = !has_plan_ || steps_since_plan_ >= config_.replan_every;
  if (replan) {
    const std::vector<Eigen::VectorXd>* warm =
        has_plan_ ? &plan_.trajectory.U : nullptr;
    MpcStepResult out =
        mpc_step(current, ref_, learned_, weights_, config_, params_,
                 prev_psi_ ? &*prev_psi_ : nullptr, s_hint_, warm);
    plan_ = out.solution;
    has_plan_ = true;
    steps_since_plan_ = 1;
    prev_psi_ = out.psi;
    s_hint_ = out.s;
    return out;
  }

  // Track the stored plan: feedback around its nominal at this offset.
  MpcStepResult out;
  out.replanned = false;
  out.psi = compute_error_state(current, ref_, params_,
                                prev_psi_ ? &*prev_psi_ : nullptr, s_hint_,
                                &out.s);
  const int j = std::min<int>(steps_since_plan_,
                              static_cast<int>(plan_.trajectory.U.size()) - 1);
  Eigen::VectorXd u = plan_.trajectory.U[j];
  if (!plan_.gains.K.empty()) {
    u += plan_.gains.K[j] * (out.psi.vec() - plan_.trajectory.X[j]);
  }
  u = clamp_box(u, gem_control_lower(), gem_control_upper());
  out.control = GemControl::from_vec(u);
  out.solution = plan_;
  ++steps_since_plan_;
  prev_psi_ = out.psi;
  s_hint_ = out.s;
  return out;
}

WarthogMpc::WarthogMpc(ReferenceTrajectory ref, MlpModel learned,
                       TrackingWeights weights, MpcConfig config,
                       WarthogParams params)
    : ref_(std::move(ref)),
      learned_(std::move(learned)),
      weights_(std::move(weights)),
      config_(config),
      params_(params) {
  config_.validate();
  weights_.validate(6, 2, 2);
}

void WarthogMpc::reset() {
  s_hint_.reset();
  has_plan_ = false;
  steps_since_plan_ = 0;
}

WarthogMpcStepResult WarthogMpc::step(const WarthogState& current) {
  const bool replan = !has_plan_ || steps_since_plan_ >= config_.replan_every;
  if (replan) {
    const std::vector<Eigen::VectorXd>* warm =
        has_plan_ ? &plan_.trajectory.U : nullptr;
    WarthogMpcStepResult out = warthog_mpc_step(
        current, ref_, learned_, weights_, config_, params_, s_hint_, warm);
    plan_ = out.solution;
    has_plan_ = true;
    steps_since_plan_ = 1;
    s_hint_ = out.s;
    return out;
  }

  WarthogMpcStepResult out;
  out.replanned = false;
  out.psi = warthog_compute_error_state(current, ref_, s_hint_, &out.s);
  const int j = std::min<int>(steps_since_plan_,
                              static_cast<int>(plan_.trajectory.U.size()) - 1);
  Eigen::VectorXd u = plan_.trajectory.U[j];
  if (!plan_.gains.K.empty()) {
    u += plan_.gains.K[j] * (out.psi.vec() - plan_.trajectory.X[j]);
  }
  u = clamp_box(u, warthog_control_lower(), warthog_control_upper());
  out.control = WarthogControl::from_vec(u);
  out.solution = plan_;
  ++steps_since_plan_;
  s_hint_ = out.s;
  return out;
}

}  // namespace tracker
