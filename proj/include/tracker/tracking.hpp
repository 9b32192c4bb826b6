#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "tracker/ilqr.hpp"
#include "tracker/mlp.hpp"
#include "tracker/spline.hpp"
#include "tracker/types.hpp"

namespace tracker {

// Tracking error of the Ackermann platform relative to the reference path,
// stacked with the raw states the learned model needs. Order is fixed:
// (d_e, theta_e, v_e, d_e_dot, theta_e_dot, v_e_dot, v, phi_dot, phi).
struct ErrorState {
  double d_e = 0.0;          // cross-track error [m], >0 left of travel
  double theta_e = 0.0;      // heading error [rad], kept in (-pi, pi]
  double v_e = 0.0;          // speed error vs the profile [m/s]
  double d_e_dot = 0.0;      // cross-track error rate [m/s]
  double theta_e_dot = 0.0;  // heading error rate [rad/s]
  double v_e_dot = 0.0;      // speed error rate [m/s^2]
  double v = 0.0;            // speed [m/s]
  double phi_dot = 0.0;      // steering rate [rad/s]
  double phi = 0.0;          // steering angle [rad]

  Eigen::VectorXd vec() const;
  static ErrorState from_vec(const Eigen::VectorXd& psi);
};

// Skid-steer analog. The steering components disappear and the yaw-rate
// error is carried through theta_e_dot; order is fixed:
// (d_e, theta_e, v_e, theta_e_dot, v, omega).
struct WarthogErrorState {
  double d_e = 0.0;
  double theta_e = 0.0;
  double v_e = 0.0;
  double theta_e_dot = 0.0;
  double v = 0.0;
  double omega = 0.0;

  Eigen::VectorXd vec() const;
  static WarthogErrorState from_vec(const Eigen::VectorXd& psi);
};

// Diagonal cost weights. The trailing entries of A that line up with the
// raw (non-error) components must be zero: those states are inputs to the
// dynamics, not tracking objectives.
struct TrackingWeights {
  Eigen::VectorXd A;  // state weight diagonal
  Eigen::VectorXd B;  // control weight diagonal

  static TrackingWeights gem_default();
  static TrackingWeights warthog_default();

  // Throws std::invalid_argument on size mismatch, negative/non-finite
  // entries, or nonzero weight on the trailing `copied` state slots.
  void validate(int state_dim, int control_dim, int copied) const;
};

struct BicycleParams {
  double L = 2.65;              // wheelbase [m]
  double dt = kGemDt;           // controller period [s]
  double phi_max = limits::kSteerAngleMax;
};

struct WarthogParams {
  double dt = kWarthogDt;
};

struct MpcConfig {
  int horizon = 40;      // steps, state sequence length over the plan
  int replan_every = 1;  // steps between full solves
  bool warm_start = true;
  SolverConfig solver;

  // Receding-horizon solves only need the cost settled to well below the
  // weight scale; the default solver tolerance is tuned for one-shot
  // optimization and makes warm-started replans grind through dozens of
  // negligible improvements per control step.
  MpcConfig() {
    solver.cost_tolerance = 1e-6;
    solver.max_iterations = 50;
  }

  void validate() const;  // throws std::invalid_argument
};

// --- Ackermann platform -----------------------------------------------

// One step of the full vehicle state: kinematic pose integration with the
// learned model supplying the next (v, phi_dot). Heading is normalized.
GemState full_state_step(const GemState& s, const GemControl& u,
                         const MlpModel& learned, const BicycleParams& params);

// Measures the error state by projecting onto the reference. The rate of
// v_e comes from differencing against `prev` when given (zero otherwise);
// s_out receives the projection arc length for hint chaining.
ErrorState compute_error_state(const GemState& s,
                               const ReferenceTrajectory& ref,
                               const BicycleParams& params,
                               const ErrorState* prev = nullptr,
                               std::optional<double> s_hint = std::nullopt,
                               double* s_out = nullptr);

// One step of the error-state transition. v_p is the profile speed at the
// current step, held constant within the step.
ErrorState gamma_step(const ErrorState& psi, const GemControl& u,
                      const MlpModel& learned, const BicycleParams& params,
                      double v_p);

// Analytic Jacobians of gamma_step w.r.t. the 9-vector psi and 3-vector u.
void gamma_jacobians(const ErrorState& psi, const GemControl& u,
                     const MlpModel& learned, const BicycleParams& params,
                     double v_p, Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u);

// --- Skid-steer platform ----------------------------------------------

WarthogState warthog_full_state_step(const WarthogState& s,
                                     const WarthogControl& u,
                                     const MlpModel& learned,
                                     const WarthogParams& params);

WarthogErrorState warthog_compute_error_state(
    const WarthogState& s, const ReferenceTrajectory& ref,
    std::optional<double> s_hint = std::nullopt, double* s_out = nullptr);

WarthogErrorState warthog_gamma_step(const WarthogErrorState& psi,
                                     const WarthogControl& u,
                                     const MlpModel& learned,
                                     const WarthogParams& params, double v_p);

void warthog_gamma_jacobians(const WarthogErrorState& psi,
                             const WarthogControl& u, const MlpModel& learned,
                             const WarthogParams& params, double v_p,
                             Eigen::MatrixXd& f_x, Eigen::MatrixXd& f_u);

// --- Quadratic tracking cost (shared by both platforms) ----------------

double tracking_stage_cost(const Eigen::VectorXd& psi, const Eigen::VectorXd& u,
                           const TrackingWeights& weights);
void tracking_stage_derivs(const Eigen::VectorXd& psi, const Eigen::VectorXd& u,
                           const TrackingWeights& weights, Eigen::VectorXd& l_x,
                           Eigen::VectorXd& l_u, Eigen::MatrixXd& l_xx,
                           Eigen::MatrixXd& l_uu, Eigen::MatrixXd& l_ux);
double tracking_final_cost(const Eigen::VectorXd& psi,
                           const TrackingWeights& weights);
void tracking_final_derivs(const Eigen::VectorXd& psi,
                           const TrackingWeights& weights, Eigen::VectorXd& l_x,
                           Eigen::MatrixXd& l_xx);

// --- Problem assembly and receding-horizon control ---------------------

// A horizon-length optimal-control problem anchored at the current state.
// The profile-speed schedule is frozen at build time by advancing the
// predicted arc length with (v_e + v_p) per step.
struct TrackingProblem {
  OcProblem oc;
  std::vector<Eigen::VectorXd> initial_controls;
  ErrorState psi0;
  double s0 = 0.0;
  std::vector<double> v_p_schedule;  // one entry per horizon step
};

struct WarthogTrackingProblem {
  OcProblem oc;
  std::vector<Eigen::VectorXd> initial_controls;
  WarthogErrorState psi0;
  double s0 = 0.0;
  std::vector<double> v_p_schedule;
};

TrackingProblem build_tracking_problem(
    const GemState& current, const ReferenceTrajectory& ref,
    const MlpModel& learned, const TrackingWeights& weights,
    const MpcConfig& config, const BicycleParams& params,
    const ErrorState* prev = nullptr,
    std::optional<double> s_hint = std::nullopt,
    const std::vector<Eigen::VectorXd>* warm = nullptr);

WarthogTrackingProblem build_warthog_tracking_problem(
    const WarthogState& current, const ReferenceTrajectory& ref,
    const MlpModel& learned, const TrackingWeights& weights,
    const MpcConfig& config, const WarthogParams& params,
    std::optional<double> s_hint = std::nullopt,
    const std::vector<Eigen::VectorXd>* warm = nullptr);

struct MpcStepResult {
  GemControl control;
  IlqrSolution solution;
  ErrorState psi;
  double s = 0.0;         // arc-length progress of the projection
  bool replanned = true;  // false when a stored plan was reused
  bool warning = false;   // solver failed to converge; best effort returned
};

struct WarthogMpcStepResult {
  WarthogControl control;
  IlqrSolution solution;
  WarthogErrorState psi;
  double s = 0.0;
  bool replanned = true;
  bool warning = false;
};

// Single solve at the current state: build, solve, return the first
// control. Stateless; pass prev/warm explicitly.
MpcStepResult mpc_step(const GemState& current, const ReferenceTrajectory& ref,
                       const MlpModel& learned, const TrackingWeights& weights,
                       const MpcConfig& config, const BicycleParams& params,
                       const ErrorState* prev = nullptr,
                       std::optional<double> s_hint = std::nullopt,
                       const std::vector<Eigen::VectorXd>* warm = nullptr);

WarthogMpcStepResult warthog_mpc_step(
    const WarthogState& current, const ReferenceTrajectory& ref,
    const MlpModel& learned, const TrackingWeights& weights,
    const MpcConfig& config, const WarthogParams& params,
    std::optional<double> s_hint = std::nullopt,
    const std::vector<Eigen::VectorXd>* warm = nullptr);

// Stateful receding-horizon wrapper: chains the projection hint, the
// error-rate differencing, and the warm start across calls; replans every
// `replan_every` steps and tracks the stored plan with its feedback gains
// in between.
class GemMpc {
 public:
  GemMpc(ReferenceTrajectory ref, MlpModel learned, TrackingWeights weights,
         MpcConfig config, BicycleParams params);

  MpcStepResult step(const GemState& current);
  void reset();
  const ReferenceTrajectory& reference() const { return ref_; }

 private:
  ReferenceTrajectory ref_;
  MlpModel learned_;
  TrackingWeights weights_;
  MpcConfig config_;
  BicycleParams params_;
  std::optional<ErrorState> prev_psi_;
  std::optional<double> s_hint_;
  IlqrSolution plan_;
  bool has_plan_ = false;
  int steps_since_plan_ = 0;
};

class WarthogMpc {
 public:
  WarthogMpc(ReferenceTrajectory ref, MlpModel learned,
             TrackingWeights weights, MpcConfig config, WarthogParams params);

  WarthogMpcStepResult step(const WarthogState& current);
  void reset();
  const ReferenceTrajectory& reference() const { return ref_; }

 private:
  ReferenceTrajectory ref_;
  MlpModel learned_;
  TrackingWeights weights_;
  MpcConfig config_;
  WarthogParams params_;
  std::optional<double> s_hint_;
  IlqrSolution plan_;
  bool has_plan_ = false;
  int steps_since_plan_ = 0;
};

}  // namespace tracker
