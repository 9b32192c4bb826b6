#pragma once

#include <Eigen/Core>

#include "tracker/types.hpp"

namespace tracker {

// Common contract over synthetic plants and the learned network: one
// discrete step plus Jacobians of that step. Implementations must be
// deterministic; the default Jacobians fall back to central differences.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual double dt() const = 0;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) const = 0;
  virtual Eigen::MatrixXd jacobian_x(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) const;
  virtual Eigen::MatrixXd jacobian_u(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) const;
};

// Central differences of model.step; column j perturbs component j by eps.
void finite_diff_jacobians(const DynamicsModel& model, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u, Eigen::MatrixXd& f_x,
                           Eigen::MatrixXd& f_u, double eps = 1e-5);

// First-order lag plants standing in for the real vehicles. They generate
// training data and act as closed-loop "reality" in simulation; process
// noise is added by the sim harness, never here.

struct WarthogPlantParams {
  double tau_v = 0.6;      // linear-velocity time constant [s]
  double tau_w = 0.4;      // angular-velocity time constant [s]
  double slip_gain = 0.9;  // steady-state fraction of omega_cmd reached
  double dt = kWarthogDt;
};

struct GemPlantParams {
  double accel_gain = 3.0;   // [m/s^2 per unit pedal]
  double brake_gain = 6.0;   // [m/s^2 per unit brake]
  double drag = 0.05;        // [1/s]
  double tau_phidot = 0.15;  // steering-rate time constant [s]
  double dt = kGemDt;
};

// Lag toward the commanded values; slip scales the reachable omega. The
// result is clamped to the platform's state envelope.
Eigen::Vector2d warthog_plant_step(const Eigen::Vector2d& state,
                                   const Eigen::Vector2d& control,
                                   const WarthogPlantParams& params);

// Longitudinal force balance (throttle minus brake minus drag, never
// reversing) and a steering-rate lag.
Eigen::Vector2d gem_plant_step(const Eigen::Vector2d& state,
                               const Eigen::Vector3d& control,
                               const GemPlantParams& params);

class WarthogPlant : public DynamicsModel {
 public:
  explicit WarthogPlant(const WarthogPlantParams& params = {})
      : params_(params) {}
  int state_dim() const override { return 2; }
  int control_dim() const override { return 2; }
  double dt() const override { return params_.dt; }
  Eigen::VectorXd step(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian_x(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian_u(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;
  const WarthogPlantParams& params() const { return params_; }

 private:
  WarthogPlantParams params_;
};

class GemPlant : public DynamicsModel {
 public:
  explicit GemPlant(const GemPlantParams& params = {}) : params_(params) {}
  int state_dim() const override { return 2; }
  int control_dim() const override { return 3; }
  double dt() const override { return params_.dt; }
  Eigen::VectorXd step(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian_x(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd jacobian_u(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const override;
  const GemPlantParams& params() const { return params_; }

 private:
  GemPlantParams params_;
};

}  // namespace tracker
