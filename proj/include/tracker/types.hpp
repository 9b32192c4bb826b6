#pragma once

#include <Eigen/Core>
#include <cmath>

namespace tracker {

// Physical limits shared by the simulator, the data exciter, and the
// controller's control clamp.
namespace limits {
inline constexpr double kPedalMin = 0.0;
inline constexpr double kPedalMax = 1.0;
inline constexpr double kBrakeMin = 0.0;
inline constexpr double kBrakeMax = 1.0;
inline const double kSteerRateMax = 60.0 * M_PI / 180.0;  // [rad/s]
inline constexpr double kSteerAngleMax = 0.6;             // [rad]
inline constexpr double kWarthogSpeedMin = 0.0;
inline constexpr double kWarthogSpeedMax = 4.5;           // [m/s]
inline const double kWarthogOmegaMax = M_PI;              // [rad/s]
}  // namespace limits

inline constexpr double kGemRateHz = 30.0;
inline constexpr double kWarthogRateHz = 20.0;
inline constexpr double kGemDt = 1.0 / kGemRateHz;
inline constexpr double kWarthogDt = 1.0 / kWarthogRateHz;

// Ackermann platform (Polaris GEM e6) state as seen by the controller.
struct GemState {
  double x = 0.0;        // [m]
  double y = 0.0;        // [m]
  double theta = 0.0;    // heading [rad], kept in (-pi, pi]
  double phi = 0.0;      // steering angle [rad]
  double v = 0.0;        // forward speed [m/s]
  double phi_dot = 0.0;  // steering rate [rad/s]
};

// Throttle/brake are normalized actuator fractions; steering is commanded
// through the steering *rate*, not the angle.
struct GemControl {
  double pedal = 0.0;
  double brake = 0.0;
  double phi_dot_cmd = 0.0;

  Eigen::Vector3d vec() const { return {pedal, brake, phi_dot_cmd}; }
  static GemControl from_vec(const Eigen::Vector3d& u) {
    return {u[0], u[1], u[2]};
  }
};

inline Eigen::Vector3d gem_control_lower() {
  return {limits::kPedalMin, limits::kBrakeMin, -limits::kSteerRateMax};
}
inline Eigen::Vector3d gem_control_upper() {
  return {limits::kPedalMax, limits::kBrakeMax, limits::kSteerRateMax};
}

// Skid-steer platform (Clearpath Warthog).
struct WarthogState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;      // [m/s]
  double omega = 0.0;  // yaw rate [rad/s]
};

struct WarthogControl {
  double v_cmd = 0.0;
  double omega_cmd = 0.0;

  Eigen::Vector2d vec() const { return {v_cmd, omega_cmd}; }
  static WarthogControl from_vec(const Eigen::Vector2d& u) {
    return {u[0], u[1]};
  }
};

inline Eigen::Vector2d warthog_control_lower() {
  return {limits::kWarthogSpeedMin, -limits::kWarthogOmegaMax};
}
inline Eigen::Vector2d warthog_control_upper() {
  return {limits::kWarthogSpeedMax, limits::kWarthogOmegaMax};
}

// Tracking quality over one episode: mean/max cross-track error and
// mean/max speed error magnitude.
struct Metrics {
  double ace = 0.0;  // mean |d_e| [m]
  double mce = 0.0;  // max |d_e| [m]
  double ave = 0.0;  // mean |v_e| [m/s]
  double mve = 0.0;  // max |v_e| [m/s]
};

}  // namespace tracker
