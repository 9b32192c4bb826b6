#pragma once

#include <cmath>

namespace tracker {

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) {
    a -= 2.0 * M_PI;
  } else if (a <= -M_PI) {
    a += 2.0 * M_PI;
  }
  return a;
}

// Smallest signed difference theta - theta_ref, wrapped into (-pi, pi].
inline double heading_error(double theta, double theta_ref) {
  return wrap_angle(theta - theta_ref);
}

}  // namespace tracker
