#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace tracker {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;  // desired speed when passing this waypoint [m/s]
};

// CSV with header "x,y,speed", one waypoint per row.
std::vector<Waypoint> load_waypoints_csv(const std::string& path);
void save_waypoints_csv(const std::string& path,
                        const std::vector<Waypoint>& waypoints);

// Result of projecting a position onto the reference path.
struct ProjectionResult {
  double s = 0.0;          // arc length of the closest point [m]
  double d_e = 0.0;        // signed lateral offset [m]; >0 left of travel
  double theta_ref = 0.0;  // path heading at s [rad]
  double v_p = 0.0;        // profile speed at s [m/s]
};

// Interpolating cubic spline through waypoints, re-parameterized by arc
// length, with a piecewise-linear speed profile over the same waypoints.
// Natural end conditions for open paths, periodic closure for loops.
class ReferenceTrajectory {
 public:
  double total_length() const { return total_length_; }
  bool closed() const { return closed_; }

  Eigen::Vector2d position(double s) const;
  Eigen::Vector2d tangent(double s) const;  // unit length
  double heading(double s) const;
  double speed(double s) const;

  // Closest point on the path. With s_hint the search is restricted to
  // |s - s_hint| <= window (wrapping on closed paths), which keeps repeated
  // queries from jumping across a self-intersection.
  ProjectionResult project(double x, double y,
                           std::optional<double> s_hint = std::nullopt,
                           double window = 10.0) const;

  // Arc length at each fitted waypoint (first entry 0; for closed paths the
  // list has one extra entry equal to total_length()).
  const std::vector<double>& waypoint_arclengths() const {
    return waypoint_s_;
  }

 private:
  friend ReferenceTrajectory fit_cubic_spline(
      const std::vector<Waypoint>& waypoints, bool closed);

  struct Segment {
    // Cubic coefficients in the local chord parameter u in [0, h]:
    // p(u) = c0 + c1 u + c2 u^2 + c3 u^3, per coordinate.
    Eigen::Vector2d c0, c1, c2, c3;
    double h = 0.0;     // chord-parameter width
    double s0 = 0.0;    // arc length at u = 0
    double slen = 0.0;  // arc length of the segment
  };

  Eigen::Vector2d eval(int seg, double u) const;
  Eigen::Vector2d deriv(int seg, double u) const;
  double arc_from_start(int seg, double u) const;
  // Maps arc length (already wrapped/clamped) to a segment and local u.
  std::pair<int, double> locate(int hint_unused, double s) const;
  double normalize_s(double s) const;

  std::vector<Segment> segments_;
  std::vector<double> waypoint_s_;
  std::vector<double> waypoint_speed_;  // same length as waypoint_s_
  double total_length_ = 0.0;
  bool closed_ = false;

  // Dense (s, x, y) samples used to seed projection, ~0.25 m apart.
  std::vector<double> grid_s_;
  std::vector<Eigen::Vector2d> grid_p_;
};

// Fits the spline. Throws std::invalid_argument for fewer than 2 waypoints
// (3 for closed paths) or consecutive duplicate points.
ReferenceTrajectory fit_cubic_spline(const std::vector<Waypoint>& waypoints,
                                     bool closed);

}  // namespace tracker
