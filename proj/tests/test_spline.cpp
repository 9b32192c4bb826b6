#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "tracker/angles.hpp"
#include "tracker/spline.hpp"

using namespace tracker;

namespace {

std::vector<Waypoint> circle_waypoints(double radius, int count,
                                       double speed) {
  std::vector<Waypoint> wps;
  for (int i = 0; i < count; ++i) {
    const double a = 2.0 * M_PI * i / count;
    wps.push_back({radius * std::cos(a), radius * std::sin(a), speed});
  }
  return wps;
}

std::vector<Waypoint> snake_waypoints(double length, double amplitude,
                                      double wavelength, double step,
                                      double speed) {
  std::vector<Waypoint> wps;
  for (double x = 0.0; x <= length + 1e-9; x += step) {
    wps.push_back({x, amplitude * std::sin(2.0 * M_PI * x / wavelength),
                   speed});
  }
  return wps;
}

}  // namespace

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(M_PI) == M_PI);
  CHECK(wrap_angle(-M_PI) == M_PI);
  CHECK(wrap_angle(3.0 * M_PI) == M_PI);
  CHECK(wrap_angle(-3.0 * M_PI) == M_PI);
  CHECK(wrap_angle(-0.1) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(wrap_angle(2.0 * M_PI) == doctest::Approx(0.0).epsilon(1e-15));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = dist(rng);
    const double w = wrap_angle(a);
    CHECK(w > -M_PI);
    CHECK(w <= M_PI);
    // Same angle modulo a full turn.
    CHECK(std::sin(w) == doctest::Approx(std::sin(a)).epsilon(1e-9));
    CHECK(std::cos(w) == doctest::Approx(std::cos(a)).epsilon(1e-9));
  }
}

TEST_CASE("heading_error wraps across the seam") {
  // -3 - 3 = -6, plus one turn: 2*pi - 6.
  CHECK(heading_error(-3.0, 3.0) ==
        doctest::Approx(0.2831853071795862).epsilon(1e-13));
  CHECK(heading_error(3.0, -3.0) ==
        doctest::Approx(-0.2831853071795862).epsilon(1e-13));
  CHECK(heading_error(0.5, 0.2) == doctest::Approx(0.3).epsilon(1e-13));
}

TEST_CASE("two waypoints give the exact straight segment") {
  const ReferenceTrajectory traj =
      fit_cubic_spline({{0.0, 0.0, 2.0}, {3.0, 4.0, 4.0}}, false);
  CHECK(traj.total_length() == doctest::Approx(5.0).epsilon(1e-12));
  const Eigen::Vector2d mid = traj.position(2.5);
  CHECK(mid[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(mid[1] == doctest::Approx(2.0).epsilon(1e-12));
  const Eigen::Vector2d t = traj.tangent(1.0);
  CHECK(t[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(t[1] == doctest::Approx(0.8).epsilon(1e-12));
  // Piecewise-linear speed profile along arc length.
  CHECK(traj.speed(0.0) == doctest::Approx(2.0));
  CHECK(traj.speed(5.0) == doctest::Approx(4.0));
  CHECK(traj.speed(2.5) == doctest::Approx(3.0));
}

TEST_CASE("collinear waypoints reduce to a line") {
  const ReferenceTrajectory traj = fit_cubic_spline(
      {{0, 0, 1}, {1, 0, 1}, {2, 0, 1}, {5, 0, 1}}, false);
  CHECK(traj.total_length() == doctest::Approx(5.0).epsilon(1e-10));
  for (double s : {0.3, 1.0, 2.7, 4.9}) {
    const Eigen::Vector2d p = traj.position(s);
    CHECK(p[0] == doctest::Approx(s).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("spline interpolates every waypoint") {
  const auto wps = snake_waypoints(60.0, 2.5, 20.0, 2.0, 3.0);
  const ReferenceTrajectory traj = fit_cubic_spline(wps, false);
  const auto& knot_s = traj.waypoint_arclengths();
  REQUIRE(knot_s.size() == wps.size());
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const Eigen::Vector2d p = traj.position(knot_s[i]);
    CHECK(std::abs(p[0] - wps[i].x) < 1e-9);
    CHECK(std::abs(p[1] - wps[i].y) < 1e-9);
  }
  // Knot arc lengths strictly increase and end at the total length.
  for (std::size_t i = 1; i < knot_s.size(); ++i) {
    CHECK(knot_s[i] > knot_s[i - 1]);
  }
  CHECK(knot_s.back() == doctest::Approx(traj.total_length()));
}

TEST_CASE("closed circle matches the analytic circumference") {
  const double radius = 30.0;
  const ReferenceTrajectory traj =
      fit_cubic_spline(circle_waypoints(radius, 60, 5.0), true);
  CHECK(traj.closed());
  CHECK(traj.total_length() ==
        doctest::Approx(2.0 * M_PI * radius).epsilon(1e-4));
  // A quarter of the way around sits a quarter-turn away.
  const Eigen::Vector2d p = traj.position(traj.total_length() / 4.0);
  CHECK(p[0] == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(radius).epsilon(1e-3));
  // Periodic wrap: s and s + L are the same point.
  const Eigen::Vector2d a = traj.position(10.0);
  const Eigen::Vector2d b = traj.position(10.0 + traj.total_length());
  CHECK((a - b).norm() < 1e-9);
  // Closed loop: the seam is smooth (tangent continuous across s = 0/L).
  const Eigen::Vector2d t_before = traj.tangent(traj.total_length() - 1e-6);
  const Eigen::Vector2d t_after = traj.tangent(1e-6);
  CHECK((t_before - t_after).norm() < 1e-4);
}

TEST_CASE("projection of an offset point returns the construction") {
  const auto wps = snake_waypoints(80.0, 3.0, 30.0, 2.0, 3.0);
  const ReferenceTrajectory traj = fit_cubic_spline(wps, false);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> s_dist(5.0, traj.total_length() - 5.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double s = s_dist(rng);
    const Eigen::Vector2d p = traj.position(s);
    const Eigen::Vector2d t = traj.tangent(s);
    const Eigen::Vector2d left(-t[1], t[0]);
    const Eigen::Vector2d q = p + 0.1 * left;
    const ProjectionResult proj = traj.project(q[0], q[1]);
    CHECK(std::abs(proj.s - s) < 1e-4);
    CHECK(proj.d_e == doctest::Approx(0.1).epsilon(1e-6));
    const Eigen::Vector2d q_right = p - 0.1 * left;
    const ProjectionResult proj_r = traj.project(q_right[0], q_right[1]);
    CHECK(proj_r.d_e == doctest::Approx(-0.1).epsilon(1e-6));
  }
}

TEST_CASE("projection agrees with a dense exhaustive search") {
  const auto wps = snake_waypoints(60.0, 2.0, 25.0, 2.0, 3.0);
  const ReferenceTrajectory traj = fit_cubic_spline(wps, false);
  const int dense_n = 200000;
  std::vector<Eigen::Vector2d> dense(dense_n);
  for (int i = 0; i < dense_n; ++i) {
    dense[i] = traj.position(traj.total_length() * i / (dense_n - 1));
  }
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> x_dist(2.0, 58.0);
  std::uniform_real_distribution<double> y_dist(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector2d q(x_dist(rng), y_dist(rng));
    int best = 0;
    double best_d2 = (dense[0] - q).squaredNorm();
    for (int i = 1; i < dense_n; ++i) {
      const double d2 = (dense[i] - q).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    const double s_oracle = traj.total_length() * best / (dense_n - 1);
    const ProjectionResult proj = traj.project(q[0], q[1]);
    CHECK(std::abs(proj.s - s_oracle) < 0.01);
    CHECK(std::abs(proj.d_e) ==
          doctest::Approx(std::sqrt(best_d2)).epsilon(1e-4));
  }
}

TEST_CASE("projection from outside a circle picks the near rim") {
  const double radius = 30.0;
  const ReferenceTrajectory traj =
      fit_cubic_spline(circle_waypoints(radius, 60, 5.0), true);
  const ProjectionResult proj = traj.project(2.0 * radius, 0.0);
  // Counter-clockwise travel: a point outside the rim lies to the right.
  CHECK(proj.d_e == doctest::Approx(-radius).epsilon(1e-6));
  CHECK(std::abs(proj.theta_ref - M_PI / 2.0) < 1e-3);
}

TEST_CASE("hinted projection stays on its branch near a close approach") {
  // Out along y=0, U-turn, back along y=4: two nearly parallel passes.
  std::vector<Waypoint> wps;
  for (double x = 0.0; x <= 30.0; x += 2.0) wps.push_back({x, 0.0, 2.0});
  for (double a = -M_PI / 2 + 0.3; a < M_PI / 2; a += 0.3) {
    wps.push_back({30.0 + 2.0 * std::cos(a), 2.0 + 2.0 * std::sin(a), 2.0});
  }
  for (double x = 30.0; x >= 0.0; x -= 2.0) wps.push_back({x, 4.0, 2.0});
  const ReferenceTrajectory traj = fit_cubic_spline(wps, false);

  // Unhinted: picks the globally closest branch (the y=0 pass).
  const ProjectionResult free_proj = traj.project(15.0, 1.0);
  CHECK(std::abs(free_proj.d_e) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(free_proj.s < 20.0);

  // Hinted onto the return pass: stays there even though it is farther.
  const double s_return = traj.total_length() - 15.0;
  const ProjectionResult hinted = traj.project(15.0, 1.0, s_return, 8.0);
  CHECK(hinted.s > traj.total_length() - 25.0);
  CHECK(hinted.d_e == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("hinted projection wraps across the seam of a loop") {
  const double radius = 20.0;
  const ReferenceTrajectory traj =
      fit_cubic_spline(circle_waypoints(radius, 50, 3.0), true);
  const double L = traj.total_length();
  // Query just past the seam while hinting just before it.
  const Eigen::Vector2d q = traj.position(0.5);
  const ProjectionResult proj = traj.project(q[0], q[1], L - 1.0, 5.0);
  CHECK(std::abs(proj.s - 0.5) < 1e-3);
}

TEST_CASE("speed profile wraps on closed paths") {
  auto wps = circle_waypoints(10.0, 20, 0.0);
  for (std::size_t i = 0; i < wps.size(); ++i) {
    wps[i].speed = 1.0 + 0.1 * static_cast<double>(i);
  }
  const ReferenceTrajectory traj = fit_cubic_spline(wps, true);
  const double L = traj.total_length();
  // Just before the seam the profile blends back toward waypoint 0's speed.
  const double near_end = traj.speed(L - 1e-9);
  CHECK(near_end == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(traj.speed(0.0) == doctest::Approx(1.0));
}

TEST_CASE("fit rejects bad input") {
  CHECK_THROWS_AS(fit_cubic_spline({{0, 0, 1}}, false), std::invalid_argument);
  CHECK_THROWS_AS(fit_cubic_spline({{0, 0, 1}, {1, 0, 1}}, true),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      fit_cubic_spline({{0, 0, 1}, {0, 0, 1}, {1, 0, 1}}, false),
      std::invalid_argument);
  CHECK_THROWS_AS(
      fit_cubic_spline({{0, 0, 1}, {std::nan(""), 0, 1}}, false),
      std::invalid_argument);
}

TEST_CASE("closed fit accepts a loop with the first point repeated") {
  auto wps = circle_waypoints(5.0, 12, 2.0);
  wps.push_back(wps.front());
  const ReferenceTrajectory traj = fit_cubic_spline(wps, true);
  CHECK(traj.total_length() ==
        doctest::Approx(2.0 * M_PI * 5.0).epsilon(1e-3));
}

TEST_CASE("waypoint csv roundtrip") {
  const std::string path = "test_waypoints_roundtrip.csv";
  const std::vector<Waypoint> wps = {
      {0.0, 0.0, 1.5}, {10.25, -3.5, 4.0}, {20.0, 1.0e-3, 7.0}};
  save_waypoints_csv(path, wps);
  const auto loaded = load_waypoints_csv(path);
  REQUIRE(loaded.size() == wps.size());
  for (std::size_t i = 0; i < wps.size(); ++i) {
    CHECK(loaded[i].x == doctest::Approx(wps[i].x).epsilon(1e-15));
    CHECK(loaded[i].y == doctest::Approx(wps[i].y).epsilon(1e-15));
    CHECK(loaded[i].speed == doctest::Approx(wps[i].speed).epsilon(1e-15));
  }
  std::remove(path.c_str());
}

TEST_CASE("waypoint csv rejects malformed input") {
  const std::string path = "test_waypoints_bad.csv";
  {
    std::ofstream out(path);
    out << "x,y\n1,2\n";
  }
  CHECK_THROWS_WITH_AS(load_waypoints_csv(path),
                       doctest::Contains("expected header"),
                       std::runtime_error);
  {
    std::ofstream out(path);
    out << "x,y,speed\n1,2,3\n4,oops,6\n";
  }
  CHECK_THROWS_WITH_AS(load_waypoints_csv(path), doctest::Contains(":3"),
                       std::runtime_error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_waypoints_csv("no_such_file.csv"), std::runtime_error);
}
