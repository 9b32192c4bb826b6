#include "tracker/spline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tracker/angles.hpp"

namespace tracker {
namespace {

// 16-point Gauss-Legendre rule on [-1, 1] (symmetric halves).
constexpr int kGaussN = 8;
constexpr double kGaussX[kGaussN] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
constexpr double kGaussW[kGaussN] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

constexpr double kGridStep = 0.25;  // projection seed spacing [m]

// Thomas algorithm. a = sub-diagonal (a[0] unused), b = diagonal,
// c = sup-diagonal (c[n-1] unused).
std::vector<double> solve_tridiagonal(std::vector<double> a,
                                      std::vector<double> b,
                                      std::vector<double> c,
                                      std::vector<double> r) {
  const int n = static_cast<int>(b.size());
  for (int i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    r[i] -= w * r[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = r[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    x[i] = (r[i] - c[i] * x[i + 1]) / b[i];
  }
  return x;
}

// Cyclic tridiagonal system with corner entries A[0][n-1] = beta and
// A[n-1][0] = alpha, reduced to two Thomas solves via Sherman-Morrison.
std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& a,
                                             std::vector<double> b,
                                             const std::vector<double>& c,
                                             const std::vector<double>& r,
                                             double alpha, double beta) {
  const int n = static_cast<int>(b.size());
  const double gamma = -b[0];
  std::vector<double> bb = b;
  bb[0] = b[0] - gamma;
  bb[n - 1] = b[n - 1] - alpha * beta / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const auto y = solve_tridiagonal(a, bb, c, r);
  const auto z = solve_tridiagonal(a, bb, c, u);
  const double vy = y[0] + beta / gamma * y[n - 1];
  const double vz = z[0] + beta / gamma * z[n - 1];
  const double factor = vy / (1.0 + vz);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = y[i] - factor * z[i];
  return x;
}

// Second derivatives of an interpolating cubic with natural end conditions.
std::vector<double> natural_second_derivatives(const std::vector<double>& h,
                                               const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  std::vector<double> m(n, 0.0);
  if (n <= 2) return m;
  std::vector<double> a(n - 2), b(n - 2), c(n - 2), r(n - 2);
  for (int i = 1; i <= n - 2; ++i) {
    a[i - 1] = h[i - 1];
    b[i - 1] = 2.0 * (h[i - 1] + h[i]);
    c[i - 1] = h[i];
    r[i - 1] =
        6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
  }
  const auto interior = solve_tridiagonal(a, b, c, r);
  for (int i = 1; i <= n - 2; ++i) m[i] = interior[i - 1];
  return m;
}

// Periodic closure: n distinct points, knot n coincides with knot 0.
// Returns second derivatives at knots 0..n-1 (knot n reuses index 0).
std::vector<double> periodic_second_derivatives(const std::vector<double>& h,
                                                const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  auto idx = [n](int i) { return ((i % n) + n) % n; };
  std::vector<double> a(n), b(n), c(n), r(n);
  for (int i = 0; i < n; ++i) {
    const double hm = h[idx(i - 1)];
    const double hi = h[i];
    a[i] = hm;
    b[i] = 2.0 * (hm + hi);
    c[i] = hi;
    r[i] = 6.0 * ((y[idx(i + 1)] - y[i]) / hi - (y[i] - y[idx(i - 1)]) / hm);
  }
  return solve_cyclic_tridiagonal(a, b, c, r, /*alpha=*/h[n - 1],
                                  /*beta=*/h[n - 1]);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<Waypoint> load_waypoints_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open waypoint file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty waypoint file");
  }
  std::string header = trim(line);
  header.erase(std::remove_if(header.begin(), header.end(), ::isspace),
               header.end());
  if (header != "x,y,speed") {
    throw std::runtime_error(path + ": expected header 'x,y,speed', got '" +
                             line + "'");
  }
  std::vector<Waypoint> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string field;
    double vals[3];
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected 3 fields");
      }
      try {
        vals[i] = std::stod(trim(field));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad number '" + field + "'");
      }
    }
    out.push_back({vals[0], vals[1], vals[2]});
  }
  return out;
}

void save_waypoints_csv(const std::string& path,
                        const std::vector<Waypoint>& waypoints) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write waypoint file: " + path);
  out << "x,y,speed\n";
  out.precision(17);
  for (const auto& w : waypoints) {
    out << w.x << "," << w.y << "," << w.speed << "\n";
  }
}

ReferenceTrajectory fit_cubic_spline(const std::vector<Waypoint>& waypoints,
                                     bool closed) {
  std::vector<Waypoint> wps = waypoints;
  for (const auto& w : wps) {
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.speed)) {
      throw std::invalid_argument("waypoint with non-finite value");
    }
  }
  if (closed && wps.size() >= 2) {
    // Accept loops given with the first point repeated at the end.
    const double dx = wps.back().x - wps.front().x;
    const double dy = wps.back().y - wps.front().y;
    if (std::hypot(dx, dy) < 1e-6) wps.pop_back();
  }
  const std::size_t min_count = closed ? 3 : 2;
  if (wps.size() < min_count) {
    throw std::invalid_argument("need at least " + std::to_string(min_count) +
                                " waypoints");
  }

  const int n = static_cast<int>(wps.size());
  const int nseg = closed ? n : n - 1;
  std::vector<double> h(nseg), xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = wps[i].x;
    ys[i] = wps[i].y;
  }
  for (int i = 0; i < nseg; ++i) {
    const int j = (i + 1) % n;
    h[i] = std::hypot(xs[j] - xs[i], ys[j] - ys[i]);
    if (h[i] < 1e-9) {
      throw std::invalid_argument("coincident consecutive waypoints at index " +
                                  std::to_string(i));
    }
  }

  std::vector<double> mx, my;
  if (closed) {
    mx = periodic_second_derivatives(h, xs);
    my = periodic_second_derivatives(h, ys);
  } else {
    mx = natural_second_derivatives(h, xs);
    my = natural_second_derivatives(h, ys);
  }

  ReferenceTrajectory traj;
  traj.closed_ = closed;
  traj.segments_.resize(nseg);
  double s_accum = 0.0;
  for (int i = 0; i < nseg; ++i) {
    const int j = (i + 1) % n;
    auto& seg = traj.segments_[i];
    seg.h = h[i];
    for (int d = 0; d < 2; ++d) {
      const std::vector<double>& y = (d == 0) ? xs : ys;
      const std::vector<double>& m = (d == 0) ? mx : my;
      const double mi = m[i];
      const double mj = closed ? m[j] : m[i + 1];
      seg.c0[d] = y[i];
      seg.c1[d] = (y[j] - y[i]) / h[i] - h[i] * (2.0 * mi + mj) / 6.0;
      seg.c2[d] = mi / 2.0;
      seg.c3[d] = (mj - mi) / (6.0 * h[i]);
    }
    seg.s0 = s_accum;
    // Arc length by Gauss-Legendre quadrature over the chord parameter.
    double len = 0.0;
    for (int g = 0; g < kGaussN; ++g) {
      for (const double sign : {-1.0, 1.0}) {
        const double u = 0.5 * seg.h * (1.0 + sign * kGaussX[g]);
        len += kGaussW[g] * traj.deriv(i, u).norm();
      }
    }
    seg.slen = 0.5 * seg.h * len;
    s_accum += seg.slen;
  }
  traj.total_length_ = s_accum;

  traj.waypoint_s_.resize(closed ? n + 1 : n);
  traj.waypoint_speed_.resize(closed ? n + 1 : n);
  for (int i = 0; i < n; ++i) {
    traj.waypoint_s_[i] = traj.segments_[std::min(i, nseg - 1)].s0;
    traj.waypoint_speed_[i] = wps[i].speed;
  }
  if (!closed) traj.waypoint_s_[n - 1] = traj.total_length_;
  if (closed) {
    traj.waypoint_s_[n] = traj.total_length_;
    traj.waypoint_speed_[n] = wps[0].speed;
  }

  const int grid_count =
      std::max(3, static_cast<int>(std::ceil(traj.total_length_ / kGridStep)) +
                      1);
  traj.grid_s_.resize(grid_count);
  traj.grid_p_.resize(grid_count);
  for (int i = 0; i < grid_count; ++i) {
    const double s = traj.total_length_ * i / (grid_count - 1);
    traj.grid_s_[i] = s;
    traj.grid_p_[i] = traj.position(s);
  }
  return traj;
}

Eigen::Vector2d ReferenceTrajectory::eval(int seg, double u) const {
  const Segment& s = segments_[seg];
  return s.c0 + u * (s.c1 + u * (s.c2 + u * s.c3));
}

Eigen::Vector2d ReferenceTrajectory::deriv(int seg, double u) const {
  const Segment& s = segments_[seg];
  return s.c1 + u * (2.0 * s.c2 + u * 3.0 * s.c3);
}

double ReferenceTrajectory::arc_from_start(int seg, double u) const {
  double len = 0.0;
  for (int g = 0; g < kGaussN; ++g) {
    for (const double sign : {-1.0, 1.0}) {
      const double t = 0.5 * u * (1.0 + sign * kGaussX[g]);
      len += kGaussW[g] * deriv(seg, t).norm();
    }
  }
  return 0.5 * u * len;
}

double ReferenceTrajectory::normalize_s(double s) const {
  if (closed_) {
    s = std::fmod(s, total_length_);
    if (s < 0.0) s += total_length_;
    return s;
  }
  return std::clamp(s, 0.0, total_length_);
}

std::pair<int, double> ReferenceTrajectory::locate(int /*hint*/,
                                                   double s) const {
  // Find the segment whose [s0, s0 + slen) contains s.
  int lo = 0;
  int hi = static_cast<int>(segments_.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (segments_[mid].s0 <= s) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  const Segment& seg = segments_[lo];
  const double ds = s - seg.s0;
  if (ds <= 0.0) return {lo, 0.0};
  if (ds >= seg.slen) return {lo, seg.h};

  // Safeguarded Newton on arc(u) = ds; the arc integral is monotone.
  double u = seg.h * ds / seg.slen;
  double u_lo = 0.0, u_hi = seg.h;
  for (int it = 0; it < 60; ++it) {
    const double g = arc_from_start(lo, u) - ds;
    if (std::abs(g) < 1e-10) break;  // arc length resolved to 0.1 nm
    if (g > 0.0) {
      u_hi = u;
    } else {
      u_lo = u;
    }
    const double dg = deriv(lo, u).norm();
    double next = u - g / dg;
    if (!(next >= u_lo && next <= u_hi)) next = 0.5 * (u_lo + u_hi);
    if (std::abs(next - u) < 1e-13 * std::max(1.0, seg.h)) {
      u = next;
      break;
    }
    u = next;
  }
  return {lo, u};
}

Eigen::Vector2d ReferenceTrajectory::position(double s) const {
  const auto [seg, u] = locate(0, normalize_s(s));
  return eval(seg, u);
}

Eigen::Vector2d ReferenceTrajectory::tangent(double s) const {
  const auto [seg, u] = locate(0, normalize_s(s));
  Eigen::Vector2d d = deriv(seg, u);
  const double n = d.norm();
  if (n < 1e-12) return {1.0, 0.0};
  return d / n;
}

double ReferenceTrajectory::heading(double s) const {
  const Eigen::Vector2d t = tangent(s);
  return std::atan2(t[1], t[0]);
}

double ReferenceTrajectory::speed(double s) const {
  const double sn = normalize_s(s);
  const auto it =
      std::upper_bound(waypoint_s_.begin(), waypoint_s_.end(), sn);
  int i = static_cast<int>(it - waypoint_s_.begin()) - 1;
  i = std::clamp(i, 0, static_cast<int>(waypoint_s_.size()) - 2);
  const double s0 = waypoint_s_[i];
  const double s1 = waypoint_s_[i + 1];
  const double w = (s1 > s0) ? (sn - s0) / (s1 - s0) : 0.0;
  return (1.0 - w) * waypoint_speed_[i] + w * waypoint_speed_[i + 1];
}

ProjectionResult ReferenceTrajectory::project(double x, double y,
                                              std::optional<double> s_hint,
                                              double window) const {
  const Eigen::Vector2d q(x, y);
  const int grid_n = static_cast<int>(grid_s_.size());

  // Seed from the dense grid, optionally restricted around the hint.
  double hint = 0.0;
  if (s_hint) hint = normalize_s(*s_hint);
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_n; ++i) {
    if (s_hint) {
      double delta = std::abs(grid_s_[i] - hint);
      if (closed_) delta = std::min(delta, total_length_ - delta);
      if (delta > window) continue;
    }
    const double d2 = (grid_p_[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  if (best < 0) best = 0;  // window missed every sample; fall back to s=0

  // Golden-section refinement around the seeded sample.
  const double spacing = total_length_ / (grid_n - 1);
  double a = grid_s_[best] - 1.5 * spacing;
  double b = grid_s_[best] + 1.5 * spacing;
  if (!closed_) {
    a = std::max(a, 0.0);
    b = std::min(b, total_length_);
  }
  auto f = [&](double s) { return (position(s) - q).squaredNorm(); };
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  const double s_star = normalize_s(0.5 * (a + b));

  ProjectionResult out;
  out.s = s_star;
  const Eigen::Vector2d p = position(s_star);
  const Eigen::Vector2d t = tangent(s_star);
  const Eigen::Vector2d offset = q - p;
  // Cross product sign: positive when the query sits left of the direction
  // of travel.
  out.d_e = t[0] * offset[1] - t[1] * offset[0];
  out.theta_ref = std::atan2(t[1], t[0]);
  out.v_p = speed(s_star);
  return out;
}

}  // namespace tracker
