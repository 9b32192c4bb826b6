#include "tracker/sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "tracker/angles.hpp"

namespace tracker {

namespace {

constexpr double kPi = 3.14159265358979323846;

int sample_count(double arc_length, double spacing, int min_n) {
  return std::max(min_n, static_cast<int>(std::llround(arc_length / spacing)));
}

// Appends n points of a circular arc: start angle a0 on a circle around
// `center`, sweeping `sweep` radians. The end point is excluded so pieces
// can be chained without duplicate junctions.
void append_arc(std::vector<Waypoint>* out, const Eigen::Vector2d& center,
                double radius, double a0, double sweep, int n) {
  for (int i = 0; i < n; ++i) {
    const double a = a0 + sweep * i / n;
    out->push_back({center.x() + radius * std::cos(a),
                    center.y() + radius * std::sin(a), 0.0});
  }
}

void append_line(std::vector<Waypoint>* out, const Eigen::Vector2d& from,
                 const Eigen::Vector2d& to, int n) {
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d p = from + (to - from) * (static_cast<double>(i) / n);
    out->push_back({p.x(), p.y(), 0.0});
  }
}

// Cosine-phased sinusoid section: enters at `from` along `heading` with a
// matched tangent, wiggles with half peak-to-peak `amplitude`, and exits
// `periods * wavelength` down-path with the tangent matched again.
void append_snake_section(std::vector<Waypoint>* out,
                          const Eigen::Vector2d& from, double heading,
                          double amplitude, double wavelength, int periods,
                          double spacing) {
  const double run = periods * wavelength;
  const int n = sample_count(run, spacing, 8 * periods);
  const Eigen::Vector2d fwd(std::cos(heading), std::sin(heading));
  const Eigen::Vector2d left(-std::sin(heading), std::cos(heading));
  for (int i = 0; i < n; ++i) {
    const double x = run * i / n;
    const double y = amplitude * (1.0 - std::cos(2.0 * kPi * x / wavelength));
    const Eigen::Vector2d p = from + fwd * x + left * y;
    out->push_back({p.x(), p.y(), 0.0});
  }
}

double polyline_param_length(const std::function<Eigen::Vector2d(double)>& f,
                             double t0, double t1, int n) {
  double len = 0.0;
  Eigen::Vector2d prev = f(t0);
  for (int i = 1; i <= n; ++i) {
    const Eigen::Vector2d p = f(t0 + (t1 - t0) * i / n);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

// Straight launch + cosine snake + constant-radius sweep, joined with
// matched tangents at both seams.
std::vector<Waypoint> combination_points(double straight, double amplitude,
                                         double wavelength, int periods,
                                         double arc_radius, double arc_sweep,
                                         double spacing) {
  std::vector<Waypoint> pts;
  append_line(&pts, {0.0, 0.0}, {straight, 0.0},
              sample_count(straight, spacing, 4));
  append_snake_section(&pts, {straight, 0.0}, 0.0, amplitude, wavelength,
                       periods, spacing);
  const Eigen::Vector2d arc_start(straight + periods * wavelength, 0.0);
  const Eigen::Vector2d center = arc_start + Eigen::Vector2d(0.0, arc_radius);
  const int n_arc = sample_count(arc_radius * arc_sweep, spacing, 8);
  append_arc(&pts, center, arc_radius, -kPi / 2.0, arc_sweep, n_arc);
  // Open path: close out with the true arc end point.
  const double a_end = -kPi / 2.0 + arc_sweep;
  pts.push_back({center.x() + arc_radius * std::cos(a_end),
                 center.y() + arc_radius * std::sin(a_end), 0.0});
  return pts;
}

void assign_speed_profile(std::vector<Waypoint>* pts, const TrackSpec& spec) {
  double s = 0.0;
  for (size_t i = 0; i < pts->size(); ++i) {
    if (i > 0) {
      const double dx = (*pts)[i].x - (*pts)[i - 1].x;
      const double dy = (*pts)[i].y - (*pts)[i - 1].y;
      s += std::hypot(dx, dy);
    }
    double v = spec.speed;
    if (spec.start_speed >= 0.0 && spec.start_speed < spec.speed) {
      const double f = std::min(1.0, s / spec.ramp_length);
      v = spec.start_speed + (spec.speed - spec.start_speed) * f;
    }
    (*pts)[i].speed = v;
  }
}

}  // namespace

TrackShape track_shape_from_string(const std::string& name) {
  if (name == "circle") return TrackShape::kCircle;
  if (name == "oval") return TrackShape::kOval;
  if (name == "snake") return TrackShape::kSnake;
  if (name == "eight") return TrackShape::kEight;
  if (name == "combination") return TrackShape::kCombination;
  if (name == "warthog_combination") return TrackShape::kWarthogCombination;
  throw std::invalid_argument("unknown track shape: " + name);
}

std::string to_string(TrackShape shape) {
  switch (shape) {
    case TrackShape::kCircle: return "circle";
    case TrackShape::kOval: return "oval";
    case TrackShape::kSnake: return "snake";
    case TrackShape::kEight: return "eight";
    case TrackShape::kCombination: return "combination";
    case TrackShape::kWarthogCombination: return "warthog_combination";
  }
  throw std::invalid_argument("unknown track shape enum value");
}

bool track_is_closed(TrackShape shape) {
  switch (shape) {
    case TrackShape::kCircle:
    case TrackShape::kOval:
    case TrackShape::kEight:
      return true;
    default:
      return false;
  }
}

void TrackSpec::validate() const {
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw std::invalid_argument("track spacing must be positive");
  if (!(speed > 0.0) || !std::isfinite(speed))
    throw std::invalid_argument("track speed must be positive");
  if (start_speed >= 0.0 && start_speed > speed)
    throw std::invalid_argument("start_speed must not exceed speed");
  if (start_speed >= 0.0 && !(ramp_length > 0.0))
    throw std::invalid_argument("ramp_length must be positive");
  switch (shape) {
    case TrackShape::kCircle:
    case TrackShape::kOval:
    case TrackShape::kEight:
      if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
      break;
    case TrackShape::kSnake:
      if (!(amplitude > 0.0) || !(wavelength > 0.0) || !(length > 0.0))
        throw std::invalid_argument(
            "snake needs positive amplitude, wavelength, and length");
      break;
    default:
      break;
  }
  if (shape == TrackShape::kOval && !(length > 0.0))
    throw std::invalid_argument("oval straight length must be positive");
}

std::vector<Waypoint> generate_track(const TrackSpec& spec) {
  spec.validate();
  std::vector<Waypoint> pts;
  switch (spec.shape) {
    case TrackShape::kCircle: {
      // Start at the origin heading +x, turning left around (0, R).
      const double R = spec.radius;
      const int n = sample_count(2.0 * kPi * R, spec.spacing, 12);
      for (int i = 0; i < n; ++i) {
        const double t = 2.0 * kPi * i / n;
        pts.push_back({R * std::sin(t), R * (1.0 - std::cos(t)), 0.0});
      }
      break;
    }
    case TrackShape::kOval: {
      // Stadium: two straights of `length` joined by semicircles of
      // `radius`, counterclockwise from the origin heading +x.
      const double R = spec.radius;
      const double L = spec.length;
      const int n_line = sample_count(L, spec.spacing, 4);
      const int n_arc = sample_count(kPi * R, spec.spacing, 8);
      append_line(&pts, {0.0, 0.0}, {L, 0.0}, n_line);
      append_arc(&pts, {L, R}, R, -kPi / 2.0, kPi, n_arc);
      append_line(&pts, {L, 2.0 * R}, {0.0, 2.0 * R}, n_line);
      append_arc(&pts, {0.0, R}, R, kPi / 2.0, kPi, n_arc);
      break;
    }
    case TrackShape::kSnake: {
      const int n = sample_count(spec.length, spec.spacing, 8);
      for (int i = 0; i <= n; ++i) {
        const double x = spec.length * i / n;
        pts.push_back(
            {x, spec.amplitude * std::sin(2.0 * kPi * x / spec.wavelength),
             0.0});
      }
      break;
    }
    case TrackShape::kEight: {
      // Figure eight (lemniscate of Gerono), crossing itself once at the
      // center; `radius` is the half-width of each lobe.
      const double R = spec.radius;
      auto f = [R](double t) {
        return Eigen::Vector2d(R * std::cos(t),
                               R * std::sin(t) * std::cos(t));
      };
      const double len = polyline_param_length(f, 0.0, 2.0 * kPi, 2048);
      const int n = sample_count(len, spec.spacing, 32);
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d p = f(2.0 * kPi * i / n);
        pts.push_back({p.x(), p.y(), 0.0});
      }
      break;
    }
    case TrackShape::kCombination:
      pts = combination_points(60.0, 3.0, 40.0, 2, 60.0, kPi / 2.0,
                               spec.spacing);
      break;
    case TrackShape::kWarthogCombination:
      pts = combination_points(20.0, 1.5, 15.0, 2, 10.0, kPi, spec.spacing);
      break;
  }
  assign_speed_profile(&pts, spec);
  return pts;
}

ReferenceTrajectory build_reference(const TrackSpec& spec) {
  return fit_cubic_spline(generate_track(spec), track_is_closed(spec.shape));
}

void NoiseSpec::validate() const {
  const bool ok = position_sigma >= 0.0 && heading_sigma >= 0.0 &&
                  velocity_sigma >= 0.0 && std::isfinite(position_sigma) &&
                  std::isfinite(heading_sigma) && std::isfinite(velocity_sigma);
  if (!ok) throw std::invalid_argument("noise sigmas must be finite and >= 0");
}

void EpisodeOptions::validate() const {
  if (!std::isfinite(duration_s) || duration_s < 0.0)
    throw std::invalid_argument("episode duration must be finite and >= 0");
  if (!(divergence_limit > 0.0))
    throw std::invalid_argument("divergence limit must be positive");
  if (metrics_skip_s < 0.0)
    throw std::invalid_argument("metrics skip span must be >= 0");
  if (process_noise && (!std::isfinite(process_sigma) || process_sigma < 0.0))
    throw std::invalid_argument("process sigma must be finite and >= 0");
}

Metrics compute_metrics(const std::vector<EpisodeStep>& log, int skip_steps) {
  if (skip_steps < 0) skip_steps = 0;
  if (static_cast<size_t>(skip_steps) >= log.size())
    throw std::invalid_argument(
        "cannot compute metrics: no episode steps remain");
  Metrics m;
  double sum_d = 0.0, sum_v = 0.0;
  const int n = static_cast<int>(log.size()) - skip_steps;
  for (size_t i = skip_steps; i < log.size(); ++i) {
    const double ad = std::abs(log[i].d_e);
    const double av = std::abs(log[i].v_e);
    sum_d += ad;
    sum_v += av;
    m.mce = std::max(m.mce, ad);
    m.mve = std::max(m.mve, av);
  }
  m.ace = sum_d / n;
  m.ave = sum_v / n;
  return m;
}

GemState gem_plant_full_step(const GemState& s, const GemControl& u,
                             const GemPlantParams& plant,
                             const BicycleParams& vehicle) {
  const double dt = vehicle.dt;
  const Eigen::Vector2d next =
      gem_plant_step(Eigen::Vector2d(s.v, s.phi_dot), u.vec(), plant);
  GemState out;
  out.x = s.x + s.v * std::cos(s.theta) * dt;
  out.y = s.y + s.v * std::sin(s.theta) * dt;
  out.theta = wrap_angle(s.theta + s.v * std::tan(s.phi) / vehicle.L * dt);
  out.phi = std::clamp(s.phi + s.phi_dot * dt, -vehicle.phi_max,
                       vehicle.phi_max);
  out.v = next[0];
  out.phi_dot = next[1];
  return out;
}

WarthogState warthog_plant_full_step(const WarthogState& s,
                                     const WarthogControl& u,
                                     const WarthogPlantParams& plant,
                                     const WarthogParams& vehicle) {
  const double dt = vehicle.dt;
  const Eigen::Vector2d next =
      warthog_plant_step(Eigen::Vector2d(s.v, s.omega), u.vec(), plant);
  WarthogState out;
  out.x = s.x + s.v * std::cos(s.theta) * dt;
  out.y = s.y + s.v * std::sin(s.theta) * dt;
  out.theta = wrap_angle(s.theta + s.omega * dt);
  out.v = next[0];
  out.omega = next[1];
  return out;
}

namespace {

double perturb_fraction_check(double fraction) {
  if (!std::isfinite(fraction) || fraction < 0.0 || fraction >= 1.0)
    throw std::invalid_argument("perturbation fraction must be in [0, 1)");
  return fraction;
}

}  // namespace

GemPlantParams perturb_plant(const GemPlantParams& nominal, double fraction,
                             unsigned seed) {
  perturb_fraction_check(fraction);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> scale(1.0 - fraction, 1.0 + fraction);
  GemPlantParams out = nominal;
  out.accel_gain *= scale(rng);
  out.brake_gain *= scale(rng);
  out.drag *= scale(rng);
  out.tau_phidot *= scale(rng);
  return out;
}

WarthogPlantParams perturb_plant(const WarthogPlantParams& nominal,
                                 double fraction, unsigned seed) {
  perturb_fraction_check(fraction);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> scale(1.0 - fraction, 1.0 + fraction);
  WarthogPlantParams out = nominal;
  out.tau_v *= scale(rng);
  out.tau_w *= scale(rng);
  out.slip_gain *= scale(rng);
  return out;
}

namespace {

int episode_step_count(double duration_s, double dt) {
  const int steps = static_cast<int>(std::llround(duration_s / dt));
  if (steps <= 0)
    throw std::invalid_argument(
        "episode duration yields an empty log; no metrics can be computed");
  return steps;
}

int effective_skip(double skip_s, double dt, size_t log_size) {
  const int skip = static_cast<int>(std::llround(skip_s / dt));
  // A divergence abort can leave fewer steps than the skip span; score the
  // whole partial log in that case (the diverged flag marks it anyway).
  return static_cast<size_t>(skip) < log_size ? skip : 0;
}

}  // namespace

EpisodeResult run_gem_episode(const GemEpisodeSetup& setup) {
  setup.track.validate();
  setup.noise.validate();
  setup.options.validate();
  const double dt = setup.vehicle.dt;
  const int steps = episode_step_count(setup.options.duration_s, dt);
  const ReferenceTrajectory ref = build_reference(setup.track);

  GemState truth;
  const Eigen::Vector2d p0 = ref.position(0.0);
  truth.x = p0.x();
  truth.y = p0.y();
  truth.theta = ref.heading(0.0);
  truth.phi = 0.0;
  truth.v = 0.0;
  truth.phi_dot = 0.0;

  GemMpc mpc(ref, setup.model, setup.weights, setup.mpc, setup.vehicle);
  std::mt19937 rng(setup.noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  EpisodeResult out;
  out.log.reserve(steps);
  std::optional<double> true_hint;
  for (int k = 0; k < steps; ++k) {
    // Fixed draw order (x, y, theta, v) keeps the stream reproducible.
    const double nx = gauss(rng);
    const double ny = gauss(rng);
    const double nth = gauss(rng);
    const double nv = gauss(rng);
    GemState meas = truth;
    meas.x += setup.noise.position_sigma * nx;
    meas.y += setup.noise.position_sigma * ny;
    meas.theta = wrap_angle(meas.theta + setup.noise.heading_sigma * nth);
    meas.v += setup.noise.velocity_sigma * nv;

    const MpcStepResult res = mpc.step(meas);

    const ProjectionResult proj = ref.project(truth.x, truth.y, true_hint);
    true_hint = proj.s;

    EpisodeStep step;
    step.t = k * dt;
    step.true_state = Eigen::VectorXd(6);
    step.true_state << truth.x, truth.y, truth.theta, truth.phi, truth.v,
        truth.phi_dot;
    step.measured_state = Eigen::VectorXd(6);
    step.measured_state << meas.x, meas.y, meas.theta, meas.phi, meas.v,
        meas.phi_dot;
    step.psi = res.psi.vec();
    step.control = res.control.vec();
    step.iterations = res.solution.iterations;
    step.cost = res.solution.cost;
    step.warning = res.warning;
    step.d_e = proj.d_e;
    step.v_e = truth.v - proj.v_p;
    out.log.push_back(std::move(step));

    if (std::abs(proj.d_e) > setup.options.divergence_limit) {
      out.diverged = true;
      break;
    }

    truth = gem_plant_full_step(truth, res.control, setup.plant, setup.vehicle);
    if (setup.options.process_noise) {
      const double w = setup.options.process_sigma * std::sqrt(dt);
      truth.v = std::max(0.0, truth.v + w * gauss(rng));
      truth.phi_dot += w * gauss(rng);
    }
  }
  out.metrics = compute_metrics(
      out.log, effective_skip(setup.options.metrics_skip_s, dt, out.log.size()));
  return out;
}

EpisodeResult run_warthog_episode(const WarthogEpisodeSetup& setup) {
  setup.track.validate();
  setup.noise.validate();
  setup.options.validate();
  const double dt = setup.vehicle.dt;
  const int steps = episode_step_count(setup.options.duration_s, dt);
  const ReferenceTrajectory ref = build_reference(setup.track);

  WarthogState truth;
  const Eigen::Vector2d p0 = ref.position(0.0);
  truth.x = p0.x();
  truth.y = p0.y();
  truth.theta = ref.heading(0.0);
  truth.v = 0.0;
  truth.omega = 0.0;

  WarthogMpc mpc(ref, setup.model, setup.weights, setup.mpc, setup.vehicle);
  std::mt19937 rng(setup.noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  EpisodeResult out;
  out.log.reserve(steps);
  std::optional<double> true_hint;
  for (int k = 0; k < steps; ++k) {
    const double nx = gauss(rng);
    const double ny = gauss(rng);
    const double nth = gauss(rng);
    const double nv = gauss(rng);
    WarthogState meas = truth;
    meas.x += setup.noise.position_sigma * nx;
    meas.y += setup.noise.position_sigma * ny;
    meas.theta = wrap_angle(meas.theta + setup.noise.heading_sigma * nth);
    meas.v += setup.noise.velocity_sigma * nv;

    const WarthogMpcStepResult res = mpc.step(meas);

    const ProjectionResult proj = ref.project(truth.x, truth.y, true_hint);
    true_hint = proj.s;

    EpisodeStep step;
    step.t = k * dt;
    step.true_state = Eigen::VectorXd(5);
    step.true_state << truth.x, truth.y, truth.theta, truth.v, truth.omega;
    step.measured_state = Eigen::VectorXd(5);
    step.measured_state << meas.x, meas.y, meas.theta, meas.v, meas.omega;
    step.psi = res.psi.vec();
    step.control = res.control.vec();
    step.iterations = res.solution.iterations;
    step.cost = res.solution.cost;
    step.warning = res.warning;
    step.d_e = proj.d_e;
    step.v_e = truth.v - proj.v_p;
    out.log.push_back(std::move(step));

    if (std::abs(proj.d_e) > setup.options.divergence_limit) {
      out.diverged = true;
      break;
    }

    truth =
        warthog_plant_full_step(truth, res.control, setup.plant, setup.vehicle);
    if (setup.options.process_noise) {
      const double w = setup.options.process_sigma * std::sqrt(dt);
      truth.v = std::max(0.0, truth.v + w * gauss(rng));
      truth.omega += w * gauss(rng);
    }
  }
  out.metrics = compute_metrics(
      out.log, effective_skip(setup.options.metrics_skip_s, dt, out.log.size()));
  return out;
}

namespace {

const std::vector<std::string>& episode_csv_columns(
    const std::string& platform) {
  static const std::vector<std::string> gem_cols = {
      "t",
      "x", "y", "theta", "phi", "v", "phi_dot",
      "meas_x", "meas_y", "meas_theta", "meas_phi", "meas_v", "meas_phi_dot",
      "err_d_e", "err_theta_e", "err_v_e", "err_d_e_dot", "err_theta_e_dot",
      "err_v_e_dot", "err_v", "err_phi_dot", "err_phi",
      "pedal", "brake", "phi_dot_cmd",
      "iterations", "cost", "warning", "d_e", "v_e"};
  static const std::vector<std::string> warthog_cols = {
      "t",
      "x", "y", "theta", "v", "omega",
      "meas_x", "meas_y", "meas_theta", "meas_v", "meas_omega",
      "err_d_e", "err_theta_e", "err_v_e", "err_theta_e_dot", "err_v",
      "err_omega",
      "v_cmd", "omega_cmd",
      "iterations", "cost", "warning", "d_e", "v_e"};
  if (platform == "gem") return gem_cols;
  if (platform == "warthog") return warthog_cols;
  throw std::invalid_argument("unknown platform: " + platform);
}

}  // namespace

void write_episode_csv(const std::string& path, const EpisodeResult& result,
                       const std::string& platform) {
  const std::vector<std::string>& cols = episode_csv_columns(platform);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << std::setprecision(17);
  for (size_t i = 0; i < cols.size(); ++i)
    f << (i ? "," : "") << cols[i];
  f << "\n";
  for (const EpisodeStep& s : result.log) {
    f << s.t;
    for (int i = 0; i < s.true_state.size(); ++i) f << "," << s.true_state[i];
    for (int i = 0; i < s.measured_state.size(); ++i)
      f << "," << s.measured_state[i];
    for (int i = 0; i < s.psi.size(); ++i) f << "," << s.psi[i];
    for (int i = 0; i < s.control.size(); ++i) f << "," << s.control[i];
    f << "," << s.iterations << "," << s.cost << "," << (s.warning ? 1 : 0)
      << "," << s.d_e << "," << s.v_e << "\n";
  }
  if (!f) throw std::runtime_error("failed writing: " + path);
}

void write_metrics_json(const std::string& path, const Metrics& metrics) {
  nlohmann::ordered_json j;
  j["ace"] = metrics.ace;
  j["mce"] = metrics.mce;
  j["ave"] = metrics.ave;
  j["mve"] = metrics.mve;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("failed writing: " + path);
}

namespace {

BatchRow run_batch_scenario(const BatchScenario& sc, const MlpModel& gem_model,
                            const MlpModel& warthog_model) {
  BatchRow row;
  row.name = sc.name;
  row.platform = sc.platform;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    EpisodeResult result;
    if (sc.platform == "gem") {
      GemEpisodeSetup setup;
      setup.track = sc.track;
      setup.model = gem_model;
      if (sc.plant_perturbation > 0.0)
        setup.plant =
            perturb_plant(setup.plant, sc.plant_perturbation, sc.noise.seed);
      if (sc.weights.A.size() > 0) setup.weights = sc.weights;
      setup.mpc = sc.mpc;
      setup.noise = sc.noise;
      setup.options = sc.options;
      result = run_gem_episode(setup);
    } else if (sc.platform == "warthog") {
      WarthogEpisodeSetup setup;
      setup.track = sc.track;
      setup.model = warthog_model;
      if (sc.plant_perturbation > 0.0)
        setup.plant =
            perturb_plant(setup.plant, sc.plant_perturbation, sc.noise.seed);
      if (sc.weights.A.size() > 0) setup.weights = sc.weights;
      setup.mpc = sc.mpc;
      setup.noise = sc.noise;
      setup.options = sc.options;
      result = run_warthog_episode(setup);
    } else {
      throw std::invalid_argument("unknown platform: " + sc.platform);
    }
    row.ok = true;
    row.metrics = result.metrics;
    row.diverged = result.diverged;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
                   .count();
  return row;
}

}  // namespace

std::vector<BatchRow> batch_evaluate(const std::vector<BatchScenario>& scenarios,
                                     const MlpModel& gem_model,
                                     const MlpModel& warthog_model,
                                     int parallelism) {
  if (parallelism < 1)
    throw std::invalid_argument("parallelism must be at least 1");
  std::vector<BatchRow> rows(scenarios.size());
  if (scenarios.empty()) return rows;
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i; (i = next.fetch_add(1)) < scenarios.size();)
      rows[i] = run_batch_scenario(scenarios[i], gem_model, warthog_model);
  };
  const int n_threads =
      std::min<int>(parallelism, static_cast<int>(scenarios.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

namespace {

std::string row_status(const BatchRow& row) {
  if (!row.ok) return "failed: " + row.error;
  return row.diverged ? "diverged" : "ok";
}

}  // namespace

std::string format_batch_table(const std::vector<BatchRow>& rows) {
  size_t name_w = 8;
  for (const BatchRow& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_w) + 2) << "scenario"
      << std::setw(10) << "platform" << std::right << std::setw(8) << "ACE"
      << std::setw(8) << "MCE" << std::setw(8) << "AVE" << std::setw(8)
      << "MVE"
      << "  status\n";
  out << std::string(name_w + 2 + 10 + 4 * 8 + 2 + 8, '-') << "\n";
  out << std::fixed << std::setprecision(3);
  for (const BatchRow& r : rows) {
    out << std::left << std::setw(static_cast<int>(name_w) + 2) << r.name
        << std::setw(10) << r.platform << std::right;
    if (r.ok) {
      out << std::setw(8) << r.metrics.ace << std::setw(8) << r.metrics.mce
          << std::setw(8) << r.metrics.ave << std::setw(8) << r.metrics.mve;
    } else {
      out << std::setw(8) << "-" << std::setw(8) << "-" << std::setw(8) << "-"
          << std::setw(8) << "-";
    }
    out << "  " << row_status(r) << "\n";
  }
  return out.str();
}

void write_batch_csv(const std::string& path,
                     const std::vector<BatchRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "scenario,platform,ace,mce,ave,mve,status,wall_s\n";
  f << std::setprecision(17);
  for (const BatchRow& r : rows) {
    std::string status = row_status(r);
    std::replace(status.begin(), status.end(), ',', ';');
    f << r.name << "," << r.platform << ",";
    if (r.ok) {
      f << r.metrics.ace << "," << r.metrics.mce << "," << r.metrics.ave << ","
        << r.metrics.mve;
    } else {
      f << ",,,";
    }
    f << "," << status << "," << r.wall_s << "\n";
  }
  if (!f) throw std::runtime_error("failed writing: " + path);
}

}  // namespace tracker
