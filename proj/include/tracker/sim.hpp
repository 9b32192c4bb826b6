#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tracker/dataset.hpp"
#include "tracker/mlp.hpp"
#include "tracker/plants.hpp"
#include "tracker/spline.hpp"
#include "tracker/tracking.hpp"

namespace tracker {

// --- Track generation ---------------------------------------------------

enum class TrackShape {
  kCircle,
  kOval,
  kSnake,
  kEight,
  kCombination,          // straight + snake + constant-radius arc
  kWarthogCombination,   // same recipe at skid-steer scale
};

TrackShape track_shape_from_string(const std::string& name);
std::string to_string(TrackShape shape);
bool track_is_closed(TrackShape shape);

// Geometry and speed-profile recipe for one reference path. Fields are
// read per shape: circle/eight use radius; oval uses radius + length
// (straight segments); snake uses amplitude, wavelength, and length.
// The combination shapes have their geometry built in.
//
// The profile speed is `speed` everywhere except an optional launch ramp:
// when 0 <= start_speed < speed, the profile rises linearly from
// start_speed to speed over the first ramp_length meters of path.
struct TrackSpec {
  TrackShape shape = TrackShape::kCircle;
  double radius = 150.0;      // [m]
  double amplitude = 3.0;     // [m]
  double wavelength = 30.0;   // [m]
  double length = 120.0;      // [m]
  double speed = 7.0;         // [m/s]
  double start_speed = -1.0;  // negative: profile is uniform at `speed`
  double ramp_length = 40.0;  // [m]
  double spacing = 2.0;       // approximate waypoint spacing [m]

  void validate() const;  // throws std::invalid_argument
};

// Waypoint polyline for the spec; validates first. Closed shapes omit the
// duplicate closing point (fit_cubic_spline adds the wrap itself).
std::vector<Waypoint> generate_track(const TrackSpec& spec);

// generate_track + fit_cubic_spline with the shape's closure flag.
ReferenceTrajectory build_reference(const TrackSpec& spec);

// --- Measurement noise --------------------------------------------------

// Gaussian measurement corruption applied to the state the controller
// sees. The true state driving the plant is never touched. Draw order per
// step is fixed, so a given seed yields one reproducible noise stream
// regardless of which sigmas are zero.
struct NoiseSpec {
  double position_sigma = 0.25;  // [m], applied to x and y independently
  double heading_sigma = 0.0;    // [rad]
  double velocity_sigma = 0.0;   // [m/s]
  unsigned seed = 0;

  void validate() const;  // throws std::invalid_argument on negative sigma
};

// --- Episodes -----------------------------------------------------------

struct EpisodeOptions {
  double duration_s = 30.0;
  double divergence_limit = 20.0;  // abort once true |d_e| exceeds this [m]
  double metrics_skip_s = 0.0;     // initial span excluded from metrics
  bool process_noise = false;      // optional plant-side disturbance
  double process_sigma = 0.0;      // disturbance scale when enabled

  void validate() const;  // throws std::invalid_argument
};

// One control period of an episode. `true_state` / `measured_state` are
// the platform state vectors (GEM: x, y, theta, phi, v, phi_dot; warthog:
// x, y, theta, v, omega); `psi` is the error state the controller was fed
// (computed from the measurement); `d_e` and `v_e` are the errors of the
// TRUE state against the reference, which is what the metrics score.
struct EpisodeStep {
  double t = 0.0;
  Eigen::VectorXd true_state;
  Eigen::VectorXd measured_state;
  Eigen::VectorXd psi;
  Eigen::VectorXd control;
  int iterations = 0;
  double cost = 0.0;
  bool warning = false;
  double d_e = 0.0;  // true cross-track error [m]
  double v_e = 0.0;  // true speed error [m/s]
};

// Aggregates |d_e| and |v_e| over log[skip_steps:]. Throws
// std::invalid_argument when no steps remain.
Metrics compute_metrics(const std::vector<EpisodeStep>& log,
                        int skip_steps = 0);

struct EpisodeResult {
  std::vector<EpisodeStep> log;
  Metrics metrics;        // over the log minus the configured skip span
  bool diverged = false;  // true when the divergence limit cut the run short
};

// Ground-truth plant advance of the full vehicle state: kinematic pose
// integration with the plant supplying the next velocity channels. The
// controller never sees these; it predicts with its learned model.
GemState gem_plant_full_step(const GemState& s, const GemControl& u,
                             const GemPlantParams& plant,
                             const BicycleParams& vehicle);
WarthogState warthog_plant_full_step(const WarthogState& s,
                                     const WarthogControl& u,
                                     const WarthogPlantParams& plant,
                                     const WarthogParams& vehicle);

// Plant-parameter perturbation for robustness sweeps: every gain and time
// constant is scaled by an independent uniform draw from
// [1 - fraction, 1 + fraction]. The step size dt is never touched.
GemPlantParams perturb_plant(const GemPlantParams& nominal, double fraction,
                             unsigned seed);
WarthogPlantParams perturb_plant(const WarthogPlantParams& nominal,
                                 double fraction, unsigned seed);

struct GemEpisodeSetup {
  TrackSpec track;
  MlpModel model;            // learned dynamics the controller plans with
  GemPlantParams plant;      // ground truth the vehicle actually obeys
  BicycleParams vehicle;
  TrackingWeights weights = TrackingWeights::gem_default();
  MpcConfig mpc;
  NoiseSpec noise;
  EpisodeOptions options;
};

struct WarthogEpisodeSetup {
  TrackSpec track;
  MlpModel model;
  WarthogPlantParams plant;
  WarthogParams vehicle;
  TrackingWeights weights = TrackingWeights::warthog_default();
  MpcConfig mpc;
  NoiseSpec noise;
  EpisodeOptions options;
};

// Closed-loop episode: the vehicle starts at rest on the track start with
// matched heading; each control period the true state is measured (noise
// applied), the controller plans on the measurement, and the first control
// is applied to the plant. Deterministic given the setup. Throws
// std::invalid_argument on a zero-length episode; a divergence abort
// returns the partial log with `diverged` set instead of throwing.
EpisodeResult run_gem_episode(const GemEpisodeSetup& setup);
EpisodeResult run_warthog_episode(const WarthogEpisodeSetup& setup);

// Episode log as CSV, one row per control period; platform is "gem" or
// "warthog". Column order is documented in the README.
void write_episode_csv(const std::string& path, const EpisodeResult& result,
                       const std::string& platform);

// {"ace": ..., "mce": ..., "ave": ..., "mve": ...}
void write_metrics_json(const std::string& path, const Metrics& metrics);

// --- Batch evaluation ---------------------------------------------------

struct BatchScenario {
  std::string name;
  std::string platform;  // "gem" or "warthog"
  TrackSpec track;
  NoiseSpec noise;
  EpisodeOptions options;
  MpcConfig mpc;
  TrackingWeights weights;          // empty diagonals: platform default
  double plant_perturbation = 0.0;  // fraction, seeded from noise.seed
};

struct BatchRow {
  std::string name;
  std::string platform;
  bool ok = false;
  std::string error;  // failure reason when !ok
  Metrics metrics;
  bool diverged = false;
  double wall_s = 0.0;
};

// Runs every scenario, farming them out over `parallelism` worker threads.
// A scenario that throws becomes a failed row; the batch never aborts.
// Row order matches input order and values are independent of parallelism.
std::vector<BatchRow> batch_evaluate(const std::vector<BatchScenario>& scenarios,
                                     const MlpModel& gem_model,
                                     const MlpModel& warthog_model,
                                     int parallelism);

// Results table: one scenario per row, metric columns aligned for reading.
std::string format_batch_table(const std::vector<BatchRow>& rows);
void write_batch_csv(const std::string& path,
                     const std::vector<BatchRow>& rows);

}  // namespace tracker
