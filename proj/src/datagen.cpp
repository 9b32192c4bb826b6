#include "tracker/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tracker/types.hpp"

namespace tracker {

namespace {

// Band-limited dither: first-order low-pass driven by white noise.
class OuProcess {
 public:
  OuProcess(double pull, double kick) : pull_(pull), kick_(kick) {}
  double step(std::mt19937& rng, std::normal_distribution<double>& gauss) {
    value_ += -pull_ * value_ + kick_ * gauss(rng);
    return value_;
  }
  void reset() { value_ = 0.0; }

 private:
  double pull_;
  double kick_;
  double value_ = 0.0;
};

}  // namespace

TransitionDataset generate_gem_transitions(int rows, unsigned seed,
                                           const GemPlantParams& plant) {
  if (rows <= 0) throw std::invalid_argument("row count must be positive");
  TransitionDataset data = make_dataset("gem");
  data.states.resize(rows, 2);
  data.controls.resize(rows, 3);
  data.next_states.resize(rows, 2);
  data.episode_ids.resize(rows);

  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  std::uniform_real_distribution<double> steer(-0.9, 0.9);
  std::uniform_int_distribution<int> hold(5, 25);
  std::uniform_int_distribution<int> cruise_hold(40, 90);

  const int episode_len = 600;  // 20 s drives, each from rest
  Eigen::Vector2d x(0.0, 0.0);
  Eigen::Vector3d u(0.0, 0.0, 0.0);
  int remaining = 0;
  bool cruising = false;
  double cruise_target = 0.0;
  double ramp_pedal = 0.0;  // per-step increments within a ramp segment
  double ramp_brake = 0.0;
  OuProcess ou_long(0.25, 0.01);
  OuProcess ou_steer(0.15, 0.10);

  for (int i = 0; i < rows; ++i) {
    if (i % episode_len == 0) {
      x = {0.0, 0.0};
      u = {0.0, 0.0, 0.0};
      remaining = 0;
      ou_long.reset();
      ou_steer.reset();
    }
    if (remaining == 0) {
      const double mode = frac(rng);
      const bool ramp = frac(rng) < 0.4;
      cruising = false;
      ramp_pedal = 0.0;
      ramp_brake = 0.0;
      remaining = hold(rng);
      if (x[0] > 9.0) {
        // Governor: rein the speed back into the envelope.
        u[0] = 0.0;
        u[1] = 0.3 + 0.7 * frac(rng);
      } else if (mode < 0.15) {
        const double target = frac(rng);
        if (ramp) {
          u[0] = 0.0;
          ramp_brake = (target - u[1]) / remaining;
        } else {
          u[0] = 0.0;
          u[1] = target;
        }
      } else if (mode < 0.30) {
        u[0] = 0.0;
        u[1] = 0.15 * frac(rng);
      } else if (mode < 0.50) {
        const double target = frac(rng);
        if (ramp) {
          u[1] = 0.0;
          ramp_pedal = (target - u[0]) / remaining;
        } else {
          u[0] = target;
          u[1] = 0.0;
        }
      } else if (mode < 0.65) {
        u[0] = 0.15 * frac(rng);
        u[1] = 0.0;
      } else if (mode < 0.72) {
        u[0] = 0.0;
        u[1] = 0.0;
      } else {
        cruising = true;
        cruise_target = 1.0 + 7.5 * frac(rng);
        remaining = cruise_hold(rng);
      }
      u[2] = steer(rng);
    }
    --remaining;
    u[0] = std::clamp(u[0] + ramp_pedal, 0.0, 1.0);
    u[1] = std::clamp(u[1] + ramp_brake, 0.0, 1.0);
    const double dither_long = ou_long.step(rng, gauss);
    const double dither_steer = ou_steer.step(rng, gauss);

    Eigen::Vector3d cmd = u;
    if (cruising) {
      // Speed servo: feedforward against drag plus a proportional pull,
      // the mode that pins down light-pedal behavior around steady speeds.
      const double feedforward = cruise_target * plant.drag / plant.accel_gain;
      const double correction = 0.4 * (cruise_target - x[0]);
      cmd[0] = std::clamp(feedforward + correction + dither_long, 0.0, 0.6);
      cmd[1] = 0.0;
    } else if (cmd[0] > 0.0) {
      cmd[0] = std::clamp(cmd[0] + dither_long, 0.0, 1.0);
    } else if (cmd[1] > 0.0) {
      cmd[1] = std::clamp(cmd[1] + dither_long, 0.0, 1.0);
    }
    cmd[2] = std::clamp(u[2] + dither_steer, -limits::kSteerRateMax,
                        limits::kSteerRateMax);

    const Eigen::Vector2d next = gem_plant_step(x, cmd, plant);
    data.states.row(i) = x.transpose();
    data.controls.row(i) = cmd.transpose();
    data.next_states.row(i) = next.transpose();
    data.episode_ids[i] = i / episode_len;
    x = next;
  }
  data.validate();
  return data;
}

TransitionDataset generate_warthog_transitions(int rows, unsigned seed,
                                               const WarthogPlantParams& plant) {
  if (rows <= 0) throw std::invalid_argument("row count must be positive");
  TransitionDataset data = make_dataset("warthog");
  data.states.resize(rows, 2);
  data.controls.resize(rows, 2);
  data.next_states.resize(rows, 2);
  data.episode_ids.resize(rows);

  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  std::uniform_real_distribution<double> v_cmd(0.0, limits::kWarthogSpeedMax);
  std::uniform_real_distribution<double> w_cmd(-limits::kWarthogOmegaMax,
                                               limits::kWarthogOmegaMax);
  std::uniform_int_distribution<int> hold(5, 30);

  const int episode_len = 400;  // 20 s drives, each from rest
  Eigen::Vector2d x(0.0, 0.0);
  Eigen::Vector2d u(0.0, 0.0);
  int remaining = 0;
  double ramp_v = 0.0;
  OuProcess ou_v(0.2, 0.02);
  OuProcess ou_w(0.2, 0.05);

  for (int i = 0; i < rows; ++i) {
    if (i % episode_len == 0) {
      x = {0.0, 0.0};
      u = {0.0, 0.0};
      remaining = 0;
      ou_v.reset();
      ou_w.reset();
    }
    if (remaining == 0) {
      const double mode = frac(rng);
      remaining = hold(rng);
      ramp_v = 0.0;
      if (mode < 0.20) {
        // Crawl band: fine low-speed maneuvering.
        u = {0.15 * v_cmd(rng), 0.15 * w_cmd(rng)};
      } else if (mode < 0.28) {
        u = {0.0, 0.0};
      } else if (mode < 0.50) {
        const double target = v_cmd(rng);
        ramp_v = (target - u[0]) / remaining;
        u[1] = w_cmd(rng);
      } else {
        u = {v_cmd(rng), w_cmd(rng)};
      }
    }
    --remaining;
    u[0] = std::clamp(u[0] + ramp_v, limits::kWarthogSpeedMin,
                      limits::kWarthogSpeedMax);
    Eigen::Vector2d cmd = u;
    cmd[0] = std::clamp(u[0] + ou_v.step(rng, gauss), limits::kWarthogSpeedMin,
                        limits::kWarthogSpeedMax);
    cmd[1] = std::clamp(u[1] + ou_w.step(rng, gauss),
                        -limits::kWarthogOmegaMax, limits::kWarthogOmegaMax);

    const Eigen::Vector2d next = warthog_plant_step(x, cmd, plant);
    data.states.row(i) = x.transpose();
    data.controls.row(i) = cmd.transpose();
    data.next_states.row(i) = next.transpose();
    data.episode_ids[i] = i / episode_len;
    x = next;
  }
  data.validate();
  return data;
}

std::string coverage_report(const TransitionDataset& data) {
  std::ostringstream out;
  out << "coverage report: " << data.platform << ", " << data.rows()
      << " rows, "
      << (data.episode_ids.empty() ? 0 : data.episode_ids.back() + 1)
      << " episodes\n";
  constexpr int kBins = 10;
  auto report_channel = [&](const std::string& name,
                            const Eigen::VectorXd& col) {
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    out << "  " << std::left << std::setw(14) << name << std::right
        << std::fixed << std::setprecision(3) << "[" << lo << ", " << hi
        << "]";
    if (hi - lo < 1e-9) {
      out << "  DEGENERATE (channel never moves)\n";
      return;
    }
    std::array<long, kBins> hist{};
    for (int i = 0; i < col.size(); ++i) {
      int b = static_cast<int>((col[i] - lo) / (hi - lo) * kBins);
      b = std::clamp(b, 0, kBins - 1);
      ++hist[b];
    }
    out << "  bins:";
    int occupied = 0;
    for (long c : hist) {
      out << " " << c;
      if (c > 0) ++occupied;
    }
    out << "  (" << occupied << "/" << kBins << " occupied)\n";
  };
  for (size_t c = 0; c < data.state_names.size(); ++c)
    report_channel(data.state_names[c], data.states.col(c));
  for (size_t c = 0; c < data.control_names.size(); ++c)
    report_channel(data.control_names[c], data.controls.col(c));
  return out.str();
}

}  // namespace tracker
