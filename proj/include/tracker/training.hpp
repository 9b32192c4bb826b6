#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tracker/dataset.hpp"
#include "tracker/mlp.hpp"

namespace tracker {

struct TrainConfig {
  int hidden = 64;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int max_epochs = 300;
  int patience = 10;   // early stop after this many epochs with no new best
  int lr_patience = 5;  // halve the rate after this many plateau epochs
  // Validation progress below this relative fraction of the running best
  // counts as a plateau; without the margin, late-stage micro-improvements
  // keep resetting the counter and the rate never anneals (or, once it does,
  // collapses in a runaway).
  double lr_plateau_rel = 1e-3;
  double min_learning_rate = 1e-6;
  double val_fraction = 0.2;  // chronological tail of the dataset
  int min_rows = 1000;
};

struct TrainReport {
  double final_train_mse = 0.0;  // physical units, mean over entries
  double final_val_mse = 0.0;
  int epochs_run = 0;
  std::vector<std::pair<int, double>> lr_schedule;  // (epoch, rate)
  std::vector<double> val_history;                  // one entry per epoch
};

// Mini-batch gradient descent with momentum on the whitened MSE loss.
// Whiteners are fitted on the chronological training split; the best
// validation weights are restored before returning. Deterministic for a
// fixed seed and dataset.
std::pair<MlpModel, TrainReport> train_dynamics(const TransitionDataset& data,
                                                const TrainConfig& config,
                                                std::uint64_t seed);

// Held-out quality per output channel: RMS one-step error and the std of
// the true channel, both in physical units.
struct ChannelErrors {
  std::vector<double> rms;
  std::vector<double> target_std;
};
ChannelErrors evaluate_per_channel(const MlpModel& model,
                                   const TransitionDataset& data);

// Unwhitened mean squared error over all entries of a dataset.
double evaluate_mse(const MlpModel& model, const TransitionDataset& data);

}  // namespace tracker
