#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace tracker {

// One-step transition log (x_t, u_t) -> x_{t+1}. Rows from the same drive
// share an episode_id; transitions never straddle episode boundaries
// because each row already carries its own successor state.
struct TransitionDataset {
  std::string platform;  // "gem" or "warthog"; fixes dt and channel names
  double dt = 0.0;
  std::vector<std::string> state_names;
  std::vector<std::string> control_names;
  Eigen::MatrixXd states;       // rows x n
  Eigen::MatrixXd controls;     // rows x m
  Eigen::MatrixXd next_states;  // rows x n
  std::vector<int> episode_ids;

  int rows() const { return static_cast<int>(states.rows()); }
  int state_dim() const { return static_cast<int>(states.cols()); }
  int control_dim() const { return static_cast<int>(controls.cols()); }

  void validate() const;  // dimension agreement, finiteness

  // Row range [begin, end).
  TransitionDataset slice(int begin, int end) const;

  // CSV with header: episode_id, state channels, control channels, then the
  // same state channels prefixed with next_.
  static TransitionDataset load_csv(const std::string& path);
  void save_csv(const std::string& path) const;
};

// Empty dataset with the channel layout for a platform ("gem"/"warthog").
TransitionDataset make_dataset(const std::string& platform);

}  // namespace tracker
