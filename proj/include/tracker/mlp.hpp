#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace tracker {

// Per-feature standardization. std is floored at 1e-8 so constant features
// stay finite through the transform.
struct Whitener {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  // Fits column-wise statistics over rows of samples (population std).
  static Whitener fit(const Eigen::MatrixXd& rows);
  static Whitener identity(int dim);

  Eigen::VectorXd transform(const Eigen::VectorXd& v) const {
    return (v - mean).cwiseQuotient(std);
  }
  Eigen::VectorXd inverse(const Eigen::VectorXd& v) const {
    return v.cwiseProduct(std) + mean;
  }
  // Columns are samples.
  Eigen::MatrixXd transform_cols(const Eigen::MatrixXd& m) const {
    return (m.colwise() - mean).array().colwise() / std.array();
  }
  Eigen::MatrixXd inverse_cols(const Eigen::MatrixXd& m) const {
    return (m.array().colwise() * std.array()).matrix().colwise() + mean;
  }
};

// Fully connected net with two ReLU hidden layers and an identity output,
// operating on whitened inputs and producing whitened outputs. The public
// forward/jacobian entry points fold both whiteners in, so callers only
// ever see physical units.
struct MlpModel {
  std::string platform;  // "gem" or "warthog"
  double dt = 0.0;
  std::vector<int> layer_sizes;  // {n + m, hidden, hidden, n}
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;
  Whitener input_whitener;   // over (x, u)
  Whitener output_whitener;  // over x_{t+1}

  int state_dim() const { return layer_sizes.back(); }
  int control_dim() const { return layer_sizes.front() - state_dim(); }

  // Zero-weight model predicting the output mean everywhere.
  static MlpModel zero(const std::string& platform, double dt, int n, int m,
                       int hidden = 64);

  void validate() const;  // throws std::runtime_error on shape/NaN problems
  void save(const std::string& path) const;
  static MlpModel load(const std::string& path);
};

// One-step prediction in physical units.
Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u);

// Batched prediction; columns are samples.
Eigen::MatrixXd mlp_forward_batch(const MlpModel& model,
                                  const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& u);

// Analytic chain-rule Jacobians of mlp_forward through both whiteners and
// the ReLU masks (derivative at exactly 0 is taken as 0).
void mlp_jacobians(const MlpModel& model, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, Eigen::MatrixXd& f_x,
                   Eigen::MatrixXd& f_u);

struct MlpGradients {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;
};

// Training loss: mean over every entry of the squared whitened residual.
// Columns of x/u/x_next are samples in physical units.
double mlp_training_loss(const MlpModel& model, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& u,
                         const Eigen::MatrixXd& x_next);

// Gradients of mlp_training_loss w.r.t. every weight and bias.
MlpGradients mlp_backward(const MlpModel& model, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& u,
                          const Eigen::MatrixXd& x_next);

}  // namespace tracker
