#include "tracker/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tracker {
namespace {

struct Velocity {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;

  static Velocity zeros_like(const MlpModel& m) {
    Velocity v;
    v.W1 = Eigen::MatrixXd::Zero(m.W1.rows(), m.W1.cols());
    v.W2 = Eigen::MatrixXd::Zero(m.W2.rows(), m.W2.cols());
    v.W3 = Eigen::MatrixXd::Zero(m.W3.rows(), m.W3.cols());
    v.b1 = Eigen::VectorXd::Zero(m.b1.size());
    v.b2 = Eigen::VectorXd::Zero(m.b2.size());
    v.b3 = Eigen::VectorXd::Zero(m.b3.size());
    return v;
  }
};

void momentum_update(MlpModel& model, Velocity& vel, const MlpGradients& g,
                     double lr, double momentum) {
  vel.W1 = momentum * vel.W1 - lr * g.W1;
  vel.W2 = momentum * vel.W2 - lr * g.W2;
  vel.W3 = momentum * vel.W3 - lr * g.W3;
  vel.b1 = momentum * vel.b1 - lr * g.b1;
  vel.b2 = momentum * vel.b2 - lr * g.b2;
  vel.b3 = momentum * vel.b3 - lr * g.b3;
  model.W1 += vel.W1;
  model.W2 += vel.W2;
  model.W3 += vel.W3;
  model.b1 += vel.b1;
  model.b2 += vel.b2;
  model.b3 += vel.b3;
}

Eigen::MatrixXd he_init(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / cols));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace

double evaluate_mse(const MlpModel& model, const TransitionDataset& data) {
  double sq = 0.0;
  // Predict in physical units; chunked to keep the working set small.
  const int chunk = 8192;
  for (int begin = 0; begin < data.rows(); begin += chunk) {
    const int count = std::min(chunk, data.rows() - begin);
    const Eigen::MatrixXd pred = mlp_forward_batch(
        model, data.states.middleRows(begin, count).transpose(),
        data.controls.middleRows(begin, count).transpose());
    sq += (pred - data.next_states.middleRows(begin, count).transpose())
              .squaredNorm();
  }
  return sq / static_cast<double>(data.rows() * data.state_dim());
}

ChannelErrors evaluate_per_channel(const MlpModel& model,
                                   const TransitionDataset& data) {
  const int n = model.state_dim();
  const Eigen::MatrixXd pred = mlp_forward_batch(
      model, data.states.transpose(), data.controls.transpose());
  const Eigen::MatrixXd err =
      (pred - data.next_states.transpose()).transpose();
  ChannelErrors out;
  for (int c = 0; c < n; ++c) {
    out.rms.push_back(std::sqrt(err.col(c).squaredNorm() / data.rows()));
    const Eigen::VectorXd col = data.next_states.col(c);
    const double mean = col.mean();
    out.target_std.push_back(
        std::sqrt((col.array() - mean).square().mean()));
  }
  return out;
}

std::pair<MlpModel, TrainReport> train_dynamics(const TransitionDataset& data,
                                                const TrainConfig& config,
                                                std::uint64_t seed) {
  data.validate();
  if (data.rows() == 0) throw std::runtime_error("training on empty dataset");
  if (data.rows() < config.min_rows) {
    throw std::runtime_error("dataset has " + std::to_string(data.rows()) +
                             " rows; need at least " +
                             std::to_string(config.min_rows));
  }

  const int n = data.state_dim();
  const int m = data.control_dim();
  const int train_rows = std::max(
      1, static_cast<int>(std::lround(data.rows() * (1.0 - config.val_fraction))));
  const TransitionDataset train = data.slice(0, train_rows);
  const TransitionDataset val = data.slice(train_rows, data.rows());

  std::mt19937_64 rng(seed);
  MlpModel model = MlpModel::zero(data.platform, data.dt, n, m, config.hidden);
  model.W1 = he_init(config.hidden, n + m, rng);
  model.W2 = he_init(config.hidden, config.hidden, rng);
  model.W3 = he_init(n, config.hidden, rng);

  // Whiteners come from the training split only.
  Eigen::MatrixXd train_in(train.rows(), n + m);
  train_in << train.states, train.controls;
  model.input_whitener = Whitener::fit(train_in);
  model.output_whitener = Whitener::fit(train.next_states);

  // Column-major sample blocks for the batched forward/backward.
  const Eigen::MatrixXd tx = train.states.transpose();
  const Eigen::MatrixXd tu = train.controls.transpose();
  const Eigen::MatrixXd ty = train.next_states.transpose();

  Velocity vel = Velocity::zeros_like(model);
  double lr = config.learning_rate;
  TrainReport report;
  report.lr_schedule.emplace_back(0, lr);

  MlpModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  int stale_lr = 0;

  std::vector<int> order(train.rows());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int begin = 0; begin < train.rows(); begin += config.batch_size) {
      const int count = std::min(config.batch_size, train.rows() - begin);
      Eigen::MatrixXd bx(n, count), bu(m, count), by(n, count);
      for (int i = 0; i < count; ++i) {
        const int r = order[begin + i];
        bx.col(i) = tx.col(r);
        bu.col(i) = tu.col(r);
        by.col(i) = ty.col(r);
      }
      const MlpGradients g = mlp_backward(model, bx, bu, by);
      momentum_update(model, vel, g, lr, config.momentum);
    }

    const double val_mse = val.rows() > 0 ? evaluate_mse(model, val)
                                          : evaluate_mse(model, train);
    if (!std::isfinite(val_mse)) {
      throw std::runtime_error(
          "training diverged: non-finite validation loss at epoch " +
          std::to_string(epoch) + " (learning rate " + std::to_string(lr) +
          ")");
    }
    report.val_history.push_back(val_mse);
    report.epochs_run = epoch;

    // Any new best keeps training alive; only progress beyond the relative
    // margin counts against the annealing plateau.
    if (val_mse < best_val * (1.0 - config.lr_plateau_rel)) {
      stale_lr = 0;
    } else {
      ++stale_lr;
    }
    if (val_mse < best_val) {
      best_val = val_mse;
      best = model;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= config.patience) break;
    if (stale_lr >= config.lr_patience && lr > config.min_learning_rate) {
      lr = std::max(0.5 * lr, config.min_learning_rate);
      report.lr_schedule.emplace_back(epoch, lr);
      stale_lr = 0;
    }
  }

  model = best;
  report.final_train_mse = evaluate_mse(model, train);
  report.final_val_mse = val.rows() > 0 ? best_val : report.final_train_mse;
  return {std::move(model), report};
}

}  // namespace tracker
