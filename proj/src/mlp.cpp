#include "tracker/mlp.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace tracker {
namespace {

using nlohmann::json;

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) {
  return z.cwiseMax(0.0);
}

// ReLU mask with the derivative at exactly 0 defined as 0.
Eigen::ArrayXXd relu_mask(const Eigen::MatrixXd& z) {
  return (z.array() > 0.0).cast<double>();
}

json vec_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Row-major flattening so the file reads naturally as [rows][cols].
json mat_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return flat;
}

Eigen::VectorXd vec_from_json(const json& j, int size, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != size) {
    throw std::runtime_error(std::string("model field ") + name +
                             " has wrong length");
  }
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd mat_from_json(const json& j, int rows, int cols,
                              const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows * cols) {
    throw std::runtime_error(std::string("model field ") + name +
                             " has wrong length");
  }
  Eigen::MatrixXd m(rows, cols);
  int k = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[k++].get<double>();
  return m;
}

struct ForwardCache {
  Eigen::MatrixXd z;   // whitened input, d_in x B
  Eigen::MatrixXd h1;  // pre-activation, hidden x B
  Eigen::MatrixXd a1;
  Eigen::MatrixXd h2;
  Eigen::MatrixXd a2;
  Eigen::MatrixXd y;  // whitened output, n x B
};

ForwardCache forward_whitened(const MlpModel& model,
                              const Eigen::MatrixXd& z) {
  ForwardCache c;
  c.z = z;
  c.h1 = (model.W1 * z).colwise() + model.b1;
  c.a1 = relu(c.h1);
  c.h2 = (model.W2 * c.a1).colwise() + model.b2;
  c.a2 = relu(c.h2);
  c.y = (model.W3 * c.a2).colwise() + model.b3;
  return c;
}

// Stacks states over controls as whitened network input columns.
Eigen::MatrixXd whiten_inputs(const MlpModel& model, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& u) {
  Eigen::MatrixXd in(x.rows() + u.rows(), x.cols());
  in.topRows(x.rows()) = x;
  in.bottomRows(u.rows()) = u;
  return model.input_whitener.transform_cols(in);
}

}  // namespace

Whitener Whitener::fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw std::runtime_error("whitener fit on empty data");
  Whitener w;
  w.mean = rows.colwise().mean();
  const Eigen::ArrayXd var =
      (rows.rowwise() - w.mean.transpose()).array().square().colwise().mean();
  w.std = var.sqrt().max(1e-8).matrix();
  return w;
}

Whitener Whitener::identity(int dim) {
  Whitener w;
  w.mean = Eigen::VectorXd::Zero(dim);
  w.std = Eigen::VectorXd::Ones(dim);
  return w;
}

MlpModel MlpModel::zero(const std::string& platform, double dt, int n, int m,
                        int hidden) {
  MlpModel model;
  model.platform = platform;
  model.dt = dt;
  model.layer_sizes = {n + m, hidden, hidden, n};
  model.W1 = Eigen::MatrixXd::Zero(hidden, n + m);
  model.W2 = Eigen::MatrixXd::Zero(hidden, hidden);
  model.W3 = Eigen::MatrixXd::Zero(n, hidden);
  model.b1 = Eigen::VectorXd::Zero(hidden);
  model.b2 = Eigen::VectorXd::Zero(hidden);
  model.b3 = Eigen::VectorXd::Zero(n);
  model.input_whitener = Whitener::identity(n + m);
  model.output_whitener = Whitener::identity(n);
  return model;
}

void MlpModel::validate() const {
  if (layer_sizes.size() != 4) {
    throw std::runtime_error("model must have exactly two hidden layers");
  }
  const int d_in = layer_sizes[0], h1 = layer_sizes[1], h2 = layer_sizes[2],
            n = layer_sizes[3];
  auto check = [](bool ok, const char* what) {
    if (!ok) throw std::runtime_error(std::string("model shape error: ") + what);
  };
  check(W1.rows() == h1 && W1.cols() == d_in, "W1");
  check(W2.rows() == h2 && W2.cols() == h1, "W2");
  check(W3.rows() == n && W3.cols() == h2, "W3");
  check(b1.size() == h1, "b1");
  check(b2.size() == h2, "b2");
  check(b3.size() == n, "b3");
  check(input_whitener.mean.size() == d_in && input_whitener.std.size() == d_in,
        "input whitener");
  check(output_whitener.mean.size() == n && output_whitener.std.size() == n,
        "output whitener");
  const bool finite = W1.allFinite() && W2.allFinite() && W3.allFinite() &&
                      b1.allFinite() && b2.allFinite() && b3.allFinite() &&
                      input_whitener.mean.allFinite() &&
                      input_whitener.std.allFinite() &&
                      output_whitener.mean.allFinite() &&
                      output_whitener.std.allFinite();
  if (!finite) throw std::runtime_error("model contains non-finite values");
}

void MlpModel::save(const std::string& path) const {
  validate();
  json j;
  j["format_version"] = 1;
  j["platform"] = platform;
  j["dt"] = dt;
  j["layer_sizes"] = layer_sizes;
  j["activation"] = "relu";
  j["whitening"] = "input_and_output";
  j["input_mean"] = vec_to_json(input_whitener.mean);
  j["input_std"] = vec_to_json(input_whitener.std);
  j["output_mean"] = vec_to_json(output_whitener.mean);
  j["output_std"] = vec_to_json(output_whitener.std);
  j["W1"] = mat_to_json(W1);
  j["b1"] = vec_to_json(b1);
  j["W2"] = mat_to_json(W2);
  j["b2"] = vec_to_json(b2);
  j["W3"] = mat_to_json(W3);
  j["b3"] = vec_to_json(b3);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << j.dump(2) << "\n";
}

MlpModel MlpModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  if (j.value("format_version", 0) != 1) {
    throw std::runtime_error(path + ": unsupported model format version");
  }
  MlpModel model;
  model.platform = j.at("platform").get<std::string>();
  model.dt = j.at("dt").get<double>();
  model.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (model.layer_sizes.size() != 4) {
    throw std::runtime_error(path + ": expected 4 layer sizes");
  }
  const int d_in = model.layer_sizes[0], h1 = model.layer_sizes[1],
            h2 = model.layer_sizes[2], n = model.layer_sizes[3];
  model.input_whitener.mean = vec_from_json(j.at("input_mean"), d_in, "input_mean");
  model.input_whitener.std = vec_from_json(j.at("input_std"), d_in, "input_std");
  model.output_whitener.mean =
      vec_from_json(j.at("output_mean"), n, "output_mean");
  model.output_whitener.std = vec_from_json(j.at("output_std"), n, "output_std");
  model.W1 = mat_from_json(j.at("W1"), h1, d_in, "W1");
  model.b1 = vec_from_json(j.at("b1"), h1, "b1");
  model.W2 = mat_from_json(j.at("W2"), h2, h1, "W2");
  model.b2 = vec_from_json(j.at("b2"), h2, "b2");
  model.W3 = mat_from_json(j.at("W3"), n, h2, "W3");
  model.b3 = vec_from_json(j.at("b3"), n, "b3");
  model.validate();
  return model;
}

Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u) {
  if (x.size() != model.state_dim() || u.size() != model.control_dim()) {
    throw std::runtime_error("mlp_forward dimension mismatch");
  }
  const Eigen::MatrixXd z = whiten_inputs(model, x, u);
  const ForwardCache c = forward_whitened(model, z);
  return model.output_whitener.inverse(c.y.col(0));
}

Eigen::MatrixXd mlp_forward_batch(const MlpModel& model,
                                  const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& u) {
  if (x.rows() != model.state_dim() || u.rows() != model.control_dim() ||
      x.cols() != u.cols()) {
    throw std::runtime_error("mlp_forward_batch dimension mismatch");
  }
  const Eigen::MatrixXd z = whiten_inputs(model, x, u);
  const ForwardCache c = forward_whitened(model, z);
  return model.output_whitener.inverse_cols(c.y);
}

void mlp_jacobians(const MlpModel& model, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, Eigen::MatrixXd& f_x,
                   Eigen::MatrixXd& f_u) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  const Eigen::MatrixXd z = whiten_inputs(model, x, u);
  const ForwardCache c = forward_whitened(model, z);
  // d out / d raw_input = S_out W3 D2 W2 D1 W1 S_in^{-1}, with D the active
  // ReLU masks and S the whitener scalings.
  const Eigen::ArrayXd d1 = relu_mask(c.h1).col(0);
  const Eigen::ArrayXd d2 = relu_mask(c.h2).col(0);
  Eigen::MatrixXd j = model.W1;  // hidden x d_in
  j.array().colwise() *= d1;
  j = model.W2 * j;
  j.array().colwise() *= d2;
  j = model.W3 * j;  // n x d_in, still whitened-to-whitened
  j.array().colwise() *= model.output_whitener.std.array();
  j.array().rowwise() /= model.input_whitener.std.transpose().array();
  f_x = j.leftCols(n);
  f_u = j.rightCols(m);
}

double mlp_training_loss(const MlpModel& model, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& u,
                         const Eigen::MatrixXd& x_next) {
  const Eigen::MatrixXd z = whiten_inputs(model, x, u);
  const ForwardCache c = forward_whitened(model, z);
  const Eigen::MatrixXd target = model.output_whitener.transform_cols(x_next);
  return (c.y - target).squaredNorm() / static_cast<double>(c.y.size());
}

MlpGradients mlp_backward(const MlpModel& model, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& u,
                          const Eigen::MatrixXd& x_next) {
  if (x.cols() == 0) throw std::runtime_error("mlp_backward on empty batch");
  const Eigen::MatrixXd z = whiten_inputs(model, x, u);
  const ForwardCache c = forward_whitened(model, z);
  const Eigen::MatrixXd target = model.output_whitener.transform_cols(x_next);

  MlpGradients g;
  // dLoss/dy for loss = mean over every entry of the squared residual.
  const Eigen::MatrixXd g3 =
      2.0 / static_cast<double>(c.y.size()) * (c.y - target);
  g.W3 = g3 * c.a2.transpose();
  g.b3 = g3.rowwise().sum();
  Eigen::MatrixXd g2 = model.W3.transpose() * g3;
  g2.array() *= relu_mask(c.h2);
  g.W2 = g2 * c.a1.transpose();
  g.b2 = g2.rowwise().sum();
  Eigen::MatrixXd g1 = model.W2.transpose() * g2;
  g1.array() *= relu_mask(c.h1);
  g.W1 = g1 * c.z.transpose();
  g.b1 = g1.rowwise().sum();
  return g;
}

}  // namespace tracker
