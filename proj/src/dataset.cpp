#include "tracker/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tracker/types.hpp"

namespace tracker {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace.
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

TransitionDataset make_dataset(const std::string& platform) {
  TransitionDataset d;
  d.platform = platform;
  if (platform == "gem") {
    d.dt = kGemDt;
    d.state_names = {"v", "phi_dot"};
    d.control_names = {"pedal", "brake", "phi_dot_cmd"};
  } else if (platform == "warthog") {
    d.dt = kWarthogDt;
    d.state_names = {"v", "omega"};
    d.control_names = {"v_cmd", "omega_cmd"};
  } else {
    throw std::runtime_error("unknown platform: " + platform);
  }
  d.states.resize(0, static_cast<Eigen::Index>(d.state_names.size()));
  d.controls.resize(0, static_cast<Eigen::Index>(d.control_names.size()));
  d.next_states.resize(0, static_cast<Eigen::Index>(d.state_names.size()));
  return d;
}

void TransitionDataset::validate() const {
  const int r = rows();
  if (controls.rows() != r || next_states.rows() != r ||
      static_cast<int>(episode_ids.size()) != r) {
    throw std::runtime_error("dataset row counts disagree");
  }
  if (states.cols() != next_states.cols()) {
    throw std::runtime_error("state and next-state widths disagree");
  }
  if (static_cast<int>(state_names.size()) != states.cols() ||
      static_cast<int>(control_names.size()) != controls.cols()) {
    throw std::runtime_error("channel names do not match data widths");
  }
  if (!states.allFinite() || !controls.allFinite() ||
      !next_states.allFinite()) {
    throw std::runtime_error("dataset contains non-finite values");
  }
}

TransitionDataset TransitionDataset::slice(int begin, int end) const {
  if (begin < 0 || end > rows() || begin > end) {
    throw std::out_of_range("dataset slice out of range");
  }
  TransitionDataset out = *this;
  const int count = end - begin;
  out.states = states.middleRows(begin, count);
  out.controls = controls.middleRows(begin, count);
  out.next_states = next_states.middleRows(begin, count);
  out.episode_ids.assign(episode_ids.begin() + begin,
                         episode_ids.begin() + end);
  return out;
}

void TransitionDataset::save_csv(const std::string& path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  out << "episode_id";
  for (const auto& n : state_names) out << "," << n;
  for (const auto& n : control_names) out << "," << n;
  for (const auto& n : state_names) out << ",next_" << n;
  out << "\n";
  out.precision(17);
  for (int r = 0; r < rows(); ++r) {
    out << episode_ids[r];
    for (int c = 0; c < states.cols(); ++c) out << "," << states(r, c);
    for (int c = 0; c < controls.cols(); ++c) out << "," << controls(r, c);
    for (int c = 0; c < next_states.cols(); ++c)
      out << "," << next_states(r, c);
    out << "\n";
  }
}

TransitionDataset TransitionDataset::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty dataset file");
  }
  const auto header = split_csv(line);

  // Identify the platform by its channel layout.
  TransitionDataset out;
  for (const char* platform : {"gem", "warthog"}) {
    TransitionDataset cand = make_dataset(platform);
    std::vector<std::string> expect = {"episode_id"};
    for (const auto& n : cand.state_names) expect.push_back(n);
    for (const auto& n : cand.control_names) expect.push_back(n);
    for (const auto& n : cand.state_names) expect.push_back("next_" + n);
    if (header == expect) {
      out = std::move(cand);
      break;
    }
  }
  if (out.platform.empty()) {
    throw std::runtime_error(path + ": header does not match any platform");
  }

  const int n = out.state_dim();
  const int m = out.control_dim();
  const int width = 1 + n + m + n;
  std::vector<std::vector<double>> parsed;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != width) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(width) +
                               " fields, got " +
                               std::to_string(fields.size()));
    }
    std::vector<double> vals(width);
    for (int i = 0; i < width; ++i) {
      try {
        vals[i] = std::stod(fields[i]);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad number '" + fields[i] + "'");
      }
    }
    parsed.push_back(std::move(vals));
  }

  const int r = static_cast<int>(parsed.size());
  out.states.resize(r, n);
  out.controls.resize(r, m);
  out.next_states.resize(r, n);
  out.episode_ids.resize(r);
  for (int i = 0; i < r; ++i) {
    const auto& vals = parsed[i];
    out.episode_ids[i] = static_cast<int>(vals[0]);
    for (int c = 0; c < n; ++c) out.states(i, c) = vals[1 + c];
    for (int c = 0; c < m; ++c) out.controls(i, c) = vals[1 + n + c];
    for (int c = 0; c < n; ++c) out.next_states(i, c) = vals[1 + n + m + c];
  }
  out.validate();
  return out;
}

}  // namespace tracker
