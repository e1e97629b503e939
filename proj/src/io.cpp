#include "trussest/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace trussest {

std::string channel_name(const TrackedDof& d) { return std::to_string(d.node) + axis_char(d.axis); }

void write_sensor_csv(std::ostream& out, const SensorSamples& samples, const CameraModel& camera,
                      double dt, const std::vector<std::string>& ldv_names,
                      const std::vector<std::vector<double>>& ldv_values) {
  out << std::setprecision(12) << "t,sensor_id,value\n";
  std::map<long, const CameraSample*> by_capture;
  for (const auto& s : samples.camera) by_capture[s.capture_tick] = &s;
  for (size_t k = 0; k < samples.gauges.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    for (size_t i = 0; i < samples.gauge_ids.size(); ++i)
      out << t << ",sg." << samples.gauge_ids[i] << ',' << samples.gauges[k][i] << '\n';
    if (auto it = by_capture.find(static_cast<long>(k)); it != by_capture.end())
      for (int c = 0; c < camera.size(); ++c)
        out << t << ",cam." << channel_name(camera.tracked[c]) << ',' << camera.p0[c] - it->second->y[c] << '\n';
    for (size_t c = 0; c < ldv_names.size(); ++c)
      if (k < ldv_values[c].size()) out << t << ",ldv." << ldv_names[c] << ',' << ldv_values[c][k] << '\n';
  }
}

SensorSamples read_sensor_csv(std::istream& in, const CameraModel& camera, double dt) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,sensor_id,value", 0) != 0)
    throw std::invalid_argument("sensor CSV must start with the header t,sensor_id,value");
  std::map<std::string, int> cam_index;
  for (int c = 0; c < camera.size(); ++c) cam_index["cam." + channel_name(camera.tracked[c])] = c;

  std::map<long, std::map<int, double>> gauges;
  std::map<long, Eigen::VectorXd> cams;
  std::map<long, int> cam_count;
  std::map<int, int> ids;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string ts, id, vs;
    if (!std::getline(ls, ts, ',') || !std::getline(ls, id, ',') || !std::getline(ls, vs))
      throw std::invalid_argument("sensor CSV line " + std::to_string(line_no) + " is malformed");
    double t = 0, v = 0;
    try {
      t = std::stod(ts);
      v = std::stod(vs);
    } catch (const std::exception&) {
      throw std::invalid_argument("sensor CSV line " + std::to_string(line_no) + " has a non-numeric field");
    }
    const long k = std::lround(t / dt);
    if (std::abs(t - static_cast<double>(k) * dt) > 1e-6 * dt + 1e-9)
      throw std::invalid_argument("sensor CSV line " + std::to_string(line_no) + " is off the sample grid");
    if (id.rfind("sg.", 0) == 0) {
      const int e = std::stoi(id.substr(3));
      ids.emplace(e, 0);
      gauges[k][e] = v;
    } else if (id.rfind("cam.", 0) == 0) {
      auto it = cam_index.find(id);
      if (it == cam_index.end()) throw std::invalid_argument("camera channel '" + id + "' is not tracked");
      auto& vec = cams[k];
      if (vec.size() == 0) vec = Eigen::VectorXd::Constant(camera.size(), std::nan(""));
      vec[it->second] = camera.p0[it->second] - v;
      ++cam_count[k];
    } else if (id.rfind("ldv.", 0) != 0) {
      throw std::invalid_argument("unknown sensor id '" + id + "'");
    }
  }
  if (gauges.empty()) throw std::invalid_argument("sensor CSV holds no gauge rows");
  int col = 0;
  for (auto& [e, c] : ids) c = col++;
  SensorSamples s;
  for (const auto& [e, c] : ids) s.gauge_ids.push_back(e);
  const long N = gauges.rbegin()->first + 1;
  s.gauges.assign(N, Eigen::VectorXd::Zero(col));
  for (long k = 0; k < N; ++k) {
    auto it = gauges.find(k);
    if (it == gauges.end() || static_cast<int>(it->second.size()) != col)
      throw std::invalid_argument("sensor CSV misses gauge readings at tick " + std::to_string(k));
    for (const auto& [e, v] : it->second) s.gauges[k][ids[e]] = v;
  }
  s.camera_at_tick.assign(N, -1);
  for (const auto& [kappa, y] : cams) {
    if (cam_count[kappa] != camera.size())
      throw std::invalid_argument("incomplete camera frame at tick " + std::to_string(kappa));
    const long k = kappa + camera.lag;
    if (k >= N) continue;
    s.camera_at_tick[k] = static_cast<int>(s.camera.size());
    s.camera.push_back({kappa, k, y});
  }
  return s;
}

void write_motion_csv(std::ostream& out, const GroundMotion& g) {
  out << std::setprecision(12) << "t,accel" << (g.displacement.empty() ? "" : ",displacement") << '\n';
  for (size_t i = 0; i < g.accel.size(); ++i) {
    out << static_cast<double>(i) * g.dt << ',' << g.accel[i];
    if (!g.displacement.empty()) out << ',' << g.displacement[i];
    out << '\n';
  }
}

void write_estimate_csv(std::ostream& out, const ExperimentRecord& rec) {
  out << std::setprecision(12) << "tick,t";
  const size_t nx = rec.x_hat.empty() ? 0 : static_cast<size_t>(rec.x_hat[0].size());
  for (size_t i = 0; i < nx; ++i) out << ",xhat" << i;
  for (const auto& n : rec.ldv_names) out << ",est." << n << ",ldv." << n;
  out << ",trace_P,nis_sg,nis_cam\n";
  for (size_t k = 0; k < rec.x_hat.size(); ++k) {
    out << k << ',' << static_cast<double>(k) * rec.dt;
    for (size_t i = 0; i < nx; ++i) out << ',' << rec.x_hat[k][i];
    for (size_t c = 0; c < rec.ldv_names.size(); ++c)
      out << ',' << rec.ldv_estimate[c][k] << ',' << rec.ldv_truth[c][k];
    auto cell = [&](const std::vector<double>& v) {
      out << ',';
      if (k < v.size() && std::isfinite(v[k])) out << v[k];
    };
    cell(rec.trace_P);
    cell(rec.nis_sg);
    cell(rec.nis_cam);
    out << '\n';
  }
}

void write_curve_csv(std::ostream& out, const PlacementResult& r) {
  out << std::setprecision(15) << "n_sg,normalized_trace\n";
  for (const auto& [n, v] : r.trace_curve) out << n << ',' << v << '\n';
}

void write_matrix(std::ostream& out, const std::string& symbol, const Eigen::MatrixXd& m) {
  out << std::setprecision(17) << "# symbol " << symbol << " dims " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

void write_sidecar(const std::string& path, const std::string& config_text,
                   const std::vector<std::pair<std::string, std::uint64_t>>& seeds,
                   const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = content_hash(config_text);
  for (const auto& [name, v] : seeds) j["seeds"][name] = v;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

}  // namespace trussest
