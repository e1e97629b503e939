#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trussest/placement.hpp"
#include "trussest/simulation.hpp"

namespace trussest {

std::string channel_name(const TrackedDof& d);

// Long-format sensor CSV: t, sensor_id, value. Gauges are sg.<element>,
// camera channels cam.<node><axis> stamped at capture time with the
// displacement p0 - y, reference taps ldv.<node><axis>.
void write_sensor_csv(std::ostream& out, const SensorSamples& samples, const CameraModel& camera,
                      double dt, const std::vector<std::string>& ldv_names = {},
                      const std::vector<std::vector<double>>& ldv_values = {});

// Inverse of write_sensor_csv for the gauge and camera rows. The camera model
// supplies p0, lag and channel order; ldv rows are ignored.
SensorSamples read_sensor_csv(std::istream& in, const CameraModel& camera, double dt);

void write_motion_csv(std::ostream& out, const GroundMotion& g);
void write_estimate_csv(std::ostream& out, const ExperimentRecord& rec);
void write_curve_csv(std::ostream& out, const PlacementResult& r);

// Header line "# symbol <name> dims <rows> <cols>" then rows, comma separated.
void write_matrix(std::ostream& out, const std::string& symbol, const Eigen::MatrixXd& m);

// 64-bit FNV-1a of the text, as 16 hex digits.
std::string content_hash(const std::string& text);

// JSON metadata written next to each output file.
void write_sidecar(const std::string& path, const std::string& config_text,
                   const std::vector<std::pair<std::string, std::uint64_t>>& seeds,
                   const std::string& command);

}  // namespace trussest
