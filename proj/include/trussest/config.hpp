#pragma once

#include <iosfwd>
#include <string>

#include "trussest/simulation.hpp"
#include "trussest/structure.hpp"

namespace trussest {

// INI model file, `model_schema = 1`. Either a [scale_model] section or
// explicit [nodes], [elements], [plates] and [constraints]; optional
// [stiffness].
struct ModelFile {
  TrussGeometry geometry;
  StiffnessParams params;
  bool has_params = false;
};

ModelFile load_model_file(const std::string& path);
ModelFile parse_model(std::istream& in);
void write_model(std::ostream& out, const TrussGeometry& g, const StiffnessParams& p);

// Experiment configuration. Keys carry their units (f_sg_hz, amplitude_m).
// Anything not given keeps ExperimentConfig::defaults().
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(std::istream& in);

std::string read_text_file(const std::string& path);

}  // namespace trussest
