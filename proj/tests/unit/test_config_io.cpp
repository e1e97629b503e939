#include <sstream>

#include <gtest/gtest.h>

#include "trussest/config.hpp"
#include "trussest/io.hpp"

using namespace trussest;

TEST(ModelFile, RoundTripsScaleModel) {
  const TrussGeometry g = build_scale_model();
  StiffnessParams p = tuned_stiffness();
  std::stringstream ss;
  write_model(ss, g, p);
  const ModelFile f = parse_model(ss);
  ASSERT_TRUE(f.has_params);
  EXPECT_EQ(f.params.k_b, p.k_b);
  EXPECT_EQ(f.geometry.nodes.size(), g.nodes.size());
  EXPECT_EQ(f.geometry.elements.size(), g.elements.size());
  const AssembledModel a = assemble(g, p), b = assemble(f.geometry, f.params);
  EXPECT_LT((a.K - b.K).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(a.M, b.M);
}

TEST(ModelFile, ExplicitNodes) {
  std::istringstream in(R"(model_schema = 1
[nodes]
1 = 0 0 0
2 = 0.4 0 0
[elements]
1 = 1 2 bracing 2.0 18200
[constraints]
1 = xyz
2 = yz
)");
  const ModelFile f = parse_model(in);
  EXPECT_FALSE(f.has_params);
  const AssembledModel m = assemble(f.geometry, StiffnessParams{});
  ASSERT_EQ(m.n, 1);
  EXPECT_DOUBLE_EQ(m.K(0, 0), 18200.0);
  EXPECT_DOUBLE_EQ(m.M(0, 0), 1.0);
}

TEST(ModelFile, ScaleSection) {
  std::istringstream in("model_schema = 1\n[scale_model]\nmodules = 2\n");
  EXPECT_EQ(parse_model(in).geometry.elements.size(), 24u);
}

TEST(ModelFile, Errors) {
  std::istringstream no_schema("[scale_model]\nmodules = 2\n");
  EXPECT_THROW(parse_model(no_schema), std::invalid_argument);
  std::istringstream both("model_schema = 1\n[scale_model]\nmodules = 2\n[nodes]\n1 = 0 0 0\n");
  EXPECT_THROW(parse_model(both), std::invalid_argument);
  std::istringstream bad_key("model_schema = 1\n[scale_model]\nmodulez = 2\n");
  EXPECT_THROW(parse_model(bad_key), std::invalid_argument);
  std::istringstream short_elem("model_schema = 1\n[nodes]\n1 = 0 0 0\n2 = 1 0 0\n[elements]\n1 = 1 2\n");
  EXPECT_THROW(parse_model(short_elem), std::invalid_argument);
  EXPECT_THROW(load_model_file("/nonexistent/model.ini"), std::exception);
}

TEST(ExperimentFile, OverridesDefaults) {
  std::istringstream in(R"([excitation]
type = chirp
direction = y
amplitude_m = 0.001
[timing]
f_sg_hz = 100
[camera]
lag_ticks = 2
exclude = 13x 21z
[estimator]
q = 1e-6
gauges = 1 2 3
)");
  const ExperimentConfig c = parse_experiment_config(in);
  EXPECT_EQ(c.excitation.type, "chirp");
  EXPECT_EQ(c.excitation.direction, Axis::Y);
  EXPECT_EQ(c.excitation.chirp_amplitude, 0.001);
  EXPECT_EQ(c.f_sg, 100.0);
  EXPECT_EQ(c.camera.lag, 2);
  ASSERT_EQ(c.camera_exclude.size(), 2u);
  EXPECT_EQ(c.camera_exclude[1].node, 21);
  EXPECT_EQ(c.camera_exclude[1].axis, Axis::Z);
  EXPECT_EQ(c.estimator.q, 1e-6);
  EXPECT_EQ(c.gauge_ids, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(c.n_p, ExperimentConfig::defaults().n_p);
}

TEST(ExperimentFile, RejectsUnknownAndInvalid) {
  std::istringstream unknown("[timing]\nf_sg = 100\n");
  EXPECT_THROW(parse_experiment_config(unknown), std::invalid_argument);
  std::istringstream section("[nope]\na = 1\n");
  EXPECT_THROW(parse_experiment_config(section), std::invalid_argument);
  std::istringstream value("[timing]\nf_sg_hz = fast\n");
  EXPECT_THROW(parse_experiment_config(value), std::invalid_argument);
  std::istringstream dir("[excitation]\ndirection = z\n");
  EXPECT_THROW(parse_experiment_config(dir), std::invalid_argument);
}

TEST(SensorCsv, RoundTrip) {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.excitation.quake.duration = 2.0;
  const ExperimentData d = generate_data(c);
  std::stringstream ss;
  write_sensor_csv(ss, d.samples, d.camera, 1.0 / c.f_sg);
  const SensorSamples r = read_sensor_csv(ss, d.camera, 1.0 / c.f_sg);
  EXPECT_EQ(r.gauge_ids, d.samples.gauge_ids);
  ASSERT_EQ(r.gauges.size(), d.samples.gauges.size());
  for (size_t k = 0; k < r.gauges.size(); k += 50)
    EXPECT_LT((r.gauges[k] - d.samples.gauges[k]).cwiseAbs().maxCoeff(), 1e-9);
  ASSERT_EQ(r.camera.size(), d.samples.camera.size());
  for (size_t i = 0; i < r.camera.size(); ++i) {
    EXPECT_EQ(r.camera[i].capture_tick, d.samples.camera[i].capture_tick);
    EXPECT_EQ(r.camera[i].delivery_tick, d.samples.camera[i].delivery_tick);
    EXPECT_LT((r.camera[i].y - d.samples.camera[i].y).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(r.camera_at_tick, d.samples.camera_at_tick);
}

TEST(SensorCsv, Errors) {
  const AssembledModel m = assemble(build_scale_model(), tuned_stiffness());
  const CameraModel cam = default_camera(m);
  std::istringstream header("time,id,value\n");
  EXPECT_THROW(read_sensor_csv(header, cam, 0.005), std::invalid_argument);
  std::istringstream grid("t,sensor_id,value\n0.0013,sg.1,1.0\n");
  EXPECT_THROW(read_sensor_csv(grid, cam, 0.005), std::invalid_argument);
  std::istringstream id("t,sensor_id,value\n0,xx.1,1.0\n");
  EXPECT_THROW(read_sensor_csv(id, cam, 0.005), std::invalid_argument);
}

TEST(Output, MatrixHeaderAndHash) {
  std::ostringstream os;
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  write_matrix(os, "Phi", m);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "# symbol Phi dims 2 3");
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
  EXPECT_NE(content_hash("a"), content_hash("b"));
}
