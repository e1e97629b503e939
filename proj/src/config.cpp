#include "trussest/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace trussest {

namespace pt = boost::property_tree;

namespace {

void check_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed) {
  for (const auto& kv : section)
    if (!allowed.count(kv.first))
      throw std::invalid_argument("unknown key '" + kv.first + "' in [" + name + "]");
}

template <class T>
void get_if(const pt::ptree& s, const std::string& key, T& out) {
  if (auto v = s.get_optional<std::string>(key)) {
    std::istringstream is(*v);
    T tmp{};
    is >> tmp;
    if (is.fail() || !(is >> std::ws).eof())
      throw std::invalid_argument("invalid value '" + *v + "' for key '" + key + "'");
    out = tmp;
  }
}

void get_bool(const pt::ptree& s, const std::string& key, bool& out) {
  if (auto v = s.get_optional<std::string>(key)) {
    if (*v == "true" || *v == "1" || *v == "yes") out = true;
    else if (*v == "false" || *v == "0" || *v == "no") out = false;
    else throw std::invalid_argument("invalid boolean '" + *v + "' for key '" + key + "'");
  }
}

std::vector<double> numbers(const std::string& text, const std::string& what) {
  std::istringstream is(text);
  std::vector<double> v;
  double x;
  while (is >> x) v.push_back(x);
  if (!is.eof()) throw std::invalid_argument("could not parse numbers in " + what + ": '" + text + "'");
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw std::invalid_argument("expected an integer for " + what + ", got '" + s + "'");
  return v;
}

std::vector<TrackedDof> channels(const std::string& text) {
  std::istringstream is(text);
  std::vector<TrackedDof> out;
  std::string tok;
  while (is >> tok) {
    if (tok.size() < 2) throw std::invalid_argument("bad channel '" + tok + "', expected e.g. 13x");
    out.push_back({to_int(tok.substr(0, tok.size() - 1), "channel " + tok), parse_axis(tok.substr(tok.size() - 1))});
  }
  return out;
}

std::vector<int> ints(const std::string& text, const std::string& what) {
  std::istringstream is(text);
  std::vector<int> out;
  std::string tok;
  while (is >> tok) out.push_back(to_int(tok, what));
  return out;
}

void read_stiffness(const pt::ptree& s, const std::string& name, StiffnessParams& p) {
  check_keys(s, name, {"k_b_n_per_m", "k_ca_n_per_m", "k_cp_n_per_m", "alpha0_per_s", "alpha1_s",
                       "k_plate_n_per_m"});
  get_if(s, "k_b_n_per_m", p.k_b);
  get_if(s, "k_ca_n_per_m", p.k_ca);
  get_if(s, "k_cp_n_per_m", p.k_cp);
  get_if(s, "alpha0_per_s", p.alpha0);
  get_if(s, "alpha1_s", p.alpha1);
  get_if(s, "k_plate_n_per_m", p.k_plate);
  p.validate();
}

void read_scale(const pt::ptree& s, ScaleModelConfig& c) {
  check_keys(s, "scale_model", {"modules", "footprint_m", "module_height_m", "plate_mass_kg",
                                "top_plate_mass_kg", "column_mass_kg", "bracing_mass_kg",
                                "element_mass", "plate_ties", "active_columns"});
  get_if(s, "modules", c.modules);
  get_if(s, "footprint_m", c.footprint);
  get_if(s, "module_height_m", c.module_height);
  get_if(s, "plate_mass_kg", c.plate_mass);
  get_if(s, "top_plate_mass_kg", c.top_plate_mass);
  get_if(s, "column_mass_kg", c.column_mass);
  get_if(s, "bracing_mass_kg", c.bracing_mass);
  get_bool(s, "element_mass", c.element_mass);
  get_bool(s, "plate_ties", c.plate_ties);
  if (auto v = s.get_optional<std::string>("active_columns")) c.active_columns = ints(*v, "active_columns");
}

const pt::ptree& section(const pt::ptree& root, const std::string& name) {
  static const pt::ptree empty;
  auto it = root.find(name);
  return it == root.not_found() ? empty : it->second;
}

pt::ptree read_ini(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  return root;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ModelFile parse_model(std::istream& in) {
  const pt::ptree root = read_ini(in);
  const auto schema = root.get_optional<int>("model_schema");
  if (!schema) throw std::invalid_argument("model file lacks 'model_schema'");
  if (*schema != 1) throw std::invalid_argument("unsupported model_schema " + std::to_string(*schema));
  for (const auto& kv : root)
    if (kv.second.empty() && kv.first != "model_schema")
      throw std::invalid_argument("unknown top-level key '" + kv.first + "'");

  ModelFile mf;
  const bool scale = root.find("scale_model") != root.not_found();
  const bool explicit_nodes = root.find("nodes") != root.not_found();
  if (scale == explicit_nodes)
    throw std::invalid_argument("model file needs exactly one of [scale_model] or [nodes]");
  if (scale) {
    ScaleModelConfig c;
    read_scale(section(root, "scale_model"), c);
    mf.geometry = build_scale_model(c);
  } else {
    TrussGeometry& g = mf.geometry;
    for (const auto& kv : section(root, "nodes")) {
      const auto v = numbers(kv.second.data(), "node " + kv.first);
      if (v.size() != 3) throw std::invalid_argument("node " + kv.first + " needs x y z");
      g.nodes.push_back({to_int(kv.first, "node id"), Eigen::Vector3d(v[0], v[1], v[2])});
    }
    // <id> = <node_a> <node_b> <class> <mass_kg> [stiffness_n_per_m]
    for (const auto& kv : section(root, "elements")) {
      std::istringstream is(kv.second.data());
      std::string a, b, cls, mass, k;
      if (!(is >> a >> b >> cls >> mass))
        throw std::invalid_argument("element " + kv.first + " needs node_a node_b class mass");
      Element e;
      e.id = to_int(kv.first, "element id");
      e.node_a = to_int(a, "element node");
      e.node_b = to_int(b, "element node");
      e.cls = parse_element_class(cls);
      e.mass = numbers(mass, "element mass").at(0);
      if (is >> k) e.stiffness = numbers(k, "element stiffness").at(0);
      if (is >> k) throw std::invalid_argument("trailing fields in element " + kv.first);
      g.elements.push_back(e);
    }
    // <name> = <mass_kg> <node> <node> ... ; ties on unless the name ends in _free
    for (const auto& kv : section(root, "plates")) {
      const auto v = numbers(kv.second.data(), "plate " + kv.first);
      if (v.size() < 3) throw std::invalid_argument("plate " + kv.first + " needs a mass and nodes");
      Plate p;
      p.mass = v[0];
      for (size_t i = 1; i < v.size(); ++i) p.nodes.push_back(static_cast<int>(v[i]));
      p.membrane_ties = !(kv.first.size() > 5 && kv.first.substr(kv.first.size() - 5) == "_free");
      g.plates.push_back(p);
    }
    // <node> = xyz
    for (const auto& kv : section(root, "constraints")) {
      const int node = to_int(kv.first, "constraint node");
      for (char c : kv.second.data())
        if (c != ' ') g.constrained_dofs.push_back({node, parse_axis(std::string(1, c))});
    }
    g.validate();
  }
  if (root.find("stiffness") != root.not_found()) {
    read_stiffness(section(root, "stiffness"), "stiffness", mf.params);
    mf.has_params = true;
  }
  return mf;
}

ModelFile load_model_file(const std::string& path) {
  std::istringstream in(read_text_file(path));
  try {
    return parse_model(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void write_model(std::ostream& out, const TrussGeometry& g, const StiffnessParams& p) {
  out << std::setprecision(17);
  out << "model_schema = 1\n\n[nodes]\n";
  for (const auto& n : g.nodes)
    out << n.id << " = " << n.position.x() << ' ' << n.position.y() << ' ' << n.position.z() << '\n';
  out << "\n[elements]\n";
  for (const auto& e : g.elements) {
    out << e.id << " = " << e.node_a << ' ' << e.node_b << ' ' << to_string(e.cls) << ' ' << e.mass;
    if (e.stiffness) out << ' ' << *e.stiffness;
    out << '\n';
  }
  out << "\n[plates]\n";
  for (size_t i = 0; i < g.plates.size(); ++i) {
    out << "plate" << i + 1 << (g.plates[i].membrane_ties ? "" : "_free") << " = " << g.plates[i].mass;
    for (int n : g.plates[i].nodes) out << ' ' << n;
    out << '\n';
  }
  out << "\n[constraints]\n";
  std::map<int, std::string> fixed;
  for (const auto& f : g.constrained_dofs) fixed[f.node] += axis_char(f.axis);
  for (const auto& [n, axes] : fixed) out << n << " = " << axes << '\n';
  out << "\n[stiffness]\nk_b_n_per_m = " << p.k_b << "\nk_ca_n_per_m = " << p.k_ca
      << "\nk_cp_n_per_m = " << p.k_cp << "\nalpha0_per_s = " << p.alpha0 << "\nalpha1_s = " << p.alpha1
      << "\nk_plate_n_per_m = " << p.k_plate << '\n';
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  const pt::ptree root = read_ini(in);
  ExperimentConfig c = ExperimentConfig::defaults();
  static const std::set<std::string> sections = {"model", "scale_model", "truth", "filter", "camera",
                                                 "excitation", "timing", "noise", "estimator"};
  for (const auto& kv : root)
    if (!sections.count(kv.first)) throw std::invalid_argument("unknown section or key '" + kv.first + "'");

  const auto& model = section(root, "model");
  check_keys(model, "model", {"file"});
  if (auto f = model.get_optional<std::string>("file")) c.model_file = *f;
  read_scale(section(root, "scale_model"), c.scale);
  if (root.find("truth") != root.not_found()) read_stiffness(section(root, "truth"), "truth", c.truth_params);
  if (root.find("filter") != root.not_found()) read_stiffness(section(root, "filter"), "filter", c.filter_params);

  const auto& cam = section(root, "camera");
  check_keys(cam, "camera", {"lag_ticks", "rate_divisor", "standoff_m", "fx_px", "fy_px", "cx_px", "cy_px",
                             "lens_k1", "lens_k2", "lens_k3", "lens_p1", "lens_p2", "calib_k1", "calib_k2",
                             "calib_k3", "calib_p1", "calib_p2", "pixel_roundtrip", "depth",
                             "quantization_px", "tracked", "exclude"});
  auto& cs = c.camera;
  get_if(cam, "lag_ticks", cs.lag);
  get_if(cam, "rate_divisor", cs.rate_divisor);
  get_if(cam, "standoff_m", cs.standoff);
  get_if(cam, "fx_px", cs.intrinsics.fx);
  get_if(cam, "fy_px", cs.intrinsics.fy);
  get_if(cam, "cx_px", cs.intrinsics.cx);
  get_if(cam, "cy_px", cs.intrinsics.cy);
  for (auto [prefix, d] : {std::pair{"lens_", &cs.lens}, std::pair{"calib_", &cs.calibration}}) {
    const std::string p = prefix;
    get_if(cam, p + "k1", d->k1);
    get_if(cam, p + "k2", d->k2);
    get_if(cam, p + "k3", d->k3);
    get_if(cam, p + "p1", d->p1);
    get_if(cam, p + "p2", d->p2);
  }
  get_bool(cam, "pixel_roundtrip", cs.pixel_roundtrip);
  if (auto v = cam.get_optional<std::string>("depth")) {
    if (*v == "rest") cs.depth = DepthMode::Rest;
    else if (*v == "exact") cs.depth = DepthMode::Exact;
    else throw std::invalid_argument("camera depth must be 'rest' or 'exact'");
  }
  get_if(cam, "quantization_px", cs.pixel_quantization);
  if (auto v = cam.get_optional<std::string>("tracked")) cs.tracked = channels(*v);
  if (auto v = cam.get_optional<std::string>("exclude")) c.camera_exclude = channels(*v);

  const auto& ex = section(root, "excitation");
  check_keys(ex, "excitation", {"type", "direction", "seed", "duration_s", "dominant_hz", "std_hz", "pga_mps2",
                                "dt_s", "scale", "f0_hz", "f1_hz", "sweep_s", "amplitude_m", "f_lo_hz",
                                "f_hi_hz", "rms_mps2", "noise_s", "fs_hz"});
  auto& e = c.excitation;
  if (auto v = ex.get_optional<std::string>("type")) e.type = *v;
  if (e.type != "quake" && e.type != "chirp" && e.type != "noise")
    throw std::invalid_argument("excitation type must be quake, chirp or noise");
  if (auto v = ex.get_optional<std::string>("direction")) {
    if (v->size() != 1) throw std::invalid_argument("excitation direction must be x or y");
    e.direction = parse_axis(*v);
    if (e.direction == Axis::Z) throw std::invalid_argument("excitation direction must be x or y");
  }
  get_if(ex, "seed", e.seed);
  get_if(ex, "duration_s", e.quake.duration);
  get_if(ex, "dominant_hz", e.quake.dominant_freq);
  get_if(ex, "std_hz", e.quake.freq_std);
  get_if(ex, "pga_mps2", e.quake.target_pga);
  get_if(ex, "dt_s", e.quake.dt);
  get_if(ex, "scale", e.quake_scale);
  get_if(ex, "f0_hz", e.chirp_f0);
  get_if(ex, "f1_hz", e.chirp_f1);
  get_if(ex, "sweep_s", e.chirp_duration);
  get_if(ex, "amplitude_m", e.chirp_amplitude);
  get_if(ex, "f_lo_hz", e.noise_f_lo);
  get_if(ex, "f_hi_hz", e.noise_f_hi);
  get_if(ex, "rms_mps2", e.noise_rms);
  get_if(ex, "noise_s", e.noise_duration);
  get_if(ex, "fs_hz", e.noise_fs);

  const auto& tm = section(root, "timing");
  check_keys(tm, "timing", {"f_sg_hz", "dt_fine_s", "duration_s", "burn_in_s"});
  get_if(tm, "f_sg_hz", c.f_sg);
  get_if(tm, "dt_fine_s", c.dt_fine);
  get_if(tm, "duration_s", c.duration);
  get_if(tm, "burn_in_s", c.burn_in);

  const auto& nz = section(root, "noise");
  check_keys(nz, "noise", {"sigma_b_n", "sigma_c_n", "gauge_offset_n", "sigma_cam_m", "gauge_seed", "camera_seed"});
  get_if(nz, "sigma_b_n", c.truth_noise.sigma_b);
  get_if(nz, "sigma_c_n", c.truth_noise.sigma_c);
  get_if(nz, "gauge_offset_n", c.truth_noise.gauge_offset);
  get_if(nz, "sigma_cam_m", c.truth_noise.sigma_cam);
  get_if(nz, "gauge_seed", c.gauge_seed);
  get_if(nz, "camera_seed", c.camera_seed);

  const auto& es = section(root, "estimator");
  check_keys(es, "estimator", {"n_p", "q", "p0", "highpass", "f_c_hz", "lag_noise", "literal_s_star",
                               "linear_strain", "r_b_n2", "r_c_n2", "r_t_m2", "gauges", "ldv"});
  get_if(es, "n_p", c.n_p);
  get_if(es, "q", c.estimator.q);
  get_if(es, "p0", c.estimator.P0);
  get_bool(es, "highpass", c.estimator.highpass);
  get_if(es, "f_c_hz", c.estimator.f_c);
  if (auto v = es.get_optional<std::string>("lag_noise")) {
    if (*v == "sqrt") c.estimator.lag_noise = LagNoise::SqrtLag;
    else if (*v == "linear") c.estimator.lag_noise = LagNoise::Linear;
    else if (*v == "none") c.estimator.lag_noise = LagNoise::None;
    else throw std::invalid_argument("lag_noise must be sqrt, linear or none");
  }
  get_bool(es, "literal_s_star", c.estimator.literal_s_star);
  get_bool(es, "linear_strain", c.estimator.linear_strain);
  get_if(es, "r_b_n2", c.r_b);
  get_if(es, "r_c_n2", c.r_c);
  get_if(es, "r_t_m2", c.r_t);
  if (auto v = es.get_optional<std::string>("gauges")) c.gauge_ids = ints(*v, "gauges");
  if (auto v = es.get_optional<std::string>("ldv")) c.ldv = channels(*v);
  c.estimator.f_s = c.f_sg;
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::istringstream in(read_text_file(path));
  try {
    return parse_experiment_config(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace trussest
