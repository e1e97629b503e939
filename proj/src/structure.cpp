#include "trussest/structure.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace trussest {

char axis_char(Axis a) {
  switch (a) {
    case Axis::X: return 'x';
    case Axis::Y: return 'y';
    case Axis::Z: return 'z';
  }
  return '?';
}

Axis parse_axis(std::string_view s) {
  if (s == "x" || s == "X") return Axis::X;
  if (s == "y" || s == "Y") return Axis::Y;
  if (s == "z" || s == "Z") return Axis::Z;
  throw std::invalid_argument("unknown axis '" + std::string(s) + "'");
}

std::string to_string(ElementClass c) {
  switch (c) {
    case ElementClass::Bracing: return "bracing";
    case ElementClass::ActiveColumn: return "active_column";
    case ElementClass::PassiveColumn: return "passive_column";
  }
  return "unknown";
}

ElementClass parse_element_class(std::string_view s) {
  if (s == "bracing" || s == "b") return ElementClass::Bracing;
  if (s == "active_column" || s == "ca") return ElementClass::ActiveColumn;
  if (s == "passive_column" || s == "cp") return ElementClass::PassiveColumn;
  throw std::invalid_argument("unknown element class '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- geometry

bool TrussGeometry::has_node(int id) const {
  return std::any_of(nodes.begin(), nodes.end(), [&](const Node& n) { return n.id == id; });
}

const Node& TrussGeometry::node(int id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  throw std::invalid_argument("no node with id " + std::to_string(id));
}

const Element& TrussGeometry::element(int id) const {
  for (const auto& e : elements)
    if (e.id == id) return e;
  throw std::invalid_argument("no element with id " + std::to_string(id));
}

void TrussGeometry::validate() const {
  if (nodes.empty()) throw std::invalid_argument("geometry has no nodes");
  std::set<int> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second)
      throw std::invalid_argument("duplicate node id " + std::to_string(n.id));
    if (!n.position.allFinite())
      throw std::invalid_argument("node " + std::to_string(n.id) + " has a non-finite position");
  }
  std::set<int> eids;
  std::set<std::pair<int, int>> pairs;
  for (const auto& e : elements) {
    const std::string tag = "element " + std::to_string(e.id);
    if (!eids.insert(e.id).second) throw std::invalid_argument("duplicate " + tag);
    if (!ids.count(e.node_a) || !ids.count(e.node_b))
      throw std::invalid_argument(tag + " references a missing node");
    const double L = (node(e.node_b).position - node(e.node_a).position).norm();
    if (!(L > 0.0)) throw std::invalid_argument(tag + " has zero rest length");
    if (!pairs.insert(std::minmax(e.node_a, e.node_b)).second)
      throw std::invalid_argument(tag + " duplicates an element over the same node pair");
    if (e.mass < 0.0) throw std::invalid_argument(tag + " has negative mass");
    if (e.stiffness && !(*e.stiffness > 0.0))
      throw std::invalid_argument(tag + " has a nonpositive stiffness override");
  }
  for (const auto& p : plates) {
    if (p.nodes.empty()) throw std::invalid_argument("plate without nodes");
    if (p.mass < 0.0) throw std::invalid_argument("plate with negative mass");
    for (int id : p.nodes)
      if (!ids.count(id))
        throw std::invalid_argument("plate references missing node " + std::to_string(id));
  }
  if (constrained_dofs.empty())
    throw std::invalid_argument("geometry has no constrained DOFs (structure is not grounded)");
  for (const auto& f : constrained_dofs)
    if (!ids.count(f.node))
      throw std::invalid_argument("constraint references missing node " + std::to_string(f.node));
}

TrussGeometry build_scale_model(const ScaleModelConfig& cfg) {
  if (cfg.modules < 1) throw std::invalid_argument("scale model needs at least one module");
  if (!(cfg.footprint > 0.0) || !(cfg.module_height > 0.0))
    throw std::invalid_argument("scale model footprint and module height must be positive");
  if (cfg.plate_mass < 0.0 || cfg.top_plate_mass < 0.0 || cfg.column_mass < 0.0 ||
      cfg.bracing_mass < 0.0)
    throw std::invalid_argument("scale model masses must be nonnegative");

  const double w = cfg.footprint;
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(0, 0), Eigen::Vector2d(w, 0), Eigen::Vector2d(w, w), Eigen::Vector2d(0, w)};

  TrussGeometry g;
  for (int j = 0; j <= cfg.modules; ++j)
    for (int c = 0; c < 4; ++c)
      g.nodes.push_back({scale_node_id(j, c),
                         Eigen::Vector3d(corners[c].x(), corners[c].y(), j * cfg.module_height)});

  std::set<int> active(cfg.active_columns.begin(), cfg.active_columns.end());
  const bool default_layout = active.empty();

  int eid = 1;
  for (int m = 1; m <= cfg.modules; ++m) {
    const int lo = m - 1;
    for (int c = 0; c < 4; ++c) {
      Element e{eid, scale_node_id(lo, c), scale_node_id(m, c), ElementClass::PassiveColumn,
                cfg.element_mass ? cfg.column_mass : 0.0, std::nullopt};
      const bool is_active = default_layout ? (m < cfg.modules && c == (m - 1) % 4)
                                            : active.count(eid) > 0;
      if (is_active) e.cls = ElementClass::ActiveColumn;
      g.elements.push_back(e);
      ++eid;
    }
    for (int c = 0; c < 4; ++c) {
      const int c2 = (c + 1) % 4;
      const double mb = cfg.element_mass ? cfg.bracing_mass : 0.0;
      g.elements.push_back({eid++, scale_node_id(lo, c), scale_node_id(m, c2),
                            ElementClass::Bracing, mb, std::nullopt});
      g.elements.push_back({eid++, scale_node_id(lo, c2), scale_node_id(m, c),
                            ElementClass::Bracing, mb, std::nullopt});
    }
    Plate p;
    for (int c = 0; c < 4; ++c) p.nodes.push_back(scale_node_id(m, c));
    p.mass = (m == cfg.modules) ? cfg.top_plate_mass : cfg.plate_mass;
    p.membrane_ties = cfg.plate_ties;
    g.plates.push_back(p);
  }
  if (!default_layout) {
    for (int id : active) {
      const auto& e = g.element(id);
      if (!is_column(e.cls))
        throw std::invalid_argument("active column id " + std::to_string(id) +
                                    " is not a column");
    }
  }
  for (int c = 0; c < 4; ++c)
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) g.constrained_dofs.push_back({scale_node_id(0, c), a});
  g.validate();
  return g;
}

// ---------------------------------------------------------------- params

void StiffnessParams::validate() const {
  if (!(k_b > 0.0) || !(k_ca > 0.0) || !(k_cp > 0.0) || !(k_plate > 0.0))
    throw std::invalid_argument("spring constants must be positive");
  if (!(alpha0 >= 0.0) || !(alpha1 >= 0.0))
    throw std::invalid_argument("Rayleigh coefficients must be nonnegative");
}

double StiffnessParams::for_class(ElementClass c) const {
  switch (c) {
    case ElementClass::Bracing: return k_b;
    case ElementClass::ActiveColumn: return k_ca;
    case ElementClass::PassiveColumn: return k_cp;
  }
  return 0.0;
}

// ---------------------------------------------------------------- dof map

DofMap::DofMap(const TrussGeometry& g) {
  std::set<std::pair<int, int>> fixed;
  for (const auto& f : g.constrained_dofs) fixed.insert({f.node, static_cast<int>(f.axis)});
  std::vector<int> ids;
  for (const auto& n : g.nodes) ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());
  for (int id : ids) {
    std::array<int, 3> slots{{-1, -1, -1}};
    for (int a = 0; a < 3; ++a) {
      if (fixed.count({id, a})) continue;
      slots[a] = static_cast<int>(dofs_.size());
      dofs_.emplace_back(id, static_cast<Axis>(a));
    }
    node_slots_[id] = slots;
  }
}

int DofMap::index(int node, Axis axis) const {
  auto it = node_slots_.find(node);
  if (it == node_slots_.end())
    throw std::invalid_argument("DOF map has no node " + std::to_string(node));
  return it->second[static_cast<int>(axis)];
}

// ---------------------------------------------------------------- kinematics

Eigen::Vector3d ElementKinematics::relative_displacement(const Eigen::VectorXd& q) const {
  Eigen::Vector3d r;
  for (int a = 0; a < 3; ++a) {
    const double ub = dofs_b[a] >= 0 ? q[dofs_b[a]] : 0.0;
    const double ua = dofs_a[a] >= 0 ? q[dofs_a[a]] : 0.0;
    r[a] = ub - ua;
  }
  return r;
}

Eigen::MatrixXd ElementKinematics::d_matrix(int n) const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, n);
  for (int a = 0; a < 3; ++a) {
    if (dofs_b[a] >= 0) d(a, dofs_b[a]) += 1.0;
    if (dofs_a[a] >= 0) d(a, dofs_a[a]) -= 1.0;
  }
  return d;
}

std::vector<ElementKinematics> element_kinematics(const TrussGeometry& geometry,
                                                  const DofMap& dof_map,
                                                  const StiffnessParams& params) {
  std::vector<ElementKinematics> out;
  out.reserve(geometry.elements.size());
  for (const auto& e : geometry.elements) {
    ElementKinematics k;
    k.element_id = e.id;
    k.cls = e.cls;
    k.gamma = e.stiffness.value_or(params.for_class(e.cls));
    k.e0 = geometry.node(e.node_b).position - geometry.node(e.node_a).position;
    k.L0 = k.e0.norm();
    for (int a = 0; a < 3; ++a) {
      k.dofs_a[a] = dof_map.index(e.node_a, static_cast<Axis>(a));
      k.dofs_b[a] = dof_map.index(e.node_b, static_cast<Axis>(a));
    }
    out.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------- assembly

namespace {

struct Rod {
  int a, b;
  double k;
};

std::vector<Rod> collect_rods(const TrussGeometry& g, const StiffnessParams& p) {
  std::vector<Rod> rods;
  for (const auto& e : g.elements)
    rods.push_back({e.node_a, e.node_b, e.stiffness.value_or(p.for_class(e.cls))});
  for (const auto& pl : g.plates) {
    if (!pl.membrane_ties) continue;
    for (size_t i = 0; i < pl.nodes.size(); ++i)
      for (size_t j = i + 1; j < pl.nodes.size(); ++j)
        rods.push_back({pl.nodes[i], pl.nodes[j], p.k_plate});
  }
  return rods;
}

void add_rod(Eigen::MatrixXd& K, const Eigen::Vector3d& e, double k, const std::array<int, 3>& ia,
             const std::array<int, 3>& ib) {
  const Eigen::Vector3d u = e / e.norm();
  const Eigen::Matrix3d kk = k * u * u.transpose();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (ia[r] >= 0 && ia[c] >= 0) K(ia[r], ia[c]) += kk(r, c);
      if (ib[r] >= 0 && ib[c] >= 0) K(ib[r], ib[c]) += kk(r, c);
      if (ia[r] >= 0 && ib[c] >= 0) K(ia[r], ib[c]) -= kk(r, c);
      if (ib[r] >= 0 && ia[c] >= 0) K(ib[r], ia[c]) -= kk(r, c);
    }
  }
}

}  // namespace

Eigen::MatrixXd stiffness_matrix(const TrussGeometry& geometry, const StiffnessParams& params,
                                 bool unconstrained) {
  geometry.validate();
  params.validate();
  std::map<int, std::array<int, 3>> slots;
  int n = 0;
  if (unconstrained) {
    std::vector<int> ids;
    for (const auto& nd : geometry.nodes) ids.push_back(nd.id);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
      slots[id] = {{n, n + 1, n + 2}};
      n += 3;
    }
  } else {
    const DofMap map(geometry);
    for (const auto& nd : geometry.nodes)
      slots[nd.id] = {{map.index(nd.id, Axis::X), map.index(nd.id, Axis::Y),
                       map.index(nd.id, Axis::Z)}};
    n = map.size();
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (const auto& r : collect_rods(geometry, params)) {
    const Eigen::Vector3d e = geometry.node(r.b).position - geometry.node(r.a).position;
    add_rod(K, e, r.k, slots.at(r.a), slots.at(r.b));
  }
  return K;
}

AssembledModel assemble(const TrussGeometry& geometry, const StiffnessParams& params) {
  geometry.validate();
  params.validate();

  AssembledModel m;
  m.geometry = geometry;
  m.params = params;
  m.dof_map = DofMap(geometry);
  m.n = m.dof_map.size();
  if (m.n == 0) throw std::invalid_argument("geometry has no free DOFs");

  m.K = stiffness_matrix(geometry, params, false);

  Eigen::VectorXd mass = Eigen::VectorXd::Zero(m.n);
  auto lump = [&](int node, double value) {
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
      const int i = m.dof_map.index(node, a);
      if (i >= 0) mass[i] += value;
    }
  };
  for (const auto& e : geometry.elements) {
    lump(e.node_a, 0.5 * e.mass);
    lump(e.node_b, 0.5 * e.mass);
  }
  for (const auto& p : geometry.plates)
    for (int id : p.nodes) lump(id, p.mass / static_cast<double>(p.nodes.size()));
  for (int i = 0; i < m.n; ++i) {
    if (!(mass[i] > 0.0)) {
      const auto& [node, axis] = m.dof_map.dofs()[i];
      throw std::invalid_argument("mass matrix is singular: no mass on node " +
                                  std::to_string(node) + " axis " + axis_char(axis));
    }
  }
  m.M = mass.asDiagonal();

  Eigen::LLT<Eigen::MatrixXd> llt(m.K);
  bool singular = llt.info() != Eigen::Success;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if (!singular) {
    // LLT can succeed on numerically singular matrices; check conditioning.
    es.compute(m.K, Eigen::EigenvaluesOnly);
    singular = es.eigenvalues()(0) <= 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (singular) {
    es.compute(m.K);
    const Eigen::VectorXd v = es.eigenvectors().col(0);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const auto& [node, axis] = m.dof_map.dofs()[imax];
    std::ostringstream os;
    os << "stiffness matrix is singular (mechanism): zero-energy mode dominated by node "
       << node << " axis " << axis_char(axis) << " (eigenvalue " << es.eigenvalues()(0) << ")";
    throw std::runtime_error(os.str());
  }

  m.D = params.alpha0 * m.M + params.alpha1 * m.K;
  m.element_kinematics = element_kinematics(geometry, m.dof_map, params);
  return m;
}

const ElementKinematics& AssembledModel::kinematics(int element_id) const {
  for (const auto& k : element_kinematics)
    if (k.element_id == element_id) return k;
  throw std::invalid_argument("model has no element " + std::to_string(element_id));
}

Eigen::VectorXd influence_vector(const DofMap& dof_map, Axis axis) {
  Eigen::VectorXd iota = Eigen::VectorXd::Zero(dof_map.size());
  for (int i = 0; i < dof_map.size(); ++i)
    if (dof_map.dofs()[i].second == axis) iota[i] = 1.0;
  return iota;
}

}  // namespace trussest
