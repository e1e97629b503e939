#pragma once

#include <vector>

#include <Eigen/Dense>

#include "trussest/modal.hpp"
#include "trussest/structure.hpp"

namespace trussest {

// ---------------------------------------------------------------- strain gauges

struct StrainGaugeSet {
  std::vector<int> element_ids;
  std::vector<ElementKinematics> kinematics;
  double r_b = 1e-3;  // N^2, bracing channels
  double r_c = 1e-3;  // N^2, column channels

  int size() const { return static_cast<int>(element_ids.size()); }
  Eigen::VectorXd bracing_indicator() const;
  Eigen::VectorXd column_indicator() const;
  void validate() const;

  // Gauges on the given elements (all elements when ids is empty).
  static StrainGaugeSet from_model(const AssembledModel& model, const std::vector<int>& ids,
                                   double r_b, double r_c);
};

double element_force(const ElementKinematics& kin, const Eigen::VectorXd& q);
// Forces from nodal displacements q (n).
Eigen::VectorXd element_forces_nodal(const Eigen::VectorXd& q, const StrainGaugeSet& gauges);
// Forces from the modal state x (2 n_p).
Eigen::VectorXd element_force(const Eigen::VectorXd& x, const StrainGaugeSet& gauges,
                              const ModalBasis& basis);
Eigen::MatrixXd force_jacobian(const Eigen::VectorXd& x, const StrainGaugeSet& gauges,
                               const ModalBasis& basis);

// Precomputed d^i Phi_p blocks so that forces and Jacobians at many states do
// not redo the sparse-to-modal projection.
class ModalForceModel {
 public:
  ModalForceModel() = default;
  ModalForceModel(const StrainGaugeSet& gauges, const ModalBasis& basis);

  int size() const { return static_cast<int>(gamma_.size()); }
  int n_x() const { return 2 * n_p_; }
  // h(x); when H is non-null also fills the Jacobian.
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x, Eigen::MatrixXd* H = nullptr) const;
  Eigen::MatrixXd jacobian_at_rest() const;

 private:
  int n_p_ = 0;
  Eigen::VectorXd gamma_, L0_;
  std::vector<Eigen::Vector3d> e0_;
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> dphi_;
};

Eigen::MatrixXd build_R_sg(const StrainGaugeSet& gauges);

// ---------------------------------------------------------------- high-pass

struct HighPassCoefficients {
  double b0 = 1.0, b1 = 0.0, a1 = 0.0;

  // First-order Butterworth by bilinear transform.
  static HighPassCoefficients butterworth(double f_c, double f_s);
};

struct HighPassState {
  HighPassCoefficients coeffs;
  Eigen::VectorXd prev_in;
  Eigen::VectorXd prev_out;
  // Start from a steady input equal to the first sample (zero initial output)
  // instead of from rest.
  bool prime_on_first = true;
  bool primed = false;

  HighPassState() = default;
  HighPassState(const HighPassCoefficients& c, int channels, bool prime = true);
};

Eigen::VectorXd highpass_step(HighPassState& state, const Eigen::VectorXd& u);

// ---------------------------------------------------------------- camera

struct Intrinsics {
  double fx = 1100.0, fy = 1100.0, cx = 968.0, cy = 608.0;
};

struct Extrinsics {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  // Camera at center C whose optical axis is world +y, image x along world +x
  // and image y along world -z.
  static Extrinsics facing_plus_y(const Eigen::Vector3d& C);
};

struct Distortion {
  double k1 = 0.0, k2 = 0.0, k3 = 0.0, p1 = 0.0, p2 = 0.0;
  bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0 && p1 == 0 && p2 == 0; }
};

struct TrackedDof {
  int node = 0;
  Axis axis = Axis::X;
};

enum class DepthMode { Rest, Exact };

struct CameraModel {
  std::vector<TrackedDof> tracked;
  Intrinsics intrinsics;
  Extrinsics extrinsics;
  Distortion lens;         // distortion of the physical lens
  Distortion calibration;  // coefficients used for correction
  int lag = 3;             // gauge ticks between capture and delivery
  int rate_divisor = 2;    // camera period in gauge ticks
  double r_t = 1e-2;       // m^2, filter noise variance per channel
  bool pixel_roundtrip = true;
  DepthMode depth = DepthMode::Exact;
  double pixel_quantization = 0.0;  // px, 0 disables

  // Filled by attach().
  Eigen::VectorXd p0;
  std::vector<int> dof_index;
  std::vector<std::array<int, 3>> node_dofs;
  std::vector<Eigen::Vector3d> rest_positions;

  int size() const { return static_cast<int>(tracked.size()); }
  void attach(const AssembledModel& model);
  void validate() const;
  // Camera restricted to the given channel positions.
  CameraModel subset(const std::vector<int>& channels) const;
  // Channel index of a tracked DOF, -1 if absent.
  int channel(int node, Axis axis) const;
};

Eigen::Vector2d project_point(const Eigen::Vector3d& P, const Intrinsics& K,
                              const Extrinsics& ext);
Eigen::Vector2d project_point(const Eigen::Vector3d& P, const CameraModel& camera);
// Point at camera-frame depth z_c behind pixel (v, w).
Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double z_c, const Intrinsics& K,
                             const Extrinsics& ext);

Eigen::Vector2d distort_point(const Eigen::Vector2d& vw, const Distortion& dist);
Eigen::Vector2d undistort_point(const Eigen::Vector2d& vw_distorted, const Distortion& dist,
                                double tol = 1e-14, int max_iter = 100);

// C_t (2 n_e x 2 n_p).
Eigen::MatrixXd camera_matrix(const CameraModel& camera, const ModalBasis& basis);
Eigen::VectorXd camera_output(const Eigen::VectorXd& x, const CameraModel& camera,
                              const ModalBasis& basis);
// Tracked displacements as seen through the synthetic optics for nodal
// displacement q: project, distort, quantize, undistort, back-project.
Eigen::VectorXd camera_displacement(const Eigen::VectorXd& q, const CameraModel& camera);

Eigen::MatrixXd build_R_cam(const CameraModel& camera);

// Defaults for the 5-module scale structure.
CameraModel default_camera(const AssembledModel& model, double standoff = 2.0);
std::vector<TrackedDof> default_tracked_dofs();

}  // namespace trussest
