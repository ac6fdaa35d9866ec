#pragma once

#include <vector>

#include "chainid/model.hpp"
#include "chainid/types.hpp"

namespace chainid {

/// Joint positions (rad), velocities (rad/s) and accelerations (rad/s^2).
struct JointState {
  Vec q;
  Vec qd;
  Vec qdd;

  static JointState zero(int n) { return {Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)}; }
};

/// World-frame kinematics of every link. Linear accelerations are of the
/// joint-frame origins and include the base acceleration passed to
/// compute_kinematics (-gravity for dynamics, zero for pure kinematics).
struct Kinematics {
  std::vector<Mat3> rotation;
  std::vector<Vec3> origin;
  std::vector<Vec3> axis;
  std::vector<Vec3> omega;
  std::vector<Vec3> omega_dot;
  std::vector<Vec3> accel;
};

Kinematics compute_kinematics(const RobotModel& model, const Vec& q, const Vec& qd,
                              const Vec& qdd, const Vec3& base_accel);

/// Positions and rotations only.
Kinematics compute_positions(const RobotModel& model, const Vec& q);

/// Joint torques produced by the inertial blocks alone (no friction) given
/// precomputed kinematics. `inertial` holds 10 entries per link.
Vec rnea_backward(const RobotModel& model, const Kinematics& kin, const Eigen::Ref<const Vec>& inertial);

/// F_c sign(qd) + F_v qd + I_a qdd + beta, with sign(0) = 0.
double friction_force(double qd, double qdd, const Vec4& theta_f);

Vec friction_vector(const StandardParams& theta, const Vec& qd, const Vec& qdd);

/// H q'' + C q' + g + F for the unconstrained tree.
Vec inverse_dynamics(const RobotModel& model, const StandardParams& theta, const JointState& s);

/// H(q) without transmission inertia.
Mat mass_matrix(const RobotModel& model, const StandardParams& theta, const Vec& q);

/// C(q, qd) qd + g(q).
Vec bias_forces(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd);

/// W(q, qd, qdd) with W theta = inverse_dynamics(theta) for every theta.
Mat regressor(const RobotModel& model, const JointState& s);

/// Kinetic energy 1/2 qd^T (H + diag(I_a)) qd.
double kinetic_energy(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd);

/// Gravitational potential energy, zero at the world origin.
double potential_energy(const RobotModel& model, const StandardParams& theta, const Vec& q);

}  // namespace chainid
