#include "chainid/dynamics.hpp"

#include "chainid/errors.hpp"

namespace chainid {

namespace {

void check_lengths(const RobotModel& model, const JointState& s) {
  const auto n = static_cast<Eigen::Index>(model.n());
  if (s.q.size() != n || s.qd.size() != n || s.qdd.size() != n)
    throw DimensionError("joint state length does not match model");
}

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Kinematics compute_kinematics(const RobotModel& model, const Vec& q, const Vec& qd,
                              const Vec& qdd, const Vec3& base_accel) {
  const auto n = static_cast<size_t>(model.n());
  Kinematics k;
  k.rotation.resize(n);
  k.origin.resize(n);
  k.axis.resize(n);
  k.omega.resize(n);
  k.omega_dot.resize(n);
  k.accel.resize(n);
  for (size_t j = 0; j < n; ++j) {
    const Link& l = model.links()[j];
    Mat3 Rp = Mat3::Identity();
    Vec3 op = Vec3::Zero(), wp = Vec3::Zero(), dwp = Vec3::Zero(), ap = base_accel;
    if (l.parent != kGround) {
      const auto p = static_cast<size_t>(l.parent);
      Rp = k.rotation[p];
      op = k.origin[p];
      wp = k.omega[p];
      dwp = k.omega_dot[p];
      ap = k.accel[p];
    }
    const Mat3 Rjoint = Rp * l.fixed_rotation();
    const Vec3 z = Rjoint * l.axis;
    const auto i = static_cast<Eigen::Index>(j);
    k.axis[j] = z;
    k.origin[j] = op + Rp * l.xyz;
    k.rotation[j] = Rjoint * Eigen::AngleAxisd(q[i], l.axis).toRotationMatrix();
    k.omega[j] = wp + z * qd[i];
    k.omega_dot[j] = dwp + z * qdd[i] + wp.cross(z * qd[i]);
    const Vec3 r = k.origin[j] - op;
    k.accel[j] = ap + dwp.cross(r) + wp.cross(wp.cross(r));
  }
  return k;
}

Kinematics compute_positions(const RobotModel& model, const Vec& q) {
  const Vec zero = Vec::Zero(model.n());
  return compute_kinematics(model, q, zero, zero, Vec3::Zero());
}

Vec rnea_backward(const RobotModel& model, const Kinematics& kin, const Eigen::Ref<const Vec>& inertial) {
  const int n = model.n();
  std::vector<Vec3> force(static_cast<size_t>(n), Vec3::Zero());
  std::vector<Vec3> moment(static_cast<size_t>(n), Vec3::Zero());
  for (int j = 0; j < n; ++j) {
    const Vec10 b = inertial.segment<kInertialPerLink>(kInertialPerLink * j);
    if (b.isZero(0.0)) continue;
    const auto u = static_cast<size_t>(j);
    const Mat3& R = kin.rotation[u];
    const Mat3 I = R * shifted_inertia(b) * R.transpose();
    const Vec3 h = R * b.segment<3>(6);
    const double m = b[9];
    const Vec3& w = kin.omega[u];
    const Vec3& dw = kin.omega_dot[u];
    const Vec3& a = kin.accel[u];
    force[u] = m * a + dw.cross(h) + w.cross(w.cross(h));
    moment[u] = I * dw + w.cross(I * w) + h.cross(a);
  }
  Vec tau(n);
  for (int j = n - 1; j >= 0; --j) {
    const auto u = static_cast<size_t>(j);
    tau[j] = kin.axis[u].dot(moment[u]);
    const int p = model.link(j).parent;
    if (p != kGround) {
      const auto pu = static_cast<size_t>(p);
      force[pu] += force[u];
      moment[pu] += moment[u] + (kin.origin[u] - kin.origin[pu]).cross(force[u]);
    }
  }
  return tau;
}

double friction_force(double qd, double qdd, const Vec4& f) {
  return f[StandardParams::Fc] * sign0(qd) + f[StandardParams::Fv] * qd +
         f[StandardParams::Ia] * qdd + f[StandardParams::Beta];
}

Vec friction_vector(const StandardParams& theta, const Vec& qd, const Vec& qdd) {
  Vec out(theta.n());
  for (int j = 0; j < theta.n(); ++j) out[j] = friction_force(qd[j], qdd[j], theta.friction(j));
  return out;
}

Vec inverse_dynamics(const RobotModel& model, const StandardParams& theta, const JointState& s) {
  check_lengths(model, s);
  if (theta.n() != model.n()) throw DimensionError("parameter vector does not match model");
  const Kinematics kin = compute_kinematics(model, s.q, s.qd, s.qdd, -model.gravity());
  return rnea_backward(model, kin, theta.vector().head(kInertialPerLink * model.n())) +
         friction_vector(theta, s.qd, s.qdd);
}

Mat mass_matrix(const RobotModel& model, const StandardParams& theta, const Vec& q) {
  const int n = model.n();
  const Vec zero = Vec::Zero(n);
  const auto inertial = theta.vector().head(kInertialPerLink * n);
  Mat H(n, n);
  for (int k = 0; k < n; ++k) {
    const Kinematics kin = compute_kinematics(model, q, zero, Vec::Unit(n, k), Vec3::Zero());
    H.col(k) = rnea_backward(model, kin, inertial);
  }
  return H;
}

Vec bias_forces(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd) {
  const int n = model.n();
  const Kinematics kin = compute_kinematics(model, q, qd, Vec::Zero(n), -model.gravity());
  return rnea_backward(model, kin, theta.vector().head(kInertialPerLink * n));
}

Mat regressor(const RobotModel& model, const JointState& s) {
  check_lengths(model, s);
  const int n = model.n();
  const int np = kParamsPerLink * n;
  const Kinematics kin = compute_kinematics(model, s.q, s.qd, s.qdd, -model.gravity());
  Mat W = Mat::Zero(n, np);
  Vec unit = Vec::Zero(kInertialPerLink * n);
  for (int k = 0; k < kInertialPerLink * n; ++k) {
    unit[k] = 1.0;
    W.col(k) = rnea_backward(model, kin, unit);
    unit[k] = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    const int c = kInertialPerLink * n + kFrictionPerJoint * j;
    W(j, c + StandardParams::Fc) = sign0(s.qd[j]);
    W(j, c + StandardParams::Fv) = s.qd[j];
    W(j, c + StandardParams::Ia) = s.qdd[j];
    W(j, c + StandardParams::Beta) = 1.0;
  }
  return W;
}

double kinetic_energy(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd) {
  const Mat H = mass_matrix(model, theta, q);
  double ia = 0.0;
  for (int j = 0; j < model.n(); ++j) ia += theta.friction(j)[StandardParams::Ia] * qd[j] * qd[j];
  return 0.5 * (qd.dot(H * qd) + ia);
}

double potential_energy(const RobotModel& model, const StandardParams& theta, const Vec& q) {
  const Kinematics kin = compute_positions(model, q);
  double v = 0.0;
  for (int j = 0; j < model.n(); ++j) {
    const Vec10 b = theta.inertial(j);
    const auto u = static_cast<size_t>(j);
    const Vec3 first_moment = b[9] * kin.origin[u] + kin.rotation[u] * b.segment<3>(6);
    v -= model.gravity().dot(first_moment);
  }
  return v;
}

}  // namespace chainid
