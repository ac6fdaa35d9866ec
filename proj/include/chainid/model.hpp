#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chainid/types.hpp"

namespace chainid {

inline constexpr int kGround = -1;
inline constexpr int kInertialPerLink = 10;
inline constexpr int kFrictionPerJoint = 4;
inline constexpr int kParamsPerLink = kInertialPerLink + kFrictionPerJoint;

/// One revolute joint and the link it drives. Angles in rad, lengths in m.
struct Link {
  std::string name;
  int parent = kGround;           ///< index of the parent link, kGround for the base
  Vec3 axis = Vec3::UnitZ();      ///< joint axis in the joint frame, unit norm
  Vec3 xyz = Vec3::Zero();        ///< joint frame origin in the parent frame
  Vec3 rpy = Vec3::Zero();        ///< fixed roll-pitch-yaw of the joint frame
  bool actuated = false;
  double pos_lower = -1e9;
  double pos_upper = 1e9;
  double vel_limit = 1e9;

  /// Rotation of the joint frame relative to the parent frame at q = 0.
  Mat3 fixed_rotation() const;
};

/// World-frame coincidence of a point on body_p with a point on body_s,
/// restricted to the listed world axes (0 = x, 1 = y, 2 = z).
struct ConstraintSpec {
  int body_p = 0;
  Vec3 point_p = Vec3::Zero();
  int body_s = kGround;
  Vec3 point_s = Vec3::Zero();
  std::vector<int> axes{0, 1, 2};
};

class RobotModel {
 public:
  RobotModel() = default;
  /// Validates the tree and the constraint list. Throws ValidationError.
  RobotModel(std::string name, Vec3 gravity, std::vector<Link> links,
             std::vector<ConstraintSpec> constraints);

  const std::string& name() const { return name_; }
  const Vec3& gravity() const { return gravity_; }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(int j) const { return links_[static_cast<size_t>(j)]; }
  const std::vector<ConstraintSpec>& constraints() const { return constraints_; }

  int n() const { return static_cast<int>(links_.size()); }
  int n_a() const { return static_cast<int>(actuated_.size()); }
  int n_u() const { return static_cast<int>(unactuated_.size()); }
  int n_c() const { return n_c_; }
  int n_params() const { return kParamsPerLink * n(); }

  const std::vector<int>& actuated() const { return actuated_; }
  const std::vector<int>& unactuated() const { return unactuated_; }

  bool fully_actuated() const { return n_u() == n_c_; }
  /// Throws ValidationError unless n_u == n_c.
  void require_fully_actuated() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Assembly guess used to pick the closure branch.
  const std::optional<Vec>& home() const { return home_; }
  void set_home(Vec q);
  const std::optional<Vec>& reference_theta() const { return reference_theta_; }
  void set_reference_theta(Vec theta);

  Vec select_actuated(const Vec& full) const;
  Vec select_unactuated(const Vec& full) const;
  Vec merge(const Vec& qa, const Vec& qu) const;

  friend bool operator==(const RobotModel& a, const RobotModel& b);

 private:
  std::string name_;
  Vec3 gravity_ = Vec3(0.0, 0.0, -9.81);
  std::vector<Link> links_;
  std::vector<ConstraintSpec> constraints_;
  std::vector<int> actuated_;
  std::vector<int> unactuated_;
  int n_c_ = 0;
  std::vector<std::string> warnings_;
  std::optional<Vec> home_;
  std::optional<Vec> reference_theta_;
};

RobotModel load_model(const std::string& path);
RobotModel model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const RobotModel& model);

/// Standard parameters: 10 inertial entries per link followed by 4 friction
/// entries per joint. Inertia entries are taken about the joint-frame origin.
class StandardParams {
 public:
  enum Inertial { XX = 0, XY, XZ, YY, YZ, ZZ, MX, MY, MZ, M };
  enum Friction { Fc = 0, Fv, Ia, Beta };

  StandardParams() = default;
  explicit StandardParams(int n) : theta_(Vec::Zero(kParamsPerLink * n)), n_(n) {}
  explicit StandardParams(Vec theta);

  int n() const { return n_; }
  const Vec& vector() const { return theta_; }
  Vec& vector() { return theta_; }

  static int inertial_offset(int j) { return kInertialPerLink * j; }
  int friction_offset(int j) const { return kInertialPerLink * n_ + kFrictionPerJoint * j; }

  Vec10 inertial(int j) const { return theta_.segment<kInertialPerLink>(inertial_offset(j)); }
  Vec4 friction(int j) const { return theta_.segment<kFrictionPerJoint>(friction_offset(j)); }
  void set_inertial(int j, const Vec10& v) { theta_.segment<kInertialPerLink>(inertial_offset(j)) = v; }
  void set_friction(int j, const Vec4& v) { theta_.segment<kFrictionPerJoint>(friction_offset(j)) = v; }

 private:
  Vec theta_;
  int n_ = 0;
};

/// Inertial block for a body of mass m whose center of mass sits at `com`
/// with inertia `inertia_com` about the center of mass (parallel-axis shifted).
Vec10 inertial_from_com(double mass, const Vec3& com, const Mat3& inertia_com);

/// Solid box of given size with its center of mass at `com`.
Vec10 cuboid_inertial(double mass, const Vec3& size, const Vec3& com);

/// Shifted inertia tensor (3x3) of one inertial block.
Mat3 shifted_inertia(const Vec10& block);

/// [[tr(L)/2 I - L, h], [h^T, m]] for one inertial block.
Mat4 lmi_matrix(const Vec10& block);

/// Inverse of lmi_matrix on the space of symmetric 4x4 matrices.
Vec10 inertial_from_lmi(const Mat4& P);

struct LinkConsistency {
  int link = 0;
  bool ok = true;
  double min_eigenvalue = 0.0;
  std::string violation;  ///< first violated condition, empty when ok
};

struct ConsistencyReport {
  bool ok = true;
  std::vector<LinkConsistency> links;
  std::string summary() const;
};

/// Friction nonnegativity (F_c, F_v, I_a) and min-eig(LMI_j) >= eps_pd for
/// every link. A negative eps_pd acts as a tolerance.
ConsistencyReport is_physically_consistent(const StandardParams& theta, double eps_pd = 1e-8);

struct ParameterMask {
  std::vector<bool> free;
  Vec fixed_values;

  static ParameterMask all_free(int n_params);
  /// Friction blocks free, inertial blocks fixed at `reference`.
  static ParameterMask friction_only(const Vec& reference, int n);

  int n_free() const;
  std::vector<int> free_indices() const;
  std::vector<int> fixed_indices() const;
};

struct MaskSplit {
  Vec free;
  Vec fixed;
};

/// Throws ValidationError when the mask has no free entry or wrong length.
MaskSplit mask_split(const Vec& theta, const ParameterMask& mask);
Vec mask_merge(const MaskSplit& parts, const ParameterMask& mask);

}  // namespace chainid
