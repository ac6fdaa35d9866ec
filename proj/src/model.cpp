#include "chainid/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "chainid/errors.hpp"

namespace chainid {

namespace {

constexpr double kAxisTol = 1e-12;

Vec3 vec3_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + ": expected 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

std::vector<int> parse_axes(const nlohmann::json& j) {
  std::vector<int> axes;
  auto add = [&](char c) {
    int a = c == 'x' ? 0 : c == 'y' ? 1 : c == 'z' ? 2 : -1;
    if (a < 0) throw ParseError(std::string("constraint axis '") + c + "' not in {x,y,z}");
    for (int b : axes)
      if (b == a) throw ValidationError("constraint axis listed twice");
    axes.push_back(a);
  };
  if (j.is_string()) {
    for (char c : j.get<std::string>()) add(c);
  } else if (j.is_array()) {
    for (const auto& e : j) {
      auto s = e.get<std::string>();
      if (s.size() != 1) throw ParseError("constraint axis must be one of x, y, z");
      add(s[0]);
    }
  } else {
    throw ParseError("constraint axes: expected string or array");
  }
  return axes;
}

std::string axes_string(const std::vector<int>& axes) {
  std::string s;
  for (int a : axes) s.push_back("xyz"[a]);
  return s;
}

}  // namespace

Mat3 Link::fixed_rotation() const {
  using Eigen::AngleAxisd;
  return (AngleAxisd(rpy.z(), Vec3::UnitZ()) * AngleAxisd(rpy.y(), Vec3::UnitY()) *
          AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

RobotModel::RobotModel(std::string name, Vec3 gravity, std::vector<Link> links,
                       std::vector<ConstraintSpec> constraints)
    : name_(std::move(name)),
      gravity_(gravity),
      links_(std::move(links)),
      constraints_(std::move(constraints)) {
  if (links_.empty()) throw ValidationError("model has no links");
  for (int j = 0; j < n(); ++j) {
    const Link& l = links_[static_cast<size_t>(j)];
    if (l.parent != kGround && (l.parent < 0 || l.parent >= j))
      throw ValidationError("link " + std::to_string(j) +
                            ": parent index must precede the link (cycle or bad ordering)");
    if (std::abs(l.axis.norm() - 1.0) > kAxisTol)
      throw ValidationError("link " + std::to_string(j) + ": non-unit axis");
    if (!(l.pos_lower <= l.pos_upper))
      throw ValidationError("link " + std::to_string(j) + ": empty position interval");
    if (!(l.vel_limit > 0.0))
      throw ValidationError("link " + std::to_string(j) + ": velocity bound must be positive");
    (l.actuated ? actuated_ : unactuated_).push_back(j);
  }
  for (size_t k = 0; k < constraints_.size(); ++k) {
    const auto& c = constraints_[k];
    auto valid_body = [&](int b) { return b == kGround || (b >= 0 && b < n()); };
    if (!valid_body(c.body_p) || !valid_body(c.body_s))
      throw ValidationError("constraint " + std::to_string(k) + ": body index out of range");
    if (c.body_p == c.body_s)
      throw ValidationError("constraint " + std::to_string(k) + ": body_p equals body_s");
    if (c.axes.empty() || c.axes.size() > 3)
      throw ValidationError("constraint " + std::to_string(k) + ": needs 1..3 axes");
    n_c_ += static_cast<int>(c.axes.size());
  }
  if (!fully_actuated()) {
    warnings_.push_back("not fully actuated: n_u = " + std::to_string(n_u()) +
                        ", n_c = " + std::to_string(n_c_));
  }
}

void RobotModel::require_fully_actuated() const {
  if (!fully_actuated())
    throw ValidationError("model '" + name_ + "' is not fully actuated (n_u = " +
                          std::to_string(n_u()) + ", n_c = " + std::to_string(n_c_) + ")");
}

void RobotModel::set_home(Vec q) {
  if (q.size() != n()) throw DimensionError("home configuration must have n entries");
  home_ = std::move(q);
}

void RobotModel::set_reference_theta(Vec theta) {
  if (theta.size() != n_params()) throw DimensionError("reference_theta must have 14n entries");
  reference_theta_ = std::move(theta);
}

Vec RobotModel::select_actuated(const Vec& full) const {
  Vec out(n_a());
  for (int i = 0; i < n_a(); ++i) out[i] = full[actuated_[static_cast<size_t>(i)]];
  return out;
}

Vec RobotModel::select_unactuated(const Vec& full) const {
  Vec out(n_u());
  for (int i = 0; i < n_u(); ++i) out[i] = full[unactuated_[static_cast<size_t>(i)]];
  return out;
}

Vec RobotModel::merge(const Vec& qa, const Vec& qu) const {
  Vec q(n());
  for (int i = 0; i < n_a(); ++i) q[actuated_[static_cast<size_t>(i)]] = qa[i];
  for (int i = 0; i < n_u(); ++i) q[unactuated_[static_cast<size_t>(i)]] = qu[i];
  return q;
}

bool operator==(const RobotModel& a, const RobotModel& b) {
  if (a.name_ != b.name_ || a.gravity_ != b.gravity_ || a.n() != b.n() ||
      a.constraints_.size() != b.constraints_.size())
    return false;
  for (int j = 0; j < a.n(); ++j) {
    const Link& x = a.link(j);
    const Link& y = b.link(j);
    if (x.name != y.name || x.parent != y.parent || x.axis != y.axis || x.xyz != y.xyz ||
        x.rpy != y.rpy || x.actuated != y.actuated || x.pos_lower != y.pos_lower ||
        x.pos_upper != y.pos_upper || x.vel_limit != y.vel_limit)
      return false;
  }
  for (size_t k = 0; k < a.constraints_.size(); ++k) {
    const auto& x = a.constraints_[k];
    const auto& y = b.constraints_[k];
    if (x.body_p != y.body_p || x.body_s != y.body_s || x.point_p != y.point_p ||
        x.point_s != y.point_s || x.axes != y.axes)
      return false;
  }
  return a.home_ == b.home_ && a.reference_theta_ == b.reference_theta_;
}

RobotModel model_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw ParseError("model file: top level must be an object");
    std::string name = doc.value("name", std::string("robot"));
    Vec3 gravity(0.0, 0.0, -9.81);
    if (doc.contains("gravity")) gravity = vec3_from(doc["gravity"], "gravity");

    if (!doc.contains("links") || !doc["links"].is_array())
      throw ParseError("model file: missing links[]");
    std::vector<Link> links;
    for (const auto& jl : doc["links"]) {
      Link l;
      l.name = jl.value("name", "link" + std::to_string(links.size()));
      l.parent = jl.at("parent").get<int>();
      l.axis = vec3_from(jl.at("axis"), "axis");
      if (jl.contains("origin")) {
        const auto& o = jl["origin"];
        if (o.contains("xyz")) l.xyz = vec3_from(o["xyz"], "origin.xyz");
        if (o.contains("rpy")) l.rpy = vec3_from(o["rpy"], "origin.rpy");
      }
      l.actuated = jl.value("actuated", false);
      if (jl.contains("limits")) {
        const auto& lim = jl["limits"];
        if (lim.contains("pos")) {
          const auto& p = lim["pos"];
          if (!p.is_array() || p.size() != 2) throw ParseError("limits.pos: expected [lo, hi]");
          l.pos_lower = p[0].get<double>();
          l.pos_upper = p[1].get<double>();
        }
        if (lim.contains("vel")) l.vel_limit = lim["vel"].get<double>();
      }
      links.push_back(std::move(l));
    }

    std::vector<ConstraintSpec> constraints;
    if (doc.contains("constraints")) {
      for (const auto& jc : doc["constraints"]) {
        ConstraintSpec c;
        c.body_p = jc.at("body_p").get<int>();
        c.point_p = vec3_from(jc.at("point_p"), "point_p");
        c.body_s = jc.at("body_s").get<int>();
        c.point_s = vec3_from(jc.at("point_s"), "point_s");
        c.axes = parse_axes(jc.at("axes"));
        constraints.push_back(std::move(c));
      }
    }

    RobotModel model(std::move(name), gravity, std::move(links), std::move(constraints));
    if (doc.contains("home")) model.set_home(vec_from(doc["home"], "home"));
    if (doc.contains("reference_theta"))
      model.set_reference_theta(vec_from(doc["reference_theta"], "reference_theta"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

RobotModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model file '" + path + "': " + e.what());
  }
  return model_from_json(doc);
}

nlohmann::json model_to_json(const RobotModel& model) {
  nlohmann::json doc;
  doc["name"] = model.name();
  doc["gravity"] = vec_to_json(model.gravity());
  doc["links"] = nlohmann::json::array();
  for (const Link& l : model.links()) {
    doc["links"].push_back({{"name", l.name},
                            {"parent", l.parent},
                            {"axis", vec_to_json(l.axis)},
                            {"origin", {{"xyz", vec_to_json(l.xyz)}, {"rpy", vec_to_json(l.rpy)}}},
                            {"actuated", l.actuated},
                            {"limits", {{"pos", {l.pos_lower, l.pos_upper}}, {"vel", l.vel_limit}}}});
  }
  doc["constraints"] = nlohmann::json::array();
  for (const auto& c : model.constraints()) {
    doc["constraints"].push_back({{"body_p", c.body_p},
                                  {"point_p", vec_to_json(c.point_p)},
                                  {"body_s", c.body_s},
                                  {"point_s", vec_to_json(c.point_s)},
                                  {"axes", axes_string(c.axes)}});
  }
  if (model.home()) doc["home"] = vec_to_json(*model.home());
  if (model.reference_theta()) doc["reference_theta"] = vec_to_json(*model.reference_theta());
  return doc;
}

StandardParams::StandardParams(Vec theta) : theta_(std::move(theta)) {
  if (theta_.size() % kParamsPerLink != 0)
    throw DimensionError("parameter vector length must be a multiple of 14");
  n_ = static_cast<int>(theta_.size() / kParamsPerLink);
}

Vec10 inertial_from_com(double mass, const Vec3& com, const Mat3& inertia_com) {
  Mat3 shifted = inertia_com + mass * (com.squaredNorm() * Mat3::Identity() - com * com.transpose());
  Vec10 v;
  v << shifted(0, 0), shifted(0, 1), shifted(0, 2), shifted(1, 1), shifted(1, 2), shifted(2, 2),
      mass * com.x(), mass * com.y(), mass * com.z(), mass;
  return v;
}

Vec10 cuboid_inertial(double mass, const Vec3& size, const Vec3& com) {
  const Vec3 s2 = size.cwiseProduct(size);
  Mat3 ic = Mat3::Zero();
  ic(0, 0) = mass * (s2.y() + s2.z()) / 12.0;
  ic(1, 1) = mass * (s2.x() + s2.z()) / 12.0;
  ic(2, 2) = mass * (s2.x() + s2.y()) / 12.0;
  return inertial_from_com(mass, com, ic);
}

Mat3 shifted_inertia(const Vec10& b) {
  Mat3 L;
  L << b[0], b[1], b[2],
       b[1], b[3], b[4],
       b[2], b[4], b[5];
  return L;
}

Mat4 lmi_matrix(const Vec10& b) {
  const Mat3 L = shifted_inertia(b);
  Mat4 P;
  P.topLeftCorner<3, 3>() = 0.5 * L.trace() * Mat3::Identity() - L;
  P.topRightCorner<3, 1>() = b.segment<3>(6);
  P.bottomLeftCorner<1, 3>() = b.segment<3>(6).transpose();
  P(3, 3) = b[9];
  return P;
}

Vec10 inertial_from_lmi(const Mat4& P) {
  const Mat3 sigma = P.topLeftCorner<3, 3>();
  const Mat3 L = sigma.trace() * Mat3::Identity() - sigma;
  Vec10 b;
  b << L(0, 0), L(0, 1), L(0, 2), L(1, 1), L(1, 2), L(2, 2), P(0, 3), P(1, 3), P(2, 3), P(3, 3);
  return b;
}

std::string ConsistencyReport::summary() const {
  std::ostringstream out;
  for (const auto& l : links)
    if (!l.ok) out << "link " << l.link << ": " << l.violation << "; ";
  std::string s = out.str();
  return s.empty() ? "consistent" : s;
}

ConsistencyReport is_physically_consistent(const StandardParams& theta, double eps_pd) {
  ConsistencyReport report;
  for (int j = 0; j < theta.n(); ++j) {
    LinkConsistency lc;
    lc.link = j;
    const Vec4 f = theta.friction(j);
    Eigen::SelfAdjointEigenSolver<Mat4> eig(lmi_matrix(theta.inertial(j)), Eigen::EigenvaluesOnly);
    lc.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (!(f[StandardParams::Fc] >= 0.0)) {
      lc.violation = "F_c >= 0";
    } else if (!(f[StandardParams::Fv] >= 0.0)) {
      lc.violation = "F_v >= 0";
    } else if (!(f[StandardParams::Ia] >= 0.0)) {
      lc.violation = "I_a >= 0";
    } else if (!(lc.min_eigenvalue >= eps_pd)) {
      lc.violation = "LMI min eigenvalue >= eps_pd";
    }
    lc.ok = lc.violation.empty();
    report.ok = report.ok && lc.ok;
    report.links.push_back(std::move(lc));
  }
  return report;
}

ParameterMask ParameterMask::all_free(int n_params) {
  return ParameterMask{std::vector<bool>(static_cast<size_t>(n_params), true), Vec::Zero(n_params)};
}

ParameterMask ParameterMask::friction_only(const Vec& reference, int n) {
  if (reference.size() != kParamsPerLink * n) throw DimensionError("reference length != 14n");
  ParameterMask m;
  m.free.assign(static_cast<size_t>(kParamsPerLink * n), false);
  for (int i = kInertialPerLink * n; i < kParamsPerLink * n; ++i) m.free[static_cast<size_t>(i)] = true;
  m.fixed_values = reference;
  return m;
}

int ParameterMask::n_free() const {
  int k = 0;
  for (bool b : free) k += b ? 1 : 0;
  return k;
}

std::vector<int> ParameterMask::free_indices() const {
  std::vector<int> idx;
  for (size_t i = 0; i < free.size(); ++i)
    if (free[i]) idx.push_back(static_cast<int>(i));
  return idx;
}

std::vector<int> ParameterMask::fixed_indices() const {
  std::vector<int> idx;
  for (size_t i = 0; i < free.size(); ++i)
    if (!free[i]) idx.push_back(static_cast<int>(i));
  return idx;
}

MaskSplit mask_split(const Vec& theta, const ParameterMask& mask) {
  if (static_cast<Eigen::Index>(mask.free.size()) != theta.size())
    throw DimensionError("mask length does not match parameter vector");
  const int nf = mask.n_free();
  if (nf == 0) throw ValidationError("mask fixes every parameter");
  MaskSplit out{Vec(nf), Vec(theta.size() - nf)};
  Eigen::Index a = 0, b = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (mask.free[static_cast<size_t>(i)])
      out.free[a++] = theta[i];
    else
      out.fixed[b++] = theta[i];
  }
  return out;
}

Vec mask_merge(const MaskSplit& parts, const ParameterMask& mask) {
  const auto n = static_cast<Eigen::Index>(mask.free.size());
  if (parts.free.size() + parts.fixed.size() != n)
    throw DimensionError("mask_merge: part sizes do not add up");
  Vec theta(n);
  Eigen::Index a = 0, b = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    theta[i] = mask.free[static_cast<size_t>(i)] ? parts.free[a++] : parts.fixed[b++];
  return theta;
}

}  // namespace chainid
