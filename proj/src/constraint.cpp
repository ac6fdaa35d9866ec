#include "chainid/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "chainid/errors.hpp"

namespace chainid {

namespace {

bool is_ancestor_or_self(const RobotModel& model, int k, int body) {
  for (int b = body; b != kGround; b = model.link(b).parent)
    if (b == k) return true;
  return false;
}

struct PointKin {
  Vec3 x = Vec3::Zero();
  Vec3 acc = Vec3::Zero();  // with q'' = 0
};

PointKin point_kinematics(const Kinematics& kin, int body, const Vec3& p) {
  PointKin out;
  if (body == kGround) {
    out.x = p;
    return out;
  }
  const auto b = static_cast<size_t>(body);
  const Vec3 r = kin.rotation[b] * p;
  out.x = kin.origin[b] + r;
  const Vec3& w = kin.omega[b];
  out.acc = kin.accel[b] + kin.omega_dot[b].cross(r) + w.cross(w.cross(r));
  return out;
}

void add_point_jacobian(const RobotModel& model, const Kinematics& kin, int body, const Vec3& x,
                        double sign, Eigen::Matrix<double, 3, Eigen::Dynamic>& Jp) {
  for (int k = 0; k < model.n(); ++k) {
    if (!is_ancestor_or_self(model, k, body)) continue;
    const auto u = static_cast<size_t>(k);
    Jp.col(k) += sign * kin.axis[u].cross(x - kin.origin[u]);
  }
}

Mat columns(const Mat& J, const std::vector<int>& idx) {
  Mat out(J.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = J.col(idx[i]);
  return out;
}

}  // namespace

ConstraintEval eval_constraints(const RobotModel& model, const Vec& q, const Vec& qd) {
  const int n = model.n();
  if (q.size() != n || qd.size() != n) throw DimensionError("eval_constraints: length != n");
  const Kinematics kin = compute_kinematics(model, q, qd, Vec::Zero(n), Vec3::Zero());
  ConstraintEval ev{Vec(model.n_c()), Mat::Zero(model.n_c(), n), Vec(model.n_c())};
  int row = 0;
  for (const auto& cs : model.constraints()) {
    const PointKin p = point_kinematics(kin, cs.body_p, cs.point_p);
    const PointKin s = point_kinematics(kin, cs.body_s, cs.point_s);
    Eigen::Matrix<double, 3, Eigen::Dynamic> Jp = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, n);
    if (cs.body_p != kGround) add_point_jacobian(model, kin, cs.body_p, p.x, 1.0, Jp);
    if (cs.body_s != kGround) add_point_jacobian(model, kin, cs.body_s, s.x, -1.0, Jp);
    const Vec3 d = p.x - s.x;
    const Vec3 dd = p.acc - s.acc;
    for (int a : cs.axes) {
      ev.c[row] = d[a];
      ev.J.row(row) = Jp.row(a);
      ev.Jdot_qd[row] = dd[a];
      ++row;
    }
  }
  return ev;
}

Vec constraint_residual(const RobotModel& model, const Vec& q) {
  return eval_constraints(model, q, Vec::Zero(model.n())).c;
}

IkResult solve_ik(const RobotModel& model, const Vec& qa, const Vec& guess, const IkOptions& opt) {
  model.require_fully_actuated();
  if (qa.size() != model.n_a() || guess.size() != model.n_u())
    throw DimensionError("solve_ik: wrong actuated or guess length");
  IkResult res{guess, 0};
  if (model.n_u() == 0) {
    res.iterations = 1;
    return res;
  }
  const Vec zero = Vec::Zero(model.n());
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.iterations = it;
    const ConstraintEval ev = eval_constraints(model, model.merge(qa, res.qu), zero);
    const Mat Ju = columns(ev.J, model.unactuated());
    const Eigen::PartialPivLU<Mat> lu(Ju);
    if (!(std::abs(lu.determinant()) >= opt.singular_tol))
      throw SingularJu("solve_ik: |det J_u| below threshold at iteration " + std::to_string(it),
                       res.qu);
    if (ev.c.lpNorm<Eigen::Infinity>() <= opt.tol) return res;
    res.qu -= lu.solve(ev.c);
    if (!res.qu.allFinite()) throw NoConvergence("solve_ik: non-finite iterate", res.qu);
  }
  throw NoConvergence("solve_ik: no convergence in " + std::to_string(opt.max_iter) + " iterations",
                      res.qu);
}

Vec solve_ik_continuation(const RobotModel& model, const Vec& qa, const Vec& from, double max_step) {
  const Vec qa0 = model.select_actuated(from);
  Vec qu = model.select_unactuated(from);
  const double dist = (qa - qa0).lpNorm<Eigen::Infinity>();
  const int steps = std::max(1, static_cast<int>(std::ceil(dist / max_step)));
  for (int k = 1; k <= steps; ++k) {
    const Vec target = qa0 + (qa - qa0) * (static_cast<double>(k) / steps);
    qu = solve_ik(model, target, qu).qu;
  }
  return model.merge(qa, qu);
}

Vec assembled_home(const RobotModel& model) {
  const Vec guess = model.home() ? *model.home() : Vec::Zero(model.n());
  const Vec qa = model.select_actuated(guess);
  return model.merge(qa, solve_ik(model, qa, model.select_unactuated(guess)).qu);
}

Projection projection(const RobotModel& model, const Vec& q, const Vec& qd) {
  model.require_fully_actuated();
  const int n = model.n();
  const int na = model.n_a();
  Projection pr{Mat::Zero(n, na), Vec::Zero(n)};
  for (int i = 0; i < na; ++i) pr.G(model.actuated()[static_cast<size_t>(i)], i) = 1.0;
  if (model.n_u() == 0) return pr;
  const ConstraintEval ev0 = eval_constraints(model, q, Vec::Zero(n));
  const Mat Ju = columns(ev0.J, model.unactuated());
  const Mat Ja = columns(ev0.J, model.actuated());
  const Eigen::PartialPivLU<Mat> lu(Ju);
  if (!(std::abs(lu.determinant()) >= IkOptions{}.singular_tol))
    throw SingularJu("projection: |det J_u| below threshold", q);
  const Mat Gu = -lu.solve(Ja);
  for (int i = 0; i < model.n_u(); ++i) pr.G.row(model.unactuated()[static_cast<size_t>(i)]) = Gu.row(i);
  const Vec qd_c = pr.G * model.select_actuated(qd);
  const ConstraintEval ev = eval_constraints(model, q, qd_c);
  const Vec gu = -lu.solve(ev.Jdot_qd);
  for (int i = 0; i < model.n_u(); ++i) pr.Gdot_qda[model.unactuated()[static_cast<size_t>(i)]] = gu[i];
  return pr;
}

JointState lift_state(const RobotModel& model, const Vec& qa, const Vec& qda, const Vec& qdda,
                      const Vec& guess) {
  JointState s;
  s.q = model.merge(qa, solve_ik(model, qa, guess).qu);
  const Vec qd_seed = model.merge(qda, Vec::Zero(model.n_u()));
  const Projection pr = projection(model, s.q, qd_seed);
  s.qd = pr.G * qda;
  s.qdd = pr.G * qdda + pr.Gdot_qda;
  return s;
}

Mat input_matrix(const RobotModel& model) {
  Mat B = Mat::Zero(model.n(), model.n_a());
  for (int i = 0; i < model.n_a(); ++i) B(model.actuated()[static_cast<size_t>(i)], i) = 1.0;
  return B;
}

Mat constrained_regressor(const RobotModel& model, const JointState& s) {
  const Projection pr = projection(model, s.q, s.qd);
  return pr.G.transpose() * regressor(model, s);
}

Vec constrained_inverse_dynamics(const RobotModel& model, const StandardParams& theta, const JointState& s) {
  const Projection pr = projection(model, s.q, s.qd);
  return pr.G.transpose() * inverse_dynamics(model, theta, s);
}

Vec constraint_forces(const RobotModel& model, const StandardParams& theta, const JointState& s, const Vec& u) {
  model.require_fully_actuated();
  if (model.n_c() == 0) return Vec(0);
  const Vec r = inverse_dynamics(model, theta, s) - input_matrix(model) * u;
  const ConstraintEval ev = eval_constraints(model, s.q, s.qd);
  const Mat Ju = columns(ev.J, model.unactuated());
  const Eigen::PartialPivLU<Mat> lu(Ju.transpose());
  if (!(std::abs(lu.determinant()) >= IkOptions{}.singular_tol))
    throw SingularJu("constraint_forces: |det J_u| below threshold", s.q);
  return lu.solve(model.select_unactuated(r));
}

std::vector<JointState> sample_states(const RobotModel& model, int count, std::uint64_t seed,
                                      const StateSampling& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Vec home = assembled_home(model);
  std::vector<JointState> out;
  out.reserve(static_cast<size_t>(count));
  const int na = model.n_a();
  for (int k = 0; k < count; ++k) {
    Vec qa(na), qda(na), qdda(na);
    for (int i = 0; i < na; ++i) {
      const Link& l = model.link(model.actuated()[static_cast<size_t>(i)]);
      const double lo = std::max(l.pos_lower, -cfg.pos_cap);
      const double hi = std::min(l.pos_upper, cfg.pos_cap);
      qa[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * unit(rng);
      qda[i] = cfg.vel * unit(rng);
      qdda[i] = cfg.acc * unit(rng);
    }
    const Vec q = solve_ik_continuation(model, qa, home);
    out.push_back(lift_state(model, qa, qda, qdda, model.select_unactuated(q)));
  }
  return out;
}

}  // namespace chainid
