#include "chainid/simulate.hpp"

#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "chainid/constraint.hpp"
#include "chainid/dynamics.hpp"
#include "chainid/errors.hpp"
#include "chainid/kernels/kernels.hpp"
#include "chainid/sysid.hpp"

namespace chainid {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

constexpr double kMaxDrift = 1e-6;

void split_state(const State& x, int n, Vec& q, Vec& qd) {
  q = Eigen::Map<const Vec>(x.data(), n);
  qd = Eigen::Map<const Vec>(x.data() + n, n);
}

// Pulls (q, qd) back onto the constraint manifold, keeping the actuated part.
void project_state(const RobotModel& model, Vec& q, Vec& qd) {
  if (model.n_c() == 0) return;
  const Vec qa = model.select_actuated(q);
  q = model.merge(qa, solve_ik(model, qa, model.select_unactuated(q)).qu);
  qd = projection(model, q, qd).G * model.select_actuated(qd);
}

struct Recorder {
  TrajectoryDataset ds;
  Eigen::Index row = 0;

  Recorder(const RobotModel& model, Eigen::Index N) {
    ds.t.resize(N);
    ds.qa.resize(N, model.n_a());
    ds.qda.resize(N, model.n_a());
    ds.u.resize(N, model.n_a());
    ds.qdda.resize(N, model.n_a());
    ds.q.resize(N, model.n());
    ds.qd.resize(N, model.n());
    ds.qdd.resize(N, model.n());
    ds.stage = Stage::Raw;
  }

  void add(const RobotModel& model, double t, const Vec& q, const Vec& qd, const Vec& qdd, const Vec& u) {
    ds.t[row] = t;
    ds.q.row(row) = q.transpose();
    ds.qd.row(row) = qd.transpose();
    ds.qdd.row(row) = qdd.transpose();
    ds.qa.row(row) = model.select_actuated(q).transpose();
    ds.qda.row(row) = model.select_actuated(qd).transpose();
    ds.qdda.row(row) = model.select_actuated(qdd).transpose();
    ds.u.row(row) = u.transpose();
    ++row;
  }
};

}  // namespace

ForwardResult forward_dynamics(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd,
                               const Vec& u, const SimConfig& cfg) {
  const int n = model.n();
  const int nc = model.n_c();
  if (u.size() != model.n_a()) throw DimensionError("forward_dynamics: input length != n_a");
  Mat H = mass_matrix(model, theta, q);
  Vec rhs = input_matrix(model) * u - bias_forces(model, theta, q, qd);
  for (int j = 0; j < n; ++j) {
    const Vec4 f = theta.friction(j);
    H(j, j) += f[StandardParams::Ia];
    const double s = cfg.sign_eps > 0.0 ? std::tanh(qd[j] / cfg.sign_eps)
                                        : (qd[j] > 0.0 ? 1.0 : (qd[j] < 0.0 ? -1.0 : 0.0));
    rhs[j] -= f[StandardParams::Fc] * s + f[StandardParams::Fv] * qd[j] + f[StandardParams::Beta];
  }
  ForwardResult out;
  if (nc == 0) {
    out.qdd = H.ldlt().solve(rhs);
    out.lambda = Vec(0);
    return out;
  }
  const ConstraintEval ev = eval_constraints(model, q, qd);
  Mat K = Mat::Zero(n + nc, n + nc);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, nc) = ev.J.transpose();
  K.bottomLeftCorner(nc, n) = ev.J;
  Vec b(n + nc);
  b.head(n) = rhs;
  b.tail(nc) = -ev.Jdot_qd - 2.0 * cfg.alpha * (ev.J * qd) - cfg.beta * cfg.beta * ev.c;
  const Eigen::PartialPivLU<Mat> lu(K);
  const Vec x = lu.solve(b);
  if (!x.allFinite()) throw IntegrationFailure("forward_dynamics: singular KKT matrix", q);
  out.qdd = x.head(n);
  out.lambda = -x.tail(nc);
  return out;
}

InputSource zoh_replay(const Vec& t, const Mat& u) {
  if (t.size() != u.rows() || t.size() == 0) throw DimensionError("zoh_replay: time and input rows differ");
  const double t0 = t[0];
  const double dt = t.size() > 1 ? (t[t.size() - 1] - t0) / static_cast<double>(t.size() - 1) : 1.0;
  const Eigen::Index last = t.size() - 1;
  InputSource src;
  src.zero_order_hold = true;
  src.fn = [t0, dt, last, u](double tt, const Vec&, const Vec&) -> Vec {
    auto i = static_cast<Eigen::Index>(std::floor((tt - t0) / dt + 1e-6));
    i = std::clamp<Eigen::Index>(i, 0, last);
    return u.row(i).transpose();
  };
  return src;
}

TrajectoryDataset integrate(const RobotModel& model, const StandardParams& theta, const Vec& q0, const Vec& qd0,
                            const InputSource& input, const SimConfig& cfg) {
  const int n = model.n();
  if (q0.size() != n || qd0.size() != n) throw DimensionError("integrate: initial state length != n");
  if (!(cfg.dt_output > 0.0) || !(cfg.horizon >= 0.0)) throw ValidationError("integrate: bad time settings");
  const auto steps = static_cast<Eigen::Index>(std::floor(cfg.horizon / cfg.dt_output + 1e-9));
  Recorder rec(model, steps + 1);

  Vec q = q0, qd = qd0;
  if (cfg.project) project_state(model, q, qd);
  Vec u_hold = input.fn(0.0, q, qd);
  rec.add(model, 0.0, q, qd, forward_dynamics(model, theta, q, qd, u_hold, cfg).qdd, u_hold);

  auto rhs = [&](const State& x, State& dxdt, double t) {
    Vec qq, vv;
    split_state(x, n, qq, vv);
    const Vec uu = input.zero_order_hold ? u_hold : input.fn(t, qq, vv);
    const Vec acc = forward_dynamics(model, theta, qq, vv, uu, cfg).qdd;
    for (int j = 0; j < n; ++j) {
      dxdt[static_cast<size_t>(j)] = vv[j];
      dxdt[static_cast<size_t>(n + j)] = acc[j];
    }
  };

  State x(static_cast<size_t>(2 * n));
  for (Eigen::Index i = 0; i < steps; ++i) {
    const double ta = static_cast<double>(i) * cfg.dt_output;
    const double tb = static_cast<double>(i + 1) * cfg.dt_output;
    for (int j = 0; j < n; ++j) {
      x[static_cast<size_t>(j)] = q[j];
      x[static_cast<size_t>(n + j)] = qd[j];
    }
    try {
      if (cfg.integrator == SimConfig::Integrator::Rk45) {
        auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_adaptive(stepper, rhs, x, ta, tb, std::min(cfg.dt_output, 1e-3));
      } else {
        odeint::runge_kutta4<State> stepper;
        const int sub = std::max(1, static_cast<int>(std::ceil((tb - ta) / cfg.rk4_step - 1e-9)));
        const double h = (tb - ta) / sub;
        for (int k = 0; k < sub; ++k) stepper.do_step(rhs, x, ta + k * h, h);
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw IntegrationFailure(std::string("integrate: ") + e.what() + " at t = " + std::to_string(ta), q);
    }
    split_state(x, n, q, qd);
    if (!q.allFinite() || !qd.allFinite())
      throw IntegrationFailure("integrate: non-finite state at t = " + std::to_string(tb), q);
    if (cfg.project) {
      try {
        project_state(model, q, qd);
      } catch (const NumericalError& e) {
        throw IntegrationFailure(std::string("integrate: projection failed: ") + e.what(), q);
      }
    }
    if (model.n_c() > 0) {
      const double drift = constraint_residual(model, q).lpNorm<Eigen::Infinity>();
      if (!(drift <= kMaxDrift))
        throw IntegrationFailure("integrate: constraint violation " + std::to_string(drift) + " at t = " +
                                     std::to_string(tb), q);
    }
    u_hold = input.fn(tb, q, qd);
    rec.add(model, tb, q, qd, forward_dynamics(model, theta, q, qd, u_hold, cfg).qdd, u_hold);
  }
  return rec.ds;
}

double total_energy(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd) {
  return kinetic_energy(model, theta, q, qd) + potential_energy(model, theta, q);
}

TrackingMetrics tracking_metrics(const Mat& e) {
  constexpr double kDeg = 180.0 / std::numbers::pi;
  TrackingMetrics m{Vec::Zero(e.cols()), Vec::Zero(e.cols())};
  if (e.rows() == 0) return m;
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    m.mean_deg[j] = e.col(j).cwiseAbs().mean() * kDeg;
    m.max_deg[j] = e.col(j).cwiseAbs().maxCoeff() * kDeg;
  }
  return m;
}

TrackingRun run_tracking(const RobotModel& model, const StandardParams& theta_true, const StandardParams& theta_ctrl,
                         const ReferenceTrajectory& ref, const GainSet& gains, const SimConfig& cfg,
                         bool sampled_data) {
  const int na = model.n_a();
  if (ref.n_a() != na || gains.kp.size() != na || gains.kd_gain.size() != na)
    throw DimensionError("run_tracking: reference or gains do not match n_a");
  for (int i = 0; i < na; ++i)
    if (!(gains.kp[i] >= 0.0) || !(gains.kd_gain[i] >= 0.0))
      throw ValidationError("run_tracking: gains must be nonnegative");

  Vec qa, qda, qdda;
  ref.eval(0.0, qa, qda, qdda);
  const Vec start = solve_ik_continuation(model, qa, assembled_home(model));
  const JointState s0 = lift_state(model, qa, qda, qdda, model.select_unactuated(start));
  Vec guess = model.select_unactuated(s0.q);

  auto desired = [&](double t) {
    Vec a, ad, add;
    ref.eval(t, a, ad, add);
    const JointState s = lift_state(model, a, ad, add, guess);
    guess = model.select_unactuated(s.q);
    return s;
  };
  InputSource law;
  law.zero_order_hold = sampled_data;
  law.fn = [&](double t, const Vec& q, const Vec& qd) -> Vec {
    const JointState sd = desired(t);
    const Vec ea = model.select_actuated(sd.q) - model.select_actuated(q);
    const Vec eda = model.select_actuated(sd.qd) - model.select_actuated(qd);
    return constrained_inverse_dynamics(model, theta_ctrl, sd) + gains.kp.cwiseProduct(ea) +
           gains.kd_gain.cwiseProduct(eda);
  };
  TrackingRun run;
  run.log = integrate(model, theta_true, s0.q, s0.qd, law, cfg);
  run.ea.resize(run.log.size(), na);
  Vec dq;
  for (Eigen::Index i = 0; i < run.log.size(); ++i) {
    ref.eval(run.log.t[i], qa, dq, qdda);
    run.ea.row(i) = (qa - run.log.qa.row(i).transpose()).transpose();
  }
  run.metrics = tracking_metrics(run.ea);
  return run;
}

Vec validate_torque(const RobotModel& model, const StandardParams& theta, const TrajectoryDataset& ds) {
  return torque_rms(model, theta, ds);
}

ForwardValidation validate_forward(const RobotModel& model, const StandardParams& theta, const TrajectoryDataset& ds,
                                   double segment_len, const SimConfig& cfg) {
  if (!ds.lifted()) throw StageError("validate_forward needs a lifted dataset");
  if (!(segment_len > 0.0)) throw ValidationError("segment length must be positive");
  const double dt = ds.dt();
  const double duration = ds.size() > 1 ? ds.t[ds.size() - 1] - ds.t[0] : 0.0;
  if (duration + 1e-9 < segment_len) throw ValidationError("dataset shorter than one segment");
  const int n_seg = static_cast<int>(std::floor(duration / segment_len + 1e-9));
  const auto per = static_cast<Eigen::Index>(std::llround(segment_len / dt));
  const int na = model.n_a();
  const auto& k = kernels::active();

  ForwardValidation out;
  Vec total = Vec::Zero(na);
  for (int s = 0; s < n_seg; ++s) {
    const Eigen::Index i0 = s * per;
    const Eigen::Index i1 = std::min<Eigen::Index>(i0 + per, ds.size() - 1);
    SegmentReport rep;
    rep.t_start = ds.t[i0];
    rep.t_end = ds.t[i1];
    rep.end_measured = ds.qa.row(i1).transpose();
    rep.sum_sq = Vec::Zero(na);
    try {
      Vec q = ds.q.row(i0).transpose();
      Vec qd = ds.qd.row(i0).transpose();
      project_state(model, q, qd);
      SimConfig c = cfg;
      c.dt_output = dt;
      c.horizon = static_cast<double>(i1 - i0) * dt;
      const Vec tseg = ds.t.segment(i0, i1 - i0 + 1).array() - ds.t[i0];  // integrate starts at t = 0
      const InputSource src = zoh_replay(tseg, ds.u.middleRows(i0, i1 - i0 + 1));
      const TrajectoryDataset sim = integrate(model, theta, q, qd, src, c);
      const Eigen::Index m = std::min(sim.size(), i1 - i0 + 1);
      for (int j = 0; j < na; ++j) {
        const Vec a = sim.qa.col(j).head(m);
        const Vec b = ds.qa.col(j).segment(i0, m);
        rep.sum_sq[j] = k.sum_sq_diff(a.data(), b.data(), static_cast<size_t>(m));
      }
      rep.end_simulated = sim.qa.row(m - 1).transpose();
      total += rep.sum_sq;
    } catch (const NumericalError& e) {
      rep.ok = false;
      rep.error = e.what();
      ++out.failed;
    }
    out.segments.push_back(std::move(rep));
  }
  out.l2 = total.cwiseSqrt();
  return out;
}

StandardParams scale_inertial(const StandardParams& theta, double factor) {
  StandardParams out = theta;
  for (int j = 0; j < theta.n(); ++j) out.set_inertial(j, factor * theta.inertial(j));
  return out;
}

}  // namespace chainid
