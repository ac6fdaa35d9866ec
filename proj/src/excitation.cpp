#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"
#include "chainid/simulate.hpp"
#include "chainid/sysid.hpp"

namespace chainid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec home_actuated(const RobotModel& model) { return model.select_actuated(assembled_home(model)); }

}  // namespace

void ReferenceTrajectory::eval(double t, Vec& q, Vec& qd, Vec& qdd) const {
  const int na = n_a();
  q = offset;
  qd = Vec::Zero(na);
  qdd = Vec::Zero(na);
  if (kind == Kind::Sine) {
    for (int i = 0; i < na; ++i) {
      const double w = kTwoPi * freq[i];
      const double ph = w * t + phase[i];
      q[i] += amp[i] * std::sin(ph);
      qd[i] = amp[i] * w * std::cos(ph);
      qdd[i] = -amp[i] * w * w * std::sin(ph);
    }
    return;
  }
  const double w = kTwoPi * base_freq;
  for (int i = 0; i < na; ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double kw = w * static_cast<double>(k + 1);
      const double s = std::sin(kw * t), c = std::cos(kw * t);
      q[i] += a(i, k) / kw * s - b(i, k) / kw * c;
      qd[i] += a(i, k) * c + b(i, k) * s;
      qdd[i] += -a(i, k) * kw * s + b(i, k) * kw * c;
    }
  }
}

Vec ReferenceTrajectory::max_velocity() const {
  if (kind == Kind::Sine) return (amp * kTwoPi).cwiseProduct(freq).cwiseAbs();
  Vec vmax = Vec::Zero(n_a());
  const double period = 1.0 / base_freq;
  Vec q, qd, qdd;
  for (double t = 0.0; t < period; t += 1e-3) {
    eval(t, q, qd, qdd);
    vmax = vmax.cwiseMax(qd.cwiseAbs());
  }
  return vmax;
}

std::string check_reference_limits(const RobotModel& model, const ReferenceTrajectory& ref, double duration) {
  if (ref.n_a() != model.n_a()) return "reference has wrong joint count";
  Vec q, qd, qdd;
  const auto steps = static_cast<long>(std::floor(duration / 1e-3 + 1e-9));
  for (long s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) * 1e-3;
    ref.eval(t, q, qd, qdd);
    for (int i = 0; i < model.n_a(); ++i) {
      const Link& l = model.link(model.actuated()[static_cast<size_t>(i)]);
      if (q[i] < l.pos_lower || q[i] > l.pos_upper) {
        std::ostringstream m;
        m << "joint " << model.actuated()[static_cast<size_t>(i)] << " position " << q[i] << " outside limits at t = " << t;
        return m.str();
      }
      if (std::abs(qd[i]) > l.vel_limit) {
        std::ostringstream m;
        m << "joint " << model.actuated()[static_cast<size_t>(i)] << " velocity " << qd[i] << " over limit at t = " << t;
        return m.str();
      }
    }
  }
  return {};
}

TrajectoryDataset prescribed_dataset(const RobotModel& model, const StandardParams& theta,
                                     const ReferenceTrajectory& ref, const SimConfig& cfg) {
  const auto steps = static_cast<Eigen::Index>(std::floor(cfg.horizon / cfg.dt_output + 1e-9));
  const Eigen::Index N = steps + 1;
  TrajectoryDataset ds;
  ds.t.resize(N);
  ds.qa.resize(N, model.n_a());
  ds.qda.resize(N, model.n_a());
  ds.qdda.resize(N, model.n_a());
  ds.u.resize(N, model.n_a());
  ds.q.resize(N, model.n());
  ds.qd.resize(N, model.n());
  ds.qdd.resize(N, model.n());
  Vec qa, qda, qdda;
  ref.eval(0.0, qa, qda, qdda);
  Vec guess = model.select_unactuated(solve_ik_continuation(model, qa, assembled_home(model)));
  for (Eigen::Index i = 0; i < N; ++i) {
    const double t = static_cast<double>(i) * cfg.dt_output;
    ref.eval(t, qa, qda, qdda);
    const JointState s = lift_state(model, qa, qda, qdda, guess);
    guess = model.select_unactuated(s.q);
    ds.t[i] = t;
    ds.qa.row(i) = qa.transpose();
    ds.qda.row(i) = qda.transpose();
    ds.qdda.row(i) = qdda.transpose();
    ds.q.row(i) = s.q.transpose();
    ds.qd.row(i) = s.qd.transpose();
    ds.qdd.row(i) = s.qdd.transpose();
    ds.u.row(i) = constrained_inverse_dynamics(model, theta, s).transpose();
  }
  ds.stage = Stage::Raw;
  return ds;
}

double reference_condition(const RobotModel& model, const RegroupingMaps& maps, const ReferenceTrajectory& ref,
                           double period, int samples) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (samples < 1) return kInf;
  if (!check_reference_limits(model, ref, period).empty()) return kInf;
  const int na = model.n_a();
  Mat GY(static_cast<Eigen::Index>(samples) * na, maps.n_id());
  Vec qa, qda, qdda;
  ref.eval(0.0, qa, qda, qdda);
  try {
    Vec prev = solve_ik_continuation(model, qa, assembled_home(model));
    for (int i = 0; i < samples; ++i) {
      const double t = period * static_cast<double>(i) / samples;
      ref.eval(t, qa, qda, qdda);
      const Vec q = solve_ik_continuation(model, qa, prev, 0.05);
      const JointState s = lift_state(model, qa, qda, qdda, model.select_unactuated(q));
      prev = s.q;
      GY.middleRows(static_cast<Eigen::Index>(i) * na, na) = base_regressor(maps, constrained_regressor(model, s));
    }
  } catch (const NumericalError&) {
    return kInf;
  }
  return condition_number(GY);
}

ReferenceTrajectory excitation_candidate(const RobotModel& model, const ExcitationConfig& cfg, int k) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(k), 0x5eedu};
  std::mt19937_64 rng(seq);
  ReferenceTrajectory ref;
  ref.kind = ReferenceTrajectory::Kind::Fourier;
  ref.base_freq = 1.0 / cfg.base_period;
  ref.offset = home_actuated(model);
  const double s = cfg.coeff_scale * kTwoPi * ref.base_freq;
  std::uniform_real_distribution<double> u(-s, s);
  ref.a.resize(model.n_a(), cfg.harmonics);
  ref.b.resize(model.n_a(), cfg.harmonics);
  for (Eigen::Index i = 0; i < ref.a.size(); ++i) ref.a(i) = u(rng);
  for (Eigen::Index i = 0; i < ref.b.size(); ++i) ref.b(i) = u(rng);
  return ref;
}

ExcitationResult design_excitation(const RobotModel& model, const RegroupingMaps& maps, const ExcitationConfig& cfg) {
  if (cfg.budget < 1) throw ValidationError("excitation budget must be >= 1");
  if (cfg.harmonics < 1) throw ValidationError("excitation needs at least one harmonic");
  if (!(cfg.base_period > 0.0)) throw ValidationError("excitation base period must be positive");
  ExcitationResult best;
  best.cond = std::numeric_limits<double>::infinity();
  const int n_random = std::max(1, cfg.budget / 2);
  auto consider = [&](const ReferenceTrajectory& ref) {
    const double c = reference_condition(model, maps, ref, cfg.base_period, cfg.samples);
    ++best.evaluations;
    if (std::isfinite(c)) ++best.feasible;
    if (c < best.cond) {
      best.cond = c;
      best.ref = ref;
      return true;
    }
    return false;
  };
  for (int k = 0; k < n_random && best.evaluations < cfg.budget; ++k) consider(excitation_candidate(model, cfg, k));
  if (!std::isfinite(best.cond)) throw NoFeasiblePoint("no feasible excitation candidate within budget");

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double sigma = 0.2 * cfg.coeff_scale * kTwoPi / cfg.base_period;
  while (best.evaluations < cfg.budget) {
    ReferenceTrajectory cand = best.ref;
    for (Eigen::Index i = 0; i < cand.a.size(); ++i) cand.a(i) += sigma * gauss(rng);
    for (Eigen::Index i = 0; i < cand.b.size(); ++i) cand.b(i) += sigma * gauss(rng);
    sigma *= consider(cand) ? 1.2 : 0.9;
  }
  return best;
}

}  // namespace chainid
