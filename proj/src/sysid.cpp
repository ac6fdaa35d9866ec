#include "chainid/sysid.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"
#include "chainid/kernels/kernels.hpp"

namespace chainid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Feasible set in theta_free: LMI_j - eps_int I > 0 for every free inertial
// block, F_c, F_v, I_a > 0 for every free friction entry.
struct FeasibleSet {
  std::vector<int> blocks;   // first position of each free inertial block
  std::vector<int> nonneg;   // positions of free F_c, F_v, I_a
  double eps_int = 0.0;
  Mat4 basis[10];            // lmi_matrix of the unit blocks

  bool interior(const Vec& th) const {
    for (int b : blocks) {
      const Mat4 Q = lmi_matrix(th.segment<10>(b)) - eps_int * Mat4::Identity();
      if (Eigen::LLT<Mat4>(Q).info() != Eigen::Success) return false;
    }
    for (int k : nonneg)
      if (!(th[k] > 0.0)) return false;
    return true;
  }

  // -sum log det Q_j - sum log x_k, with gradient and Hessian. +inf outside.
  double barrier(const Vec& th, Vec* g, Mat* H) const {
    double phi = 0.0;
    for (int b : blocks) {
      const Mat4 Q = lmi_matrix(th.segment<10>(b)) - eps_int * Mat4::Identity();
      Eigen::LLT<Mat4> llt(Q);
      if (llt.info() != Eigen::Success) return kInf;
      const Mat4 L = llt.matrixL();
      phi -= 2.0 * L.diagonal().array().log().sum();
      if (g == nullptr) continue;
      const Mat4 Qi = llt.solve(Mat4::Identity());
      Mat4 QE[10];
      for (int e = 0; e < 10; ++e) {
        QE[e] = Qi * basis[e];
        (*g)[b + e] -= QE[e].trace();
      }
      for (int e = 0; e < 10; ++e)
        for (int f = e; f < 10; ++f) {
          const double h = (QE[e] * QE[f]).trace();
          (*H)(b + e, b + f) += h;
          if (f != e) (*H)(b + f, b + e) += h;
        }
    }
    for (int k : nonneg) {
      if (!(th[k] > 0.0)) return kInf;
      phi -= std::log(th[k]);
      if (g == nullptr) continue;
      (*g)[k] -= 1.0 / th[k];
      (*H)(k, k) += 1.0 / (th[k] * th[k]);
    }
    return phi;
  }

  // Strictly feasible point near th.
  Vec restore(const Vec& th, double friction_bound) const {
    Vec out = th;
    for (int b : blocks) {
      Eigen::SelfAdjointEigenSolver<Mat4> eig(lmi_matrix(th.segment<10>(b)));
      Vec4 lam = eig.eigenvalues();
      const double floor = eps_int + 1e-6 * std::max(1.0, lam.cwiseAbs().maxCoeff());
      for (int i = 0; i < 4; ++i) lam[i] = std::max(lam[i], floor);
      const Mat4 P = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
      out.segment<10>(b) = inertial_from_lmi(0.5 * (P + P.transpose()));
    }
    const double fl = 1e-6 * std::max(friction_bound, 1.0);
    for (int k : nonneg) out[k] = std::max(th[k], fl);
    return out;
  }
};

FeasibleSet build_feasible_set(const RobotModel& model, const std::vector<int>& free_index, const Vec& fixed_values,
                               double eps_pd) {
  const int n = model.n();
  std::vector<int> pos(static_cast<size_t>(model.n_params()), -1);
  for (size_t i = 0; i < free_index.size(); ++i) pos[static_cast<size_t>(free_index[i])] = static_cast<int>(i);
  FeasibleSet fs;
  fs.eps_int = std::max(0.0, 1.01 * eps_pd + 1e-14);
  for (int e = 0; e < 10; ++e) fs.basis[e] = lmi_matrix(Vec10::Unit(e));
  const StandardParams fixed(fixed_values.size() == model.n_params() ? fixed_values : Vec::Zero(model.n_params()));
  for (int j = 0; j < n; ++j) {
    const int o = StandardParams::inertial_offset(j);
    int nfree = 0;
    for (int e = 0; e < 10; ++e) nfree += pos[static_cast<size_t>(o + e)] >= 0 ? 1 : 0;
    if (nfree != 0 && nfree != 10)
      throw ValidationError("mask must free or fix the inertial block of link " + std::to_string(j) + " as a whole");
    if (nfree == 10) {
      for (int e = 1; e < 10; ++e)
        if (pos[static_cast<size_t>(o + e)] != pos[static_cast<size_t>(o)] + e)
          throw ValidationError("inertial block of link " + std::to_string(j) + " is not contiguous");
      fs.blocks.push_back(pos[static_cast<size_t>(o)]);
    } else {
      Eigen::SelfAdjointEigenSolver<Mat4> eig(lmi_matrix(fixed.inertial(j)), Eigen::EigenvaluesOnly);
      if (!(eig.eigenvalues().minCoeff() >= eps_pd))
        throw NoFeasiblePoint("fixed inertial block of link " + std::to_string(j) + " violates the LMI");
    }
  }
  for (int j = 0; j < n; ++j) {
    const int o = fixed.friction_offset(j);
    for (int e = 0; e < kFrictionPerJoint; ++e) {
      if (e == StandardParams::Beta) continue;
      const int ps = pos[static_cast<size_t>(o + e)];
      if (ps >= 0)
        fs.nonneg.push_back(ps);
      else if (!(fixed.vector()[o + e] >= 0.0))
        throw NoFeasiblePoint("fixed friction entry of joint " + std::to_string(j) + " is negative");
    }
  }
  return fs;
}

// Least-squares problem min |A x - b|^2 in theta_free.
struct Reduced {
  Mat A;
  Mat R;   // upper-triangular factor in pi, A = R T; empty when underdetermined
  Vec b;
  double scale = 1.0;  // objective of the original problem = scale^2 * reduced
};

Reduced reduce(const ObservationSystem& obs, const Mat& T) {
  const Vec sw = obs.weights.cwiseSqrt();
  const Mat Aw = sw.asDiagonal() * obs.GY;
  const Vec bw = sw.cwiseProduct(obs.U);
  Vec d = Aw.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0)) d[i] = 1.0;
  Reduced red;
  Mat An = Aw * d.cwiseInverse().asDiagonal();
  Mat R;
  Vec c;
  if (An.rows() > An.cols()) {
    Eigen::HouseholderQR<Mat> qr(An);
    const Eigen::Index k = An.cols();
    R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    c = (qr.householderQ().transpose() * bw).head(k);
  } else {
    R = An;
    c = bw;
  }
  red.scale = std::sqrt(bw.squaredNorm());
  if (!(red.scale > 0.0)) red.scale = 1.0;
  if (An.rows() > An.cols()) red.R = R * d.asDiagonal() / red.scale;
  red.A = R * d.asDiagonal() * T / red.scale;
  red.b = c / red.scale;
  return red;
}

// f(x) = |A x - b|^2 + |w .* (x - x_ref)|^2 over the feasible set.
struct Problem {
  const Reduced* red = nullptr;
  const FeasibleSet* fs = nullptr;
  Vec w;      // per theta_free entry, sqrt of the pull weight
  Vec x_ref;
  Vec pin;    // gauge pull on theta_d, kept out of the t-weighted term
  std::vector<int> pos_b, pos_d;  // positions of idx_b, idx_d in theta_free
  const Mat* Kd = nullptr;

  double f(const Vec& x) const {
    return (red->A * x - red->b).squaredNorm() + w.cwiseProduct(x - x_ref).squaredNorm();
  }
};

struct SolveResult {
  Vec x;
  double f = kInf;
  int newton_steps = 0;
};

// Log-barrier path following with damped Newton steps, then a plain Newton
// polish that is kept when it stays feasible and lowers f.
SolveResult interior_point(const Problem& pb, Vec x, int max_steps, double kkt_tol) {
  const Eigen::Index n = x.size();
  const Eigen::Index na = pb.red->A.rows();
  const FeasibleSet& fs = *pb.fs;
  const double m = static_cast<double>(4 * fs.blocks.size() + fs.nonneg.size());
  SolveResult out;
  // Stacked least-squares operator [A; diag(w)] and its residual.
  const Vec pin2 = pb.pin.cwiseAbs2();
  Mat At(na + n, n);
  At.topRows(na) = pb.red->A;
  At.bottomRows(n) = pb.w.asDiagonal();
  auto resid = [&](const Vec& z) {
    Vec r(na + n);
    r.head(na) = pb.red->A * z - pb.red->b;
    r.tail(n) = pb.w.cwiseProduct(z - pb.x_ref);
    return r;
  };
  const Eigen::Index n_c = static_cast<Eigen::Index>(10 * fs.blocks.size() + fs.nonneg.size());
  if (m > 0.0) {
    double t = m / std::max(pb.f(x), 1e-12);
    const double gap_tol = 1e-20;
    while (out.newton_steps < max_steps) {
      for (int inner = 0; inner < 40 && out.newton_steps < max_steps; ++inner) {
        Vec gb = Vec::Zero(n);
        Mat Hb = Mat::Zero(n, n);
        const double phi = fs.barrier(x, &gb, &Hb);
        if (!std::isfinite(phi)) break;
        const Vec r = resid(x);
        // Newton direction as the least-squares solution of
        // [sqrt(2t) At; C^T] dx = -[sqrt(2t) r; C^-1 gb] with C C^T = Hb.
        const double st = std::sqrt(2.0 * t);
        Mat M = Mat::Zero(na + 2 * n + n_c, n);
        Vec rhs(na + 2 * n + n_c);
        M.topRows(na + n) = st * At;
        rhs.head(na + n) = st * r;
        M.block(na + n, 0, n, n) = (std::sqrt(2.0) * pb.pin).asDiagonal();
        rhs.segment(na + n, n) = std::sqrt(2.0) * pb.pin.cwiseProduct(x - pb.x_ref);
        Eigen::Index row = na + 2 * n;
        bool ok = true;
        for (int b : fs.blocks) {
          Eigen::LLT<Mat> llt(Hb.block(b, b, 10, 10));
          if (llt.info() != Eigen::Success) {
            ok = false;
            break;
          }
          const Mat L = llt.matrixL();
          M.block(row, b, 10, 10) = L.transpose();
          rhs.segment(row, 10) = L.triangularView<Eigen::Lower>().solve(gb.segment(b, 10));
          row += 10;
        }
        if (!ok) break;
        for (int k : fs.nonneg) {
          const double c = std::sqrt(Hb(k, k));
          M(row, k) = c;
          rhs[row] = gb[k] / c;
          ++row;
        }
        const Vec dx = -M.colPivHouseholderQr().solve(rhs);
        ++out.newton_steps;
        const Vec g = 2.0 * t * (At.transpose() * r) + 2.0 * pin2.cwiseProduct(x - pb.x_ref) + gb;
        const double dec = -g.dot(dx);
        if (!std::isfinite(dec) || dec <= 2.0 * kkt_tol * 1e-2) break;
        const Vec Adx = At * dx;
        const double lin = 2.0 * r.dot(Adx), quad = Adx.squaredNorm();
        const Vec dev = x - pb.x_ref;
        const double plin = 2.0 * pin2.dot(dev.cwiseProduct(dx)), pquad = pin2.dot(dx.cwiseAbs2());
        double s = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
          const Vec xn = x + s * dx;
          const double pn = fs.barrier(xn, nullptr, nullptr);
          if (!std::isfinite(pn)) continue;
          const double dpsi = t * (s * lin + s * s * quad) + s * plin + s * s * pquad + (pn - phi);
          if (dpsi <= -0.25 * s * dec) {
            x = xn;
            moved = true;
            break;
          }
        }
        if (!moved) break;
      }
      if (m / t <= gap_tol) break;
      t *= 20.0;
    }
  }
  // Polish: least-squares pi by a triangular solve with theta_d held.
  double fx = pb.f(x);
  if (pb.red->R.size() > 0) {
    const Eigen::Index nb = static_cast<Eigen::Index>(pb.pos_b.size());
    const Vec pi = pb.red->R.triangularView<Eigen::Upper>().solve(pb.red->b);
    Vec th_d(static_cast<Eigen::Index>(pb.pos_d.size()));
    for (Eigen::Index i = 0; i < th_d.size(); ++i) th_d[i] = x[pb.pos_d[static_cast<size_t>(i)]];
    const Vec th_b = th_d.size() > 0 ? Vec(pi - *pb.Kd * th_d) : pi;
    Vec xn = x;
    for (Eigen::Index i = 0; i < nb; ++i) xn[pb.pos_b[static_cast<size_t>(i)]] = th_b[i];
    if (xn.allFinite() && pb.fs->interior(xn)) {
      const double fn = pb.f(xn);
      if (fn <= fx) {
        x = xn;
        fx = fn;
      }
    }
  }
  out.x = x;
  out.f = fx;
  return out;
}

}  // namespace

ObservationSystem assemble_observation(const RobotModel& model, const RegroupingMaps& maps,
                                       const std::vector<JointState>& states, const Mat& u,
                                       const ParameterMask* mask) {
  if (u.rows() != static_cast<Eigen::Index>(states.size()) || u.cols() != model.n_a())
    throw DimensionError("assemble_observation: input block has wrong shape");
  if (!maps.idx_fixed.empty() && mask == nullptr)
    throw ValidationError("assemble_observation: maps have fixed entries but no mask was given");
  const int na = model.n_a();
  const auto N = static_cast<Eigen::Index>(states.size());
  ObservationSystem obs;
  obs.n_a = na;
  obs.GY.resize(N * na, maps.n_id());
  obs.U.resize(N * na);
  obs.weights = Vec::Ones(N * na);
  obs.joint_of_row.resize(static_cast<size_t>(N * na));
  for (Eigen::Index i = 0; i < N; ++i) {
    Mat GW;
    try {
      GW = constrained_regressor(model, states[static_cast<size_t>(i)]);
    } catch (const SingularJu& e) {
      throw SingularJu("assemble_observation: sample " + std::to_string(i) + ": " + e.what(), e.last_iterate());
    }
    obs.GY.middleRows(i * na, na) = base_regressor(maps, GW);
    Vec ui = u.row(i).transpose();
    for (int f : maps.idx_fixed) ui -= GW.col(f) * mask->fixed_values[f];
    obs.U.segment(i * na, na) = ui;
    for (int k = 0; k < na; ++k) obs.joint_of_row[static_cast<size_t>(i * na + k)] = k;
  }
  obs.cond = condition_number(obs);
  return obs;
}

ObservationSystem assemble_observation(const RobotModel& model, const RegroupingMaps& maps,
                                       const TrajectoryDataset& ds, const ParameterMask* mask) {
  if (ds.stage != Stage::Downsampled || !ds.lifted())
    throw StageError(std::string("assemble_observation needs processed data, dataset is '") + stage_name(ds.stage) + "'");
  std::vector<JointState> states;
  states.reserve(static_cast<size_t>(ds.size()));
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    states.push_back({ds.q.row(i).transpose(), ds.qd.row(i).transpose(), ds.qdd.row(i).transpose()});
  return assemble_observation(model, maps, states, ds.u, mask);
}

double condition_number(const Mat& A) {
  if (A.size() == 0) return kInf;
  Mat An = A;
  for (Eigen::Index j = 0; j < An.cols(); ++j) {
    const double nrm = An.col(j).norm();
    if (nrm > 0.0) An.col(j) /= nrm;
  }
  const Vec s = Eigen::BDCSVD<Mat>(An).singularValues();
  const double smax = s[0];
  const double smin = s[s.size() - 1];
  if (An.rows() < An.cols()) return kInf;
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(An.rows(), An.cols())) * smax;
  if (!(smin > tol)) return kInf;
  return smax / smin;
}

double condition_number(const ObservationSystem& obs) {
  return condition_number(obs.weights.cwiseSqrt().asDiagonal() * obs.GY);
}

IdentificationResult solve_identification(const ObservationSystem& obs, const RegroupingMaps& maps,
                                          const RobotModel& model, const IdentificationConfig& cfg) {
  if (obs.GY.cols() != maps.n_id() || obs.U.size() != obs.GY.rows() || obs.weights.size() != obs.GY.rows())
    throw DimensionError("solve_identification: observation does not match maps");
  if (cfg.multistart < 1) throw ValidationError("multistart must be >= 1");
  for (Eigen::Index i = 0; i < obs.weights.size(); ++i)
    if (!(obs.weights[i] > 0.0)) throw ValidationError("observation weights must be positive");

  const std::vector<int> free_index = maps.free_index();
  const Vec fixed_values = cfg.mask ? cfg.mask->fixed_values : Vec::Zero(model.n_params());
  const FeasibleSet fs = build_feasible_set(model, free_index, fixed_values, cfg.eps_pd);
  const Mat T = base_map(maps);
  const Reduced red = reduce(obs, T);

  const auto nf = static_cast<Eigen::Index>(free_index.size());
  const Vec reference = cfg.reference && cfg.reference->size() == model.n_params() ? *cfg.reference
                                                                                    : Vec::Zero(model.n_params());
  Vec ref_free(nf);
  for (Eigen::Index i = 0; i < nf; ++i) ref_free[i] = reference[free_index[static_cast<size_t>(i)]];

  // Dependent entries do not move the objective; a pull toward the reference
  // that fades along the barrier path removes that freedom.
  Problem pb;
  pb.red = &red;
  pb.fs = &fs;
  pb.w = Vec::Constant(nf, std::sqrt(std::max(cfg.regularization, 0.0)));
  pb.x_ref = ref_free;
  {
    std::vector<int> pos(static_cast<size_t>(maps.n_params), -1);
    for (size_t i = 0; i < free_index.size(); ++i) pos[static_cast<size_t>(free_index[i])] = static_cast<int>(i);
    pb.pin = Vec::Zero(nf);
    for (int d : maps.idx_d) pb.pin[pos[static_cast<size_t>(d)]] = 1.0;
    for (int b : maps.idx_b) pb.pos_b.push_back(pos[static_cast<size_t>(b)]);
    for (int d : maps.idx_d) pb.pos_d.push_back(pos[static_cast<size_t>(d)]);
    pb.Kd = &maps.Kd;
  }

  Vec lo(nf), hi(nf);
  {
    const StandardParams layout(model.n());
    for (Eigen::Index i = 0; i < nf; ++i) {
      const int idx = free_index[static_cast<size_t>(i)];
      const int rel = idx - layout.friction_offset(0);
      const bool nonneg = rel >= 0 && rel % kFrictionPerJoint != StandardParams::Beta;
      lo[i] = nonneg ? 0.0 : -cfg.bound;
      hi[i] = nonneg ? cfg.friction_bound : cfg.bound;
    }
    if (cfg.lower) {
      if (cfg.lower->size() != nf) throw DimensionError("lower bounds length != free entries");
      lo = *cfg.lower;
    }
    if (cfg.upper) {
      if (cfg.upper->size() != nf) throw DimensionError("upper bounds length != free entries");
      hi = *cfg.upper;
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  IdentificationResult res;
  SolveResult best;
  double best_obj = kInf;
  for (int k = 0; k < cfg.multistart; ++k) {
    Vec th0(nf);
    if (k == 0 && cfg.reference) {
      th0 = ref_free;
    } else {
      for (Eigen::Index i = 0; i < nf; ++i) th0[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    }
    const SolveResult r = interior_point(pb, fs.restore(th0, cfg.friction_bound), cfg.max_solver_iter, cfg.kkt_tol);
    double obj = kInf;
    if (std::isfinite(r.f)) obj = (obs.U - obs.GY * (T * r.x)).cwiseAbs2().dot(obs.weights);
    res.restart_objectives.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best = r;
    }
  }
  if (!std::isfinite(best.f)) throw NoFeasiblePoint("every restart failed");

  const Vec th = best.x;
  res.pi0 = T * th;
  res.theta_d0.resize(maps.n_d());
  {
    std::vector<int> pos(static_cast<size_t>(maps.n_params), -1);
    for (size_t i = 0; i < free_index.size(); ++i) pos[static_cast<size_t>(free_index[i])] = static_cast<int>(i);
    for (int i = 0; i < maps.n_d(); ++i) res.theta_d0[i] = th[pos[static_cast<size_t>(maps.idx_d[static_cast<size_t>(i)])]];
  }
  res.theta0 = StandardParams(base_to_params(maps, res.pi0, res.theta_d0, fixed_values));
  res.consistency = is_physically_consistent(res.theta0, cfg.eps_pd);
  if (!res.consistency.ok)
    throw NoFeasiblePoint("identified parameters fail the consistency check: " + res.consistency.summary(),
                          res.theta0.vector());

  const Vec resid = obs.U - obs.GY * res.pi0;
  res.objective = resid.cwiseAbs2().dot(obs.weights);
  res.residual_rms = Vec::Zero(obs.n_a);
  Vec counts = Vec::Zero(obs.n_a);
  for (Eigen::Index i = 0; i < resid.size(); ++i) {
    const int j = obs.joint_of_row[static_cast<size_t>(i)];
    res.residual_rms[j] += resid[i] * resid[i];
    counts[j] += 1.0;
  }
  for (int j = 0; j < obs.n_a; ++j) res.residual_rms[j] = std::sqrt(res.residual_rms[j] / std::max(counts[j], 1.0));
  res.joint_weights = Vec::Zero(obs.n_a);
  for (Eigen::Index i = 0; i < resid.size(); ++i) res.joint_weights[obs.joint_of_row[static_cast<size_t>(i)]] = obs.weights[i];
  res.cond = condition_number(obs);
  res.irwls_iterations = 1;
  return res;
}

IdentificationResult irwls_identify(const ObservationSystem& obs_in, const RegroupingMaps& maps,
                                    const RobotModel& model, const IdentificationConfig& cfg) {
  ObservationSystem obs = obs_in;
  obs.weights.setOnes();
  Vec w = Vec::Ones(obs.n_a);
  IdentificationResult res;
  for (int it = 1; it <= std::max(cfg.irwls_max_iter, 1); ++it) {
    res = solve_identification(obs, maps, model, cfg);
    res.irwls_iterations = it;
    Vec w_new(obs.n_a);
    for (int j = 0; j < obs.n_a; ++j) {
      const double var = res.residual_rms[j] * res.residual_rms[j];
      w_new[j] = 1.0 / std::max(var, cfg.variance_floor);
    }
    double change = 0.0;
    for (int j = 0; j < obs.n_a; ++j) change = std::max(change, std::abs(w_new[j] - w[j]) / w[j]);
    if (change < cfg.irwls_tol) break;
    if (it == cfg.irwls_max_iter) break;
    w = w_new;
    for (Eigen::Index i = 0; i < obs.weights.size(); ++i) obs.weights[i] = w[obs.joint_of_row[static_cast<size_t>(i)]];
  }
  return res;
}

IdentificationResult irwls_identify(const RobotModel& model, const RegroupingMaps& maps,
                                    const TrajectoryDataset& processed, const IdentificationConfig& cfg) {
  if (processed.stage != Stage::Downsampled) throw StageError("irwls_identify needs processed data");
  const ParameterMask* mask = cfg.mask ? &*cfg.mask : nullptr;
  const ObservationSystem obs = assemble_observation(model, maps, processed, mask);
  return irwls_identify(obs, maps, model, cfg);
}

Vec torque_rms(const RobotModel& model, const StandardParams& theta, const TrajectoryDataset& ds) {
  if (!ds.lifted()) throw StageError("torque_rms needs a lifted dataset");
  const int na = model.n_a();
  const Eigen::Index N = ds.size();
  Mat pred(N, na);
  for (Eigen::Index i = 0; i < N; ++i) {
    const JointState s{ds.q.row(i).transpose(), ds.qd.row(i).transpose(), ds.qdd.row(i).transpose()};
    pred.row(i) = constrained_inverse_dynamics(model, theta, s).transpose();
  }
  const auto& k = kernels::active();
  Vec rms(na);
  for (int j = 0; j < na; ++j) {
    const Vec a = ds.u.col(j), b = pred.col(j);
    rms[j] = N > 0 ? std::sqrt(k.sum_sq_diff(a.data(), b.data(), static_cast<size_t>(N)) / static_cast<double>(N)) : 0.0;
  }
  return rms;
}

}  // namespace chainid
