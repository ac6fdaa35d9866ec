// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chainid/cli.hpp"
#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"
#include "chainid/io.hpp"
#include "chainid/simulate.hpp"
#include "chainid/sysid.hpp"
#include "test_util.hpp"

using namespace chainid;
namespace fs = std::filesystem;

namespace {

fs::path g_dir;
std::string at(const std::string& name) { return (g_dir / name).string(); }

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "chainid");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw std::runtime_error(args[1] + " exited with " + std::to_string(code) + ": " + err.str());
  return code;
}

nlohmann::json load_json(const std::string& path) { return nlohmann::json::parse(read_file(path)); }

void write_theta(const std::string& path, const StandardParams& th) {
  atomic_write(path, dump_json({{"theta", vec_json(th.vector())}}));
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << std::scientific << v;
  return s.str();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

const std::string kFourbar = test::data_path("fourbar.json");
const std::string kTrain = "sine:amp=0.8,freq=0.3";
const std::string kHeldOut = "sine:amp=0.6,freq=0.45";

// Identification outputs produced along the way, re-checked by criterion 6.
std::vector<std::string> g_results;

// ------------------------------------------------------------------ 1

Outcome regressor_identity() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int count = 0;
  for (const RobotModel& m : {test::fourbar(), test::spatial5()}) {
    for (int k = 0; k < 500; ++k, ++count) {
      const JointState s = test::random_state(m.n(), rng);
      const StandardParams th(test::random_vector(m.n_params(), rng, 2.0));
      const Vec tau = inverse_dynamics(m, th, s);
      const Vec w = regressor(m, s) * th.vector();
      worst = std::max(worst, (w - tau).lpNorm<Eigen::Infinity>() / std::max(1.0, tau.lpNorm<Eigen::Infinity>()));
    }
  }
  o.require(count == 1000 && worst <= 1e-10, "max rel err " + fmt(worst) + " over " + std::to_string(count));
  return o;
}

// ------------------------------------------------------------------ 2

Outcome projection_suite() {
  Outcome o;
  std::mt19937_64 rng(202);
  double jg = 0.0, gbu = 0.0, oracle = 0.0, lift_res = 0.0;
  for (const RobotModel& m : {test::fourbar(), test::spatial5()}) {
    const Mat B = input_matrix(m);
    for (const JointState& s : sample_states(m, 100, 203)) {
      const ConstraintEval ev = eval_constraints(m, s.q, s.qd);
      const Projection p = projection(m, s.q, s.qd);
      jg = std::max(jg, (ev.J * p.G).norm() / (1.0 + ev.J.norm() * p.G.norm()));
      const Vec u = test::random_vector(m.n_a(), rng, 10.0);
      gbu = std::max(gbu, (p.G.transpose() * B * u - u).cwiseAbs().maxCoeff());

      const StandardParams th = test::random_theta(m, rng);
      const Vec tau = inverse_dynamics(m, th, s);
      Mat Ju(m.n_c(), m.n_u()), Ja(m.n_c(), m.n_a());
      for (int i = 0; i < m.n_u(); ++i) Ju.col(i) = ev.J.col(m.unactuated()[static_cast<size_t>(i)]);
      for (int i = 0; i < m.n_a(); ++i) Ja.col(i) = ev.J.col(m.actuated()[static_cast<size_t>(i)]);
      const Vec lambda = Ju.transpose().fullPivLu().solve(m.select_unactuated(tau));
      const Vec u_oracle = m.select_actuated(tau) - Ja.transpose() * lambda;
      const Vec u_id = constrained_inverse_dynamics(m, th, s);
      oracle = std::max(oracle, (u_id - u_oracle).cwiseAbs().maxCoeff() / std::max(1.0, u_oracle.norm()));

      const double scale = 1.0 + ev.J.norm();
      lift_res = std::max({lift_res, ev.c.lpNorm<Eigen::Infinity>(), (ev.J * s.qd).lpNorm<Eigen::Infinity>() / scale,
                           (ev.J * s.qdd + ev.Jdot_qd).lpNorm<Eigen::Infinity>() / scale});
    }
  }
  o.require(jg <= 1e-9, "|JG| " + fmt(jg));
  o.require(gbu == 0.0, "|G^T B u - u| " + fmt(gbu));
  o.require(oracle <= 1e-9, "oracle " + fmt(oracle));
  o.require(lift_res <= 1e-7, "lift residual " + fmt(lift_res));
  return o;
}

// ------------------------------------------------------------------ 3

Outcome regrouping() {
  Outcome o;
  std::mt19937_64 rng(303);
  double recon = 0.0, trip = 0.0;
  bool stable = true;
  for (const RobotModel& m : {test::fourbar(), test::spatial5()}) {
    const RegroupingMaps maps = analyze(m, sample_states(m, 200, 1));
    const RegroupingMaps other = analyze(m, sample_states(m, 200, 2));
    stable = stable && maps.idx_b == other.idx_b && maps.idx_d == other.idx_d;
    const std::vector<JointState> held = sample_states(m, 20, 77);
    for (int k = 0; k < 100; ++k) {
      const Vec th = test::random_vector(m.n_params(), rng, 2.0);
      const BaseSplit split = params_to_base(maps, th);
      for (const JointState& s : held) {
        const Mat GW = constrained_regressor(m, s);
        const Vec a = base_regressor(maps, GW) * split.pi;
        const Vec b = GW * th;
        recon = std::max(recon, (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>()));
      }
      const Vec back = base_to_params(maps, split.pi, split.theta_d);
      trip = std::max(trip, (back - th).lpNorm<Eigen::Infinity>());
    }
  }
  o.require(recon <= 1e-9, "Y pi vs G^T W theta " + fmt(recon));
  o.require(trip <= 1e-12, "round trip " + fmt(trip));
  o.require(stable, std::string("idx_b stable across sample sets: ") + (stable ? "yes" : "no"));
  return o;
}

// ------------------------------------------------------------------ 4

Outcome noise_free() {
  Outcome o;
  const RobotModel m = test::fourbar();
  const StandardParams truth = test::truth(m);
  invoke({"simulate", "--model", kFourbar, "--mode", "inverse", "--ref", kTrain, "--horizon", "10", "--out",
          at("c4_train.csv")});
  invoke({"simulate", "--model", kFourbar, "--mode", "inverse", "--ref", kHeldOut, "--horizon", "10", "--out",
          at("c4_held.csv")});
  invoke({"identify", "--model", kFourbar, "--data", at("c4_train.csv"), "--cutoff", "0", "--multistart", "10",
          "--out", at("c4_all.json")});
  g_results.push_back(at("c4_all.json"));
  const auto res = load_json(at("c4_all.json"));
  const RegroupingMaps maps = maps_from_json(res["maps"]);
  const Vec pi_true = params_to_base(maps, truth.vector()).pi;
  const Vec pi0 = json_vec(res["pi0"]);
  const double pi_err = (pi0 - pi_true).lpNorm<Eigen::Infinity>() / pi_true.lpNorm<Eigen::Infinity>();
  o.require(pi_err <= 1e-6, "pi rel err " + fmt(pi_err));

  invoke({"validate", "--model", kFourbar, "--result", at("c4_all.json"), "--data", at("c4_held.csv"), "--cutoff", "0",
          "--out", at("c4_val.json")});
  const double rms = json_vec(load_json(at("c4_val.json"))["identified_rms"]).maxCoeff();
  o.require(rms <= 1e-7, "held-out torque RMS " + fmt(rms));

  invoke({"identify", "--model", kFourbar, "--data", at("c4_train.csv"), "--cutoff", "0", "--mask", "friction",
          "--multistart", "5", "--out", at("c4_fric.json")});
  g_results.push_back(at("c4_fric.json"));
  const StandardParams fr(json_vec(load_json(at("c4_fric.json"))["theta0"]));
  double fr_err = 0.0;
  for (int j = 0; j < m.n(); ++j) {
    const Vec4 t = truth.friction(j);
    fr_err = std::max(fr_err, ((fr.friction(j) - t).cwiseAbs().array() / t.cwiseAbs().array()).maxCoeff());
  }
  o.require(fr_err <= 1e-6, "friction rel err " + fmt(fr_err));
  return o;
}

// ------------------------------------------------------------------ 5

// Model file whose reference_theta has every inertial block scaled by 1.5.
std::string perturbed_model() {
  const std::string path = at("fourbar_perturbed.json");
  if (fs::exists(path)) return path;
  auto doc = load_json(kFourbar);
  const StandardParams truth = test::truth(test::fourbar());
  doc["reference_theta"] = vec_json(scale_inertial(truth, 1.5).vector());
  atomic_write(path, doc.dump(1));
  return path;
}

Outcome noisy_recovery() {
  Outcome o;
  const std::string pert = perturbed_model();
  int wins = 0;
  std::string per_seed;
  for (int seed = 1; seed <= 10; ++seed) {
    const std::string s = std::to_string(seed);
    const std::string train = at("c5_train" + s + ".csv"), held = at("c5_held" + s + ".csv");
    const std::string res = at("c5_res" + s + ".json");
    invoke({"simulate", "--model", kFourbar, "--ref", kTrain, "--horizon", "10", "--noise", "qda=1e-3,u=0.05",
            "--seed", s, "--out", train});
    invoke({"simulate", "--model", kFourbar, "--ref", kHeldOut, "--horizon", "15.5", "--noise", "qda=1e-3,u=0.05",
            "--seed", std::to_string(100 + seed), "--out", held});
    invoke({"identify", "--model", pert, "--data", train, "--multistart", "5", "--seed", s, "--out", res});
    g_results.push_back(res);
    invoke({"validate", "--model", pert, "--result", res, "--data", held, "--out", at("c5_tq" + s + ".json")});
    invoke({"validate", "--model", pert, "--result", res, "--data", held, "--mode", "forward", "--out",
            at("c5_fw" + s + ".json")});
    const auto tq = load_json(at("c5_tq" + s + ".json"));
    const auto fw = load_json(at("c5_fw" + s + ".json"));
    const bool torque_ok = (json_vec(tq["identified_rms"]).array() < json_vec(tq["reference_rms"]).array()).all();
    const bool fwd_ok = (json_vec(fw["identified"]["l2"]).array() < json_vec(fw["reference"]["l2"]).array()).all() &&
                        fw["n_segments"].get<int>() == 31;
    const bool win = torque_ok && fwd_ok;
    wins += win;
    per_seed += win ? "+" : "-";
  }
  o.require(wins >= 9, std::to_string(wins) + "/10 seeds beat the perturbed reference (" + per_seed + ")");
  return o;
}

// ------------------------------------------------------------------ 6

Outcome consistency() {
  Outcome o;
  const RobotModel m = test::fourbar();
  const StandardParams truth = test::truth(m);
  StandardParams bad = truth;
  Vec4 f = bad.friction(1);
  f[StandardParams::Fv] = -0.3;
  bad.set_friction(1, f);
  write_theta(at("c6_bad_theta.json"), bad);
  invoke({"simulate", "--model", kFourbar, "--mode", "inverse", "--theta", at("c6_bad_theta.json"), "--ref", kTrain,
          "--horizon", "10", "--out", at("c6_data.csv")});
  invoke({"identify", "--model", kFourbar, "--data", at("c6_data.csv"), "--cutoff", "0", "--multistart", "5", "--out",
          at("c6_res.json")});
  g_results.push_back(at("c6_res.json"));

  // Unconstrained least squares on the same observation.
  const auto res = load_json(at("c6_res.json"));
  const RegroupingMaps maps = maps_from_json(res["maps"]);
  PipelineConfig pc;
  pc.cutoff_hz = 0.0;
  const TrajectoryDataset proc = process_pipeline(m, load_dataset(m, at("c6_data.csv")), pc);
  const ObservationSystem obs = assemble_observation(m, maps, proc);
  const Vec pi_ls = obs.GY.colPivHouseholderQr().solve(obs.U);
  const StandardParams th_ls(base_to_params(maps, pi_ls, params_to_base(maps, truth.vector()).theta_d));
  const bool ls_violates = !is_physically_consistent(th_ls, 1e-8).ok;
  o.require(ls_violates, std::string("unconstrained fit inconsistent: ") + (ls_violates ? "yes" : "no") +
                             " (F_v " + fmt(th_ls.friction(1)[StandardParams::Fv]) + ")");

  int passed = 0;
  for (const std::string& path : g_results) {
    const StandardParams th(json_vec(load_json(path)["theta0"]));
    passed += is_physically_consistent(th, 1e-8).ok;
  }
  o.require(passed == static_cast<int>(g_results.size()),
            std::to_string(passed) + "/" + std::to_string(g_results.size()) + " outputs consistent");
  const StandardParams th6(json_vec(res["theta0"]));
  o.require(th6.friction(1)[StandardParams::Fv] >= 0.0,
            "constrained F_v " + fmt(th6.friction(1)[StandardParams::Fv]));
  return o;
}

// ------------------------------------------------------------------ 7

Outcome simulator_fidelity() {
  Outcome o;
  const RobotModel m = test::fourbar();
  StandardParams th = test::truth(m);
  for (int j = 0; j < m.n(); ++j) th.set_friction(j, Vec4::Zero());
  SimConfig cfg;
  cfg.horizon = 5.0;
  const InputSource none{[](double, const Vec&, const Vec&) { return Vec::Zero(1).eval(); }, false};
  const Vec q0 = assembled_home(m);
  const Vec qd0 = projection(m, q0, Vec::Constant(m.n(), 2.0)).G * Vec::Constant(1, 2.0);
  const TrajectoryDataset ds = integrate(m, th, q0, qd0, none, cfg);
  const double e0 = total_energy(m, th, q0, qd0);
  double drift = 0.0, kmax = 0.0, cmax = 0.0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const Vec q = ds.q.row(i).transpose(), qd = ds.qd.row(i).transpose();
    drift = std::max(drift, std::abs(total_energy(m, th, q, qd) - e0));
    kmax = std::max(kmax, kinetic_energy(m, th, q, qd));
    cmax = std::max(cmax, constraint_residual(m, q).lpNorm<Eigen::Infinity>());
  }
  o.require(drift / kmax <= 1e-6, "energy drift " + fmt(drift / kmax) + " of max kinetic energy");
  o.require(cmax <= 1e-6, "constraint " + fmt(cmax));

  SimConfig c2;
  c2.horizon = 0.5;
  const InputSource law{[](double t, const Vec&, const Vec&) { return Vec::Constant(1, 3.0 * std::sin(2.0 * t)).eval(); },
                        true};
  const StandardParams truth = test::truth(m);
  const TrajectoryDataset a = integrate(m, truth, q0, Vec::Zero(m.n()), law, c2);
  const TrajectoryDataset b = integrate(m, truth, q0, Vec::Zero(m.n()), zoh_replay(a.t, a.u), c2);
  const double end = (a.qa.bottomRows(1) - b.qa.bottomRows(1)).lpNorm<Eigen::Infinity>();
  o.require(end <= 1e-4, "ZOH replay endpoint " + fmt(end) + " rad");
  return o;
}

// ------------------------------------------------------------------ 8

Outcome controller() {
  Outcome o;
  const RobotModel m = test::fourbar();
  const StandardParams truth = test::truth(m);
  write_theta(at("c8_truth.json"), truth);
  write_theta(at("c8_pert.json"), scale_inertial(truth, 1.5));
  const std::vector<std::string> common = {"--model", kFourbar, "--ref", "sine:maxvel=5", "--horizon", "10",
                                           "--against", at("c8_pert.json")};
  auto track = [&](const std::string& result, const std::string& out) {
    std::vector<std::string> args = {"track", "--result", result, "--out", out};
    args.insert(args.end(), common.begin(), common.end());
    invoke(args);
    return load_json(out);
  };
  const auto exact = track(at("c8_truth.json"), at("c8_exact.json"));
  const Vec e_exact = json_vec(exact["identified"]["max_deg"]);
  const Vec e_pert = json_vec(exact["against"]["max_deg"]);
  o.require(e_exact.maxCoeff() <= 1e-2, "exact max " + fmt(e_exact.maxCoeff()) + " deg");
  o.require((e_pert.array() > e_exact.array()).all(), "perturbed max " + fmt(e_pert.maxCoeff()) + " deg");

  const std::string identified = at("c5_res1.json");
  if (!fs::exists(identified)) throw std::runtime_error("criterion 5 output missing");
  const auto id = track(identified, at("c8_id.json"));
  const Vec e_id = json_vec(id["identified"]["max_deg"]);
  o.require((e_id.array() < e_pert.array()).all(), "identified max " + fmt(e_id.maxCoeff()) + " deg");
  return o;
}

// ------------------------------------------------------------------ 9

Outcome signal() {
  Outcome o;
  const double dt = 1e-3;
  const int n = 2001;
  Mat x(n, 1), dx(n, 1);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    x(i, 0) = 0.3 - 1.2 * t + 0.7 * t * t - 0.9 * t * t * t + 0.25 * t * t * t * t;
    dx(i, 0) = -1.2 + 1.4 * t - 2.7 * t * t + 1.0 * t * t * t;
  }
  const double derr = (central_diff_4(x, dt) - dx).cwiseAbs().maxCoeff();
  o.require(derr <= 1e-10, "quartic derivative " + fmt(derr));

  const int len = 10000;
  bool zero_lag = true;
  for (double f : {0.5, 1.0, 2.0}) {
    Mat tone(len, 1);
    for (int i = 0; i < len; ++i) tone(i, 0) = std::sin(2.0 * std::numbers::pi * f * i * dt + 0.3);
    const Mat y = butterworth4_zero_phase(tone, dt, 5.0, settling_padlen(dt, 5.0));
    int best = 0;
    double best_c = -1e300;
    for (int lag = -50; lag <= 50; ++lag) {
      double c = 0.0;
      for (int i = 2000; i < 8000; ++i) c += tone(i, 0) * y(i + lag, 0);
      if (c > best_c) best_c = c, best = lag;
    }
    zero_lag = zero_lag && best == 0;
  }
  o.require(zero_lag, std::string("cross-correlation peak at lag 0: ") + (zero_lag ? "yes" : "no"));

  bool counts = true;
  const RobotModel m = test::fourbar();
  for (int rows : {10001, 10000, 10009, 10010, 11}) {
    TrajectoryDataset ds;
    ds.t = Vec::LinSpaced(rows, 0.0, (rows - 1) * dt);
    ds.qa = ds.qda = ds.u = Mat::Zero(rows, 1);
    ds.stage = Stage::Filtered;
    counts = counts && downsample(ds, 10).size() == (rows - 1) / 10 + 1;
  }
  o.require(counts, std::string("downsample counts exact: ") + (counts ? "yes" : "no"));
  return o;
}

// ------------------------------------------------------------------ 10

Outcome determinism() {
  Outcome o;
  const std::string data = at("c5_train1.csv");
  if (!fs::exists(data)) throw std::runtime_error("criterion 5 output missing");
  const std::vector<std::string> args = {"identify", "--model", kFourbar, "--data", data, "--multistart", "5",
                                         "--seed", "42", "--out", at("c10.json")};
  invoke(args);
  const std::string r1 = read_file(at("c10.json")), m1 = read_file(at("c10.json.manifest.json"));
  invoke(args);
  g_results.push_back(at("c10.json"));
  const bool same = read_file(at("c10.json")) == r1 && read_file(at("c10.json.manifest.json")) == m1;
  o.require(same, std::string("result and manifest byte-identical: ") + (same ? "yes" : "no"));
  return o;
}

}  // namespace

int main() {
  g_dir = fs::temp_directory_path() / "chainid_acceptance";
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"regressor identity", regressor_identity},
      {"projection and constrained dynamics", projection_suite},
      {"regrouping", regrouping},
      {"noise-free recovery", noise_free},
      {"noisy recovery", noisy_recovery},
      {"physical consistency", consistency},
      {"simulator fidelity", simulator_fidelity},
      {"controller experiment", controller},
      {"signal pipeline", signal},
      {"determinism", determinism},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << ", "
              << std::fixed << std::setprecision(1) << secs << " s): " << r.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  fs::remove_all(g_dir);
  return failures == 0 ? 0 : 1;
}
