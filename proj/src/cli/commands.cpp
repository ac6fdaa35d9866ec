#include "chainid/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"
#include "chainid/io.hpp"
#include "chainid/kernels/kernels.hpp"
#include "chainid/simulate.hpp"
#include "chainid/sysid.hpp"
#include "manifest.hpp"

namespace chainid::cli {

namespace {

using nlohmann::json;

struct Clock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

struct Common {
  std::string model_path;
  std::string out;
  std::uint64_t seed = 0;
  bool timings = false;
};

std::uint64_t env_seed() {
  const char* s = std::getenv("CHAINID_SEED");
  if (s == nullptr || *s == '\0') return 0;
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string("CHAINID_SEED is not an unsigned integer: ") + s);
  }
}

Vec per_joint(const std::string& spec, int na, const char* what) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, '/');) parts.push_back(p);
  if (parts.size() != 1 && static_cast<int>(parts.size()) != na)
    throw ValidationError(std::string(what) +
                          (na == 1 ? ": need 1 value" : ": need 1 or " + std::to_string(na) + " values"));
  Vec v(na);
  for (int i = 0; i < na; ++i) v[i] = parse_double(parts[parts.size() == 1 ? 0 : static_cast<size_t>(i)]);
  return v;
}

struct NoiseSpec {
  double qa = 0.0, qda = 0.0, u = 0.0;
  bool any() const { return qa > 0.0 || qda > 0.0 || u > 0.0; }
};

NoiseSpec parse_noise(const std::string& spec) {
  NoiseSpec n;
  if (spec.empty() || spec == "0" || spec == "none") return n;
  std::stringstream ss(spec);
  for (std::string kv; std::getline(ss, kv, ',');) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("noise: expected channel=sigma, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const double v = parse_double(kv.substr(eq + 1));
    if (!(v >= 0.0)) throw ValidationError("noise sigma must be nonnegative");
    if (key == "qa") n.qa = v;
    else if (key == "qda") n.qda = v;
    else if (key == "u") n.u = v;
    else throw ValidationError("noise: unknown channel '" + key + "'");
  }
  return n;
}

void add_noise(TrajectoryDataset& ds, const NoiseSpec& n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto apply = [&](Mat& m, double sigma) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double z = g(rng);
        if (sigma > 0.0) m(r, c) += sigma * z;
      }
  };
  apply(ds.qa, n.qa);
  apply(ds.qda, n.qda);
  apply(ds.u, n.u);
}

SimConfig sim_config(const std::string& integrator, double dt, double horizon, double sign_eps) {
  SimConfig c;
  if (integrator == "rk45") c.integrator = SimConfig::Integrator::Rk45;
  else if (integrator == "rk4") c.integrator = SimConfig::Integrator::Rk4;
  else throw ValidationError("integrator must be rk45 or rk4");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
  if (!(sign_eps >= 0.0)) throw ValidationError("sign-eps must be nonnegative");
  c.dt_output = dt;
  c.horizon = horizon;
  c.sign_eps = sign_eps;
  return c;
}

json sim_json(const SimConfig& c) {
  return {{"integrator", c.integrator == SimConfig::Integrator::Rk45 ? "rk45" : "rk4"},
          {"rel_tol", c.rel_tol},
          {"abs_tol", c.abs_tol},
          {"rk4_step", c.rk4_step},
          {"dt_output", c.dt_output},
          {"sign_eps", c.sign_eps},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"horizon", c.horizon},
          {"project", c.project}};
}

StandardParams require_reference(const RobotModel& model) {
  if (!model.reference_theta()) throw ValidationError("model has no reference_theta");
  return StandardParams(*model.reference_theta());
}

void print_table(std::ostream& out, const std::string& title, const std::vector<std::string>& cols,
                 const std::vector<Vec>& values, const RobotModel& model) {
  out << title << "\n";
  out << std::left << std::setw(14) << "joint";
  for (const auto& c : cols) out << std::right << std::setw(16) << c;
  out << "\n";
  for (int j = 0; j < model.n_a(); ++j) {
    out << std::left << std::setw(14) << model.link(model.actuated()[static_cast<size_t>(j)]).name;
    for (const Vec& v : values) out << std::right << std::setw(16) << std::setprecision(6) << v[j];
    out << "\n";
  }
}

// Differentiates and lifts without filtering (forward replay wants raw inputs).
TrajectoryDataset lift_unfiltered(const RobotModel& model, const TrajectoryDataset& ds) {
  if (ds.stage >= Stage::Lifted) return ds;
  TrajectoryDataset d = ds.stage == Stage::Raw ? differentiate(ds) : ds;
  Vec qa0 = d.qa.row(0).transpose();
  const Vec guess = model.select_unactuated(solve_ik_continuation(model, qa0, assembled_home(model)));
  return lift(model, d, guess);
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string theta_file;
  bool ground_truth = false;
  std::string ref = "sine:amp=0.5,freq=0.5";
  std::string mode = "track";
  std::string noise = "0";
  std::string integrator = "rk45";
  double horizon = 10.0;
  double dt = 1e-3;
  double sign_eps = 1e-3;
  std::string kp = "100", kd = "20";
  bool full = false;
};

int cmd_simulate(const Common& co, const SimulateOpts& o, std::ostream& out) {
  Clock clk;
  const RobotModel model = load_model(co.model_path);
  model.require_fully_actuated();
  Manifest man("simulate");
  man.add_input("model", co.model_path);
  StandardParams theta;
  if (!o.theta_file.empty()) {
    if (o.ground_truth) throw ValidationError("give either --theta or --ground-truth");
    theta = StandardParams(load_theta(o.theta_file, model.n_params()));
    man.add_input("theta", o.theta_file);
  } else {
    theta = require_reference(model);
  }
  const ReferenceTrajectory ref = parse_reference(model, o.ref);
  if (o.ref.rfind("sine", 0) != 0) man.add_input("reference", o.ref);
  const NoiseSpec noise = parse_noise(o.noise);
  const SimConfig cfg = sim_config(o.integrator, o.dt, o.horizon, o.sign_eps);
  if (const std::string bad = check_reference_limits(model, ref, cfg.horizon); !bad.empty())
    throw ValidationError("reference violates limits: " + bad);

  TrajectoryDataset ds;
  GainSet gains{per_joint(o.kp, model.n_a(), "kp"), per_joint(o.kd, model.n_a(), "kd")};
  if (o.mode == "track") {
    ds = run_tracking(model, theta, theta, ref, gains, cfg, true).log;
  } else if (o.mode == "inverse") {
    ds = prescribed_dataset(model, theta, ref, cfg);
  } else {
    throw ValidationError("mode must be track or inverse");
  }
  if (!o.full) {
    ds.qdda.resize(0, 0);
    ds.q.resize(0, 0);
    ds.qd.resize(0, 0);
    ds.qdd.resize(0, 0);
  }
  add_noise(ds, noise, co.seed);

  man.set_seed(co.seed);
  man.enable_timings(co.timings);
  man.config() = {{"mode", o.mode},
                  {"reference", reference_to_json(ref)},
                  {"reference_spec", o.ref},
                  {"theta", o.theta_file.empty() ? "reference_theta" : o.theta_file},
                  {"noise", {{"qa", noise.qa}, {"qda", noise.qda}, {"u", noise.u}}},
                  {"kp", vec_json(gains.kp)},
                  {"kd", vec_json(gains.kd_gain)},
                  {"full", o.full},
                  {"sim", sim_json(cfg)}};
  man.summary() = {{"rows", ds.size()}};
  man.add_timing("total", clk.seconds());
  const std::string csv = "# manifest: " + Manifest::name_for(co.out) + "\n" + dataset_to_csv(model, ds);
  man.write({{co.out, csv}});
  out << "wrote " << ds.size() << " samples to " << co.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- identify

struct IdentifyOpts {
  std::string data;
  std::string mask = "all";
  std::string fixed_file;
  double cutoff = 5.0;
  int downsample = 10;
  double trim = 0.0;
  int multistart = 100;
  double eps_pd = 1e-8;
  int regroup_samples = 200;
  int irwls_max_iter = 20;
  double regularization = 0.0;
  std::string reference = "model";
};

int cmd_identify(const Common& co, const IdentifyOpts& o, std::ostream& out) {
  Clock clk;
  const RobotModel model = load_model(co.model_path);
  model.require_fully_actuated();
  Manifest man("identify");
  man.add_input("model", co.model_path);
  man.add_input("data", o.data);
  if (o.downsample < 1) throw ValidationError("downsample must be >= 1");
  if (o.multistart < 1) throw ValidationError("multistart must be >= 1");
  if (o.regroup_samples < 2) throw ValidationError("regroup-samples must be >= 2");
  if (!(o.cutoff >= 0.0)) throw ValidationError("cutoff must be >= 0");
  const TrajectoryDataset raw = load_dataset(model, o.data);

  IdentificationConfig ic;
  ic.multistart = o.multistart;
  ic.seed = co.seed;
  ic.eps_pd = o.eps_pd;
  ic.irwls_max_iter = o.irwls_max_iter;
  ic.regularization = o.regularization;
  if (o.reference == "model") {
    if (model.reference_theta()) ic.reference = *model.reference_theta();
  } else if (o.reference != "none") {
    ic.reference = load_theta(o.reference, model.n_params());
    man.add_input("reference", o.reference);
  }
  if (o.mask == "friction") {
    Vec fixed;
    if (!o.fixed_file.empty()) {
      fixed = load_theta(o.fixed_file, model.n_params());
      man.add_input("fixed", o.fixed_file);
    } else {
      fixed = require_reference(model).vector();
    }
    ic.mask = ParameterMask::friction_only(fixed, model.n());
  } else if (o.mask != "all") {
    throw ValidationError("mask must be all or friction");
  }

  PipelineConfig pc;
  pc.cutoff_hz = o.cutoff;
  pc.factor = o.downsample;
  const TrajectoryDataset proc = trim_edges(process_pipeline(model, raw, pc), o.trim);
  const double t_pipeline = clk.seconds();
  const ParameterMask* mask = ic.mask ? &*ic.mask : nullptr;
  const RegroupingMaps maps = analyze(model, sample_states(model, o.regroup_samples, co.seed), {}, mask);
  const IdentificationResult res = irwls_identify(model, maps, proc, ic);

  json result = result_to_json(res, maps);
  json config = {{"data", o.data},
                 {"mask", o.mask},
                 {"cutoff_hz", o.cutoff},
                 {"downsample", o.downsample},
                 {"padlen", o.cutoff > 0.0 ? settling_padlen(raw.dt(), o.cutoff) : 0},
                 {"trim", o.trim},
                 {"multistart", o.multistart},
                 {"eps_pd", o.eps_pd},
                 {"bound", ic.bound},
                 {"friction_bound", ic.friction_bound},
                 {"irwls_max_iter", ic.irwls_max_iter},
                 {"irwls_tol", ic.irwls_tol},
                 {"variance_floor", ic.variance_floor},
                 {"kkt_tol", ic.kkt_tol},
                 {"max_solver_iter", ic.max_solver_iter},
                 {"regularization", ic.regularization},
                 {"reference", o.reference},
                 {"regroup_samples", o.regroup_samples},
                 {"tol_rank", RegroupOptions{}.tol_rank}};
  result["config"] = config;
  result["seed"] = co.seed;
  result["manifest"] = Manifest::name_for(co.out);

  man.set_seed(co.seed);
  man.enable_timings(co.timings);
  man.config() = config;
  man.summary() = {{"raw_samples", raw.size()},
                   {"observation_samples", proc.size()},
                   {"observation_rows", proc.size() * model.n_a()},
                   {"n_id", maps.n_id()},
                   {"n_d", maps.n_d()},
                   {"cond", res.cond},
                   {"objective", res.objective},
                   {"irwls_iterations", res.irwls_iterations},
                   {"consistent", res.consistency.ok},
                   {"simd", kernels::isa_name(kernels::active_isa())}};
  man.add_timing("pipeline", t_pipeline);
  man.add_timing("total", clk.seconds());
  man.write({{co.out, dump_json(result)}});

  out << "observation: " << proc.size() << " samples, " << maps.n_id() << " base parameters, cond "
      << res.cond << "\n";
  out << "irwls iterations: " << res.irwls_iterations << ", objective " << res.objective << "\n";
  print_table(out, "residual RMS (N m)", {"rms"}, {res.residual_rms}, model);
  return kExitOk;
}

// ---------------------------------------------------------------- validate

struct ValidateOpts {
  std::string result;
  std::string data;
  std::string mode = "torque";
  double cutoff = 5.0;
  int downsample = 1;
  double trim = 0.0;
  double segment = 0.5;
  std::string integrator = "rk45";
  double sign_eps = 1e-3;
};

int cmd_validate(const Common& co, const ValidateOpts& o, std::ostream& out) {
  Clock clk;
  const RobotModel model = load_model(co.model_path);
  model.require_fully_actuated();
  Manifest man("validate");
  man.add_input("model", co.model_path);
  man.add_input("result", o.result);
  man.add_input("data", o.data);
  const StandardParams theta0(load_theta(o.result, model.n_params()));
  const std::optional<StandardParams> ref =
      model.reference_theta() ? std::optional<StandardParams>(StandardParams(*model.reference_theta())) : std::nullopt;
  const TrajectoryDataset raw = load_dataset(model, o.data);
  json report = {{"mode", o.mode}, {"manifest", Manifest::name_for(co.out)}};
  json config = {{"result", o.result}, {"data", o.data}, {"mode", o.mode}};

  std::vector<std::string> cols{"identified"};
  if (ref) cols.push_back("reference");
  if (o.mode == "torque") {
    if (o.downsample < 1) throw ValidationError("downsample must be >= 1");
    PipelineConfig pc;
    pc.cutoff_hz = o.cutoff;
    pc.factor = o.downsample;
    const TrajectoryDataset proc = trim_edges(process_pipeline(model, raw, pc), o.trim);
    std::vector<Vec> vals{validate_torque(model, theta0, proc)};
    if (ref) vals.push_back(validate_torque(model, *ref, proc));
    report["identified_rms"] = vec_json(vals[0]);
    if (ref) report["reference_rms"] = vec_json(vals[1]);
    report["samples"] = proc.size();
    config["cutoff_hz"] = o.cutoff;
    config["downsample"] = o.downsample;
    config["trim"] = o.trim;
    print_table(out, "torque residual RMS (N m)", cols, vals, model);
  } else if (o.mode == "forward") {
    SimConfig sc = sim_config(o.integrator, raw.dt(), o.segment, o.sign_eps);
    const TrajectoryDataset lifted = lift_unfiltered(model, raw);
    auto seg_json = [](const ForwardValidation& fv) {
      json a = json::array();
      for (const auto& s : fv.segments)
        a.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"ok", s.ok}, {"error", s.error},
                     {"end_measured", vec_json(s.end_measured)},
                     {"end_simulated", s.ok ? vec_json(s.end_simulated) : json::array()}});
      return a;
    };
    std::vector<Vec> vals;
    const ForwardValidation fv0 = validate_forward(model, theta0, lifted, o.segment, sc);
    vals.push_back(fv0.l2);
    report["identified"] = {{"l2", vec_json(fv0.l2)}, {"failed", fv0.failed}, {"segments", seg_json(fv0)}};
    if (ref) {
      const ForwardValidation fvr = validate_forward(model, *ref, lifted, o.segment, sc);
      vals.push_back(fvr.l2);
      report["reference"] = {{"l2", vec_json(fvr.l2)}, {"failed", fvr.failed}, {"segments", seg_json(fvr)}};
    }
    report["n_segments"] = fv0.segments.size();
    config["segment"] = o.segment;
    config["sim"] = sim_json(sc);
    out << "segments: " << fv0.segments.size() << "\n";
    print_table(out, "forward replay L2 of q_a error (rad)", cols, vals, model);
  } else {
    throw ValidationError("mode must be torque or forward");
  }
  man.set_seed(co.seed);
  man.enable_timings(co.timings);
  man.config() = config;
  man.add_timing("total", clk.seconds());
  if (!co.out.empty()) man.write({{co.out, dump_json(report)}});
  return kExitOk;
}

// ---------------------------------------------------------------- track

struct TrackOpts {
  std::string result;
  std::string ref = "sine:maxvel=5";
  std::string kp = "100", kd = "20";
  std::string against = "reference";
  std::string plant;
  double horizon = 10.0;
  double dt = 1e-3;
  std::string integrator = "rk45";
  double sign_eps = 1e-3;
  bool sampled_data = false;
  std::string log;
};

int cmd_track(const Common& co, const TrackOpts& o, std::ostream& out) {
  Clock clk;
  const RobotModel model = load_model(co.model_path);
  model.require_fully_actuated();
  Manifest man("track");
  man.add_input("model", co.model_path);
  man.add_input("result", o.result);
  const StandardParams theta0(load_theta(o.result, model.n_params()));
  StandardParams truth;
  if (!o.plant.empty()) {
    truth = StandardParams(load_theta(o.plant, model.n_params()));
    man.add_input("plant", o.plant);
  } else {
    truth = require_reference(model);
  }
  std::optional<StandardParams> against;
  if (o.against == "reference") {
    against = truth;
  } else if (o.against != "none") {
    against = StandardParams(load_theta(o.against, model.n_params()));
    man.add_input("against", o.against);
  }
  const ReferenceTrajectory ref = parse_reference(model, o.ref);
  const SimConfig cfg = sim_config(o.integrator, o.dt, o.horizon, o.sign_eps);
  if (const std::string bad = check_reference_limits(model, ref, cfg.horizon); !bad.empty())
    throw ValidationError("reference violates limits: " + bad);
  const GainSet gains{per_joint(o.kp, model.n_a(), "kp"), per_joint(o.kd, model.n_a(), "kd")};
  const TrackingRun run0 = run_tracking(model, truth, theta0, ref, gains, cfg, o.sampled_data);
  json report = {{"identified", {{"mean_deg", vec_json(run0.metrics.mean_deg)}, {"max_deg", vec_json(run0.metrics.max_deg)}}},
                 {"max_velocity", vec_json(ref.max_velocity())},
                 {"manifest", Manifest::name_for(co.out)}};
  std::vector<std::string> cols{"mean id", "max id"};
  std::vector<Vec> vals{run0.metrics.mean_deg, run0.metrics.max_deg};
  if (against) {
    const TrackingRun run1 = run_tracking(model, truth, *against, ref, gains, cfg, o.sampled_data);
    report["against"] = {{"mean_deg", vec_json(run1.metrics.mean_deg)}, {"max_deg", vec_json(run1.metrics.max_deg)}};
    cols.insert(cols.end(), {"mean ref", "max ref"});
    vals.push_back(run1.metrics.mean_deg);
    vals.push_back(run1.metrics.max_deg);
  }
  print_table(out, "tracking error (deg)", cols, vals, model);

  man.set_seed(co.seed);
  man.enable_timings(co.timings);
  man.config() = {{"result", o.result},         {"reference", reference_to_json(ref)},
                  {"reference_spec", o.ref},    {"kp", vec_json(gains.kp)},
                  {"kd", vec_json(gains.kd_gain)}, {"against", o.against},
                  {"plant", o.plant.empty() ? "reference_theta" : o.plant},
                  {"sampled_data", o.sampled_data}, {"sim", sim_json(cfg)}};
  man.add_timing("total", clk.seconds());
  std::vector<std::pair<std::string, std::string>> outputs{{co.out, dump_json(report)}};
  if (!o.log.empty())
    outputs.emplace_back(o.log, "# manifest: " + Manifest::name_for(co.out) + "\n" +
                                    dataset_to_csv(model, run0.log, &run0.ea));
  man.write(outputs);
  return kExitOk;
}

// ---------------------------------------------------------------- excite

struct ExciteOpts {
  int budget = 200;
  int harmonics = 3;
  double period = 10.0;
  int samples = 100;
  double coeff_scale = 0.5;
  int regroup_samples = 200;
};

int cmd_excite(const Common& co, const ExciteOpts& o, std::ostream& out) {
  Clock clk;
  const RobotModel model = load_model(co.model_path);
  model.require_fully_actuated();
  if (o.budget < 1) throw ValidationError("budget must be >= 1");
  if (o.samples < 1) throw ValidationError("samples must be >= 1");
  Manifest man("excite");
  man.add_input("model", co.model_path);
  ExcitationConfig ec;
  ec.budget = o.budget;
  ec.harmonics = o.harmonics;
  ec.base_period = o.period;
  ec.samples = o.samples;
  ec.coeff_scale = o.coeff_scale;
  ec.seed = co.seed;
  const RegroupingMaps maps = analyze(model, sample_states(model, o.regroup_samples, co.seed));
  const ExcitationResult er = design_excitation(model, maps, ec);
  const json spec = {{"reference", reference_to_json(er.ref)},
                     {"cond", er.cond},
                     {"period", o.period},
                     {"samples", o.samples},
                     {"manifest", Manifest::name_for(co.out)}};
  man.set_seed(co.seed);
  man.enable_timings(co.timings);
  man.config() = {{"budget", o.budget}, {"harmonics", o.harmonics}, {"period", o.period},
                  {"samples", o.samples}, {"coeff_scale", o.coeff_scale}, {"regroup_samples", o.regroup_samples}};
  man.summary() = {{"cond", er.cond}, {"evaluations", er.evaluations}, {"feasible", er.feasible}};
  man.add_timing("total", clk.seconds());
  man.write({{co.out, dump_json(spec)}});
  out << "condition number " << er.cond << " after " << er.evaluations << " candidates (" << er.feasible
      << " feasible)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- model-check

struct ModelCheckOpts {
  int samples = 100;
  int guesses = 8;
};

int cmd_model_check(const Common& co, const ModelCheckOpts& o, std::ostream& out) {
  const RobotModel model = load_model(co.model_path);
  out << "model " << model.name() << ": n = " << model.n() << ", n_a = " << model.n_a() << ", n_u = " << model.n_u()
      << ", n_c = " << model.n_c() << ", fully actuated: " << (model.fully_actuated() ? "yes" : "no") << "\n";
  for (const auto& w : model.warnings()) out << "warning: " << w << "\n";
  json report = {{"name", model.name()}, {"n", model.n()}, {"n_a", model.n_a()}, {"n_u", model.n_u()},
                 {"n_c", model.n_c()}, {"fully_actuated", model.fully_actuated()}, {"warnings", model.warnings()}};
  if (model.fully_actuated() && model.n_u() > 0) {
    // IK uniqueness audit: multi-start Newton at sampled actuated positions,
    // counting distinct solutions inside the joint limits.
    std::mt19937_64 rng(co.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](int j) {
      const Link& l = model.link(j);
      const double lo = std::max(l.pos_lower, -std::numbers::pi), hi = std::min(l.pos_upper, std::numbers::pi);
      return lo + (hi - lo) * unit(rng);
    };
    int unique = 0, multiple = 0, none = 0;
    json per = json::array();
    for (int s = 0; s < o.samples; ++s) {
      Vec qa(model.n_a());
      for (int i = 0; i < model.n_a(); ++i) qa[i] = draw(model.actuated()[static_cast<size_t>(i)]);
      std::vector<Vec> sols;
      for (int g = 0; g < o.guesses; ++g) {
        Vec guess(model.n_u());
        for (int i = 0; i < model.n_u(); ++i) guess[i] = draw(model.unactuated()[static_cast<size_t>(i)]);
        try {
          Vec qu = solve_ik(model, qa, guess).qu;
          bool inside = true;
          for (int i = 0; i < model.n_u(); ++i) {
            const Link& l = model.link(model.unactuated()[static_cast<size_t>(i)]);
            qu[i] = std::remainder(qu[i], 2.0 * std::numbers::pi);
            inside = inside && qu[i] >= l.pos_lower - 1e-9 && qu[i] <= l.pos_upper + 1e-9;
          }
          if (!inside) continue;
          bool seen = false;
          for (const Vec& v : sols) seen = seen || (v - qu).cwiseAbs().maxCoeff() < 1e-6;
          if (!seen) sols.push_back(qu);
        } catch (const NumericalError&) {
        }
      }
      if (sols.empty()) ++none;
      else if (sols.size() == 1) ++unique;
      else ++multiple;
      per.push_back({{"qa", vec_json(qa)}, {"solutions", sols.size()}});
    }
    out << "IK audit over " << o.samples << " actuated samples: " << unique << " unique, " << multiple
        << " with several branches inside limits, " << none << " unassembled\n";
    if (multiple > 0) out << "note: several branches exist; identification stays on the branch of the home pose\n";
    report["ik_audit"] = {{"samples", o.samples}, {"guesses", o.guesses}, {"unique", unique},
                          {"multiple", multiple}, {"unassembled", none}, {"points", per}};
  }
  if (!co.out.empty()) {
    Manifest man("model-check");
    man.add_input("model", co.model_path);
    man.set_seed(co.seed);
    man.config() = {{"samples", o.samples}, {"guesses", o.guesses}};
    report["manifest"] = Manifest::name_for(co.out);
    man.write({{co.out, dump_json(report)}});
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physically consistent identification for closed-chain robots", "chainid"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", CHAINID_VERSION);

  Common co;
  std::optional<std::uint64_t> seed_flag;
  auto common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--model", co.model_path, "robot model JSON")->required();
    auto* o = sub->add_option("--out", co.out, "output file");
    if (out_required) o->required();
    sub->add_option("--seed", seed_flag, "RNG seed (default: CHAINID_SEED or 0)");
    sub->add_flag("--timings", co.timings, "record wall-clock timings in the manifest");
  };

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "generate a trajectory CSV");
  common(sim, true);
  sim->add_option("--theta", so.theta_file, "parameter file (default: model reference_theta)");
  sim->add_flag("--ground-truth", so.ground_truth, "use the model's reference_theta");
  sim->add_option("--ref", so.ref, "sine spec or reference JSON");
  sim->add_option("--mode", so.mode, "track (closed loop) or inverse (prescribed torques)");
  sim->add_option("--noise", so.noise, "qa=..,qda=..,u=.. Gaussian sigmas or 0");
  sim->add_option("--horizon", so.horizon, "duration (s)");
  sim->add_option("--dt", so.dt, "output period (s)");
  sim->add_option("--integrator", so.integrator, "rk45 or rk4");
  sim->add_option("--sign-eps", so.sign_eps, "Coulomb smoothing (rad/s), 0 = sign");
  sim->add_option("--kp", so.kp, "position gains");
  sim->add_option("--kd", so.kd, "velocity gains");
  sim->add_flag("--full", so.full, "also write the noise-free lifted state");

  IdentifyOpts io;
  auto* idf = app.add_subcommand("identify", "identify parameters from a trajectory CSV");
  common(idf, true);
  idf->add_option("--data", io.data, "trajectory CSV")->required();
  idf->add_option("--mask", io.mask, "all or friction");
  idf->add_option("--fixed", io.fixed_file, "values of fixed entries (default: reference_theta)");
  idf->add_option("--cutoff", io.cutoff, "Butterworth cutoff (Hz), 0 = no filter");
  idf->add_option("--downsample", io.downsample, "downsampling factor");
  idf->add_option("--trim", io.trim, "drop processed samples this close to either end (s)");
  idf->add_option("--multistart", io.multistart, "restarts");
  idf->add_option("--eps-pd", io.eps_pd, "LMI margin");
  idf->add_option("--regroup-samples", io.regroup_samples, "random states for regrouping");
  idf->add_option("--irwls-max-iter", io.irwls_max_iter, "reweighting iterations");
  idf->add_option("--regularization", io.regularization, "pull toward the reference");
  idf->add_option("--reference", io.reference, "model, none, or a parameter file");

  ValidateOpts vo;
  auto* val = app.add_subcommand("validate", "compare identified and reference parameters on held-out data");
  common(val, false);
  val->add_option("--result", vo.result, "identification result")->required();
  val->add_option("--data", vo.data, "held-out CSV")->required();
  val->add_option("--mode", vo.mode, "torque or forward");
  val->add_option("--cutoff", vo.cutoff, "torque mode filter cutoff (Hz)");
  val->add_option("--downsample", vo.downsample, "torque mode downsampling");
  val->add_option("--trim", vo.trim, "torque mode edge trim (s)");
  val->add_option("--segment", vo.segment, "forward mode segment length (s)");
  val->add_option("--integrator", vo.integrator, "rk45 or rk4");
  val->add_option("--sign-eps", vo.sign_eps, "Coulomb smoothing (rad/s)");

  TrackOpts to;
  auto* trk = app.add_subcommand("track", "closed-loop tracking with identified feedforward");
  common(trk, true);
  trk->add_option("--result", to.result, "identification result")->required();
  trk->add_option("--ref", to.ref, "sine spec or reference JSON");
  trk->add_option("--kp", to.kp, "position gains");
  trk->add_option("--kd", to.kd, "velocity gains");
  trk->add_option("--against", to.against, "reference, none, or a parameter file");
  trk->add_option("--plant", to.plant, "plant parameters (default: reference_theta)");
  trk->add_option("--horizon", to.horizon, "duration (s)");
  trk->add_option("--dt", to.dt, "control and log period (s)");
  trk->add_option("--integrator", to.integrator, "rk45 or rk4");
  trk->add_option("--sign-eps", to.sign_eps, "Coulomb smoothing (rad/s)");
  trk->add_flag("--sampled-data", to.sampled_data, "hold the control law between samples");
  trk->add_option("--log", to.log, "tracking log CSV");

  ExciteOpts eo;
  auto* exc = app.add_subcommand("excite", "design an exciting Fourier reference");
  common(exc, true);
  exc->add_option("--budget", eo.budget, "candidate evaluations");
  exc->add_option("--harmonics", eo.harmonics, "Fourier harmonics");
  exc->add_option("--period", eo.period, "base period (s)");
  exc->add_option("--samples", eo.samples, "states per candidate");
  exc->add_option("--coeff-scale", eo.coeff_scale, "initial coefficient range");
  exc->add_option("--regroup-samples", eo.regroup_samples, "random states for regrouping");

  ModelCheckOpts mo;
  auto* chk = app.add_subcommand("model-check", "validate a model and audit IK uniqueness");
  common(chk, false);
  chk->add_option("--samples", mo.samples, "actuated samples");
  chk->add_option("--guesses", mo.guesses, "IK starts per sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << CHAINID_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    co.seed = seed_flag ? *seed_flag : env_seed();
    if (sim->parsed()) return cmd_simulate(co, so, out);
    if (idf->parsed()) return cmd_identify(co, io, out);
    if (val->parsed()) return cmd_validate(co, vo, out);
    if (trk->parsed()) return cmd_track(co, to, out);
    if (exc->parsed()) return cmd_excite(co, eo, out);
    if (chk->parsed()) return cmd_model_check(co, mo, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace chainid::cli
