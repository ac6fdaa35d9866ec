#include "chainid/signal.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"
#include "chainid/kernels/kernels.hpp"

namespace chainid {

namespace {

void require_stage(const TrajectoryDataset& ds, Stage expected, const char* step) {
  if (ds.stage != expected)
    throw StageError(std::string(step) + " expects stage '" + stage_name(expected) + "', dataset is '" +
                     stage_name(ds.stage) + "'");
}

Mat take_rows(const Mat& m, int factor) {
  if (m.size() == 0) return m;
  const Eigen::Index n = (m.rows() - 1) / factor + 1;
  Mat out(n, m.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = m.row(i * factor);
  return out;
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Raw: return "raw";
    case Stage::Differentiated: return "differentiated";
    case Stage::Lifted: return "lifted";
    case Stage::Filtered: return "filtered";
    case Stage::Downsampled: return "downsampled";
  }
  return "raw";
}

Stage stage_from_name(const std::string& s) {
  for (Stage st : {Stage::Raw, Stage::Differentiated, Stage::Lifted, Stage::Filtered, Stage::Downsampled})
    if (s == stage_name(st)) return st;
  throw ParseError("unknown stage '" + s + "'");
}

double TrajectoryDataset::dt() const {
  if (t.size() < 2) return 0.0;
  return (t[t.size() - 1] - t[0]) / static_cast<double>(t.size() - 1);
}

void TrajectoryDataset::validate(const RobotModel& model) const {
  const Eigen::Index N = t.size();
  const auto na = static_cast<Eigen::Index>(model.n_a());
  auto check = [&](const Mat& m, Eigen::Index cols, const char* what, bool optional) {
    if (optional && m.size() == 0) return;
    if (m.rows() != N || m.cols() != cols)
      throw DimensionError(std::string("dataset column block '") + what + "' has wrong shape");
  };
  check(qa, na, "qa", false);
  check(qda, na, "qda", false);
  check(u, na, "u", false);
  check(qdda, na, "qdda", true);
  check(q, model.n(), "q", true);
  check(qd, model.n(), "qd", true);
  check(qdd, model.n(), "qdd", true);
  const double h = dt();
  for (Eigen::Index i = 1; i < N; ++i)
    if (!(std::abs((t[i] - t[i - 1]) - h) <= 1e-9 * h + 1e-12))
      throw ValidationError("dataset time stamps are not uniform at row " + std::to_string(i));
}

Mat central_diff_4(const Mat& x, double dt) {
  const Eigen::Index N = x.rows();
  if (N < 5) throw ValidationError("central_diff_4 needs at least 5 samples");
  if (!(dt > 0.0)) throw ValidationError("central_diff_4 needs dt > 0");
  const auto& k = kernels::active();
  const double h12 = 12.0 * dt;
  Mat y(N, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double* f = x.col(c).data();
    double* d = y.col(c).data();
    k.central_diff4(f, d, static_cast<size_t>(N), dt);
    const Eigen::Index m = N - 1;
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h12;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h12;
    d[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) / h12;
    d[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / h12;
  }
  return y;
}

ButterworthDesign butterworth4_design(double dt, double cutoff_hz) {
  const double fs = 1.0 / dt;
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * fs))
    throw ValidationError("Butterworth cutoff must lie in (0, fs/2)");
  const double K = std::tan(std::numbers::pi * cutoff_hz / fs);
  ButterworthDesign d{};
  for (int s = 0; s < 2; ++s) {
    const double Q = 1.0 / (2.0 * std::cos(std::numbers::pi * (2 * s + 1) / 8.0));
    const double norm = 1.0 / (1.0 + K / Q + K * K);
    d.b0[s] = K * K * norm;
    d.b1[s] = 2.0 * d.b0[s];
    d.b2[s] = d.b0[s];
    d.a1[s] = 2.0 * (K * K - 1.0) * norm;
    d.a2[s] = (1.0 - K / Q + K * K) * norm;
  }
  return d;
}

int settling_padlen(double dt, double cutoff_hz) {
  return std::max(12, static_cast<int>(std::ceil(8.0 / (cutoff_hz * dt))));
}

Mat butterworth4_zero_phase(const Mat& x, double dt, double cutoff_hz, int padlen) {
  const ButterworthDesign d = butterworth4_design(dt, cutoff_hz);
  const kernels::Biquad sec[2] = {{d.b0[0], d.b1[0], d.b2[0], d.a1[0], d.a2[0]},
                                  {d.b0[1], d.b1[1], d.b2[1], d.a1[1], d.a2[1]}};
  const Eigen::Index N = x.rows();
  if (N == 0) return x;
  if (padlen < 0) padlen = settling_padlen(dt, cutoff_hz);
  const Eigen::Index pad = std::min<Eigen::Index>(padlen, N - 1);
  const Eigen::Index M = N + 2 * pad;
  const auto& k = kernels::active();
  constexpr int L = kernels::kLanes;
  Mat y(N, x.cols());
  std::vector<double> buf(static_cast<size_t>(M * L));
  std::vector<double> state(2 * 2 * L);
  for (Eigen::Index c0 = 0; c0 < x.cols(); c0 += L) {
    const int lanes = static_cast<int>(std::min<Eigen::Index>(L, x.cols() - c0));
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int l = 0; l < lanes; ++l) {
      const auto col = x.col(c0 + l);
      for (Eigen::Index i = 0; i < pad; ++i) {
        buf[static_cast<size_t>(i * L + l)] = 2.0 * col[0] - col[pad - i];
        buf[static_cast<size_t>((pad + N + i) * L + l)] = 2.0 * col[N - 1] - col[N - 2 - i];
      }
      for (Eigen::Index i = 0; i < N; ++i) buf[static_cast<size_t>((pad + i) * L + l)] = col[i];
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (int s = 0; s < 2; ++s)
        for (int l = 0; l < L; ++l) {
          const double x0 = buf[static_cast<size_t>(l)];
          state[static_cast<size_t>((s * 2) * L + l)] = (1.0 - sec[s].b0) * x0;
          state[static_cast<size_t>((s * 2 + 1) * L + l)] = (sec[s].b2 - sec[s].a2) * x0;
        }
      k.biquad_cascade4(sec, 2, state.data(), buf.data(), static_cast<size_t>(M));
      for (Eigen::Index i = 0, j = M - 1; i < j; ++i, --j)
        for (int l = 0; l < L; ++l)
          std::swap(buf[static_cast<size_t>(i * L + l)], buf[static_cast<size_t>(j * L + l)]);
    }
    for (int l = 0; l < lanes; ++l)
      for (Eigen::Index i = 0; i < N; ++i) y(i, c0 + l) = buf[static_cast<size_t>((pad + i) * L + l)];
  }
  return y;
}

TrajectoryDataset downsample(const TrajectoryDataset& ds, int factor) {
  if (factor < 1) throw ValidationError("downsample factor must be >= 1");
  require_stage(ds, Stage::Filtered, "downsample");
  TrajectoryDataset out;
  out.t = take_rows(ds.t, factor);
  out.qa = take_rows(ds.qa, factor);
  out.qda = take_rows(ds.qda, factor);
  out.u = take_rows(ds.u, factor);
  out.qdda = take_rows(ds.qdda, factor);
  out.q = take_rows(ds.q, factor);
  out.qd = take_rows(ds.qd, factor);
  out.qdd = take_rows(ds.qdd, factor);
  out.stage = Stage::Downsampled;
  return out;
}

TrajectoryDataset trim_edges(const TrajectoryDataset& ds, double seconds) {
  if (!(seconds >= 0.0)) throw ValidationError("trim must be >= 0");
  require_stage(ds, Stage::Downsampled, "trim_edges");
  const Eigen::Index N = ds.size();
  if (seconds == 0.0 || N == 0) return ds;
  const double lo = ds.t[0] + seconds, hi = ds.t[N - 1] - seconds;
  Eigen::Index a = 0, b = N;
  while (a < N && ds.t[a] < lo - 1e-9 * ds.dt()) ++a;
  while (b > a && ds.t[b - 1] > hi + 1e-9 * ds.dt()) --b;
  if (b - a < 2) throw ValidationError("trim leaves fewer than 2 samples");
  auto rows = [&](const Mat& m) { return m.size() == 0 ? m : Mat(m.middleRows(a, b - a)); };
  TrajectoryDataset out;
  out.t = ds.t.segment(a, b - a);
  out.qa = rows(ds.qa);
  out.qda = rows(ds.qda);
  out.u = rows(ds.u);
  out.qdda = rows(ds.qdda);
  out.q = rows(ds.q);
  out.qd = rows(ds.qd);
  out.qdd = rows(ds.qdd);
  out.stage = ds.stage;
  return out;
}

TrajectoryDataset differentiate(const TrajectoryDataset& ds) {
  require_stage(ds, Stage::Raw, "differentiate");
  TrajectoryDataset out = ds;
  out.qdda = central_diff_4(ds.qda, ds.dt());
  out.stage = Stage::Differentiated;
  return out;
}

TrajectoryDataset lift(const RobotModel& model, const TrajectoryDataset& ds, const Vec& guess0) {
  require_stage(ds, Stage::Differentiated, "lift");
  model.require_fully_actuated();
  const Eigen::Index N = ds.size();
  TrajectoryDataset out = ds;
  out.q.resize(N, model.n());
  out.qd.resize(N, model.n());
  out.qdd.resize(N, model.n());
  Vec guess = guess0;
  for (Eigen::Index i = 0; i < N; ++i) {
    try {
      const JointState s = lift_state(model, ds.qa.row(i).transpose(), ds.qda.row(i).transpose(),
                                      ds.qdda.row(i).transpose(), guess);
      out.q.row(i) = s.q.transpose();
      out.qd.row(i) = s.qd.transpose();
      out.qdd.row(i) = s.qdd.transpose();
      guess = model.select_unactuated(s.q);
    } catch (const SingularJu& e) {
      throw SingularJu("lift: sample " + std::to_string(i) + ": " + e.what(), e.last_iterate());
    } catch (const NoConvergence& e) {
      throw NoConvergence("lift: sample " + std::to_string(i) + ": " + e.what(), e.last_iterate());
    }
  }
  out.stage = Stage::Lifted;
  return out;
}

TrajectoryDataset filter(const TrajectoryDataset& ds, double cutoff_hz, int padlen) {
  require_stage(ds, Stage::Lifted, "filter");
  TrajectoryDataset out = ds;
  out.stage = Stage::Filtered;
  if (cutoff_hz == 0.0) return out;
  const double h = ds.dt();
  out.qda = butterworth4_zero_phase(ds.qda, h, cutoff_hz, padlen);
  out.qdda = butterworth4_zero_phase(ds.qdda, h, cutoff_hz, padlen);
  out.u = butterworth4_zero_phase(ds.u, h, cutoff_hz, padlen);
  out.qd = butterworth4_zero_phase(ds.qd, h, cutoff_hz, padlen);
  out.qdd = butterworth4_zero_phase(ds.qdd, h, cutoff_hz, padlen);
  return out;
}

TrajectoryDataset process_pipeline(const RobotModel& model, const TrajectoryDataset& raw, const PipelineConfig& cfg) {
  if (raw.stage == Stage::Downsampled) throw StageError("dataset is already processed");
  raw.validate(model);
  TrajectoryDataset ds = raw;
  if (ds.stage == Stage::Raw) ds = differentiate(ds);
  if (ds.stage == Stage::Differentiated) {
    Vec guess = cfg.guess0 ? *cfg.guess0 : Vec();
    if (guess.size() == 0) {
      const Vec home = assembled_home(model);
      guess = model.select_unactuated(solve_ik_continuation(model, ds.qa.row(0).transpose(), home));
    }
    ds = lift(model, ds, guess);
  }
  if (ds.stage == Stage::Lifted) ds = filter(ds, cfg.cutoff_hz, cfg.padlen);
  return downsample(ds, cfg.factor);
}

}  // namespace chainid
