#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>

#include "chainid/constraint.hpp"
#include "chainid/errors.hpp"
#include "chainid/signal.hpp"
#include "chainid/simulate.hpp"
#include "test_util.hpp"

using namespace chainid;

namespace {

constexpr double kPi = std::numbers::pi;

Mat sampled(double dt, int n, const std::function<double(double)>& f) {
  Mat x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = f(i * dt);
  return x;
}

// Digital magnitude of the cascaded sections at frequency f.
double digital_gain(const ButterworthDesign& d, double f, double dt) {
  const std::complex<double> z = std::polar(1.0, 2 * kPi * f * dt);
  std::complex<double> h = 1.0;
  for (int s = 0; s < 2; ++s) {
    const auto zi = 1.0 / z;
    h *= (d.b0[s] + d.b1[s] * zi + d.b2[s] * zi * zi) / (1.0 + d.a1[s] * zi + d.a2[s] * zi * zi);
  }
  return std::abs(h);
}

double amplitude(const Mat& x, int from, int to) {
  return x.col(0).segment(from, to - from).cwiseAbs().maxCoeff();
}

TrajectoryDataset fourbar_log(double horizon, double amp = 0.5, double freq = 0.5) {
  const RobotModel m = test::fourbar();
  ReferenceTrajectory ref;
  ref.offset = Vec::Constant(1, 0.2);
  ref.amp = Vec::Constant(1, amp);
  ref.freq = Vec::Constant(1, freq);
  ref.phase = Vec::Zero(1);
  SimConfig cfg;
  cfg.horizon = horizon;
  return prescribed_dataset(m, test::truth(m), ref, cfg);
}

}  // namespace

TEST(CentralDiff, QuadraticExact) {
  const double dt = 0.01;
  const Mat x = sampled(dt, 200, [](double t) { return t * t; });
  const Mat y = central_diff_4(x, dt);
  for (int i = 0; i < 200; ++i) EXPECT_NEAR(y(i, 0), 2 * i * dt, 1e-10);
}

TEST(CentralDiff, QuarticExactIncludingEdges) {
  const double dt = 0.05;
  const Mat x = sampled(dt, 30, [](double t) { return t * t * t * t - 2 * t; });
  const Mat y = central_diff_4(x, dt);
  for (int i = 0; i < 30; ++i) {
    const double t = i * dt;
    EXPECT_NEAR(y(i, 0), 4 * t * t * t - 2, 1e-9);
  }
}

TEST(CentralDiff, ConstantIsZero) {
  const Mat y = central_diff_4(Mat::Constant(50, 3, 2.5), 0.001);
  EXPECT_LE(y.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(CentralDiff, SineAccuracyAndOrder) {
  auto interior_err = [](double dt) {
    const int n = static_cast<int>(std::round(6.0 / dt)) + 1;
    const Mat y = central_diff_4(sampled(dt, n, [](double t) { return std::sin(t); }), dt);
    double e = 0.0;
    for (int i = 2; i < n - 2; ++i) e = std::max(e, std::abs(y(i, 0) - std::cos(i * dt)));
    return e;
  };
  const double dt = 0.01;
  const int n = 601;
  const Mat y = central_diff_4(sampled(dt, n, [](double t) { return std::sin(t); }), dt);
  double emax = 0.0;
  for (int i = 0; i < n; ++i) emax = std::max(emax, std::abs(y(i, 0) - std::cos(i * dt)));
  EXPECT_LE(emax, 1e-8);
  const double ratio = interior_err(0.04) / interior_err(0.02);
  EXPECT_NEAR(ratio, 16.0, 1.0);
}

TEST(CentralDiff, TooShortRejected) { EXPECT_THROW(central_diff_4(Mat::Zero(4, 1), 0.01), ValidationError); }

TEST(Butterworth, ConstantUnchanged) {
  const Mat x = Mat::Constant(500, 2, 3.7);
  EXPECT_LE((butterworth4_zero_phase(x, 1e-3, 5.0) - x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Butterworth, DesignMatchesAnalogResponse) {
  const double dt = 1e-3, fc = 5.0;
  const ButterworthDesign d = butterworth4_design(dt, fc);
  EXPECT_NEAR(digital_gain(d, 0.0, dt), 1.0, 1e-12);
  EXPECT_NEAR(digital_gain(d, fc, dt), std::sqrt(0.5), 1e-9);
  // Below cutoff the prewarped response tracks 1 / sqrt(1 + (f/fc)^8).
  for (double f : {0.5, 2.0, 4.0}) {
    const double wa = std::tan(kPi * f * dt) / std::tan(kPi * fc * dt);
    EXPECT_NEAR(digital_gain(d, f, dt), 1.0 / std::sqrt(1.0 + std::pow(wa, 8)), 1e-9);
  }
}

TEST(Butterworth, PassbandToneKeptWithoutLag) {
  const double dt = 1e-3, fc = 5.0, f = 0.1 * fc;
  const int n = 20000;
  const Mat x = sampled(dt, n, [&](double t) { return std::sin(2 * kPi * f * t); });
  const Mat y = butterworth4_zero_phase(x, dt, fc);
  const double expect = std::pow(digital_gain(butterworth4_design(dt, fc), f, dt), 2);
  const double a = amplitude(y, 4000, 16000);
  EXPECT_NEAR(a, 1.0, 0.01);
  EXPECT_NEAR(a, expect, 1e-3);
  int best = 0;
  double best_c = -1e300;
  for (int lag = -20; lag <= 20; ++lag) {
    double c = 0.0;
    for (int i = 4000; i < 16000; ++i) c += x(i, 0) * y(i + lag, 0);
    if (c > best_c) {
      best_c = c;
      best = lag;
    }
  }
  EXPECT_EQ(best, 0);
}

TEST(Butterworth, StopbandToneAttenuated) {
  const double dt = 1e-3, fc = 5.0, f = 4.0 * fc;
  const Mat x = sampled(dt, 10000, [&](double t) { return std::sin(2 * kPi * f * t); });
  const Mat y = butterworth4_zero_phase(x, dt, fc);
  const double analog_sq = 1.0 / (1.0 + std::pow(4.0, 8));  // |H|^2, forward and backward pass
  const double a = amplitude(y, 2000, 8000);
  EXPECT_LE(a, analog_sq * 1.05);
  EXPECT_LE(20 * std::log10(a), -96.0);
}

TEST(Butterworth, ZeroPhaseUnderTimeReversal) {
  std::mt19937_64 rng(3);
  const Mat x = test::random_vector(8000, rng);
  const Mat fwd = butterworth4_zero_phase(x, 1e-3, 7.0);
  const Mat rev = butterworth4_zero_phase(x.colwise().reverse(), 1e-3, 7.0).colwise().reverse();
  // Edge transients differ; they have died out well inside the record.
  EXPECT_LE((fwd - rev).middleRows(3000, 2000).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Butterworth, InvalidCutoff) {
  const Mat x = Mat::Zero(100, 1);
  EXPECT_THROW(butterworth4_zero_phase(x, 1e-3, 0.0), ValidationError);
  EXPECT_THROW(butterworth4_zero_phase(x, 1e-3, 500.0), ValidationError);
}

TEST(Downsample, IndexArithmetic) {
  TrajectoryDataset ds = fourbar_log(0.1);
  ASSERT_EQ(ds.size(), 101);
  ds.stage = Stage::Filtered;
  const TrajectoryDataset d = downsample(ds, 10);
  ASSERT_EQ(d.size(), 11);
  EXPECT_EQ(d.stage, Stage::Downsampled);
  for (int i = 0; i < 11; ++i) {
    EXPECT_EQ(d.t[i], ds.t[10 * i]);
    EXPECT_EQ(d.q.row(i), ds.q.row(10 * i));
  }
  EXPECT_NEAR(d.dt(), 10 * ds.dt(), 1e-15);
  const TrajectoryDataset same = downsample(ds, 1);
  EXPECT_EQ(same.t, ds.t);
  EXPECT_EQ(same.u, ds.u);
  for (int factor : {2, 3, 7, 13, 50}) EXPECT_EQ(downsample(ds, factor).size(), (101 - 1) / factor + 1);
  EXPECT_THROW(downsample(ds, 0), ValidationError);
}

TEST(Pipeline, NoiseFreeAccelerationMatchesSimulator) {
  const RobotModel m = test::fourbar();
  const TrajectoryDataset raw = fourbar_log(10.0);
  PipelineConfig cfg;
  const TrajectoryDataset out = process_pipeline(m, raw, cfg);
  EXPECT_EQ(out.stage, Stage::Downsampled);
  EXPECT_EQ(out.size(), 1001);
  double err = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    err = std::max(err, std::abs(out.qdda(i, 0) - raw.qdda(10 * i, 0)));
    // Actuated channel untouched by lifting.
    EXPECT_EQ(out.qa(i, 0), raw.qa(10 * i, 0));
    EXPECT_EQ(out.q(i, 0), raw.qa(10 * i, 0));
    EXPECT_LE(constraint_residual(m, out.q.row(i).transpose()).lpNorm<Eigen::Infinity>(), 1e-9);
  }
  EXPECT_LE(err, 1e-4);
}

TEST(Pipeline, ShortPaddingLeavesEdgeTransient) {
  const RobotModel m = test::fourbar();
  const TrajectoryDataset raw = fourbar_log(10.0);
  PipelineConfig cfg;
  cfg.padlen = 12;
  const TrajectoryDataset out = process_pipeline(m, raw, cfg);
  double edge = 0.0, interior = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double e = std::abs(out.qdda(i, 0) - raw.qdda(10 * i, 0));
    double& slot = (i > 100 && i < out.size() - 100) ? interior : edge;
    slot = std::max(slot, e);
  }
  EXPECT_LE(interior, 1e-4);
  EXPECT_GT(edge, 1e-2);
  EXPECT_EQ(settling_padlen(1e-3, 5.0), 1600);
  EXPECT_EQ(settling_padlen(1e-3, 1000.0), 12);
}

TEST(Pipeline, ConstantVelocityHasNoAcceleration) {
  const RobotModel m = test::fourbar();
  TrajectoryDataset raw;
  const int n = 400;
  const double dt = 1e-3;
  raw.t = Vec::LinSpaced(n, 0.0, (n - 1) * dt);
  raw.qa = (0.1 + 0.5 * raw.t.array()).matrix();
  raw.qda = Mat::Constant(n, 1, 0.5);
  raw.u = Mat::Zero(n, 1);
  PipelineConfig cfg;
  cfg.factor = 1;
  cfg.cutoff_hz = 0.99 * 0.5 / dt;
  const TrajectoryDataset out = process_pipeline(m, raw, cfg);
  EXPECT_LE(out.qdda.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Pipeline, StagesEnforced) {
  const RobotModel m = test::fourbar();
  const TrajectoryDataset raw = fourbar_log(0.2);
  EXPECT_THROW(lift(m, raw, Vec::Zero(2)), StageError);
  EXPECT_THROW(filter(raw, 5.0), StageError);
  const TrajectoryDataset d = differentiate(raw);
  EXPECT_THROW(differentiate(d), StageError);
  PipelineConfig cfg;
  const TrajectoryDataset out = process_pipeline(m, raw, cfg);
  EXPECT_THROW(process_pipeline(m, out, cfg), StageError);
  EXPECT_THROW(downsample(raw, 10), StageError);
}

TEST(Pipeline, StepsComposeToPipeline) {
  const RobotModel m = test::fourbar();
  const TrajectoryDataset raw = fourbar_log(2.0);
  PipelineConfig cfg;
  const Vec guess = m.select_unactuated(solve_ik_continuation(m, raw.qa.row(0).transpose(), assembled_home(m)));
  cfg.guess0 = guess;
  const TrajectoryDataset a = process_pipeline(m, raw, cfg);
  const TrajectoryDataset b = downsample(filter(lift(m, differentiate(raw), guess), cfg.cutoff_hz), cfg.factor);
  EXPECT_EQ(a.qdd, b.qdd);
  EXPECT_EQ(a.u, b.u);
}

TEST(Pipeline, TrimRemovesNoisyEdges) {
  // Velocity noise anchors the reflected padding on a noisy endpoint; the
  // error it leaves decays within the settling time.
  const RobotModel m = test::fourbar();
  const TrajectoryDataset clean = fourbar_log(10.0);
  TrajectoryDataset raw = clean;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.qda(i, 0) += g(rng);
  raw.qdda.resize(0, 0);
  raw.q.resize(0, 0);
  raw.qd.resize(0, 0);
  raw.qdd.resize(0, 0);
  const TrajectoryDataset out = process_pipeline(m, raw, PipelineConfig{});
  const TrajectoryDataset cut = trim_edges(out, 0.5);
  ASSERT_EQ(cut.size(), 901);
  EXPECT_DOUBLE_EQ(cut.t[0], 0.5);
  EXPECT_EQ(cut.stage, Stage::Downsampled);
  EXPECT_EQ(cut.qdd.row(0), out.qdd.row(50));
  auto worst = [&](const TrajectoryDataset& d) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(std::lround(d.t[i] / clean.dt()));
      e = std::max(e, std::abs(d.qdda(i, 0) - clean.qdda(k, 0)));
    }
    return e;
  };
  EXPECT_GT(worst(out), 0.5);
  EXPECT_LE(worst(cut), 0.02);
}

TEST(Pipeline, TrimArguments) {
  const RobotModel m = test::fourbar();
  const TrajectoryDataset out = process_pipeline(m, fourbar_log(1.0), PipelineConfig{});
  EXPECT_EQ(trim_edges(out, 0.0).t, out.t);
  EXPECT_THROW(trim_edges(out, -0.1), ValidationError);
  EXPECT_THROW(trim_edges(out, 0.5), ValidationError);
  EXPECT_THROW(trim_edges(fourbar_log(1.0), 0.1), StageError);
}

TEST(Dataset, NonUniformTimeRejected) {
  const RobotModel m = test::fourbar();
  TrajectoryDataset raw = fourbar_log(0.1);
  raw.t[50] += 1e-5;
  EXPECT_THROW(raw.validate(m), ValidationError);
}

TEST(Stage, NamesRoundTrip) {
  for (Stage s : {Stage::Raw, Stage::Differentiated, Stage::Lifted, Stage::Filtered, Stage::Downsampled})
    EXPECT_EQ(stage_from_name(stage_name(s)), s);
  EXPECT_THROW(stage_from_name("cooked"), ParseError);
}
