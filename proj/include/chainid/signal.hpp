#pragma once

#include <optional>
#include <string>

#include "chainid/model.hpp"
#include "chainid/types.hpp"

namespace chainid {

enum class Stage { Raw, Differentiated, Lifted, Filtered, Downsampled };

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& s);

/// Uniformly sampled log. Matrices are N x k with one row per sample.
struct TrajectoryDataset {
  Vec t;
  Mat qa, qda, u;
  Mat qdda;         ///< empty until differentiated (or recorded)
  Mat q, qd, qdd;   ///< full lifted state, empty until lifted
  Stage stage = Stage::Raw;

  Eigen::Index size() const { return t.size(); }
  bool lifted() const { return q.rows() == t.size() && q.cols() > 0; }
  double dt() const;
  /// Rows must agree, t ascending with uniform step within 1e-9 dt.
  void validate(const RobotModel& model) const;
};

/// Fourth-order central difference along rows, one-sided 4th-order stencils on
/// the first and last two samples. Throws ValidationError for N < 5.
Mat central_diff_4(const Mat& x, double dt);

/// Second-order sections of the 4th-order Butterworth low-pass (bilinear).
struct ButterworthDesign {
  double b0[2], b1[2], b2[2], a1[2], a2[2];
};
ButterworthDesign butterworth4_design(double dt, double cutoff_hz);

/// Forward-backward filtering with odd-reflection padding of `padlen` samples
/// (capped at N - 1). A negative padlen selects settling_padlen.
Mat butterworth4_zero_phase(const Mat& x, double dt, double cutoff_hz, int padlen = 12);

/// Padding over which the start-up transient decays: 8 / cutoff seconds, at
/// least 12 samples.
int settling_padlen(double dt, double cutoff_hz);

TrajectoryDataset downsample(const TrajectoryDataset& ds, int factor);

/// Drops processed samples closer than `seconds` to either end of the record,
/// where filter start-up transients on noisy data concentrate. Keeps the stage.
TrajectoryDataset trim_edges(const TrajectoryDataset& ds, double seconds);

struct PipelineConfig {
  double cutoff_hz = 5.0;  ///< 0 disables filtering
  int factor = 10;
  int padlen = -1;  ///< negative: settling_padlen
  std::optional<Vec> guess0;  ///< initial q_u for warm-started lifting
};

/// Individual steps. Each requires the stage immediately before it and throws
/// StageError otherwise.
TrajectoryDataset differentiate(const TrajectoryDataset& ds);
TrajectoryDataset lift(const RobotModel& model, const TrajectoryDataset& ds, const Vec& guess0);
TrajectoryDataset filter(const TrajectoryDataset& ds, double cutoff_hz, int padlen = -1);

/// Runs the steps not yet applied, in order, ending at Downsampled.
TrajectoryDataset process_pipeline(const RobotModel& model, const TrajectoryDataset& raw, const PipelineConfig& cfg);

}  // namespace chainid
