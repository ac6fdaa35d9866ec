#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chainid/model.hpp"
#include "chainid/regroup.hpp"
#include "chainid/signal.hpp"

namespace chainid {

struct SimConfig {
  enum class Integrator { Rk45, Rk4 };
  Integrator integrator = Integrator::Rk45;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double rk4_step = 1e-4;    ///< fixed step of the RK4 integrator (s)
  double dt_output = 1e-3;   ///< logging and control period (s)
  double sign_eps = 1e-3;    ///< tanh smoothing of the Coulomb term (rad/s), 0 = exact sign
  double alpha = 20.0;       ///< Baumgarte velocity gain
  double beta = 100.0;       ///< Baumgarte position gain
  double horizon = 1.0;      ///< (s)
  bool project = true;       ///< project onto the constraint manifold at output samples
};

struct ForwardResult {
  Vec qdd;
  Vec lambda;
};

/// Solves [H + diag(I_a), J^T; J, 0] [q''; -lambda] = [B u - bias - F; -J'q' - 2 alpha J q' - beta^2 c].
/// F uses F_c tanh(q'/eps) + F_v q' + beta_j (exact sign when eps = 0).
ForwardResult forward_dynamics(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd,
                               const Vec& u, const SimConfig& cfg = {});

/// Input law. With zero_order_hold the function is evaluated once at each
/// output sample and held over the following interval.
struct InputSource {
  std::function<Vec(double t, const Vec& q, const Vec& qd)> fn;
  bool zero_order_hold = false;
};

/// Piecewise-constant replay of a recorded input log (row i applies on [t_i, t_i+1)).
InputSource zoh_replay(const Vec& t, const Mat& u);

/// Integrates from (q0, qd0) and logs every dt_output. The result is at stage
/// Raw with the full state and the true q''_a recorded. Throws
/// IntegrationFailure on step underflow or constraint blow-up.
TrajectoryDataset integrate(const RobotModel& model, const StandardParams& theta, const Vec& q0, const Vec& qd0,
                            const InputSource& input, const SimConfig& cfg);

double total_energy(const RobotModel& model, const StandardParams& theta, const Vec& q, const Vec& qd);

/// Sine or Swevers-form Fourier reference on the actuated joints.
struct ReferenceTrajectory {
  enum class Kind { Sine, Fourier };
  Kind kind = Kind::Sine;
  Vec offset;
  // sine: q = offset + amp sin(2 pi freq t + phase)
  Vec amp, freq, phase;
  // fourier: q = offset + sum_k a_k/(w k) sin(k w t) - b_k/(w k) cos(k w t), w = 2 pi base_freq
  double base_freq = 0.1;
  Mat a, b;  ///< n_a x harmonics

  int n_a() const { return static_cast<int>(offset.size()); }
  void eval(double t, Vec& q, Vec& qd, Vec& qdd) const;
  /// Sine: amp 2 pi freq. Fourier: maximum over a dense 1 kHz grid of one period.
  Vec max_velocity() const;
};

/// Dense 1 kHz check of position and velocity limits over `duration`.
/// Returns an empty string when feasible, else a description.
std::string check_reference_limits(const RobotModel& model, const ReferenceTrajectory& ref, double duration);

/// Exact inputs along the lifted reference (no integration): one row per output sample.
TrajectoryDataset prescribed_dataset(const RobotModel& model, const StandardParams& theta,
                                     const ReferenceTrajectory& ref, const SimConfig& cfg);

struct GainSet {
  Vec kp;
  Vec kd_gain;
};

struct TrackingMetrics {
  Vec mean_deg;
  Vec max_deg;
};

/// Mean and max of |e| in degrees per column of an error log in rad.
TrackingMetrics tracking_metrics(const Mat& error_log);

struct TrackingRun {
  TrajectoryDataset log;
  Mat ea;  ///< q_d,a - q_a at each sample (rad)
  TrackingMetrics metrics;
};

/// u = G^T(q_d) W(q_d, q'_d, q''_d) theta_ctrl + Kp e_a + Kd_gain e'_a on the
/// theta_true plant, starting on the reference. With sampled_data the law is
/// evaluated at output samples and held.
TrackingRun run_tracking(const RobotModel& model, const StandardParams& theta_true, const StandardParams& theta_ctrl,
                         const ReferenceTrajectory& ref, const GainSet& gains, const SimConfig& cfg,
                         bool sampled_data = false);

/// Torque residual RMS per actuated joint on a lifted dataset.
Vec validate_torque(const RobotModel& model, const StandardParams& theta, const TrajectoryDataset& ds);

struct SegmentReport {
  double t_start = 0.0;
  double t_end = 0.0;
  bool ok = true;
  std::string error;
  Vec end_measured;   ///< q_a at the last sample of the segment
  Vec end_simulated;
  Vec sum_sq;         ///< per joint sum of squared q_a differences
};

struct ForwardValidation {
  Vec l2;  ///< per actuated joint, sqrt of the summed squared differences over all samples
  std::vector<SegmentReport> segments;
  int failed = 0;
};

/// Splits the dataset into floor(duration / segment_len) segments and replays
/// each from its initial state under zero-order hold of the recorded inputs.
ForwardValidation validate_forward(const RobotModel& model, const StandardParams& theta, const TrajectoryDataset& ds,
                                   double segment_len, const SimConfig& cfg);

struct ExcitationConfig {
  double base_period = 10.0;
  int harmonics = 3;
  int budget = 200;          ///< candidate evaluations
  int samples = 100;         ///< states per candidate observation
  double coeff_scale = 0.5;  ///< initial coefficient range
  std::uint64_t seed = 0;
};

struct ExcitationResult {
  ReferenceTrajectory ref;
  double cond = 0.0;
  int evaluations = 0;
  int feasible = 0;
};

/// Condition number of the observation built from `samples` lifted points of
/// one period of the reference; +inf when infeasible or degenerate.
double reference_condition(const RobotModel& model, const RegroupingMaps& maps, const ReferenceTrajectory& ref,
                           double period, int samples);

/// Candidate k of the random phase, reproducible from (seed, k).
ReferenceTrajectory excitation_candidate(const RobotModel& model, const ExcitationConfig& cfg, int k);

/// Random multistart plus local perturbation search over Fourier coefficients.
/// The random phase evaluates candidates 0 .. budget/2 - 1.
/// Throws NoFeasiblePoint when no candidate satisfies the limits.
ExcitationResult design_excitation(const RobotModel& model, const RegroupingMaps& maps, const ExcitationConfig& cfg);

/// Inertial blocks scaled by `factor` (the 50 % mass perturbation uses 1.5).
StandardParams scale_inertial(const StandardParams& theta, double factor);

}  // namespace chainid
