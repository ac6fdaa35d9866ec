#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "chainid/model.hpp"
#include "chainid/regroup.hpp"
#include "chainid/signal.hpp"

namespace chainid {

/// Stacked constrained base regressor and inputs. Row i*n_a + k belongs to
/// sample i and actuated joint k.
struct ObservationSystem {
  Mat GY;
  Vec U;  ///< inputs minus the contribution of mask-fixed parameters
  Vec weights;
  std::vector<int> joint_of_row;
  int n_a = 0;
  double cond = 0.0;

  Eigen::Index rows() const { return GY.rows(); }
};

/// `mask` supplies values for the entries listed in maps.idx_fixed.
ObservationSystem assemble_observation(const RobotModel& model, const RegroupingMaps& maps,
                                       const TrajectoryDataset& processed, const ParameterMask* mask = nullptr);

/// Same assembly over explicit lifted states and inputs (one row of u per state).
ObservationSystem assemble_observation(const RobotModel& model, const RegroupingMaps& maps,
                                       const std::vector<JointState>& states, const Mat& u,
                                       const ParameterMask* mask = nullptr);

/// Largest over smallest singular value of the weighted, column-normalized
/// matrix; +inf when the smallest is numerically zero.
double condition_number(const Mat& A);
double condition_number(const ObservationSystem& obs);

struct IdentificationConfig {
  double eps_pd = 1e-8;
  double bound = 10.0;           ///< inertial and beta entries sampled in [-bound, bound]
  double friction_bound = 10.0;  ///< F_c, F_v, I_a sampled in [0, friction_bound]
  std::optional<Vec> lower, upper;  ///< per free entry, overrides the defaults
  int multistart = 100;
  int irwls_max_iter = 20;
  double irwls_tol = 1e-4;
  double variance_floor = 1e-12;
  double kkt_tol = 1e-8;
  int max_solver_iter = 500;
  std::uint64_t seed = 0;
  std::optional<ParameterMask> mask;  ///< all free when empty
  double regularization = 0.0;        ///< weight of |theta_free - reference|^2
  std::optional<Vec> reference;       ///< full theta, used for regularization and gauge pinning
};

struct IdentificationResult {
  Vec pi0;
  Vec theta_d0;
  StandardParams theta0;
  Vec residual_rms;   ///< per actuated joint (N m)
  Vec joint_weights;  ///< final IRWLS weight per actuated joint
  double objective = 0.0;
  double cond = 0.0;
  int irwls_iterations = 0;
  std::vector<double> restart_objectives;
  ConsistencyReport consistency;
};

/// One weighted, constrained solve with multistart.
IdentificationResult solve_identification(const ObservationSystem& obs, const RegroupingMaps& maps,
                                          const RobotModel& model, const IdentificationConfig& cfg);

/// Iteratively reweighted identification on a processed dataset.
IdentificationResult irwls_identify(const RobotModel& model, const RegroupingMaps& maps,
                                    const TrajectoryDataset& processed, const IdentificationConfig& cfg);

/// Same loop on an assembled observation (its weights are reset to one).
IdentificationResult irwls_identify(const ObservationSystem& obs, const RegroupingMaps& maps,
                                    const RobotModel& model, const IdentificationConfig& cfg);

/// Per actuated joint residual RMS of u - G^T W theta.
Vec torque_rms(const RobotModel& model, const StandardParams& theta, const TrajectoryDataset& ds);

}  // namespace chainid
