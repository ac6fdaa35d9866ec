#pragma once

#include <cstdint>
#include <vector>

#include "chainid/dynamics.hpp"
#include "chainid/model.hpp"

namespace chainid {

struct ConstraintEval {
  Vec c;        ///< stacked selected world components of p - s (m)
  Mat J;        ///< dc/dq, n_c x n
  Vec Jdot_qd;  ///< J'(q) q'
};

ConstraintEval eval_constraints(const RobotModel& model, const Vec& q, const Vec& qd);

/// c(q) only.
Vec constraint_residual(const RobotModel& model, const Vec& q);

struct IkOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double singular_tol = 1e-12;
};

struct IkResult {
  Vec qu;
  int iterations = 0;  ///< residual evaluations, 1 when the guess already satisfies tol
};

/// Undamped Newton on c(q_a, q_u) = 0 in q_u. Throws SingularJu or NoConvergence,
/// both carrying the last iterate.
IkResult solve_ik(const RobotModel& model, const Vec& qa, const Vec& guess, const IkOptions& opt = {});

/// IK by continuation along the straight segment from `from` (full q, assembled)
/// to the target actuated positions. Keeps the branch of `from`.
Vec solve_ik_continuation(const RobotModel& model, const Vec& qa, const Vec& from, double max_step = 0.1);

/// Full assembled configuration for the model's home (or zero) guess.
Vec assembled_home(const RobotModel& model);

struct Projection {
  Mat G;         ///< n x n_a, actuated rows are identity
  Vec Gdot_qda;  ///< G'(q) q'_a
};

/// Uses the actuated part of qd; the unactuated part is recomputed as G q'_a.
Projection projection(const RobotModel& model, const Vec& q, const Vec& qd);

JointState lift_state(const RobotModel& model, const Vec& qa, const Vec& qda, const Vec& qdda,
                      const Vec& guess);

/// B: n x n_a selection of actuated joints.
Mat input_matrix(const RobotModel& model);

/// G^T(q) W(s), n_a x 14n.
Mat constrained_regressor(const RobotModel& model, const JointState& s);

/// u = G^T W theta.
Vec constrained_inverse_dynamics(const RobotModel& model, const StandardParams& theta, const JointState& s);

/// lambda = J_u^{-T} (W theta - B u)_U.
Vec constraint_forces(const RobotModel& model, const StandardParams& theta, const JointState& s, const Vec& u);

struct StateSampling {
  double vel = 2.0;    ///< |q'_a| bound (rad/s)
  double acc = 5.0;    ///< |q''_a| bound (rad/s^2)
  double pos_cap = 3.0;  ///< used where a joint has no finite limit
};

/// Random lifted states with actuated positions uniform within limits, reached
/// from the home configuration by continuation.
std::vector<JointState> sample_states(const RobotModel& model, int count, std::uint64_t seed,
                                      const StateSampling& cfg = {});

}  // namespace chainid
