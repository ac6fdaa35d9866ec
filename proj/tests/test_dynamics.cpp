#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "chainid/dynamics.hpp"
#include "test_util.hpp"

using namespace chainid;

namespace {

double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

StandardParams no_friction(StandardParams th) {
  for (int j = 0; j < th.n(); ++j) th.set_friction(j, Vec4::Zero());
  return th;
}

}  // namespace

TEST(Friction, Examples) {
  EXPECT_EQ(friction_force(0.0, 0.0, Vec4(1, 2, 3, 0.5)), 0.5);
  EXPECT_DOUBLE_EQ(friction_force(2.0, -1.0, Vec4(1, 0.5, 0.25, 0)), 1.75);
  EXPECT_DOUBLE_EQ(friction_force(-3.0, 0.0, Vec4(2, 1, 0, 0.1)), -4.9);
}

TEST(InverseDynamics, ZeroParametersGiveZero) {
  std::mt19937_64 rng(1);
  const RobotModel m = test::spatial5();
  for (int k = 0; k < 10; ++k)
    EXPECT_EQ(inverse_dynamics(m, StandardParams(m.n()), test::random_state(m.n(), rng)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(InverseDynamics, PendulumHandComputed) {
  // Axis -y: positive rotation lifts the +x arm toward +z, so gravity
  // resists with torque m g l cos(q).
  StandardParams th;
  const double m = 1.7, l = 0.8, g = 9.81;
  const RobotModel model = test::pendulum(m, l, &th);
  for (double q : {0.0, 0.4, -1.1, 2.5}) {
    JointState s = JointState::zero(1);
    s.q[0] = q;
    EXPECT_NEAR(inverse_dynamics(model, th, s)[0], m * g * l * std::cos(q), 1e-12);
  }
}

TEST(InverseDynamics, PendulumAccelerationTerm) {
  StandardParams th;
  const double m = 2.0, l = 0.5;
  const RobotModel model = test::pendulum(m, l, &th);
  const JointState s{Vec::Constant(1, 0.3), Vec::Constant(1, 1.2), Vec::Constant(1, 0.7)};
  const double expect = m * l * l * 0.7 + m * 9.81 * l * std::cos(0.3);
  EXPECT_NEAR(inverse_dynamics(model, th, s)[0], expect, 1e-12);
}

TEST(Regressor, MatchesInverseDynamics) {
  std::mt19937_64 rng(2);
  for (const RobotModel& m : {test::fourbar(), test::spatial5()}) {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const JointState s = test::random_state(m.n(), rng);
      const StandardParams th(test::random_vector(m.n_params(), rng, 2.0));
      worst = std::max(worst, rel_err(regressor(m, s) * th.vector(), inverse_dynamics(m, th, s)));
    }
    EXPECT_LE(worst, 1e-10) << m.name();
  }
}

TEST(Regressor, FrictionPattern) {
  const RobotModel m = test::fourbar();
  JointState s = JointState::zero(m.n());
  s.qd[1] = 2.0;
  s.qdd[1] = 1.0;
  const Mat W = regressor(m, s);
  const int o = StandardParams(m.n()).friction_offset(1);
  EXPECT_EQ(W.block(1, o, 1, 4), (Eigen::RowVector4d(1, 2, 1, 1)));
  EXPECT_EQ((W * Vec::Zero(m.n_params())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MassMatrix, ColumnsFromInverseDynamics) {
  std::mt19937_64 rng(3);
  const RobotModel m = test::spatial5();
  const StandardParams th = no_friction(test::random_theta(m, rng));
  const Vec q = test::random_vector(m.n(), rng, 3.0);
  const Mat H = mass_matrix(m, th, q);
  const Vec g0 = inverse_dynamics(m, th, {q, Vec::Zero(m.n()), Vec::Zero(m.n())});
  for (int k = 0; k < m.n(); ++k) {
    const Vec col = inverse_dynamics(m, th, {q, Vec::Zero(m.n()), Vec::Unit(m.n(), k)}) - g0;
    EXPECT_LE((H.col(k) - col).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MassMatrix, SymmetricPositiveDefinite) {
  std::mt19937_64 rng(4);
  const RobotModel m = test::fourbar();
  const StandardParams th = test::truth(m);
  for (int k = 0; k < 100; ++k) {
    const Vec q = test::random_vector(m.n(), rng, 3.0);
    const Mat H = mass_matrix(m, th, q);
    EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Bias, Decomposition) {
  std::mt19937_64 rng(5);
  const RobotModel m = test::spatial5();
  for (int k = 0; k < 50; ++k) {
    const StandardParams th = test::random_theta(m, rng);
    const JointState s = test::random_state(m.n(), rng);
    const Vec rhs = mass_matrix(m, th, s.q) * s.qdd + bias_forces(m, th, s.q, s.qd) + friction_vector(th, s.qd, s.qdd);
    EXPECT_LE(rel_err(inverse_dynamics(m, th, s), rhs), 1e-10);
  }
}

TEST(Bias, ZeroVelocityIsGravity) {
  std::mt19937_64 rng(6);
  const RobotModel m = test::fourbar();
  const StandardParams th = no_friction(test::truth(m));
  const Vec q = test::random_vector(m.n(), rng, 2.0);
  const Vec g = inverse_dynamics(m, th, {q, Vec::Zero(m.n()), Vec::Zero(m.n())});
  EXPECT_LE((bias_forces(m, th, q, Vec::Zero(m.n())) - g).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(bias_forces(m, StandardParams(m.n()), q, Vec::Ones(m.n())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Energy, PowerBalanceOfTree) {
  // d/dt (T + V) = qd^T (tau - friction) on the unconstrained tree.
  std::mt19937_64 rng(7);
  const RobotModel m = test::spatial5();
  const StandardParams th = no_friction(test::random_theta(m, rng));
  const JointState s = test::random_state(m.n(), rng);
  const double h = 1e-6;
  auto energy = [&](double t) {
    const Vec q = s.q + t * s.qd + 0.5 * t * t * s.qdd;
    const Vec qd = s.qd + t * s.qdd;
    return kinetic_energy(m, th, q, qd) + potential_energy(m, th, q);
  };
  const double dE = (energy(h) - energy(-h)) / (2 * h);
  const double power = s.qd.dot(inverse_dynamics(m, th, s));
  EXPECT_NEAR(dE, power, 1e-6 * std::max(1.0, std::abs(power)));
}
