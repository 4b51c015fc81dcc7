#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "certloc/local_solver.hpp"
#include "certloc/sim.hpp"

using namespace certloc;

namespace {

Scenario scenario(int np, int nl, double noise, std::uint64_t seed) {
  SimParams p;
  p.n_poses = np;
  p.n_landmarks = nl;
  p.noise_scale = noise;
  p.sigma2_landmark = 0.5;
  p.seed = seed;
  return generate_scenario(p);
}

Trajectory perturb(const Trajectory& traj, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd delta(3 * traj.size());
  for (int i = 0; i < delta.size(); ++i) delta(i) = g(rng);
  return retract(traj, delta);
}

}  // namespace

TEST_CASE("analytic jacobian matches central differences") {
  const Scenario sc = scenario(4, 3, 0.8, 2);
  std::mt19937_64 rng(5);
  const double h = 1e-6;
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 25; ++trial) {
    const Trajectory base = perturb(sc.ground_truth, 0.3, rng);
    const AssociationAssignment assign = recover_associations(sc.instance, base);

    Eigen::VectorXd r0;
    Eigen::MatrixXd J;
    residuals_and_jacobian(sc.instance, base, assign, &r0, &J);
    REQUIRE(J.rows() == r0.size());
    REQUIRE(J.cols() == 3 * static_cast<int>(base.size()));

    Eigen::MatrixXd Jfd(J.rows(), J.cols());
    for (int c = 0; c < J.cols(); ++c) {
      Eigen::VectorXd dp = Eigen::VectorXd::Zero(J.cols());
      dp(c) = h;
      Eigen::VectorXd rp, rm;
      residuals_and_jacobian(sc.instance, retract(base, dp), assign, &rp, nullptr);
      residuals_and_jacobian(sc.instance, retract(base, (-dp).eval()), assign, &rm, nullptr);
      Jfd.col(c) = (rp - rm) / (2.0 * h);
    }
    const double rel = (J - Jfd).norm() / std::max(1.0, J.norm());
    INFO("trial ", trial, " rel ", rel);
    CHECK(rel < 1e-5);
    ++checked;
  }
  CHECK(checked == 25);
}

TEST_CASE("max-mixture cost picks the per-measurement argmin") {
  const Scenario sc = scenario(3, 3, 1.0, 9);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const Trajectory t = perturb(sc.ground_truth, 0.5, rng);
    const AssociationAssignment best = recover_associations(sc.instance, t);
    const double mm = max_mixture_cost(sc.instance, t);
    CHECK(mm == doctest::Approx(evaluate_cost(sc.instance, t, best)).epsilon(1e-12));
    // No other assignment can do better.
    AssociationAssignment other = best;
    other.landmark_for_meas[0] =
        sc.instance.measurements[0].candidates[other.landmark_for_meas[0] ==
                                               sc.instance.measurements[0].candidates[0]];
    CHECK(mm <= evaluate_cost(sc.instance, t, other) + 1e-12);
  }
}

TEST_CASE("gauss-newton descends from dead reckoning") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const Scenario sc = scenario(4, 2, 1.0, seed);
    const Trajectory init = dead_reckon(sc.instance);
    const double c0 = max_mixture_cost(sc.instance, init);
    const LocalResult r = gauss_newton(sc.instance, init);
    CHECK(r.converged);
    CHECK(r.cost <= c0 + 1e-9);
    CHECK(r.cost == doctest::Approx(max_mixture_cost(sc.instance, r.trajectory)).epsilon(1e-9));
    CHECK(r.associations == recover_associations(sc.instance, r.trajectory));
  }
}

TEST_CASE("zero noise: one or two steps from the truth, cost at zero") {
  const Scenario sc = scenario(3, 2, 0.0, 4);
  const LocalResult r = gauss_newton(sc.instance, sc.ground_truth);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(r.cost < 1e-12);
  CHECK(r.associations == sc.true_assoc);
}

TEST_CASE("enumeration equals the best fixed-association branch") {
  const Scenario sc = scenario(3, 2, 0.4, 6);
  const Trajectory init = dead_reckon(sc.instance);

  // 3 measurements x 2 candidates = 8 branches.
  double best = std::numeric_limits<double>::infinity();
  const auto& ms = sc.instance.measurements;
  for (int b = 0; b < 8; ++b) {
    AssociationAssignment a;
    for (int i = 0; i < 3; ++i) a.landmark_for_meas.push_back(ms[i].candidates[(b >> i) & 1]);
    const LocalResult r = gauss_newton_fixed(sc.instance, init, a);
    best = std::min(best, r.cost);
  }
  const LocalResult oracle = enumerate_oracle(sc.instance, init);
  CHECK(oracle.cost == doctest::Approx(best).epsilon(1e-9));
  CHECK(oracle.converged);

  // Max-mixture from the truth cannot beat the exhaustive optimum.
  const LocalResult mm = gauss_newton(sc.instance, sc.ground_truth);
  CHECK(oracle.cost <= mm.cost + 1e-9);
}

TEST_CASE("retraction composes rotation and body-frame translation") {
  Trajectory t{Pose2::identity()};
  Eigen::VectorXd d(3);
  d << M_PI / 2, 1.0, 0.0;
  const Trajectory out = retract(t, d);
  CHECK(out[0].rot.angle() == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK((out[0].pos - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-12);

  Trajectory t2{Pose2{Rotation2::from_angle(M_PI / 2), {2.0, 0.0}}};
  Eigen::VectorXd d2(3);
  d2 << 0.0, 1.0, 0.0;
  const Trajectory out2 = retract(t2, d2);
  CHECK((out2[0].pos - Eigen::Vector2d(2.0, 1.0)).norm() < 1e-12);
}
