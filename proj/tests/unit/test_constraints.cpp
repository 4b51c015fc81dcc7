#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "certloc/constraints.hpp"
#include "certloc/sim.hpp"

using namespace certloc;

namespace {

Scenario scenario(int np, int nl, std::uint64_t seed) {
  SimParams p;
  p.n_poses = np;
  p.n_landmarks = nl;
  p.noise_scale = 0.5;
  p.sigma2_landmark = 0.5;
  p.seed = seed;
  return generate_scenario(p);
}

}  // namespace

TEST_CASE("catalog shape: homogenization first, zero rhs elsewhere") {
  const Scenario sc = scenario(3, 2, 1);
  const ColumnIndexMap map(sc.instance);
  const auto cons = build_constraints(map);
  REQUIRE(!cons.empty());
  CHECK(cons[0].family == ConstraintFamily::Homogenization);
  CHECK(cons[0].rhs == 1.0);
  for (size_t i = 1; i < cons.size(); ++i) CHECK(cons[i].rhs == 0.0);
  for (const auto& c : cons) CHECK(c.A.frobenius_norm() > 0.0);
}

TEST_CASE("catalog sizes are stable") {
  CHECK(build_constraints(ColumnIndexMap(scenario(3, 2, 1).instance)).size() == 333);
  CHECK(build_constraints(ColumnIndexMap(scenario(3, 3, 1).instance)).size() == 633);
  CHECK(build_constraints(ColumnIndexMap(scenario(5, 3, 1).instance)).size() == 1143);
}

TEST_CASE("every family appears") {
  // Two measurements per timestep so the shared-timestep sum products exist.
  SimParams p;
  p.n_poses = 3;
  p.n_landmarks = 3;
  p.meas_per_pose = 2;
  p.seed = 2;
  const Scenario sc = generate_scenario(p);
  ConstraintOptions opt;
  opt.include_sum_cross_products = true;
  const auto cons = build_constraints(ColumnIndexMap(sc.instance), opt);
  std::vector<int> count(kNumConstraintFamilies, 0);
  for (const auto& c : cons) ++count[static_cast<int>(c.family)];
  for (int f = 0; f < kNumConstraintFamilies; ++f) {
    INFO("family ", family_name(static_cast<ConstraintFamily>(f)));
    CHECK(count[f] > 0);
  }
}

TEST_CASE("feasible lifts satisfy every constraint") {
  for (auto [np, nl] : {std::pair{3, 2}, std::pair{3, 3}, std::pair{5, 3}}) {
    const Scenario sc = scenario(np, nl, 7);
    const ColumnIndexMap map(sc.instance);
    const auto cons = build_constraints(map);
    const NullspaceReport rep = verify_nullspace(cons, map, 100, 99);
    INFO("grid ", np, "x", nl, " worst ", rep.max_violation);
    CHECK(rep.pass(1e-9));
    CHECK(rep.samples == 100);
    CHECK(rep.constraint_count == static_cast<int>(cons.size()));
  }
}

TEST_CASE("feasible lifts satisfy the optional cross-product family too") {
  const Scenario sc = scenario(3, 3, 4);
  const ColumnIndexMap map(sc.instance);
  ConstraintOptions opt;
  opt.include_sum_cross_products = true;
  const auto cons = build_constraints(map, opt);
  CHECK(cons.size() > build_constraints(map).size());
  CHECK(verify_nullspace(cons, map, 60, 5).pass(1e-9));
}

TEST_CASE("lift gram is invariant to the homogenization sign") {
  const Scenario sc = scenario(3, 2, 9);
  const ColumnIndexMap map(sc.instance);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-3.0, 3.0), pos(-5.0, 5.0);
  Trajectory traj(3);
  for (auto& T : traj) {
    T.rot = Rotation2::from_angle(ang(rng));
    T.pos = {pos(rng), pos(rng)};
  }
  const Eigen::MatrixXd Xp = build_feasible_point(map, traj, sc.true_assoc, 1);
  const Eigen::MatrixXd Xm = build_feasible_point(map, traj, sc.true_assoc, -1);
  CHECK((Xp.transpose() * Xp - Xm.transpose() * Xm).norm() < 1e-12);
}

TEST_CASE("constraint dump lists one header per constraint") {
  const Scenario sc = scenario(3, 2, 1);
  const ColumnIndexMap map(sc.instance);
  const auto cons = build_constraints(map);
  const std::string text = dump_constraints_text(cons, map);
  size_t headers = 0;
  for (size_t at = 0; (at = text.find("# ", at)) != std::string::npos; at += 2) ++headers;
  CHECK(headers == cons.size());
  CHECK(text.find("homogenization") != std::string::npos);
}
