#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "certloc/local_solver.hpp"
#include "certloc/sdp.hpp"
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

SdpSolveResult fake_result_from_lift(const Eigen::MatrixXd& X) {
  SdpSolveResult r;
  r.Z = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.Z);
  r.eigenvalues = es.eigenvalues().reverse();
  r.status = IpmStatus::Optimal;
  return r;
}

}  // namespace

TEST_CASE("moderate-noise instance solves to a tight certificate") {
  const Scenario sc = scenario(3, 2, 0.1, 3);
  const SdpProblem prob = build_sdp(sc.instance);
  const SdpSolveResult sol = solve_sdp(prob);
  REQUIRE(sol.status == IpmStatus::Optimal);
  CHECK(sol.rel_gap < 1e-6);
  CHECK(sol.primal_infeas < 1e-8);
  CHECK(sol.dual_infeas < 1e-8);
  REQUIRE(sol.eigenvalues.size() == prob.map.size());
  CHECK(sol.eigenvalues(0) >= sol.eigenvalues(1));

  const ExtractedSolution ex = extract_solution(sol, prob);
  CHECK(ex.certificate.tight);
  CHECK(ex.certificate.eig_ratio >= 1e6);
  CHECK(ex.certificate.so2_feasible);
  CHECK(!ex.rounded);
  REQUIRE(static_cast<int>(ex.trajectory.size()) == 3);
  REQUIRE(static_cast<int>(ex.associations.landmark_for_meas.size()) ==
          static_cast<int>(sc.instance.measurements.size()));

  // The recovered estimate can never beat the certified bound.
  const double cost = evaluate_cost(sc.instance, ex.trajectory, ex.associations);
  CHECK(cost >= sol.dual_objective - 1e-6);
  // Rotations are orthonormal after projection.
  for (const auto& T : ex.trajectory)
    CHECK(std::abs(T.rot.c * T.rot.c + T.rot.s * T.rot.s - 1.0) < 1e-12);
}

TEST_CASE("relaxation objective is bounded by any feasible lift") {
  const Scenario sc = scenario(3, 2, 0.3, 8);
  const SdpProblem prob = build_sdp(sc.instance);
  const SdpSolveResult sol = solve_sdp(prob);
  REQUIRE(sol.status == IpmStatus::Optimal);

  const Eigen::MatrixXd Xgt = build_feasible_point(prob.map, sc.ground_truth, sc.true_assoc);
  const double gt_value = prob.cost.inner(Xgt.transpose() * Xgt);
  CHECK(sol.objective <= gt_value + 1e-6);
  CHECK(sol.dual_objective <= gt_value + 1e-6);
}

TEST_CASE("extraction inverts a hand-built lift exactly") {
  const Scenario sc = scenario(4, 3, 0.2, 5);
  const SdpProblem prob = build_sdp(sc.instance);
  const Eigen::MatrixXd X = build_feasible_point(prob.map, sc.ground_truth, sc.true_assoc);
  const ExtractedSolution ex = extract_solution(fake_result_from_lift(X), prob);

  CHECK(ex.certificate.tight);
  REQUIRE(ex.trajectory.size() == sc.ground_truth.size());
  for (size_t i = 0; i < ex.trajectory.size(); ++i) {
    CHECK((ex.trajectory[i].pos - sc.ground_truth[i].pos).norm() < 1e-8);
    CHECK(std::abs(wrap_angle(ex.trajectory[i].rot.angle() -
                              sc.ground_truth[i].rot.angle())) < 1e-8);
  }
  CHECK(ex.associations == sc.true_assoc);

  // The negated-sign lift produces the identical gram, hence identical output.
  const Eigen::MatrixXd Xm = build_feasible_point(prob.map, sc.ground_truth, sc.true_assoc, -1);
  const ExtractedSolution exm = extract_solution(fake_result_from_lift(Xm), prob);
  CHECK((exm.trajectory[1].pos - ex.trajectory[1].pos).norm() < 1e-10);
}

TEST_CASE("theta indicators of the selected candidates read near one") {
  const Scenario sc = scenario(3, 2, 0.1, 12);
  const SdpProblem prob = build_sdp(sc.instance);
  const Eigen::MatrixXd X = build_feasible_point(prob.map, sc.ground_truth, sc.true_assoc);
  const ExtractedSolution ex = extract_solution(fake_result_from_lift(X), prob);
  for (int t = 0; t < prob.map.num_thetas(); ++t) {
    const bool on = sc.true_assoc.landmark_for_meas[prob.map.theta_meas(t)] ==
                    prob.map.theta_landmark(t);
    CHECK(ex.theta_raw[t] == doctest::Approx(on ? 1.0 : 0.0).epsilon(1e-9));
  }
}

TEST_CASE("sparse text export round-trips structurally") {
  const Scenario sc = scenario(3, 2, 0.5, 2);
  const SdpProblem prob = build_sdp(sc.instance);
  const std::string path = "test_sdp_export.txt";
  export_sdp_text(prob, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string word;
  int version, dim, cost_nnz, n_cons;
  in >> word >> version;
  CHECK(word == "sdp");
  CHECK(version == 1);
  in >> word >> dim;
  CHECK(word == "dim");
  CHECK(dim == prob.map.size());
  in >> word >> cost_nnz;
  CHECK(word == "cost");
  CHECK(cost_nnz == prob.cost.nnz_upper());
  for (int i = 0; i < cost_nnz; ++i) {
    int p, q;
    double v;
    in >> p >> q >> v;
    REQUIRE(in.good());
    CHECK(p <= q);
    CHECK(prob.cost.coeff(p, q) == doctest::Approx(v).epsilon(1e-15));
  }
  in >> word >> n_cons;
  CHECK(word == "constraints");
  REQUIRE(n_cons == static_cast<int>(prob.constraints.size()));
  for (int k = 0; k < n_cons; ++k) {
    int nnz;
    double rhs;
    std::string fam;
    in >> word >> nnz >> rhs >> fam;
    REQUIRE(word == "a");
    CHECK(rhs == prob.constraints[k].rhs);
    CHECK(fam == family_name(prob.constraints[k].family));
    for (int i = 0; i < nnz; ++i) {
      int p, q;
      double v;
      in >> p >> q >> v;
      REQUIRE(in.good());
    }
  }
  std::remove(path.c_str());
}
