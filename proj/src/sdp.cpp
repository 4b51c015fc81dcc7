#include "certloc/sdp.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace certloc {

SdpProblem build_sdp(const ProblemInstance& instance, const ConstraintOptions& options) {
  instance.validate();
  ColumnIndexMap map(instance);
  SymmetricMatrix cost = assemble_cost(instance, map);
  std::vector<ConstraintMatrix> constraints = build_constraints(map, options);
  return {std::move(map), std::move(cost), std::move(constraints)};
}

SdpSolveResult solve_sdp(const SdpProblem& problem, const IpmOptions& options) {
  std::vector<SymmetricMatrix> A;
  Eigen::VectorXd b(problem.constraints.size());
  A.reserve(problem.constraints.size());
  for (size_t i = 0; i < problem.constraints.size(); ++i) {
    A.push_back(problem.constraints[i].A);
    b(static_cast<int>(i)) = problem.constraints[i].rhs;
  }
  const IpmResult ipm = solve_sdp_ipm(problem.cost, A, b, options);

  SdpSolveResult out;
  out.Z = ipm.Z;
  out.objective = ipm.primal_obj;
  out.dual_objective = ipm.dual_obj;
  out.rel_gap = ipm.rel_gap;
  out.primal_infeas = ipm.primal_infeas;
  out.dual_infeas = ipm.dual_infeas;
  out.status = ipm.status;
  out.iterations = ipm.iterations;
  out.constraints_kept = ipm.constraints_kept;
  out.solve_time_s = ipm.solve_time_s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ipm.Z, Eigen::EigenvaluesOnly);
  out.eigenvalues = eig.eigenvalues().reverse();
  return out;
}

ExtractedSolution extract_solution(const SdpSolveResult& sol, const SdpProblem& problem,
                                   double tight_threshold) {
  const ColumnIndexMap& map = problem.map;
  const int n = map.size();
  if (sol.Z.rows() != n) throw std::invalid_argument("extract_solution: Z size mismatch");

  ExtractedSolution out;
  const Eigen::VectorXd& ev = sol.eigenvalues;
  const double l1 = std::max(ev(0), 0.0);
  const double l2 = std::max(ev(1), 0.0);
  const double l3 = n > 2 ? std::max(ev(2), 0.0) : 0.0;
  out.certificate.threshold = tight_threshold;
  out.certificate.eig_ratio = l2 / std::max(l3, 1e-12 * std::max(l1, 1e-300));
  out.certificate.tight = out.certificate.eig_ratio >= tight_threshold;
  out.rounded = !out.certificate.tight;

  Eigen::MatrixXd X(2, n);
  if (out.certificate.tight) {
    X.row(0) = sol.Z.row(map.hom(0));
    X.row(1) = sol.Z.row(map.hom(1));
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sol.Z);
    X.row(0) = std::sqrt(std::max(eig.eigenvalues()(n - 1), 0.0)) *
               eig.eigenvectors().col(n - 1).transpose();
    X.row(1) = std::sqrt(std::max(eig.eigenvalues()(n - 2), 0.0)) *
               eig.eigenvectors().col(n - 2).transpose();
  }

  // Gauge-fix so the homogenization block becomes the identity.
  Eigen::Matrix2d B;
  B << X(0, map.hom(0)), X(0, map.hom(1)), X(1, map.hom(0)), X(1, map.hom(1));
  Eigen::JacobiSVD<Eigen::Matrix2d> svdB(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svdB.singularValues()(1) < 0.5)
    throw std::runtime_error("extract_solution: degenerate homogenization block");
  X = B.inverse() * X;

  out.certificate.so2_feasible = true;
  for (int i = 0; i < map.num_poses(); ++i) {
    Eigen::Matrix2d Ci;
    Ci.col(0) = X.col(map.plain(i, 0));
    Ci.col(1) = X.col(map.plain(i, 1));
    if (Ci.determinant() <= 0.0) out.certificate.so2_feasible = false;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(Ci, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d R = svd.matrixU() * svd.matrixV().transpose();
    if (R.determinant() < 0.0) {
      Eigen::Matrix2d flip = Eigen::Matrix2d::Identity();
      flip(1, 1) = -1.0;
      R = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    Pose2 pose;
    pose.rot = Rotation2(R(0, 0), R(1, 0)).normalized();
    pose.pos = X.col(map.plain(i, 2));
    out.trajectory.push_back(pose);
  }

  out.theta_raw.resize(map.num_thetas());
  for (int t = 0; t < map.num_thetas(); ++t)
    out.theta_raw[t] =
        0.5 * (sol.Z(map.hom(0), map.theta_diag(t, 0)) + sol.Z(map.hom(1), map.theta_diag(t, 1)));

  for (int m = 0; m < map.num_meas(); ++m) {
    const auto& ts = map.thetas_of_meas(m);
    int best = ts.front();
    for (int t : ts)
      if (out.theta_raw[t] > out.theta_raw[best]) best = t;
    out.associations.landmark_for_meas.push_back(map.theta_landmark(best));
  }
  return out;
}

void export_sdp_text(const SdpProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  out << "sdp 1\n";
  out << "dim " << problem.map.size() << "\n";
  out << "cost " << problem.cost.nnz_upper() << "\n";
  for (const auto& [pq, v] : problem.cost.upper_entries())
    out << pq.first << " " << pq.second << " " << v << "\n";
  out << "constraints " << problem.constraints.size() << "\n";
  for (const auto& c : problem.constraints) {
    out << "a " << c.A.nnz_upper() << " " << c.rhs << " " << family_name(c.family) << "\n";
    for (const auto& [pq, v] : c.A.upper_entries())
      out << pq.first << " " << pq.second << " " << v << "\n";
  }
}

}  // namespace certloc
