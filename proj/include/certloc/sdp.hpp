#pragma once

#include <string>
#include <vector>

#include "certloc/constraints.hpp"
#include "certloc/ipm.hpp"

namespace certloc {

// Shor relaxation of the lifted localization QCQP:
//   min <Q, Z>  s.t.  homogenization rhs 1, all other families rhs 0, Z psd.
struct SdpProblem {
  ColumnIndexMap map;
  SymmetricMatrix cost;
  std::vector<ConstraintMatrix> constraints;
};

SdpProblem build_sdp(const ProblemInstance& instance, const ConstraintOptions& options = {});

struct SdpSolveResult {
  Eigen::MatrixXd Z;
  Eigen::VectorXd eigenvalues;  // of Z, descending
  double objective = 0.0;
  double dual_objective = 0.0;
  double rel_gap = 1.0;
  double primal_infeas = 1.0;
  double dual_infeas = 1.0;
  IpmStatus status = IpmStatus::NumericalError;
  int iterations = 0;
  int constraints_kept = 0;
  double solve_time_s = 0.0;
};

SdpSolveResult solve_sdp(const SdpProblem& problem, const IpmOptions& options = {});

// Rank-2 tightness certificate: ratio of the second to the third eigenvalue
// of Z, the third floored at 1e-12 times the first.
struct Certificate {
  double eig_ratio = 0.0;
  double threshold = 1e6;
  bool tight = false;
  bool so2_feasible = false;  // pre-projection rotation blocks have det > 0
};

struct ExtractedSolution {
  Trajectory trajectory;
  AssociationAssignment associations;
  std::vector<double> theta_raw;  // relaxed indicator per theta variable
  Certificate certificate;
  bool rounded = false;  // rank-2 approximation used (certificate not tight)
};

// Reads the trajectory out of Z via the homogenization rows when tight,
// otherwise from the best rank-2 factor; rotations are projected to SO(2)
// and associations taken as the per-measurement argmax of the theta
// diagonal. Throws std::runtime_error when the homogenization block of the
// factor is degenerate (smallest singular value below 0.5).
ExtractedSolution extract_solution(const SdpSolveResult& sol, const SdpProblem& problem,
                                   double tight_threshold = 1e6);

// Plain-text sparse export: dimension, cost triplets, then one block per
// constraint. Documented in the README.
void export_sdp_text(const SdpProblem& problem, const std::string& path);

}  // namespace certloc
