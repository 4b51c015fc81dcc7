#pragma once

#include <vector>

#include <Eigen/Core>

#include "certloc/lifting.hpp"

namespace certloc {

// Generic equality-constrained SDP in standard primal form:
//   min <C, Z>  s.t.  <A_i, Z> = b_i,  Z >= 0 (PSD).
// Solved with an infeasible-start primal-dual interior-point method using
// Nesterov-Todd scaling and a Mehrotra predictor-corrector step. The Schur
// complement M_ij = <A_i, W A_j W> is assembled by exploiting constraint
// sparsity. Linearly dependent constraints are dropped by a pivoted-Cholesky
// presolve on the constraint Gram matrix, and the cost is shifted to its
// minimum-norm representative over the zero-rhs constraint span.
//
// The main engine runs in 80-bit extended precision. Instances whose
// residual weights span many orders of magnitude (near-noiseless fixtures)
// drive the Schur system past what 80-bit arithmetic resolves before the
// rank certificate is conclusive; when the engine stalls, the same iterate
// is resumed in quadruple precision.
struct IpmOptions {
  double tol_gap = 1e-9;   // relative duality gap
  double tol_feas = 1e-9;  // relative primal/dual residual norms
  int max_iters = 300;
  double time_limit_s = 0.0;  // 0 disables the limit
  bool extended_fallback = true;  // quad-precision resume after a stall
  int fallback_iters = 200;
  bool verbose = false;
};

enum class IpmStatus { Optimal, Stalled, MaxIters, TimeLimit, NumericalError };

const char* ipm_status_name(IpmStatus s);

struct IpmResult {
  Eigen::MatrixXd Z;          // primal matrix (original scaling)
  Eigen::MatrixXd S;          // dual slack
  Eigen::VectorXd y;          // multipliers, zero for presolve-dropped rows
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double rel_gap = 1.0;
  double primal_infeas = 1.0;
  double dual_infeas = 1.0;
  IpmStatus status = IpmStatus::NumericalError;
  int iterations = 0;
  int constraints_kept = 0;
  double solve_time_s = 0.0;
};

IpmResult solve_sdp_ipm(const SymmetricMatrix& cost,
                        const std::vector<SymmetricMatrix>& constraints,
                        const Eigen::VectorXd& b, const IpmOptions& options = {});

}  // namespace certloc
