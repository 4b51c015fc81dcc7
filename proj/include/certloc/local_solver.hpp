#pragma once

#include "certloc/problem.hpp"

#include <Eigen/Core>

namespace certloc {

struct GnOptions {
  int max_iters = 100;
  double step_tol = 1e-10;
  double cost_tol = 1e-12;
  double damping_init = 0.0;   // Levenberg damping added when a step fails
  double damping_max = 1e10;
  int max_inner_retries = 12;
};

struct LocalResult {
  Trajectory trajectory;
  AssociationAssignment associations;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Per-measurement argmin-residual association at the given trajectory.
AssociationAssignment recover_associations(const ProblemInstance& instance,
                                           const Trajectory& traj);

// Max-mixture objective: evaluate_cost at the argmin associations.
double max_mixture_cost(const ProblemInstance& instance, const Trajectory& traj);

// Right-perturbation retraction, delta packed per pose as
// (dphi, drho_x, drho_y): C <- C exp(dphi), r <- r + C drho.
Trajectory retract(const Trajectory& traj, const Eigen::VectorXd& delta);

// Stacked weighted residuals and the analytic Jacobian at a fixed
// association, in the retraction coordinates above. Rotation terms use the
// scaled chordal form sqrt(2 kappa) (C e1 - C_meas e1).
void residuals_and_jacobian(const ProblemInstance& instance, const Trajectory& traj,
                            const AssociationAssignment& assign, Eigen::VectorXd* residuals,
                            Eigen::MatrixXd* jacobian);

// Gauss-Newton with Levenberg fallback at a fixed association.
LocalResult gauss_newton_fixed(const ProblemInstance& instance, const Trajectory& init,
                               const AssociationAssignment& assign, const GnOptions& options = {});

// Max-mixture Gauss-Newton: re-selects associations before every
// linearization, so each accepted step decreases the max-mixture cost.
LocalResult gauss_newton(const ProblemInstance& instance, const Trajectory& init,
                         const GnOptions& options = {});

// Brute-force enumeration over every admissible assignment, solving the
// fixed-association problem for each branch and keeping the minimum.
// Refuses instances with more than ~2^20 branches.
LocalResult enumerate_oracle(const ProblemInstance& instance, const Trajectory& init,
                             const GnOptions& options = {});

}  // namespace certloc
