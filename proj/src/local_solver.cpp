#include "certloc/local_solver.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace certloc {

namespace {

// d/dphi of C exp(phi W) at phi = 0 is C W with W = [0 -1; 1 0].
Eigen::Vector2d rot_gen_col0(const Rotation2& rot) { return {-rot.s, rot.c}; }

Eigen::Matrix2d omega_times(const Eigen::Matrix2d& M) {
  Eigen::Matrix2d W;
  W << 0.0, -1.0, 1.0, 0.0;
  return M * W;
}

int residual_dim(const ProblemInstance& instance) {
  return 4 + 4 * static_cast<int>(instance.odometry.size()) +
         2 * static_cast<int>(instance.measurements.size());
}

}  // namespace

AssociationAssignment recover_associations(const ProblemInstance& instance,
                                           const Trajectory& traj) {
  AssociationAssignment assign;
  assign.landmark_for_meas.reserve(instance.measurements.size());
  for (const auto& meas : instance.measurements) {
    const Pose2& p = traj[meas.timestep];
    const Eigen::Vector2d pred = p.pos + p.rot * meas.y;
    int best = meas.candidates.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (int j : meas.candidates) {
      const double d = (instance.landmarks.positions[j] - pred).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    assign.landmark_for_meas.push_back(best);
  }
  return assign;
}

double max_mixture_cost(const ProblemInstance& instance, const Trajectory& traj) {
  return evaluate_cost(instance, traj, recover_associations(instance, traj));
}

Trajectory retract(const Trajectory& traj, const Eigen::VectorXd& delta) {
  if (delta.size() != 3 * static_cast<int>(traj.size()))
    throw std::invalid_argument("retract: delta size mismatch");
  Trajectory out = traj;
  for (size_t i = 0; i < traj.size(); ++i) {
    const double dphi = delta(3 * i);
    const Eigen::Vector2d drho(delta(3 * i + 1), delta(3 * i + 2));
    out[i].rot = (traj[i].rot * Rotation2::from_angle(dphi)).normalized();
    out[i].pos = traj[i].pos + traj[i].rot * drho;
  }
  return out;
}

void residuals_and_jacobian(const ProblemInstance& instance, const Trajectory& traj,
                            const AssociationAssignment& assign, Eigen::VectorXd* residuals,
                            Eigen::MatrixXd* jacobian) {
  const int nr = residual_dim(instance);
  const int nx = 3 * instance.n_poses;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(nr);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nr, nx);
  int row = 0;

  const auto phi_col = [](int i) { return 3 * i; };
  const auto rho_col = [](int i) { return 3 * i + 1; };

  // Prior rotation, chordal: sqrt(2 kappa) (C0 e1 - Cbar e1).
  {
    const double w = std::sqrt(2.0 * instance.prior.kappa);
    const Rotation2& C = traj[0].rot;
    e.segment<2>(row) = w * Eigen::Vector2d(C.c - instance.prior.rot.c, C.s - instance.prior.rot.s);
    J.block<2, 1>(row, phi_col(0)) = w * rot_gen_col0(C);
    row += 2;
  }
  // Prior position.
  {
    const double w = 1.0 / std::sqrt(instance.prior.sigma2);
    e.segment<2>(row) = w * (traj[0].pos - instance.prior.pos);
    J.block<2, 2>(row, rho_col(0)) = w * traj[0].rot.matrix();
    row += 2;
  }
  for (const auto& o : instance.odometry) {
    const Rotation2& Ck = traj[o.from_index].rot;
    const Rotation2& Cn = traj[o.to_index].rot;
    const Eigen::Vector2d rk = traj[o.from_index].pos;
    const Eigen::Vector2d rn = traj[o.to_index].pos;
    {
      const double w = std::sqrt(2.0 * o.kappa);
      const Rotation2 pred = Ck * o.delta_rot;
      e.segment<2>(row) = w * Eigen::Vector2d(Cn.c - pred.c, Cn.s - pred.s);
      J.block<2, 1>(row, phi_col(o.to_index)) = w * rot_gen_col0(Cn);
      // d/dphi_k of C_k exp(phi W) dC e1 = C_k W dC e1.
      const Eigen::Vector2d gen = omega_times(Ck.matrix()) * o.delta_rot.matrix().col(0);
      J.block<2, 1>(row, phi_col(o.from_index)) = -w * gen;
      row += 2;
    }
    {
      const double w = 1.0 / std::sqrt(o.sigma2);
      e.segment<2>(row) = w * (rn - rk - Ck * o.delta_pos);
      J.block<2, 2>(row, rho_col(o.to_index)) = w * Cn.matrix();
      J.block<2, 2>(row, rho_col(o.from_index)) = -w * Ck.matrix();
      J.block<2, 1>(row, phi_col(o.from_index)) = -w * omega_times(Ck.matrix()) * o.delta_pos;
      row += 2;
    }
  }
  for (size_t m = 0; m < instance.measurements.size(); ++m) {
    const auto& meas = instance.measurements[m];
    const int j = assign.landmark_for_meas[m];
    const int i = meas.timestep;
    const double w = 1.0 / std::sqrt(meas.sigma2);
    const Pose2& p = traj[i];
    e.segment<2>(row) =
        w * ((instance.landmarks.positions[j] - p.pos) - p.rot * meas.y);
    J.block<2, 2>(row, rho_col(i)) = -w * p.rot.matrix();
    J.block<2, 1>(row, phi_col(i)) = -w * omega_times(p.rot.matrix()) * meas.y;
    row += 2;
  }

  if (residuals) *residuals = std::move(e);
  if (jacobian) *jacobian = std::move(J);
}

namespace {

LocalResult gauss_newton_impl(const ProblemInstance& instance, const Trajectory& init,
                              const AssociationAssignment* fixed_assign,
                              const GnOptions& opts) {
  LocalResult res;
  res.trajectory = init;
  res.associations =
      fixed_assign ? *fixed_assign : recover_associations(instance, res.trajectory);
  res.cost = evaluate_cost(instance, res.trajectory, res.associations);

  double damping = opts.damping_init;
  Eigen::VectorXd e;
  Eigen::MatrixXd J;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    res.iterations = iter + 1;
    if (!fixed_assign) res.associations = recover_associations(instance, res.trajectory);
    residuals_and_jacobian(instance, res.trajectory, res.associations, &e, &J);
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * e;

    bool accepted = false;
    double local_damping = damping;
    for (int tries = 0; tries < opts.max_inner_retries && !accepted; ++tries) {
      Eigen::MatrixXd Hd = H;
      Hd.diagonal().array() += local_damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
      if (ldlt.info() != Eigen::Success) {
        local_damping = std::max(1e-6, local_damping * 10.0);
        continue;
      }
      const Eigen::VectorXd delta = -ldlt.solve(g);
      if (!delta.allFinite()) {
        local_damping = std::max(1e-6, local_damping * 10.0);
        continue;
      }
      Trajectory cand = retract(res.trajectory, delta);
      AssociationAssignment cand_assign =
          fixed_assign ? *fixed_assign : recover_associations(instance, cand);
      const double cand_cost = evaluate_cost(instance, cand, cand_assign);
      if (cand_cost <= res.cost + 1e-15) {
        const double decrease = res.cost - cand_cost;
        res.trajectory = std::move(cand);
        res.associations = std::move(cand_assign);
        res.cost = cand_cost;
        accepted = true;
        damping = local_damping * 0.25;
        if (delta.lpNorm<Eigen::Infinity>() < opts.step_tol ||
            decrease <= opts.cost_tol * (1.0 + res.cost)) {
          res.converged = true;
          return res;
        }
      } else {
        local_damping = std::max(1e-6, local_damping * 10.0);
        if (local_damping > opts.damping_max) break;
      }
    }
    if (!accepted) {
      res.converged = true;  // no decreasing step exists at this tolerance
      return res;
    }
  }
  return res;
}

}  // namespace

LocalResult gauss_newton_fixed(const ProblemInstance& instance, const Trajectory& init,
                               const AssociationAssignment& assign, const GnOptions& options) {
  return gauss_newton_impl(instance, init, &assign, options);
}

LocalResult gauss_newton(const ProblemInstance& instance, const Trajectory& init,
                         const GnOptions& options) {
  return gauss_newton_impl(instance, init, nullptr, options);
}

LocalResult enumerate_oracle(const ProblemInstance& instance, const Trajectory& init,
                             const GnOptions& options) {
  double log_branches = 0.0;
  for (const auto& m : instance.measurements)
    log_branches += std::log2(static_cast<double>(m.candidates.size()));
  if (log_branches > 20.0)
    throw std::invalid_argument("enumerate_oracle: more than 2^20 assignment branches");

  LocalResult best;
  best.cost = std::numeric_limits<double>::infinity();
  AssociationAssignment assign;
  assign.landmark_for_meas.assign(instance.measurements.size(), 0);

  const int M = static_cast<int>(instance.measurements.size());
  std::vector<int> idx(M, 0);
  while (true) {
    for (int m = 0; m < M; ++m)
      assign.landmark_for_meas[m] = instance.measurements[m].candidates[idx[m]];
    LocalResult branch = gauss_newton_fixed(instance, init, assign, options);
    if (branch.cost < best.cost) best = branch;

    int m = 0;
    while (m < M) {
      if (++idx[m] < static_cast<int>(instance.measurements[m].candidates.size())) break;
      idx[m] = 0;
      ++m;
    }
    if (m == M) break;
  }
  return best;
}

}  // namespace certloc
