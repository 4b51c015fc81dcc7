#pragma once

#include <cstdint>

#include "certloc/problem.hpp"

namespace certloc {

// Monte Carlo scenario generator. Pose increments are sampled with
// uniform rotation and unit-Gaussian translation, landmarks uniformly on
// [landmark_low, landmark_high]^2. Odometry noise is drawn with variances
// (base_inv_kappa, base_sigma2_r) times noise_scale; landmark measurement
// noise uses sigma2_landmark directly, gated off when noise_scale == 0.
// The first-pose prior is the ground truth exactly, weighted by
// prior_kappa / prior_sigma2. Recorded measurement weights use the drawing
// variances floored at 1e-8, so noise_scale == 0 gives zero residuals at
// the ground truth while every weight stays finite.
struct SimParams {
  int n_poses = 3;
  int n_landmarks = 2;
  int meas_per_pose = 1;
  double noise_scale = 1.0;
  double sigma2_landmark = 0.5;
  double base_inv_kappa = 0.01;
  double base_sigma2_r = 0.745;
  double prior_kappa = 100.0;
  double prior_sigma2 = 0.01;
  double landmark_low = 0.0;
  double landmark_high = 10.0;
  std::uint64_t seed = 0;
};

struct Scenario {
  ProblemInstance instance;
  Trajectory ground_truth;
  AssociationAssignment true_assoc;
};

Scenario generate_scenario(const SimParams& params);

}  // namespace certloc
