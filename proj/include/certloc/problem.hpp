#pragma once

#include <string>
#include <vector>

#include "certloc/geometry.hpp"

namespace certloc {

struct LandmarkMap {
  std::vector<Eigen::Vector2d> positions;

  int size() const { return static_cast<int>(positions.size()); }
};

// Unary prior on the first pose. kappa weighs the chordal rotation term,
// 1/sigma2 the translation term.
struct PriorMeasurement {
  Rotation2 rot;
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  double kappa = 1.0;
  double sigma2 = 1.0;
};

// Relative pose between consecutive timesteps, expressed in the frame of
// `from_index`. Indices are 0-based internally.
struct RelPoseMeasurement {
  int from_index = 0;
  int to_index = 1;
  Rotation2 delta_rot;
  Eigen::Vector2d delta_pos = Eigen::Vector2d::Zero();
  double kappa = 1.0;
  double sigma2 = 1.0;
};

// Body-frame landmark position measurement with an unknown association.
// `candidates` lists the admissible landmark indices (0-based internally).
struct UdaMeasurement {
  int timestep = 0;
  int k = 0;
  Eigen::Vector2d y = Eigen::Vector2d::Zero();
  double sigma2 = 1.0;
  std::vector<int> candidates;
};

struct ProblemInstance {
  int n_poses = 0;
  LandmarkMap landmarks;
  PriorMeasurement prior;
  std::vector<RelPoseMeasurement> odometry;
  std::vector<UdaMeasurement> measurements;

  // Throws std::invalid_argument on violated structural invariants:
  // consecutive odometry chain, in-range timesteps and candidates, positive
  // weights, normalized rotations, finite values.
  void validate() const;

  int num_thetas() const;
};

// Selected landmark index per measurement, parallel to
// ProblemInstance::measurements. Entries must be members of the
// measurement's candidate set.
struct AssociationAssignment {
  std::vector<int> landmark_for_meas;

  bool operator==(const AssociationAssignment&) const = default;
};

// Integrates prior pose + odometry chain into an N-pose trajectory.
Trajectory dead_reckon(const ProblemInstance& instance);

// Direct weighted least-squares objective:
//   kappa_p |C_0 - C_prior|_F^2 + 1/sigma2_p |r_0 - r_prior|^2
// + sum_odo kappa |C_next - C R|_F^2 + 1/sigma2 |r_next - r - C dr|^2
// + sum_meas 1/sigma2 |(l_j - r_i) - C_i y|^2  with j taken from `assign`.
double evaluate_cost(const ProblemInstance& instance, const Trajectory& traj,
                     const AssociationAssignment& assign);

// JSON (de)serialization. Timesteps, odometry endpoints and landmark
// candidate indices are 1-based on disk, 0-based in memory.
std::string to_json_string(const ProblemInstance& instance, int indent = 2);
ProblemInstance instance_from_json_string(const std::string& text);
void save_instance(const ProblemInstance& instance, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace certloc
