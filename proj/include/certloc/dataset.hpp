#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "certloc/problem.hpp"

namespace certloc {

// Raw range-bearing log with wheel odometry and ground truth, read from a
// directory holding odometry.txt (t v omega), detections.txt
// (t landmark_id range bearing), groundtruth.txt (t x y heading) and
// landmarks.txt (id x y). Values are whitespace or comma separated;
// '#' starts a comment.
struct RawLog {
  struct OdometrySample {
    double t, v, omega;
  };
  struct Detection {
    double t;
    int landmark_id;
    double range, bearing;
  };
  struct GroundTruthSample {
    double t;
    Pose2 pose;
  };
  std::vector<OdometrySample> odometry;
  std::vector<Detection> detections;
  std::vector<GroundTruthSample> ground_truth;
  std::vector<int> landmark_ids;
  std::vector<Eigen::Vector2d> landmark_positions;

  double t_begin() const;
  double t_end() const;
  const GroundTruthSample& nearest_ground_truth(double t) const;
  int landmark_index(int id) const;  // -1 when unknown
};

RawLog load_raw_log(const std::string& dir);

// Unicycle dead-reckoning of the odometry samples with t in
// [t_start, t_end): each sample contributes exp((omega dt, v dt, 0)).
Pose2 integrate_odometry(const RawLog& log, double t_start, double t_end);

Eigen::Vector2d range_bearing_to_position(double range, double bearing);

struct SubsequenceSpec {
  int n_poses = 3;
  int n_landmarks = 2;
  double dt = 20.0;  // pose spacing in seconds
};

struct NoiseEstimate {
  double kappa = 0.0;            // odometry rotation concentration per window
  double sigma2_r = 0.0;         // odometry translation variance per window
  double sigma2_landmark = 0.0;  // body-frame detection variance per axis
  int odometry_samples = 0;
  int detection_samples = 0;
};

// Moment-based estimates against ground truth: kappa from the mean cosine
// of the window rotation errors (kappa = -1/(2 ln m), capped at 1e6),
// translation variance from per-sample increment errors scaled to the
// window span (whole-window displacements would conflate the
// rotation-noise-induced drift into the translation term), detection
// variance from per-axis second moments.
NoiseEstimate estimate_noise_params(const RawLog& log, double dt);

struct DatasetCase {
  ProblemInstance instance;
  Trajectory ground_truth;
  AssociationAssignment true_assoc;
  double t_start = 0.0;
  // First ground-truth pose of the window. Instance data and ground_truth
  // are expressed in this frame; compose(anchor, pose) maps back to the
  // log frame.
  Pose2 anchor;
};

// Non-overlapping windows of span (n_poses - 1) * dt starting at the log
// begin, each expressed in the frame of its first ground-truth pose.
// Landmarks are the spec.n_landmarks most frequently detected in the
// window; one detection per pose time (nearest in time within dt/2),
// candidates spanning all selected landmarks. Weights come from
// estimate_noise_params; the prior anchors the first pose at ground truth
// with kappa 100 and sigma2 0.01.
std::vector<DatasetCase> extract_subsequences(const RawLog& log, const SubsequenceSpec& spec);

// Synthetic log generator for fixtures and self-tests: a unicycle path with
// smooth speed profiles, noiseless ground truth, odometry perturbed so that
// a window of span_for_noise seconds accumulates rotation variance
// 1/kappa_window and translation variance sigma2_r_window, detections of
// all landmarks within max_range perturbed by sigma2_landmark per axis.
struct SyntheticLogParams {
  double duration = 400.0;
  double sample_dt = 0.5;
  double kappa_window = 100.0;
  double sigma2_r_window = 0.05;
  double sigma2_landmark = 0.01;
  double span_for_noise = 20.0;
  double max_range = 25.0;
  int n_landmarks = 4;
  std::uint64_t seed = 0;
  bool noiseless = false;
};

RawLog generate_synthetic_log(const SyntheticLogParams& params);
void write_raw_log(const RawLog& log, const std::string& dir);

}  // namespace certloc
