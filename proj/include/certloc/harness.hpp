#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "certloc/dataset.hpp"
#include "certloc/ipm.hpp"
#include "certloc/local_solver.hpp"
#include "certloc/sim.hpp"

namespace certloc {

struct RunConfig {
  std::vector<int> n_poses{3};
  std::vector<int> n_landmarks{2};
  std::vector<double> noise_scales{1.0};
  std::vector<double> sigma2_landmarks{0.5};
  int meas_per_pose = 1;
  int trials = 10;
  std::uint64_t base_seed = 0;
  double tight_threshold = 1e6;
  // Trajectory errors are scored against the local solve initialized at
  // ground truth unless this is set, then against ground truth itself.
  bool score_vs_ground_truth = false;
  IpmOptions ipm;
  GnOptions gn;
  int jobs = 1;
  std::string out_dir;
};

// One row per (cell, trial, method). For dataset runs noise_scale carries
// the pose spacing dt and sigma2_landmark is unused.
struct TrialRecord {
  std::string experiment = "simulation";
  int n_poses = 0;
  int n_landmarks = 0;
  double noise_scale = 0.0;
  double sigma2_landmark = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string method;  // sdp | maxmix-dr | maxmix-gt
  double cost = 0.0;                 // objective of the recovered estimate
  double relaxation_objective = 0.0; // SDP rows: certified lower bound
  double ate = 0.0;      // mean position error norm vs the scoring reference
  double ate_rms = 0.0;  // root mean square of the same error norms
  int assoc_correct = 0;
  int tight = -1;        // SDP rows only
  double eig_ratio = 0.0;
  int so2_feasible = -1;
  int lower_bound_ok = -1;  // SDP rows: objective <= maxmix-gt cost + 1e-6
  std::string status = "ok";
  int iterations = 0;
  double wall_time_s = 0.0;
};

// Deterministic per-trial seed: base + cell_index * 1000003 + trial.
std::uint64_t trial_seed(std::uint64_t base, int cell_index, int trial);

// Mean Euclidean position error between aligned-index trajectories.
double ate(const Trajectory& estimate, const Trajectory& reference);

// Root mean square of the same per-pose position error norms.
double ate_rms(const Trajectory& estimate, const Trajectory& reference);

bool associations_correct(const AssociationAssignment& estimate,
                          const AssociationAssignment& truth);

// Runs SDP + extraction, max-mixture from dead reckoning and max-mixture
// from ground truth on one scenario; appends three records.
void run_methods_on_case(const ProblemInstance& instance, const Trajectory& ground_truth,
                         const AssociationAssignment& true_assoc, const RunConfig& config,
                         TrialRecord base, std::vector<TrialRecord>& out);

// Full Monte Carlo grid over the config lists; trials execute in a bounded
// work pool, record order is deterministic and independent of scheduling.
std::vector<TrialRecord> run_simulation_experiment(const RunConfig& config);

// Dataset counterpart over extracted subsequences of a raw log.
std::vector<TrialRecord> run_dataset_experiment(const RawLog& log,
                                                const std::vector<SubsequenceSpec>& specs,
                                                const RunConfig& config);

struct RunSummary {
  int records = 0;
  int solver_errors = 0;
  int lower_bound_violations = 0;
  bool ok() const { return solver_errors == 0 && lower_bound_violations == 0; }
};

// Writes raw.csv, one aggregate CSV per statistic (tight fraction,
// association accuracy, median ATE, median wall time) and manifest.json.
RunSummary emit_report(const std::vector<TrialRecord>& records, const RunConfig& config,
                       const std::string& out_dir);

std::string records_to_csv(const std::vector<TrialRecord>& records);

}  // namespace certloc
