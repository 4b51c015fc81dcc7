#include "certloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "certloc/sdp.hpp"

namespace certloc {

std::uint64_t trial_seed(std::uint64_t base, int cell_index, int trial) {
  return base + static_cast<std::uint64_t>(cell_index) * 1000003ULL +
         static_cast<std::uint64_t>(trial);
}

double ate(const Trajectory& estimate, const Trajectory& reference) {
  if (estimate.size() != reference.size() || estimate.empty())
    throw std::invalid_argument("ate: trajectory size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i)
    acc += (estimate[i].pos - reference[i].pos).norm();
  return acc / static_cast<double>(estimate.size());
}

double ate_rms(const Trajectory& estimate, const Trajectory& reference) {
  if (estimate.size() != reference.size() || estimate.empty())
    throw std::invalid_argument("ate_rms: trajectory size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i)
    acc += (estimate[i].pos - reference[i].pos).squaredNorm();
  return std::sqrt(acc / static_cast<double>(estimate.size()));
}

bool associations_correct(const AssociationAssignment& estimate,
                          const AssociationAssignment& truth) {
  return estimate.landmark_for_meas == truth.landmark_for_meas;
}

namespace {

double now_cost(const ProblemInstance& instance, const Trajectory& traj,
                const AssociationAssignment& assign) {
  return evaluate_cost(instance, traj, assign);
}

}  // namespace

void run_methods_on_case(const ProblemInstance& instance, const Trajectory& ground_truth,
                         const AssociationAssignment& true_assoc, const RunConfig& config,
                         TrialRecord base, std::vector<TrialRecord>& out) {
  using Clock = std::chrono::steady_clock;

  TrialRecord gt_rec = base;
  gt_rec.method = "maxmix-gt";
  Trajectory reference = ground_truth;
  {
    const auto t0 = Clock::now();
    const LocalResult r = gauss_newton(instance, ground_truth, config.gn);
    gt_rec.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!config.score_vs_ground_truth) reference = r.trajectory;
    gt_rec.cost = r.cost;
    gt_rec.ate = ate(r.trajectory, reference);
    gt_rec.ate_rms = ate_rms(r.trajectory, reference);
    gt_rec.assoc_correct = associations_correct(r.associations, true_assoc) ? 1 : 0;
    gt_rec.iterations = r.iterations;
    gt_rec.status = r.converged ? "ok" : "iter-limit";
  }

  TrialRecord dr_rec = base;
  dr_rec.method = "maxmix-dr";
  {
    const auto t0 = Clock::now();
    const LocalResult r = gauss_newton(instance, dead_reckon(instance), config.gn);
    dr_rec.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
    dr_rec.cost = r.cost;
    dr_rec.ate = ate(r.trajectory, reference);
    dr_rec.ate_rms = ate_rms(r.trajectory, reference);
    dr_rec.assoc_correct = associations_correct(r.associations, true_assoc) ? 1 : 0;
    dr_rec.iterations = r.iterations;
    dr_rec.status = r.converged ? "ok" : "iter-limit";
  }

  TrialRecord sdp_rec = base;
  sdp_rec.method = "sdp";
  {
    const auto t0 = Clock::now();
    try {
      const SdpProblem problem = build_sdp(instance);
      const SdpSolveResult sol = solve_sdp(problem, config.ipm);
      const ExtractedSolution ext = extract_solution(sol, problem, config.tight_threshold);
      sdp_rec.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
      sdp_rec.relaxation_objective = sol.objective;
      sdp_rec.cost = now_cost(instance, ext.trajectory, ext.associations);
      sdp_rec.ate = ate(ext.trajectory, reference);
      sdp_rec.ate_rms = ate_rms(ext.trajectory, reference);
      sdp_rec.assoc_correct = associations_correct(ext.associations, true_assoc) ? 1 : 0;
      sdp_rec.tight = ext.certificate.tight ? 1 : 0;
      sdp_rec.eig_ratio = ext.certificate.eig_ratio;
      sdp_rec.so2_feasible = ext.certificate.so2_feasible ? 1 : 0;
      // The dual objective is the rigorous certified bound: dual feasibility
      // converges orders tighter than the primal-dual gap.
      sdp_rec.lower_bound_ok = sol.dual_objective <= gt_rec.cost + 1e-6 ? 1 : 0;
      sdp_rec.iterations = sol.iterations;
      sdp_rec.status = ipm_status_name(sol.status);
    } catch (const std::exception& e) {
      sdp_rec.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
      sdp_rec.status = std::string("error: ") + e.what();
      sdp_rec.tight = 0;
      sdp_rec.lower_bound_ok = 0;
    }
  }

  out.push_back(std::move(sdp_rec));
  out.push_back(std::move(dr_rec));
  out.push_back(std::move(gt_rec));
}

namespace {

void run_pool(int jobs, int n_tasks, const std::function<void(int)>& task) {
  if (jobs <= 1) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int n_workers = std::min(jobs, n_tasks);
  for (int w = 0; w < n_workers; ++w)
    workers.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) task(i);
    });
  for (auto& w : workers) w.join();
}

}  // namespace

std::vector<TrialRecord> run_simulation_experiment(const RunConfig& config) {
  struct Task {
    SimParams params;
    TrialRecord base;
  };
  std::vector<Task> tasks;
  int cell_index = 0;
  for (int np : config.n_poses)
    for (int nl : config.n_landmarks)
      for (double m : config.noise_scales)
        for (double s2 : config.sigma2_landmarks) {
          for (int trial = 0; trial < config.trials; ++trial) {
            Task t;
            t.params.n_poses = np;
            t.params.n_landmarks = nl;
            t.params.meas_per_pose = config.meas_per_pose;
            t.params.noise_scale = m;
            t.params.sigma2_landmark = s2;
            t.params.seed = trial_seed(config.base_seed, cell_index, trial);
            t.base.experiment = "simulation";
            t.base.n_poses = np;
            t.base.n_landmarks = nl;
            t.base.noise_scale = m;
            t.base.sigma2_landmark = s2;
            t.base.trial = trial;
            t.base.seed = t.params.seed;
            tasks.push_back(std::move(t));
          }
          ++cell_index;
        }

  std::vector<std::vector<TrialRecord>> slots(tasks.size());
  run_pool(config.jobs, static_cast<int>(tasks.size()), [&](int i) {
    const Scenario sc = generate_scenario(tasks[i].params);
    run_methods_on_case(sc.instance, sc.ground_truth, sc.true_assoc, config, tasks[i].base,
                        slots[i]);
  });

  std::vector<TrialRecord> records;
  for (auto& slot : slots)
    for (auto& r : slot) records.push_back(std::move(r));
  return records;
}

std::vector<TrialRecord> run_dataset_experiment(const RawLog& log,
                                                const std::vector<SubsequenceSpec>& specs,
                                                const RunConfig& config) {
  struct Task {
    DatasetCase c;
    TrialRecord base;
  };
  std::vector<Task> tasks;
  int cell_index = 0;
  for (const auto& spec : specs) {
    const std::vector<DatasetCase> cases = extract_subsequences(log, spec);
    for (size_t k = 0; k < cases.size(); ++k) {
      Task t;
      t.c = cases[k];
      t.base.experiment = "dataset";
      t.base.n_poses = spec.n_poses;
      t.base.n_landmarks = spec.n_landmarks;
      t.base.noise_scale = spec.dt;
      t.base.sigma2_landmark = 0.0;
      t.base.trial = static_cast<int>(k);
      t.base.seed = trial_seed(config.base_seed, cell_index, static_cast<int>(k));
      tasks.push_back(std::move(t));
    }
    ++cell_index;
  }

  std::vector<std::vector<TrialRecord>> slots(tasks.size());
  run_pool(config.jobs, static_cast<int>(tasks.size()), [&](int i) {
    run_methods_on_case(tasks[i].c.instance, tasks[i].c.ground_truth, tasks[i].c.true_assoc,
                        config, tasks[i].base, slots[i]);
  });

  std::vector<TrialRecord> records;
  for (auto& slot : slots)
    for (auto& r : slot) records.push_back(std::move(r));
  return records;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct CellKey {
  std::string experiment;
  int n_poses, n_landmarks;
  double noise_scale, sigma2_landmark;
  bool operator<(const CellKey& o) const {
    return std::tie(experiment, n_poses, n_landmarks, noise_scale, sigma2_landmark) <
           std::tie(o.experiment, o.n_poses, o.n_landmarks, o.noise_scale, o.sigma2_landmark);
  }
  std::string csv() const {
    std::ostringstream os;
    os << experiment << "," << n_poses << "," << n_landmarks << "," << fmt(noise_scale) << ","
       << fmt(sigma2_landmark);
    return os.str();
  }
};

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string records_to_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << "experiment,n_poses,n_landmarks,noise_scale,sigma2_landmark,trial,seed,method,cost,"
        "relaxation_objective,ate,ate_rms,assoc_correct,tight,eig_ratio,so2_feasible,"
        "lower_bound_ok,status,iterations,wall_time_s\n";
  for (const auto& r : records) {
    std::string status = r.status;
    for (auto& ch : status)
      if (ch == ',') ch = ';';
    os << r.experiment << "," << r.n_poses << "," << r.n_landmarks << "," << fmt(r.noise_scale)
       << "," << fmt(r.sigma2_landmark) << "," << r.trial << "," << r.seed << "," << r.method
       << "," << fmt(r.cost) << "," << fmt(r.relaxation_objective) << "," << fmt(r.ate) << ","
       << fmt(r.ate_rms) << "," << r.assoc_correct << "," << r.tight << "," << fmt(r.eig_ratio)
       << "," << r.so2_feasible << "," << r.lower_bound_ok << "," << status << ","
       << r.iterations << "," << fmt(r.wall_time_s) << "\n";
  }
  return os.str();
}

RunSummary emit_report(const std::vector<TrialRecord>& records, const RunConfig& config,
                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ofstream(out_dir + "/raw.csv") << records_to_csv(records);

  std::map<CellKey, std::vector<const TrialRecord*>> cells;
  for (const auto& r : records)
    cells[{r.experiment, r.n_poses, r.n_landmarks, r.noise_scale, r.sigma2_landmark}].push_back(
        &r);

  const std::string head = "experiment,n_poses,n_landmarks,noise_scale,sigma2_landmark";
  std::ofstream tight_out(out_dir + "/tight_fraction.csv");
  tight_out << head << ",tight_fraction,n\n";
  std::ofstream da_out(out_dir + "/da_accuracy.csv");
  da_out << head << ",sdp,sdp_tight_only,maxmix_dr,maxmix_gt\n";
  std::ofstream ate_out(out_dir + "/ate_median.csv");
  ate_out << head << ",sdp,maxmix_dr,maxmix_gt\n";
  std::ofstream rms_out(out_dir + "/ate_rms_median.csv");
  rms_out << head << ",sdp,maxmix_dr,maxmix_gt\n";
  std::ofstream time_out(out_dir + "/time_median.csv");
  time_out << head << ",sdp,maxmix_dr,maxmix_gt\n";

  for (const auto& [key, rows] : cells) {
    int n_sdp = 0, n_tight = 0;
    std::map<std::string, std::pair<int, int>> da;  // method -> (correct, total)
    std::pair<int, int> da_tight{0, 0};
    std::map<std::string, std::vector<double>> ates, rmses, times;
    for (const auto* r : rows) {
      da[r->method].first += r->assoc_correct;
      da[r->method].second += 1;
      ates[r->method].push_back(r->ate);
      rmses[r->method].push_back(r->ate_rms);
      times[r->method].push_back(r->wall_time_s);
      if (r->method == "sdp") {
        ++n_sdp;
        if (r->tight == 1) {
          ++n_tight;
          da_tight.first += r->assoc_correct;
          da_tight.second += 1;
        }
      }
    }
    const auto frac = [](const std::pair<int, int>& p) {
      return p.second == 0 ? std::nan("") : static_cast<double>(p.first) / p.second;
    };
    tight_out << key.csv() << "," << fmt(n_sdp ? static_cast<double>(n_tight) / n_sdp : 0.0)
              << "," << n_sdp << "\n";
    da_out << key.csv() << "," << fmt(frac(da["sdp"])) << "," << fmt(frac(da_tight)) << ","
           << fmt(frac(da["maxmix-dr"])) << "," << fmt(frac(da["maxmix-gt"])) << "\n";
    ate_out << key.csv() << "," << fmt(median(ates["sdp"])) << "," << fmt(median(ates["maxmix-dr"]))
            << "," << fmt(median(ates["maxmix-gt"])) << "\n";
    rms_out << key.csv() << "," << fmt(median(rmses["sdp"])) << ","
            << fmt(median(rmses["maxmix-dr"])) << "," << fmt(median(rmses["maxmix-gt"])) << "\n";
    time_out << key.csv() << "," << fmt(median(times["sdp"])) << ","
             << fmt(median(times["maxmix-dr"])) << "," << fmt(median(times["maxmix-gt"])) << "\n";
  }

  RunSummary summary;
  summary.records = static_cast<int>(records.size());
  for (const auto& r : records) {
    if (r.status.rfind("error", 0) == 0 || r.status == "numerical-error") ++summary.solver_errors;
    if (r.method == "sdp" && r.lower_bound_ok == 0) ++summary.lower_bound_violations;
  }

  nlohmann::json manifest;
  manifest["experiment_records"] = summary.records;
  manifest["solver_errors"] = summary.solver_errors;
  manifest["lower_bound_violations"] = summary.lower_bound_violations;
  manifest["base_seed"] = config.base_seed;
  manifest["seed_formula"] = "base_seed + cell_index * 1000003 + trial";
  manifest["trials_per_cell"] = config.trials;
  manifest["meas_per_pose"] = config.meas_per_pose;
  manifest["n_poses"] = config.n_poses;
  manifest["n_landmarks"] = config.n_landmarks;
  manifest["noise_scales"] = config.noise_scales;
  manifest["sigma2_landmarks"] = config.sigma2_landmarks;
  manifest["tight_threshold"] = config.tight_threshold;
  manifest["score_vs_ground_truth"] = config.score_vs_ground_truth;
  manifest["ipm_tol_gap"] = config.ipm.tol_gap;
  manifest["ipm_tol_feas"] = config.ipm.tol_feas;
  manifest["ipm_max_iters"] = config.ipm.max_iters;
  manifest["jobs"] = config.jobs;
  std::ofstream(out_dir + "/manifest.json") << manifest.dump(2) << "\n";
  return summary;
}

}  // namespace certloc
