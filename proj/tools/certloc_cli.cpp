#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "certloc/constraints.hpp"
#include "certloc/dataset.hpp"
#include "certloc/harness.hpp"
#include "certloc/sdp.hpp"
#include "certloc/sim.hpp"

namespace {

// JSON config reader for CLI11. Top-level keys map to global options and
// objects keyed by a subcommand name hold that subcommand's options.
// Command-line flags take precedence over config values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    input >> j;
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static void walk(const nlohmann::json& j, std::vector<std::string> parents,
                   std::vector<CLI::ConfigItem>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const nlohmann::json& v = it.value();
      if (v.is_object()) {
        auto next = parents;
        next.push_back(it.key());
        walk(v, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (v.is_array())
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      else
        item.inputs.push_back(scalar(v));
      out.push_back(std::move(item));
    }
  }

  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

void add_solver_options(CLI::App* cmd, certloc::RunConfig& cfg) {
  cmd->add_option("--threshold", cfg.tight_threshold,
                  "eigenvalue ratio above which the relaxation counts as tight");
  cmd->add_option("--ipm-tol-gap", cfg.ipm.tol_gap, "interior point relative gap tolerance");
  cmd->add_option("--ipm-tol-feas", cfg.ipm.tol_feas, "interior point feasibility tolerance");
  cmd->add_option("--ipm-max-iters", cfg.ipm.max_iters);
  cmd->add_option("--gn-max-iters", cfg.gn.max_iters);
  cmd->add_option("--jobs", cfg.jobs, "parallel trials");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

nlohmann::json trajectory_json(const certloc::Trajectory& traj) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& pose : traj)
    arr.push_back({pose.rot.c, pose.rot.s, pose.pos.x(), pose.pos.y()});
  return arr;
}

int run_simulate(const certloc::RunConfig& cfg) {
  const auto records = certloc::run_simulation_experiment(cfg);
  const auto summary = certloc::emit_report(records, cfg, cfg.out_dir);
  std::cout << "records " << summary.records << "\n"
            << "solver_errors " << summary.solver_errors << "\n"
            << "lower_bound_violations " << summary.lower_bound_violations << "\n"
            << "report " << cfg.out_dir << "\n";
  return summary.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar landmark localization with unknown data association: "
               "certifiably optimal relaxation, local baseline, experiment harness"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file holding option values; flags override");

  int exit_code = 0;

  // simulate
  certloc::RunConfig sim_cfg;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo grid over simulated scenarios");
  sim->add_option("--n-poses", sim_cfg.n_poses, "grid values for trajectory length");
  sim->add_option("--n-landmarks", sim_cfg.n_landmarks, "grid values for landmark count");
  sim->add_option("--noise-scales", sim_cfg.noise_scales, "grid values for the noise scale");
  sim->add_option("--sigma2-landmarks", sim_cfg.sigma2_landmarks,
                  "grid values for landmark measurement variance");
  sim->add_option("--meas-per-pose", sim_cfg.meas_per_pose);
  sim->add_option("--trials", sim_cfg.trials, "Monte Carlo trials per grid cell");
  sim->add_option("--seed", sim_cfg.base_seed);
  sim->add_flag("--score-vs-ground-truth", sim_cfg.score_vs_ground_truth,
                "score trajectory errors against ground truth instead of the "
                "local solve initialized there");
  add_solver_options(sim, sim_cfg);
  sim->add_option("--out", sim_cfg.out_dir, "report directory")->required();
  sim->callback([&]() { exit_code = run_simulate(sim_cfg); });

  // dataset
  certloc::RunConfig ds_cfg;
  std::string log_dir;
  bool generate = false;
  certloc::SyntheticLogParams gen;
  std::vector<int> win_poses{3};
  int win_landmarks = 2;
  std::vector<double> win_dts{20.0};
  auto* ds = app.add_subcommand(
      "dataset", "Run the methods over pose windows extracted from a raw log directory");
  ds->add_option("--log-dir", log_dir, "directory with odometry/detections/groundtruth/landmarks")
      ->required();
  ds->add_flag("--generate", generate, "write a synthetic raw log into --log-dir first");
  ds->add_option("--duration", gen.duration);
  ds->add_option("--sample-dt", gen.sample_dt);
  ds->add_option("--gen-kappa", gen.kappa_window, "rotation concentration per extraction window");
  ds->add_option("--gen-sigma2-r", gen.sigma2_r_window,
                 "translation variance per axis per extraction window");
  ds->add_option("--gen-sigma2-landmark", gen.sigma2_landmark);
  ds->add_option("--gen-n-landmarks", gen.n_landmarks);
  ds->add_option("--max-range", gen.max_range);
  ds->add_option("--gen-seed", gen.seed);
  ds->add_flag("--noiseless", gen.noiseless);
  ds->add_option("--win-poses", win_poses, "poses per extracted window (grid)");
  ds->add_option("--win-landmarks", win_landmarks, "landmarks kept per window");
  ds->add_option("--dt", win_dts, "pose spacing within a window, seconds (grid)");
  ds->add_option("--seed", ds_cfg.base_seed);
  ds->add_flag("--score-vs-ground-truth", ds_cfg.score_vs_ground_truth);
  add_solver_options(ds, ds_cfg);
  ds->add_option("--out", ds_cfg.out_dir, "report directory; omit to only generate");
  ds->callback([&]() {
    if (generate) {
      gen.span_for_noise = win_dts.front() * (win_poses.front() - 1);
      const certloc::RawLog log = certloc::generate_synthetic_log(gen);
      certloc::write_raw_log(log, log_dir);
      std::cout << "synthetic log written to " << log_dir << "\n";
    }
    if (ds_cfg.out_dir.empty()) {
      if (!generate) throw CLI::ValidationError("dataset", "provide --out or --generate");
      return;
    }
    const certloc::RawLog log = certloc::load_raw_log(log_dir);
    std::vector<certloc::SubsequenceSpec> specs;
    for (int np : win_poses)
      for (double dt : win_dts) {
        certloc::SubsequenceSpec spec;
        spec.n_poses = np;
        spec.n_landmarks = win_landmarks;
        spec.dt = dt;
        specs.push_back(spec);
      }
    const auto records = certloc::run_dataset_experiment(log, specs, ds_cfg);
    const auto summary = certloc::emit_report(records, ds_cfg, ds_cfg.out_dir);
    std::cout << "records " << summary.records << "\n"
              << "solver_errors " << summary.solver_errors << "\n"
              << "lower_bound_violations " << summary.lower_bound_violations << "\n"
              << "report " << ds_cfg.out_dir << "\n";
    if (!summary.ok()) exit_code = 1;
  });

  // solve-one
  std::string inst_path, export_path, dump_cost_path, dump_constraints_path, save_path;
  bool synthetic = false, run_local = false;
  certloc::SimParams sp;
  certloc::IpmOptions one_ipm;
  certloc::GnOptions one_gn;
  double one_threshold = 1e6;
  auto* one = app.add_subcommand("solve-one",
                                 "Solve a single instance and print the certificate as JSON");
  one->add_option("--instance", inst_path, "instance JSON file");
  one->add_flag("--synthetic", synthetic, "generate the instance instead of loading one");
  one->add_option("--n-poses", sp.n_poses);
  one->add_option("--n-landmarks", sp.n_landmarks);
  one->add_option("--meas-per-pose", sp.meas_per_pose);
  one->add_option("--noise-scale", sp.noise_scale);
  one->add_option("--sigma2-landmark", sp.sigma2_landmark);
  one->add_option("--seed", sp.seed);
  one->add_option("--threshold", one_threshold);
  one->add_option("--ipm-tol-gap", one_ipm.tol_gap);
  one->add_option("--ipm-tol-feas", one_ipm.tol_feas);
  one->add_option("--ipm-max-iters", one_ipm.max_iters);
  one->add_flag("--verbose", one_ipm.verbose, "per-iteration solver trace");
  one->add_flag("--local", run_local, "also run the local baseline from dead reckoning");
  one->add_option("--save-instance", save_path, "write the solved instance as JSON");
  one->add_option("--export-sdp", export_path, "write the assembled relaxation as sparse text");
  one->add_option("--dump-cost", dump_cost_path, "write cost matrix coordinate triplets");
  one->add_option("--dump-constraints", dump_constraints_path,
                  "write constraint coordinate triplets");
  one->callback([&]() {
    certloc::ProblemInstance inst;
    certloc::Trajectory gt;
    certloc::AssociationAssignment true_assoc;
    bool have_gt = false;
    if (synthetic) {
      certloc::Scenario sc = certloc::generate_scenario(sp);
      inst = std::move(sc.instance);
      gt = std::move(sc.ground_truth);
      true_assoc = std::move(sc.true_assoc);
      have_gt = true;
    } else if (!inst_path.empty()) {
      inst = certloc::load_instance(inst_path);
    } else {
      throw CLI::ValidationError("solve-one", "provide --instance or --synthetic");
    }
    if (!save_path.empty()) certloc::save_instance(inst, save_path);

    const certloc::SdpProblem problem = certloc::build_sdp(inst);
    if (!dump_cost_path.empty())
      write_text(dump_cost_path, certloc::dump_coordinate_text(problem.cost, problem.map));
    if (!dump_constraints_path.empty())
      write_text(dump_constraints_path,
                 certloc::dump_constraints_text(problem.constraints, problem.map));
    if (!export_path.empty()) certloc::export_sdp_text(problem, export_path);

    nlohmann::json out;
    out["n_poses"] = inst.n_poses;
    out["n_landmarks"] = static_cast<int>(inst.landmarks.size());
    out["n_measurements"] = static_cast<int>(inst.measurements.size());
    out["lifted_dim"] = problem.map.size();
    out["n_constraints"] = static_cast<int>(problem.constraints.size());
    try {
      const certloc::SdpSolveResult sol = certloc::solve_sdp(problem, one_ipm);
      const certloc::ExtractedSolution ext =
          certloc::extract_solution(sol, problem, one_threshold);
      const double cost = certloc::evaluate_cost(inst, ext.trajectory, ext.associations);
      out["status"] = certloc::ipm_status_name(sol.status);
      out["iterations"] = sol.iterations;
      out["relaxation_objective"] = sol.objective;
      out["dual_objective"] = sol.dual_objective;
      out["rel_gap"] = sol.rel_gap;
      out["primal_infeas"] = sol.primal_infeas;
      out["dual_infeas"] = sol.dual_infeas;
      out["constraints_kept"] = sol.constraints_kept;
      out["solve_time_s"] = sol.solve_time_s;
      out["tight"] = ext.certificate.tight;
      out["eig_ratio"] = ext.certificate.eig_ratio;
      out["so2_feasible"] = ext.certificate.so2_feasible;
      out["extracted_cost"] = cost;
      out["trajectory"] = trajectory_json(ext.trajectory);
      out["associations"] = ext.associations.landmark_for_meas;
      if (have_gt) {
        out["ate_vs_ground_truth"] = certloc::ate(ext.trajectory, gt);
        out["associations_correct"] =
            certloc::associations_correct(ext.associations, true_assoc);
      }
      if (sol.status != certloc::IpmStatus::Optimal &&
          sol.status != certloc::IpmStatus::Stalled)
        exit_code = 1;
    } catch (const std::exception& e) {
      out["status"] = std::string("error: ") + e.what();
      exit_code = 1;
    }
    if (run_local) {
      const certloc::LocalResult r =
          certloc::gauss_newton(inst, certloc::dead_reckon(inst), one_gn);
      nlohmann::json local;
      local["cost"] = r.cost;
      local["iterations"] = r.iterations;
      local["converged"] = r.converged;
      local["trajectory"] = trajectory_json(r.trajectory);
      local["associations"] = r.associations.landmark_for_meas;
      if (have_gt) {
        local["ate_vs_ground_truth"] = certloc::ate(r.trajectory, gt);
        local["associations_correct"] = certloc::associations_correct(r.associations, true_assoc);
      }
      out["local"] = local;
    }
    std::cout << out.dump(2) << "\n";
  });

  // verify-constraints
  std::string vc_inst_path;
  bool vc_synthetic = false, vc_sum_cross = false;
  certloc::SimParams vc_sp;
  int vc_samples = 100;
  double vc_tol = 1e-9;
  std::uint64_t vc_seed = 0;
  auto* vc = app.add_subcommand(
      "verify-constraints", "Check constraints annihilate random feasible lifted points");
  vc->add_option("--instance", vc_inst_path, "instance JSON file");
  vc->add_flag("--synthetic", vc_synthetic, "generate the instance instead of loading one");
  vc->add_option("--n-poses", vc_sp.n_poses);
  vc->add_option("--n-landmarks", vc_sp.n_landmarks);
  vc->add_option("--meas-per-pose", vc_sp.meas_per_pose);
  vc->add_option("--seed", vc_seed, "seed for the sampled feasible points");
  vc->add_option("--samples", vc_samples);
  vc->add_option("--tol", vc_tol);
  vc->add_flag("--include-sum-cross-products", vc_sum_cross,
               "also generate the per-timestep summed cross-product family");
  vc->callback([&]() {
    certloc::ProblemInstance inst;
    if (vc_synthetic) {
      vc_sp.seed = vc_seed;
      inst = certloc::generate_scenario(vc_sp).instance;
    } else if (!vc_inst_path.empty()) {
      inst = certloc::load_instance(vc_inst_path);
    } else {
      throw CLI::ValidationError("verify-constraints", "provide --instance or --synthetic");
    }
    const certloc::ColumnIndexMap map(inst);
    certloc::ConstraintOptions copts;
    copts.include_sum_cross_products = vc_sum_cross;
    const auto constraints = certloc::build_constraints(map, copts);
    const auto report = certloc::verify_nullspace(constraints, map, vc_samples, vc_seed);
    std::cout << "lifted_dim " << map.size() << "\nconstraints " << report.constraint_count
              << "\nsamples " << report.samples << "\n";
    for (const auto& fam : report.families)
      std::cout << certloc::family_name(fam.family) << " count " << fam.count
                << " max_violation " << fam.max_violation << "\n";
    std::cout << "max_violation " << report.max_violation << "\ntolerance " << vc_tol << "\n"
              << (report.pass(vc_tol) ? "PASS" : "FAIL") << "\n";
    if (!report.pass(vc_tol)) exit_code = 1;
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
