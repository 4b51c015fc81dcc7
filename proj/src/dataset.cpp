#include "certloc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace certloc {

namespace {

std::vector<std::vector<double>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

double RawLog::t_begin() const {
  return odometry.empty() ? 0.0 : odometry.front().t;
}

double RawLog::t_end() const {
  return odometry.empty() ? 0.0 : odometry.back().t;
}

const RawLog::GroundTruthSample& RawLog::nearest_ground_truth(double t) const {
  if (ground_truth.empty()) throw std::runtime_error("raw log has no ground truth");
  const auto cmp = [](const GroundTruthSample& g, double tt) { return g.t < tt; };
  auto it = std::lower_bound(ground_truth.begin(), ground_truth.end(), t, cmp);
  if (it == ground_truth.end()) return ground_truth.back();
  if (it != ground_truth.begin() && t - std::prev(it)->t < it->t - t) return *std::prev(it);
  return *it;
}

int RawLog::landmark_index(int id) const {
  for (size_t i = 0; i < landmark_ids.size(); ++i)
    if (landmark_ids[i] == id) return static_cast<int>(i);
  return -1;
}

RawLog load_raw_log(const std::string& dir) {
  RawLog log;
  for (const auto& row : read_table(dir + "/odometry.txt")) {
    if (row.size() < 3) throw std::runtime_error("odometry.txt: expected t v omega");
    log.odometry.push_back({row[0], row[1], row[2]});
  }
  for (const auto& row : read_table(dir + "/detections.txt")) {
    if (row.size() < 4) throw std::runtime_error("detections.txt: expected t id range bearing");
    log.detections.push_back({row[0], static_cast<int>(row[1]), row[2], row[3]});
  }
  for (const auto& row : read_table(dir + "/groundtruth.txt")) {
    if (row.size() < 4) throw std::runtime_error("groundtruth.txt: expected t x y heading");
    Pose2 pose{Rotation2::from_angle(row[3]), {row[1], row[2]}};
    log.ground_truth.push_back({row[0], pose});
  }
  for (const auto& row : read_table(dir + "/landmarks.txt")) {
    if (row.size() < 3) throw std::runtime_error("landmarks.txt: expected id x y");
    log.landmark_ids.push_back(static_cast<int>(row[0]));
    log.landmark_positions.push_back({row[1], row[2]});
  }
  // Stable so same-timestamp rows keep their file order.
  const auto by_t = [](const auto& a, const auto& b) { return a.t < b.t; };
  std::stable_sort(log.odometry.begin(), log.odometry.end(), by_t);
  std::stable_sort(log.detections.begin(), log.detections.end(), by_t);
  std::stable_sort(log.ground_truth.begin(), log.ground_truth.end(), by_t);
  return log;
}

Pose2 integrate_odometry(const RawLog& log, double t_start, double t_end) {
  Pose2 rel = Pose2::identity();
  const auto& odo = log.odometry;
  for (size_t k = 0; k < odo.size(); ++k) {
    const double t = odo[k].t;
    if (t < t_start - 1e-9 || t >= t_end - 1e-9) continue;
    double dt;
    if (k + 1 < odo.size())
      dt = odo[k + 1].t - t;
    else if (k > 0)
      dt = t - odo[k - 1].t;
    else
      dt = 0.0;
    TangentVector2 xi{odo[k].omega * dt, {odo[k].v * dt, 0.0}};
    rel = compose(rel, exp_se2(xi));
  }
  return rel;
}

Eigen::Vector2d range_bearing_to_position(double range, double bearing) {
  return {range * std::cos(bearing), range * std::sin(bearing)};
}

NoiseEstimate estimate_noise_params(const RawLog& log, double dt) {
  NoiseEstimate est;
  // Rotation: window-level mean cosine. SO(2) angle errors add exactly, so
  // whole-window statistics stay unbiased regardless of path curvature.
  double sum_cos = 0.0;
  int n_win = 0;
  const double t0 = log.t_begin(), t1 = log.t_end();
  for (double tw = t0; tw + dt <= t1 + 1e-9; tw += dt) {
    const Pose2 odo = integrate_odometry(log, tw, tw + dt);
    const Pose2 gt =
        between(log.nearest_ground_truth(tw).pose, log.nearest_ground_truth(tw + dt).pose);
    const Rotation2 rot_err = odo.rot.inverse() * gt.rot;
    sum_cos += rot_err.c;
    ++n_win;
  }
  if (n_win > 0) {
    const double mean_cos = sum_cos / n_win;
    est.kappa = (mean_cos >= 1.0 || mean_cos <= 0.0) ? 1e6
                                                     : std::min(1e6, -0.5 / std::log(mean_cos));
  }
  est.odometry_samples = n_win;

  // Translation: per-sample increment errors scaled up to the window span.
  // Over a single sample the rotation-noise coupling is negligible; over a
  // whole window it would swamp the translation noise.
  double sum_sq = 0.0, span = 0.0;
  for (size_t k = 0; k + 1 < log.odometry.size(); ++k) {
    const auto& o = log.odometry[k];
    const double step = log.odometry[k + 1].t - o.t;
    if (step <= 0.0) continue;
    const Pose2 odo = exp_se2({o.omega * step, {o.v * step, 0.0}});
    const Pose2 gt = between(log.nearest_ground_truth(o.t).pose,
                             log.nearest_ground_truth(o.t + step).pose);
    sum_sq += (gt.pos - odo.pos).squaredNorm();
    span += step;
  }
  if (span > 0.0) est.sigma2_r = 0.5 * sum_sq * (dt / span);

  double det_sq = 0.0;
  int n_det = 0;
  for (const auto& d : log.detections) {
    const int idx = log.landmark_index(d.landmark_id);
    if (idx < 0) continue;
    const auto& gt = log.nearest_ground_truth(d.t);
    const Eigen::Vector2d y_true =
        gt.pose.rot.inverse() * Eigen::Vector2d(log.landmark_positions[idx] - gt.pose.pos);
    det_sq += (range_bearing_to_position(d.range, d.bearing) - y_true).squaredNorm();
    ++n_det;
  }
  if (n_det > 0) est.sigma2_landmark = 0.5 * det_sq / n_det;
  est.detection_samples = n_det;
  return est;
}

std::vector<DatasetCase> extract_subsequences(const RawLog& log, const SubsequenceSpec& spec) {
  if (spec.n_poses < 1 || spec.n_landmarks < 1 || spec.dt <= 0.0)
    throw std::invalid_argument("extract_subsequences: bad spec");
  const NoiseEstimate noise = estimate_noise_params(log, spec.dt);
  const double span = (spec.n_poses - 1) * spec.dt;
  std::vector<DatasetCase> cases;

  for (double tw = log.t_begin(); tw + span <= log.t_end() + 1e-9; tw += std::max(span, spec.dt)) {
    DatasetCase c;
    c.t_start = tw;
    std::vector<double> pose_times;
    for (int p = 0; p < spec.n_poses; ++p) pose_times.push_back(tw + p * spec.dt);

    // Most visible landmarks in the window, by detection count.
    std::map<int, int> counts;
    for (const auto& d : log.detections)
      if (d.t >= tw - 1e-9 && d.t <= tw + span + 1e-9 && log.landmark_index(d.landmark_id) >= 0)
        counts[d.landmark_id]++;
    std::vector<std::pair<int, int>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) < spec.n_landmarks) continue;
    ranked.resize(spec.n_landmarks);
    std::sort(ranked.begin(), ranked.end());
    // The window is expressed in the frame of its first ground-truth pose.
    // Global position offsets are pure gauge here and would stretch the
    // lifted variables far from unit scale.
    c.anchor = log.nearest_ground_truth(pose_times[0]).pose;
    const Pose2 to_local = c.anchor.inverse();

    std::map<int, int> selected;  // raw id -> instance index
    for (const auto& [id, cnt] : ranked) {
      selected[id] = static_cast<int>(c.instance.landmarks.positions.size());
      const Eigen::Vector2d& l = log.landmark_positions[log.landmark_index(id)];
      c.instance.landmarks.positions.push_back(to_local.rot * l + to_local.pos);
    }

    c.instance.n_poses = spec.n_poses;
    for (double tp : pose_times)
      c.ground_truth.push_back(compose(to_local, log.nearest_ground_truth(tp).pose));

    c.instance.prior.rot = c.ground_truth[0].rot;
    c.instance.prior.pos = c.ground_truth[0].pos;
    c.instance.prior.kappa = 100.0;
    c.instance.prior.sigma2 = 0.01;

    for (int p = 0; p + 1 < spec.n_poses; ++p) {
      const Pose2 rel = integrate_odometry(log, pose_times[p], pose_times[p + 1]);
      RelPoseMeasurement o;
      o.from_index = p;
      o.to_index = p + 1;
      o.delta_rot = rel.rot;
      o.delta_pos = rel.pos;
      o.kappa = noise.kappa;
      o.sigma2 = noise.sigma2_r;
      c.instance.odometry.push_back(o);
    }

    for (int p = 0; p < spec.n_poses; ++p) {
      const RawLog::Detection* best = nullptr;
      double best_gap = 0.5 * spec.dt;
      for (const auto& d : log.detections) {
        if (!selected.count(d.landmark_id)) continue;
        const double gap = std::abs(d.t - pose_times[p]);
        if (gap < best_gap) {
          best_gap = gap;
          best = &d;
        }
      }
      if (!best) continue;
      UdaMeasurement m;
      m.timestep = p;
      m.k = 0;
      m.y = range_bearing_to_position(best->range, best->bearing);
      m.sigma2 = noise.sigma2_landmark;
      for (int j = 0; j < spec.n_landmarks; ++j) m.candidates.push_back(j);
      c.instance.measurements.push_back(m);
      c.true_assoc.landmark_for_meas.push_back(selected.at(best->landmark_id));
    }
    if (c.instance.measurements.empty()) continue;
    c.instance.validate();
    cases.push_back(std::move(c));
  }
  return cases;
}

RawLog generate_synthetic_log(const SyntheticLogParams& p) {
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RawLog log;
  const int n_samples = static_cast<int>(std::floor(p.duration / p.sample_dt)) + 1;
  const int per_window = std::max(1, static_cast<int>(std::round(p.span_for_noise / p.sample_dt)));
  const double var_rot_sample = (1.0 / p.kappa_window) / per_window;
  const double var_pos_sample = 2.0 * p.sigma2_r_window / per_window;

  // Smooth unicycle profile; ground truth integrates the exact increments.
  Pose2 pose = Pose2::identity();
  std::vector<Pose2> gt_poses;
  std::vector<double> v_true(n_samples), w_true(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    const double t = k * p.sample_dt;
    v_true[k] = 1.0 + 0.3 * std::sin(0.05 * t);
    w_true[k] = 0.25 * std::sin(0.03 * t + 1.0);
    gt_poses.push_back(pose);
    log.ground_truth.push_back({t, pose});
    pose = compose(pose, exp_se2({w_true[k] * p.sample_dt, {v_true[k] * p.sample_dt, 0.0}}));
  }

  for (int k = 0; k < n_samples; ++k) {
    const double t = k * p.sample_dt;
    double v = v_true[k], w = w_true[k];
    if (!p.noiseless) {
      w += std::sqrt(var_rot_sample) * gauss(rng) / p.sample_dt;
      v += std::sqrt(var_pos_sample) * gauss(rng) / p.sample_dt;
    }
    log.odometry.push_back({t, v, w});
  }

  // Landmarks offset laterally from evenly spaced path points.
  for (int j = 0; j < p.n_landmarks; ++j) {
    const int k = static_cast<int>((j + 0.5) * (n_samples - 1) / p.n_landmarks);
    const Pose2& at = gt_poses[k];
    const double side = (j % 2 == 0) ? 1.0 : -1.0;
    const Eigen::Vector2d offset(0.0, side * (4.0 + 2.0 * (j % 3)));
    log.landmark_ids.push_back(j);
    log.landmark_positions.push_back(at.pos + at.rot * offset);
  }

  for (int k = 0; k < n_samples; ++k) {
    const double t = k * p.sample_dt;
    const Pose2& at = gt_poses[k];
    for (size_t j = 0; j < log.landmark_positions.size(); ++j) {
      const Eigen::Vector2d rel = log.landmark_positions[j] - at.pos;
      if (rel.norm() > p.max_range) continue;
      Eigen::Vector2d y = at.rot.inverse() * rel;
      if (!p.noiseless)
        y += std::sqrt(p.sigma2_landmark) * Eigen::Vector2d(gauss(rng), gauss(rng));
      log.detections.push_back(
          {t, log.landmark_ids[j], y.norm(), std::atan2(y.y(), y.x())});
    }
  }
  return log;
}

void write_raw_log(const RawLog& log, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const std::string& name) {
    std::ofstream out(dir + "/" + name);
    if (!out) throw std::runtime_error("cannot write log file: " + dir + "/" + name);
    out.precision(17);
    return out;
  };
  {
    auto out = open("odometry.txt");
    out << "# t v omega\n";
    for (const auto& o : log.odometry) out << o.t << " " << o.v << " " << o.omega << "\n";
  }
  {
    auto out = open("detections.txt");
    out << "# t landmark_id range bearing\n";
    for (const auto& d : log.detections)
      out << d.t << " " << d.landmark_id << " " << d.range << " " << d.bearing << "\n";
  }
  {
    auto out = open("groundtruth.txt");
    out << "# t x y heading\n";
    for (const auto& g : log.ground_truth)
      out << g.t << " " << g.pose.pos.x() << " " << g.pose.pos.y() << " "
          << g.pose.rot.angle() << "\n";
  }
  {
    auto out = open("landmarks.txt");
    out << "# id x y\n";
    for (size_t i = 0; i < log.landmark_ids.size(); ++i)
      out << log.landmark_ids[i] << " " << log.landmark_positions[i].x() << " "
          << log.landmark_positions[i].y() << "\n";
  }
}

}  // namespace certloc
