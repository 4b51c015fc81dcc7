#include "certloc/problem.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace certloc {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument("ProblemInstance: " + what);
}

bool finite(const Eigen::Vector2d& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

void check_rotation(const Rotation2& r, const std::string& where) {
  require(std::isfinite(r.c) && std::isfinite(r.s), where + " rotation not finite");
  require(std::abs(r.c * r.c + r.s * r.s - 1.0) <= 1e-9, where + " rotation not normalized");
}

}  // namespace

void ProblemInstance::validate() const {
  require(n_poses >= 1, "n_poses must be >= 1");
  require(landmarks.size() >= 0, "landmark map missing");
  for (const auto& l : landmarks.positions) require(finite(l), "landmark not finite");

  check_rotation(prior.rot, "prior");
  require(finite(prior.pos), "prior position not finite");
  require(prior.kappa > 0.0 && prior.sigma2 > 0.0, "prior weights must be positive");

  require(static_cast<int>(odometry.size()) == n_poses - 1,
          "odometry must cover exactly the consecutive pose pairs");
  for (int i = 0; i < static_cast<int>(odometry.size()); ++i) {
    const auto& o = odometry[i];
    require(o.from_index == i && o.to_index == i + 1, "odometry must chain consecutive poses");
    check_rotation(o.delta_rot, "odometry");
    require(finite(o.delta_pos), "odometry translation not finite");
    require(o.kappa > 0.0 && o.sigma2 > 0.0, "odometry weights must be positive");
  }

  std::set<std::pair<int, int>> seen;
  for (const auto& m : measurements) {
    require(m.timestep >= 0 && m.timestep < n_poses, "measurement timestep out of range");
    require(m.k >= 0, "measurement k must be >= 0");
    require(seen.insert({m.timestep, m.k}).second, "duplicate (timestep, k) measurement key");
    require(finite(m.y), "measurement not finite");
    require(m.sigma2 > 0.0, "measurement sigma2 must be positive");
    require(!m.candidates.empty(), "measurement needs at least one candidate");
    std::set<int> cand(m.candidates.begin(), m.candidates.end());
    require(cand.size() == m.candidates.size(), "duplicate candidate landmark");
    for (int j : m.candidates)
      require(j >= 0 && j < landmarks.size(), "candidate landmark index out of range");
  }
}

int ProblemInstance::num_thetas() const {
  int n = 0;
  for (const auto& m : measurements) n += static_cast<int>(m.candidates.size());
  return n;
}

Trajectory dead_reckon(const ProblemInstance& instance) {
  Trajectory traj;
  traj.reserve(instance.n_poses);
  traj.push_back({instance.prior.rot, instance.prior.pos});
  for (const auto& o : instance.odometry) {
    const Pose2& prev = traj.back();
    traj.push_back(compose(prev, {o.delta_rot, o.delta_pos}));
  }
  return traj;
}

double evaluate_cost(const ProblemInstance& instance, const Trajectory& traj,
                     const AssociationAssignment& assign) {
  if (static_cast<int>(traj.size()) != instance.n_poses)
    throw std::invalid_argument("evaluate_cost: trajectory length mismatch");
  if (assign.landmark_for_meas.size() != instance.measurements.size())
    throw std::invalid_argument("evaluate_cost: assignment length mismatch");

  double cost = 0.0;

  const auto chordal2 = [](const Rotation2& a, const Rotation2& b) {
    const double dc = a.c - b.c, ds = a.s - b.s;
    return 2.0 * (dc * dc + ds * ds);  // |A - B|_F^2 for 2x2 DCMs
  };

  cost += instance.prior.kappa * chordal2(traj[0].rot, instance.prior.rot);
  cost += (traj[0].pos - instance.prior.pos).squaredNorm() / instance.prior.sigma2;

  for (const auto& o : instance.odometry) {
    const Pose2& a = traj[o.from_index];
    const Pose2& b = traj[o.to_index];
    cost += o.kappa * chordal2(b.rot, a.rot * o.delta_rot);
    cost += (b.pos - a.pos - a.rot * o.delta_pos).squaredNorm() / o.sigma2;
  }

  for (size_t m = 0; m < instance.measurements.size(); ++m) {
    const auto& meas = instance.measurements[m];
    const int j = assign.landmark_for_meas[m];
    bool ok = false;
    for (int c : meas.candidates) ok = ok || (c == j);
    if (!ok) throw std::invalid_argument("evaluate_cost: assigned landmark not a candidate");
    const Pose2& p = traj[meas.timestep];
    const Eigen::Vector2d res = (instance.landmarks.positions[j] - p.pos) - p.rot * meas.y;
    cost += res.squaredNorm() / meas.sigma2;
  }
  return cost;
}

}  // namespace certloc
