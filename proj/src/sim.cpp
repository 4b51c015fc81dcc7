#include "certloc/sim.hpp"

#include <cmath>
#include <random>

namespace certloc {

namespace {
constexpr double kVarianceFloor = 1e-8;
}

Scenario generate_scenario(const SimParams& p) {
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> uangle(0.0, 2.0 * M_PI);
  std::normal_distribution<double> unit_gauss(0.0, 1.0);
  std::uniform_real_distribution<double> upos(p.landmark_low, p.landmark_high);

  Scenario sc;
  sc.instance.n_poses = p.n_poses;

  const auto sample_increment = [&]() {
    TangentVector2 xi;
    xi.phi = wrap_angle(uangle(rng));
    xi.rho = Eigen::Vector2d(unit_gauss(rng), unit_gauss(rng));
    return exp_se2(xi);
  };

  sc.ground_truth.push_back(sample_increment());
  for (int i = 1; i < p.n_poses; ++i)
    sc.ground_truth.push_back(compose(sc.ground_truth.back(), sample_increment()));

  for (int j = 0; j < p.n_landmarks; ++j)
    sc.instance.landmarks.positions.push_back({upos(rng), upos(rng)});

  // Noise is drawn with the true scaled variances (exactly zero draws when
  // noise_scale is zero) while the recorded weights use floored variances so
  // the information stays finite.
  const double draw_var_rot = p.noise_scale * p.base_inv_kappa;
  const double draw_var_pos = p.noise_scale * p.base_sigma2_r;

  // Prior: ground-truth first pose with the nominal prior weights.
  sc.instance.prior.rot = sc.ground_truth[0].rot;
  sc.instance.prior.pos = sc.ground_truth[0].pos;
  sc.instance.prior.kappa = p.prior_kappa;
  sc.instance.prior.sigma2 = p.prior_sigma2;

  for (int i = 0; i + 1 < p.n_poses; ++i) {
    const Pose2 rel = between(sc.ground_truth[i], sc.ground_truth[i + 1]);
    RelPoseMeasurement o;
    o.from_index = i;
    o.to_index = i + 1;
    const double eps_phi = wrap_angle(std::sqrt(draw_var_rot) * unit_gauss(rng));
    o.delta_rot = rel.rot * Rotation2::from_angle(eps_phi);
    o.delta_pos =
        rel.pos + std::sqrt(draw_var_pos) * Eigen::Vector2d(unit_gauss(rng), unit_gauss(rng));
    o.kappa = 1.0 / std::max(draw_var_rot, kVarianceFloor);
    o.sigma2 = std::max(draw_var_pos, kVarianceFloor);
    sc.instance.odometry.push_back(o);
  }

  std::uniform_int_distribution<int> pick_landmark(0, p.n_landmarks - 1);
  for (int i = 0; i < p.n_poses; ++i)
    for (int k = 0; k < p.meas_per_pose; ++k) {
      const int j = pick_landmark(rng);
      const Pose2& pose = sc.ground_truth[i];
      UdaMeasurement m;
      m.timestep = i;
      m.k = k;
      // Body-frame landmark observation with variance sigma2_landmark; the
      // zero-noise configuration keeps the weight but draws nothing.
      const double draw_std_lm = p.noise_scale > 0.0 ? std::sqrt(p.sigma2_landmark) : 0.0;
      m.y = pose.rot.inverse() * Eigen::Vector2d(sc.instance.landmarks.positions[j] - pose.pos) +
            draw_std_lm * Eigen::Vector2d(unit_gauss(rng), unit_gauss(rng));
      m.sigma2 = std::max(p.sigma2_landmark, kVarianceFloor);
      for (int c = 0; c < p.n_landmarks; ++c) m.candidates.push_back(c);
      sc.instance.measurements.push_back(m);
      sc.true_assoc.landmark_for_meas.push_back(j);
    }

  sc.instance.validate();
  return sc;
}

}  // namespace certloc
