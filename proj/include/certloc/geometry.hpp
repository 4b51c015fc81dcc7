#pragma once

#include <Eigen/Core>
#include <vector>

namespace certloc {

// Planar rotation stored as (cos, sin). Kept normalized; renormalize after
// long composition chains with normalized().
struct Rotation2 {
  double c = 1.0;
  double s = 0.0;

  Rotation2() = default;
  Rotation2(double c_in, double s_in) : c(c_in), s(s_in) {}

  static Rotation2 identity() { return {}; }
  static Rotation2 from_angle(double phi);

  double angle() const;
  Eigen::Matrix2d matrix() const;
  Rotation2 inverse() const { return {c, -s}; }
  Rotation2 normalized() const;

  Rotation2 operator*(const Rotation2& o) const {
    return {c * o.c - s * o.s, s * o.c + c * o.s};
  }
  Eigen::Vector2d operator*(const Eigen::Vector2d& v) const {
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
  }
};

struct Pose2 {
  Rotation2 rot;
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();

  static Pose2 identity() { return {}; }
  Pose2 inverse() const;
};

// T_a * T_b: rotations compose, positions as pos_a + R_a * pos_b.
Pose2 compose(const Pose2& a, const Pose2& b);

// between(a, b) = a^{-1} * b, the relative pose taking a to b.
Pose2 between(const Pose2& a, const Pose2& b);

struct TangentVector2 {
  double phi = 0.0;
  Eigen::Vector2d rho = Eigen::Vector2d::Zero();
};

// exp/log on SE(2) with the left Jacobian
//   V(phi) = [ sin(phi)/phi, -(1-cos(phi))/phi ;
//              (1-cos(phi))/phi, sin(phi)/phi ],
// switching to the Taylor expansion below |phi| = 1e-7.
Pose2 exp_se2(const TangentVector2& xi);
TangentVector2 log_se2(const Pose2& T);

double wrap_angle(double phi);

using Trajectory = std::vector<Pose2>;

}  // namespace certloc
