#include "certloc/geometry.hpp"

#include <cmath>

namespace certloc {

namespace {
constexpr double kSmallAngle = 1e-7;

// V(phi) and its inverse built from the two scalar coefficients
//   a = sin(phi)/phi, b = (1-cos(phi))/phi.
void left_jacobian_coeffs(double phi, double& a, double& b) {
  if (std::abs(phi) < kSmallAngle) {
    const double p2 = phi * phi;
    a = 1.0 - p2 / 6.0;
    b = 0.5 * phi - phi * p2 / 24.0;
  } else {
    a = std::sin(phi) / phi;
    b = (1.0 - std::cos(phi)) / phi;
  }
}
}  // namespace

Rotation2 Rotation2::from_angle(double phi) { return {std::cos(phi), std::sin(phi)}; }

double Rotation2::angle() const { return std::atan2(s, c); }

Eigen::Matrix2d Rotation2::matrix() const {
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

Rotation2 Rotation2::normalized() const {
  const double n = std::hypot(c, s);
  return {c / n, s / n};
}

Pose2 Pose2::inverse() const {
  const Rotation2 rinv = rot.inverse();
  return {rinv, rinv * Eigen::Vector2d(-pos)};
}

Pose2 compose(const Pose2& a, const Pose2& b) {
  return {a.rot * b.rot, a.pos + a.rot * b.pos};
}

Pose2 between(const Pose2& a, const Pose2& b) { return compose(a.inverse(), b); }

Pose2 exp_se2(const TangentVector2& xi) {
  double a, b;
  left_jacobian_coeffs(xi.phi, a, b);
  Eigen::Vector2d t(a * xi.rho.x() - b * xi.rho.y(), b * xi.rho.x() + a * xi.rho.y());
  return {Rotation2::from_angle(xi.phi), t};
}

TangentVector2 log_se2(const Pose2& T) {
  const double phi = T.rot.angle();
  double a, b;
  left_jacobian_coeffs(phi, a, b);
  const double det = a * a + b * b;
  // V^{-1} = 1/(a^2+b^2) * [a, b; -b, a]
  Eigen::Vector2d rho((a * T.pos.x() + b * T.pos.y()) / det,
                      (-b * T.pos.x() + a * T.pos.y()) / det);
  return {phi, rho};
}

double wrap_angle(double phi) {
  double w = std::remainder(phi, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

}  // namespace certloc
