#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "certloc/geometry.hpp"

using namespace certloc;

TEST_CASE("rotation basics") {
  const Rotation2 r = Rotation2::from_angle(0.3);
  CHECK(r.c == doctest::Approx(std::cos(0.3)).epsilon(1e-15));
  CHECK(r.s == doctest::Approx(std::sin(0.3)).epsilon(1e-15));
  CHECK(r.angle() == doctest::Approx(0.3).epsilon(1e-15));

  const Rotation2 id = r * r.inverse();
  CHECK(id.c == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(id.s) < 1e-14);

  const Eigen::Vector2d v = Rotation2::from_angle(M_PI / 2) * Eigen::Vector2d(1.0, 0.0);
  CHECK(v.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.y() == doctest::Approx(1.0).epsilon(1e-12));

  const Eigen::Matrix2d R = r.matrix();
  CHECK(R(0, 0) == doctest::Approx(r.c));
  CHECK(R(1, 0) == doctest::Approx(r.s));
  CHECK(R(0, 1) == doctest::Approx(-r.s));
}

TEST_CASE("exp maps the translation through the left jacobian") {
  // V(pi/2) (1, 0) = (2/pi, 2/pi).
  TangentVector2 xi;
  xi.phi = M_PI / 2;
  xi.rho = Eigen::Vector2d(1.0, 0.0);
  const Pose2 T = exp_se2(xi);
  CHECK(T.pos.x() == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
  CHECK(T.pos.y() == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
  CHECK(T.rot.angle() == doctest::Approx(M_PI / 2).epsilon(1e-12));

  // Zero rotation: translation passes through unchanged.
  TangentVector2 flat;
  flat.rho = Eigen::Vector2d(3.0, -2.0);
  const Pose2 F = exp_se2(flat);
  CHECK(F.pos.x() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(F.pos.y() == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("exp/log round trip") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    TangentVector2 xi;
    xi.phi = (i == 0) ? 0.0 : (i == 1 ? 1e-9 : ang(rng));
    xi.rho = Eigen::Vector2d(pos(rng), pos(rng));
    const TangentVector2 back = log_se2(exp_se2(xi));
    CHECK(std::abs(back.phi - xi.phi) < 1e-10);
    CHECK((back.rho - xi.rho).norm() < 1e-9);
  }
}

TEST_CASE("compose oracle") {
  Pose2 a;
  a.rot = Rotation2::from_angle(0.3);
  a.pos = Eigen::Vector2d(1.0, 2.0);
  Pose2 b;
  b.rot = Rotation2::from_angle(-0.8);
  b.pos = Eigen::Vector2d(0.5, -1.0);

  const Pose2 ab = compose(a, b);
  CHECK(ab.rot.angle() == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(ab.pos.x() == doctest::Approx(1.7731884512241425).epsilon(1e-14));
  CHECK(ab.pos.y() == doctest::Approx(1.1924236142050637).epsilon(1e-14));

  // between recovers the relative transform.
  const Pose2 d = between(a, ab);
  CHECK(d.rot.angle() == doctest::Approx(-0.8).epsilon(1e-13));
  CHECK((d.pos - b.pos).norm() < 1e-13);

  const Pose2 e = compose(a, a.inverse());
  CHECK(std::abs(e.rot.angle()) < 1e-14);
  CHECK(e.pos.norm() < 1e-13);
}

TEST_CASE("long composition chains stay normalized") {
  Pose2 T;
  const Pose2 step{Rotation2::from_angle(0.1), Eigen::Vector2d(0.05, -0.02)};
  for (int i = 0; i < 10000; ++i) {
    T = compose(T, step);
    T.rot = T.rot.normalized();
  }
  CHECK(std::abs(T.rot.c * T.rot.c + T.rot.s * T.rot.s - 1.0) < 1e-12);
}

TEST_CASE("wrap angle") {
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
  CHECK(std::abs(wrap_angle(3 * M_PI)) == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(wrap_angle(2 * M_PI + 0.1) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(wrap_angle(-2 * M_PI - 0.1) == doctest::Approx(-0.1).epsilon(1e-12));
}
