#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "pws/error.hpp"
#include "pws/geometry.hpp"
#include "pws/intervals.hpp"

using namespace pws;
using pws::test::kind_of;

namespace {

const CameraModel kCam{100.0, 100.0, 50.0, 50.0, 100, 100};

double radius_for(Axis axis) { return is_rotation(axis) ? 0.3 : 0.5; }

Point3 random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xy(-1.0, 1.0);
  std::uniform_real_distribution<double> z(1.5, 5.0);
  return {xy(rng), xy(rng), z(rng)};
}

}  // namespace

TEST_CASE("project: identity pose puts an on-axis point at the principal point") {
  const Projection pr = project({0, 0, 2}, MotionValue::identity(Axis::Rx), kCam);
  CHECK(pr.pos.u == 50.0);
  CHECK(pr.pos.v == 50.0);
  CHECK(pr.depth == 2.0);
}

TEST_CASE("project: Tz moves the camera toward the point") {
  const Projection pr = project({0.1, 0, 2}, {Axis::Tz, 1.0}, kCam);
  CHECK(pr.pos.u == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(pr.pos.v == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(pr.depth == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("project: a quarter turn about y puts the point on the image plane") {
  CHECK(kind_of([] { project({0, 0, 2}, {Axis::Ry, std::numbers::pi / 2}, kCam); }) ==
        ErrorKind::NonPositiveDepth);
  CHECK(kind_of([] { projection_derivative({0, 0, 2}, {Axis::Ry, std::numbers::pi / 2}, kCam); }) ==
        ErrorKind::NonPositiveDepth);
  CHECK(kind_of([] { project({0, 0, 1}, {Axis::Tz, 1.5}, kCam); }) == ErrorKind::NonPositiveDepth);
}

TEST_CASE("project: all six axes agree at the identity pose") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Point3 p = random_point(rng);
    const Projection ref = project_rodrigues(p, {0, 0, 0}, {0, 0, 0}, kCam);
    for (Axis axis : kAllAxes) {
      const Projection pr = project(p, MotionValue::identity(axis), kCam);
      CHECK(pr.pos.u == ref.pos.u);
      CHECK(pr.pos.v == ref.pos.v);
      CHECK(pr.depth == ref.depth);
    }
  }
}

TEST_CASE("project: closed forms match the general rotation form") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(-0.3, 0.3);
  for (int i = 0; i < 200; ++i) {
    const Point3 p = random_point(rng);
    for (Axis axis : kAllAxes) {
      const double v = a(rng);
      std::array<double, 3> omega{0, 0, 0};
      std::array<double, 3> t{0, 0, 0};
      const int slot = static_cast<int>(axis) % 3;
      (is_rotation(axis) ? omega : t)[static_cast<std::size_t>(slot)] = v;
      const Projection closed = project(p, {axis, v}, kCam);
      const Projection general = project_rodrigues(p, omega, t, kCam);
      CHECK(closed.pos.u == doctest::Approx(general.pos.u).epsilon(1e-12));
      CHECK(closed.pos.v == doctest::Approx(general.pos.v).epsilon(1e-12));
      CHECK(closed.depth == doctest::Approx(general.depth).epsilon(1e-12));
    }
  }
}

TEST_CASE("projection_derivative: worked values") {
  const ProjectionRate tz = projection_derivative({0.1, 0, 2}, {Axis::Tz, 0.0}, kCam);
  CHECK(tz.du == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(tz.dv == 0.0);
  for (double tx : {-0.3, 0.0, 0.4}) {
    CHECK(projection_derivative({0, 0.2, 2}, {Axis::Tx, tx}, kCam).dv == 0.0);
  }
  // Ry at theta = 0: du = -fx (X^2 + Z^2) / Z^2, dv = -fy X Y / Z^2.
  const ProjectionRate ry = projection_derivative({0.1, 0.1, 2}, {Axis::Ry, 0.0}, kCam);
  CHECK(ry.du == doctest::Approx(-100.0 * (0.01 + 4.0) / 4.0).epsilon(1e-12));
  CHECK(ry.dv == doctest::Approx(-100.0 * 0.01 / 4.0).epsilon(1e-12));
}

TEST_CASE("projection_derivative: matches central finite differences on every axis") {
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (Axis axis : kAllAxes) {
    std::uniform_real_distribution<double> a(-radius_for(axis), radius_for(axis));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Point3 p = random_point(rng);
      const double alpha = a(rng);
      const ProjectionRate r = projection_derivative(p, {axis, alpha}, kCam);
      const Projection hi = project(p, {axis, alpha + h}, kCam);
      const Projection lo = project(p, {axis, alpha - h}, kCam);
      const double fu = (hi.pos.u - lo.pos.u) / (2 * h);
      const double fv = (hi.pos.v - lo.pos.v) / (2 * h);
      worst = std::max(worst, std::abs(fu - r.du) / std::max(std::abs(r.du), 1.0));
      worst = std::max(worst, std::abs(fv - r.dv) / std::max(std::abs(r.dv), 1.0));
    }
    INFO("axis " << axis_name(axis));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("lipschitz_constant: closed-form values") {
  const MotionSpec tz{Axis::Tz, 0.5};
  CHECK(lipschitz_constant({0.1, 0, 2}, tz, kCam) == doctest::Approx(100.0 * 0.1 / 2.25).epsilon(1e-12));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    Point3 p = random_point(rng);
    CHECK(lipschitz_constant(p, {Axis::Ty, 0.2}, kCam) == doctest::Approx(100.0 / p.z).epsilon(1e-12));
    p.z = 2.0;
    CHECK(lipschitz_constant(p, {Axis::Tx, 0.2}, kCam) == doctest::Approx(50.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(lipschitz_constant({0, 0, 0.4}, tz, kCam), Error);
}

TEST_CASE("lipschitz_constant: bounds the rate everywhere in S and is attained") {
  std::mt19937_64 rng(9);
  for (Axis axis : kAllAxes) {
    const MotionSpec spec{axis, radius_for(axis)};
    for (int i = 0; i < 100; ++i) {
      const Point3 p = random_point(rng);
      const double L = lipschitz_constant(p, spec, kCam);
      double dense = 0.0;
      for (int k = 0; k <= 1000; ++k) {
        const double alpha = spec.lo() + spec.width() * k / 1000.0;
        const ProjectionRate r = projection_derivative(p, {axis, alpha}, kCam);
        const double m = std::max(std::abs(r.du), std::abs(r.dv));
        REQUIRE(m <= L * (1 + 1e-12));
        dense = std::max(dense, m);
      }
      // The dense grid approaches the maximum from below.
      CHECK(L <= dense * (1 + 1e-3) + 1e-9);
    }
  }
}

TEST_CASE("lipschitz_constant: z-rotation maximum can sit strictly inside S") {
  // dv ~ X cos(theta) + Y sin(theta) peaks at theta = atan2(Y, X) = 0.2.
  const Point3 p{std::cos(0.2), std::sin(0.2), 2.0};
  const MotionSpec spec{Axis::Rz, 0.5};
  const double L = lipschitz_constant(p, spec, kCam);
  CHECK(L == doctest::Approx(100.0 / 2.0).epsilon(1e-12));
  const auto ends = [&](double a) {
    const ProjectionRate r = projection_derivative(p, {Axis::Rz, a}, kCam);
    return std::max(std::abs(r.du), std::abs(r.dv));
  };
  CHECK(L > ends(-0.5));
  CHECK(L > ends(0.5));
}

TEST_CASE("lipschitz_constant: bounds finite motion between any two poses") {
  std::mt19937_64 rng(13);
  for (Axis axis : kAllAxes) {
    const MotionSpec spec{axis, radius_for(axis)};
    std::uniform_real_distribution<double> a(spec.lo(), spec.hi());
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
      const Point3 p = random_point(rng);
      const double L = lipschitz_constant(p, spec, kCam);
      const double x = a(rng), y = a(rng);
      const Projection px = project(p, {axis, x}, kCam);
      const Projection py = project(p, {axis, y}, kCam);
      const double move = std::max(std::abs(px.pos.u - py.pos.u), std::abs(px.pos.v - py.pos.v));
      if (move > L * std::abs(x - y) * (1 + 1e-12) + 1e-12) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("delta_constant: closed-form values") {
  const std::vector<Point3> cloud = {{0.1, 0.2, 2.0}, {-0.4, 0.3, 3.0}};
  CHECK(delta_constant({Axis::Tx, 0.2}, kCam, cloud, 1.5) == 0.0);
  CHECK(delta_constant({Axis::Ty, 0.2}, kCam, cloud, 1.5) == 0.0);
  const CameraModel aniso{120.0, 100.0, 50.0, 50.0, 100, 100};
  CHECK(delta_constant({Axis::Rz, 0.1}, aniso, cloud, 2.0) == doctest::Approx(2.4).epsilon(1e-12));
  // Tz: max delta / (Z' - b) is set by the nearest point.
  CHECK(delta_constant({Axis::Tz, 0.5}, kCam, cloud, 2.0) == doctest::Approx(2.0 / 1.5).epsilon(1e-12));
  CHECK_THROWS_AS(delta_constant({Axis::Tz, 2.5}, kCam, cloud, 2.0), Error);
  CHECK_THROWS_AS(delta_constant({Axis::Tz, 0.5}, kCam, cloud, 0.0), Error);
  // The rotation constants carry the delta^2 / f lead and grow with delta.
  for (Axis axis : {Axis::Rx, Axis::Ry}) {
    const double small = delta_constant({axis, 0.1}, kCam, cloud, 0.5);
    const double big = delta_constant({axis, 0.1}, kCam, cloud, 1.0);
    CHECK(small >= 0.25 / 100.0);
    CHECK(big > small);
  }
}

TEST_CASE("delta_constant: hidden points obey L_P <= max L_P' + C_delta") {
  // A one-frame wall with one point per pixel and hidden points behind it
  // that stay within delta pixels of some wall point at every sampled pose.
  const CameraModel cam{20.0, 20.0, 10.0, 10.0, 20, 20};
  const double wall_z = 2.0;
  std::vector<Point3> wall;
  for (int r = -12; r < 32; ++r) {
    for (int c = -12; c < 32; ++c) {
      wall.push_back({(c + 0.5 - cam.cx) * wall_z / cam.fx, (r + 0.5 - cam.cy) * wall_z / cam.fy, wall_z});
    }
  }
  const double delta = 1.0;
  std::mt19937_64 rng(17);
  for (Axis axis : kAllAxes) {
    const MotionSpec spec{axis, is_rotation(axis) ? 0.05 : 0.1};
    double max_wall = 0.0;
    for (const Point3& q : wall) max_wall = std::max(max_wall, lipschitz_constant(q, spec, cam));
    const double bound = max_wall + delta_constant(spec, cam, wall, delta);
    std::uniform_real_distribution<double> pix(4.0, 16.0);
    std::uniform_real_distribution<double> depth(wall_z + 0.01, wall_z + 0.6);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
      const double z = depth(rng);
      const Point3 p{(pix(rng) - cam.cx) * z / cam.fx, (pix(rng) - cam.cy) * z / cam.fy, z};
      std::vector<Point3> full = wall;
      full.push_back(p);
      if (!check_delta_convexity(full, wall, delta, spec, cam, 20)) continue;
      ++checked;
      CHECK(lipschitz_constant(p, spec, cam) <= bound);
    }
    INFO("axis " << axis_name(axis));
    CHECK(checked > 400);
  }
}

TEST_CASE("parse_axis and MotionSpec validation") {
  CHECK(parse_axis("RY") == Axis::Ry);
  CHECK_THROWS_AS(parse_axis("rw"), Error);
  CHECK_THROWS_AS((MotionSpec{Axis::Tz, 0.0}.validate()), Error);
  CHECK_THROWS_AS((MotionSpec{Axis::Rx, 2.0}.validate()), Error);
  CHECK_THROWS_AS(MotionValue::within({Axis::Tz, 0.1}, 0.2), Error);
  CHECK_THROWS_AS((CameraModel{100, 100, 150, 50, 100, 100}.validate()), Error);
}
