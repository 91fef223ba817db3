#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "pws/error.hpp"
#include "pws/formats.hpp"
#include "pws/rasterizer.hpp"

using namespace pws;

namespace {

const CameraModel kCam{100.0, 100.0, 50.0, 50.0, 100, 100};

ColoredPointCloud gray_points(const std::vector<Point3>& pts, const std::vector<float>& values) {
  ColoredPointCloud cloud;
  cloud.channels = 1;
  for (std::size_t i = 0; i < pts.size(); ++i) cloud.push_back(pts[i], std::span(&values[i], 1));
  return cloud;
}

}  // namespace

TEST_CASE("render: nearer point wins a shared pixel") {
  const auto cloud = gray_points({{0, 0, 2}, {0, 0, 1}}, {0.2f, 0.9f});
  const Image img = render(cloud, MotionValue::identity(Axis::Tz), kCam);
  CHECK(img.at(0, 50, 50) == 0.9f);
  const auto reversed = gray_points({{0, 0, 1}, {0, 0, 2}}, {0.9f, 0.2f});
  CHECK(render(reversed, MotionValue::identity(Axis::Tz), kCam).at(0, 50, 50) == 0.9f);
}

TEST_CASE("render: equal depths go to the lower index") {
  const auto cloud = gray_points({{0.001, 0, 2}, {0, 0.001, 2}, {0, 0, 2}}, {0.1f, 0.2f, 0.3f});
  const auto owners = zbuffer_owners(cloud.points, MotionValue::identity(Axis::Tx), kCam);
  CHECK(owners[50 * 100 + 50] == 0);
}

TEST_CASE("render: a single on-axis point colors exactly pixel (50, 50)") {
  const auto cloud = gray_points({{0, 0, 2}}, {1.0f});
  const Image img = render(cloud, MotionValue::identity(Axis::Ry), kCam);
  int colored = 0;
  for (int r = 0; r < 100; ++r) {
    for (int c = 0; c < 100; ++c) {
      if (img.at(0, r, c) != 0.5f) {
        ++colored;
        CHECK(r == 50);
        CHECK(c == 50);
      }
    }
  }
  CHECK(colored == 1);
}

TEST_CASE("render: empty pixels take the background") {
  const auto cloud = gray_points({{0, 0, 2}}, {1.0f});
  const float bg = 0.25f;
  const Image img = render(cloud, MotionValue::identity(Axis::Tz), kCam, std::span(&bg, 1));
  CHECK(img.at(0, 0, 0) == 0.25f);
  CHECK(render(cloud, MotionValue::identity(Axis::Tz), kCam).at(0, 10, 10) == 0.5f);
  CHECK(default_background(3) == std::vector<float>{0.5f, 0.5f, 0.5f});
}

TEST_CASE("render: points behind the camera or off the grid are skipped") {
  const auto cloud = gray_points({{0, 0, -1}, {10, 0, 1}, {0, 0, 0}}, {1.0f, 1.0f, 1.0f});
  const Image img = render(cloud, MotionValue::identity(Axis::Tz), kCam);
  for (float v : img.data) CHECK(v == 0.5f);
}

TEST_CASE("render: no nearer point lands on any owned pixel") {
  const CameraModel cam{64.0, 64.0, 32.0, 32.0, 64, 64};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ColoredPointCloud cloud = test::random_cloud(5000, cam, seed);
    for (double value : {-0.2, 0.0, 0.15}) {
      const MotionValue m{seed == 1 ? Axis::Ry : Axis::Tz, value};
      const auto owners = zbuffer_owners(cloud.points, m, cam);
      // Independent pass: project each point on its own and keep the best.
      std::vector<double> best(cam.pixel_count(), std::numeric_limits<double>::infinity());
      std::vector<std::int32_t> expect(cam.pixel_count(), kNoPoint);
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        Projection pr;
        try {
          pr = project(cloud.points[i], m, cam);
        } catch (const Error&) {
          continue;
        }
        const double col = std::floor(pr.pos.u), row = std::floor(pr.pos.v);
        if (col < 0 || row < 0 || col >= cam.width || row >= cam.height) continue;
        const std::size_t px = static_cast<std::size_t>(row) * cam.width + static_cast<std::size_t>(col);
        if (pr.depth < best[px]) {
          best[px] = pr.depth;
          expect[px] = static_cast<std::int32_t>(i);
        }
      }
      CHECK(owners == expect);
    }
  }
}

TEST_CASE("render: the identity pose reproduces the reference image and is deterministic") {
  const ColoredPointCloud cloud = test::random_cloud(3000, kCam, 21);
  const Image a = render(cloud, MotionValue::identity(Axis::Tx), kCam);
  const Image b = render(cloud, MotionValue::identity(Axis::Rz), kCam);
  CHECK(a == b);
  CHECK(a == render(cloud, MotionValue::identity(Axis::Tx), kCam));
  const auto owners = zbuffer_owners(cloud.points, MotionValue::identity(Axis::Tx), kCam);
  CHECK(paint(cloud, owners, kCam) == a);
}

TEST_CASE("render_sweep: matches per-value render") {
  const ColoredPointCloud cloud = test::random_cloud(2000, kCam, 4);
  const MotionSpec spec{Axis::Tz, 0.3};
  const std::vector<double> zero = {0.0};
  const auto single = render_sweep(cloud, spec, kCam, zero);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == render(cloud, MotionValue::identity(Axis::Tz), kCam));

  std::vector<double> values;
  for (int i = 0; i <= 10; ++i) values.push_back(-0.3 + 0.06 * i);
  values.back() = 0.3;
  const auto frames = render_sweep(cloud, spec, kCam, values);
  REQUIRE(frames.size() == values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    CHECK(frames[i] == render(cloud, {Axis::Tz, values[i]}, kCam));
    for (float v : frames[i].data) REQUIRE((v >= 0.0f && v <= 1.0f));
    if (i > 0) CHECK(std::isfinite(adjacent_frame_error(frames[i - 1], frames[i])));
  }
}

TEST_CASE("render_sweep: a point on the roll axis stays put") {
  const auto cloud = gray_points({{0, 0, 2}}, {0.8f});
  const MotionSpec spec{Axis::Rz, 0.4};
  const std::vector<double> values = {-0.4, 0.0, 0.4};
  const auto frames = render_sweep(cloud, spec, kCam, values);
  CHECK(frames[0] == frames[1]);
  CHECK(frames[1] == frames[2]);
}

TEST_CASE("adjacent_frame_error") {
  Image a(1, 1, 1, 0.0f), b(1, 1, 1, 1.0f);
  CHECK(adjacent_frame_error(a, a) == 0.0);
  CHECK(adjacent_frame_error(a, b) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(test::kind_of([&] { adjacent_frame_error(a, Image(1, 2, 1)); }) == ErrorKind::ShapeMismatch);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image x(3, 17, 23), y(3, 17, 23);
  for (auto& v : x.data) v = u(rng);
  for (auto& v : y.data) v = u(rng);
  // Re-sum column-major, from the last channel backwards.
  double sum = 0.0;
  for (int c = 22; c >= 0; --c)
    for (int k = 2; k >= 0; --k)
      for (int r = 0; r < 17; ++r) {
        const double d = static_cast<double>(x.at(k, r, c)) - static_cast<double>(y.at(k, r, c));
        sum += d * d;
      }
  CHECK(std::abs(adjacent_frame_error(x, y) - std::sqrt(0.5 * sum)) <= 1e-9);
}

TEST_CASE("PWSI1 image round trip and layout") {
  Image img(2, 3, 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i) / 24.0f;
  const std::string bytes = encode_image(img);
  REQUIRE(bytes.size() == 4 + 12 + 4 * 24);
  CHECK(bytes.substr(0, 4) == "PWSI");
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);
  CHECK(static_cast<unsigned char>(bytes[8]) == 3);
  CHECK(static_cast<unsigned char>(bytes[12]) == 4);
  CHECK(decode_image(bytes) == img);
  CHECK(test::kind_of([&] { decode_image(bytes.substr(0, 20)); }) == ErrorKind::FormatError);
  CHECK(test::kind_of([&] { decode_image("XXXX" + bytes.substr(4)); }) == ErrorKind::FormatError);

  test::TempDir dir("img");
  write_image(dir.path() / "a.pwsi", img);
  CHECK(read_image(dir.path() / "a.pwsi") == img);
}

TEST_CASE("PWSPC1 cloud round trip") {
  const ColoredPointCloud cloud = test::random_cloud(50, kCam, 2);
  const std::string text = encode_cloud(cloud);
  CHECK(text.rfind("PWSPC1 50 3\n", 0) == 0);
  const ColoredPointCloud back = decode_cloud(text);
  CHECK(back.channels == 3);
  CHECK(back.points == cloud.points);
  CHECK(back.colors == cloud.colors);
  CHECK(test::kind_of([] { decode_cloud("PWSPC1 2 1\n0 0 1 0.5\n"); }) == ErrorKind::FormatError);
  CHECK(test::kind_of([] { decode_cloud("PWSPC1 1 1\n0 0 1 1.5\n"); }).has_value());
}

TEST_CASE("camera JSON round trip") {
  const CameraModel cam{120.0, 100.0, 31.5, 20.0, 64, 48};
  CHECK(camera_from_json(camera_to_json(cam)) == cam);
}
