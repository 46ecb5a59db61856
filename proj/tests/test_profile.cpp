#include <doctest.h>

#include <array>
#include <cmath>

#include "sspfield/errors.hpp"
#include "sspfield/profile.hpp"
#include "sspfield/sample.hpp"

using namespace sspfield;

TEST_CASE("interpolation is exact at every knot") {
  std::array<double, 4> depths{0.0, 3.0, 7.0, 11.0};
  std::array<double, 4> speeds{1500.123456789, 1487.5, 1502.25, 1491.0078125};
  SoundSpeedProfile p = interpolate_profile(depths, speeds, 1.0);
  REQUIRE(p.size() == 12);
  CHECK(p[0] == speeds[0]);
  CHECK(p[3] == speeds[1]);
  CHECK(p[7] == speeds[2]);
  CHECK(p[11] == speeds[3]);
}

TEST_CASE("interpolation reproduces an affine profile exactly") {
  // Knot spans are powers of two, so the lerp arithmetic stays exact.
  std::array<double, 3> depths{0.0, 4.0, 12.0};
  auto f = [](double d) { return 1500.0 + 0.5 * d; };
  std::array<double, 3> speeds{f(0.0), f(4.0), f(12.0)};
  SoundSpeedProfile p = interpolate_profile(depths, speeds, 1.0);
  REQUIRE(p.size() == 13);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(p[i] == f(static_cast<double>(i)));
}

TEST_CASE("interpolation with an awkward span stays within rounding") {
  std::array<double, 3> depths{0.0, 3.0, 10.0};
  auto f = [](double d) { return 1490.0 + 1.7 * d; };
  std::array<double, 3> speeds{f(0.0), f(3.0), f(10.0)};
  SoundSpeedProfile p = interpolate_profile(depths, speeds, 1.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(std::abs(p[i] - f(static_cast<double>(i))) < 1e-12);
}

TEST_CASE("interpolation handles fractional steps and keeps the last point") {
  std::array<double, 2> depths{0.0, 1.0};
  std::array<double, 2> speeds{1500.0, 1510.0};
  SoundSpeedProfile p = interpolate_profile(depths, speeds, 0.25);
  REQUIRE(p.size() == 5);  // 0, .25, .5, .75, 1 — exactly divisible span
  CHECK(p[4] == 1510.0);
  CHECK(p[2] == doctest::Approx(1505.0).epsilon(1e-14));
}

TEST_CASE("interpolation rejects malformed knot arrays") {
  std::array<double, 2> two_d{0.0, 1.0};
  std::array<double, 2> two_s{1500.0, 1501.0};
  std::array<double, 1> one_d{0.0};
  std::array<double, 1> one_s{1500.0};
  CHECK_THROWS_AS(interpolate_profile(one_d, one_s, 1.0), InvalidProfile);
  CHECK_THROWS_AS(interpolate_profile(two_d, one_s, 1.0), InvalidProfile);
  CHECK_THROWS_AS(interpolate_profile(two_d, two_s, 0.0), InvalidProfile);
  CHECK_THROWS_AS(interpolate_profile(two_d, two_s, -1.0), InvalidProfile);

  std::array<double, 3> non_mono_d{0.0, 2.0, 2.0};
  std::array<double, 3> three_s{1500.0, 1501.0, 1502.0};
  CHECK_THROWS_AS(interpolate_profile(non_mono_d, three_s, 1.0), InvalidProfile);

  std::array<double, 2> nan_s{1500.0, std::nan("")};
  CHECK_THROWS_AS(interpolate_profile(two_d, nan_s, 1.0), InvalidProfile);
}

TEST_CASE("physical validity gate") {
  SoundSpeedProfile p;
  CHECK_FALSE(p.physically_valid());  // empty
  p.speeds = {1500.0, 1485.5};
  CHECK(p.physically_valid());
  p.speeds = {1500.0, 1299.0};
  CHECK_FALSE(p.physically_valid());
  p.speeds = {1700.0};
  CHECK_FALSE(p.physically_valid());
  p.speeds = {1500.0, std::nan("")};
  CHECK_FALSE(p.physically_valid());
}

TEST_CASE("reference mean averages elementwise") {
  ReferenceSet refs;
  for (int k = 0; k < 4; ++k) {
    ReferenceEntry e;
    e.coord = {static_cast<double>(k), 0.0};
    e.profile.speeds = {1500.0 + k, 1490.0 - k};
    refs.entries.push_back(e);
  }
  SoundSpeedProfile m = mean_reference_profile(refs);
  REQUIRE(m.size() == 2);
  CHECK(m[0] == doctest::Approx(1501.5).epsilon(1e-15));
  CHECK(m[1] == doctest::Approx(1488.5).epsilon(1e-15));

  ReferenceSet empty;
  CHECK_THROWS_AS(mean_reference_profile(empty), EmptyDataset);

  refs.entries.front().profile.speeds = {1500.0};
  CHECK_THROWS_AS(mean_reference_profile(refs), ShapeError);
}
