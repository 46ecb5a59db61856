#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sspfield/baselines.hpp"
#include "sspfield/errors.hpp"
#include "sspfield/gradcheck.hpp"
#include "sspfield/grid.hpp"
#include "sspfield/hash.hpp"
#include "sspfield/losses.hpp"
#include "sspfield/normalize.hpp"

using namespace sspfield;

namespace {

Sample make_sample(const std::vector<GeoCoordinate>& ref_coords,
                   const std::vector<std::vector<double>>& ref_speeds,
                   GeoCoordinate target) {
  Sample s;
  s.target_coord = target;
  s.target_sst = 12.0;
  for (std::size_t i = 0; i < ref_coords.size(); ++i) {
    ReferenceEntry e;
    e.coord = ref_coords[i];
    e.sst = 10.0 + static_cast<double>(i);
    e.profile.speeds = ref_speeds[i];
    s.refs.entries.push_back(e);
  }
  return s;
}

}  // namespace

TEST_CASE("inverse-distance weights at distances 1 and 2 are 0.8 and 0.2") {
  Sample s = make_sample({{1.0, 0.0}, {2.0, 0.0}},
                         {{1500.0, 1490.0}, {1510.0, 1500.0}}, {0.0, 0.0});
  SoundSpeedProfile p = idw_estimate(s);  // p = 2
  CHECK(p[0] == doctest::Approx(0.8 * 1500.0 + 0.2 * 1510.0).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.8 * 1490.0 + 0.2 * 1500.0).epsilon(1e-15));
}

TEST_CASE("equidistant references reduce to the arithmetic mean") {
  Sample s = make_sample({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}},
                         {{1500.0}, {1504.0}, {1508.0}, {1512.0}}, {0.0, 0.0});
  SoundSpeedProfile p = idw_estimate(s);
  CHECK(p[0] == doctest::Approx(1506.0).epsilon(1e-14));
}

TEST_CASE("a collocated reference is returned verbatim") {
  Sample s = make_sample({{0.3, 0.4}, {5.0, 5.0}},
                         {{1500.25, 1490.125}, {1600.0, 1600.0}}, {0.3, 0.4});
  SoundSpeedProfile p = idw_estimate(s);
  CHECK(p[0] == 1500.25);
  CHECK(p[1] == 1490.125);

  // near-collocated within the epsilon counts too
  Sample near = make_sample({{0.3 + 1e-12, 0.4}, {5.0, 5.0}},
                            {{1501.0}, {1600.0}}, {0.3, 0.4});
  CHECK(idw_estimate(near)[0] == 1501.0);
}

TEST_CASE("interpolation against a brute-force oracle on random geometry") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::uniform_real_distribution<double> speed(1480.0, 1520.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const int depth = 4;
    std::vector<GeoCoordinate> coords;
    std::vector<std::vector<double>> profiles;
    for (int i = 0; i < n; ++i) {
      coords.push_back({coord(rng), coord(rng) / 2.0});
      std::vector<double> prof(depth);
      for (double& v : prof) v = speed(rng);
      profiles.push_back(prof);
    }
    GeoCoordinate target{coord(rng), coord(rng) / 2.0};
    Sample s = make_sample(coords, profiles, target);
    IdwConfig cfg;
    cfg.p = 1.0 + static_cast<double>(trial % 4);
    SoundSpeedProfile got = idw_estimate(s, cfg);

    std::vector<double> w(static_cast<std::size_t>(n));
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
      double dx = coords[static_cast<std::size_t>(i)].lon - target.lon;
      double dy = coords[static_cast<std::size_t>(i)].lat - target.lat;
      w[static_cast<std::size_t>(i)] =
          1.0 / std::pow(std::sqrt(dx * dx + dy * dy), cfg.p);
      wsum += w[static_cast<std::size_t>(i)];
    }
    for (int d = 0; d < depth; ++d) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += w[static_cast<std::size_t>(i)] *
               profiles[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
      acc /= wsum;
      CHECK(std::abs(got[static_cast<std::size_t>(d)] - acc) <= 1e-12);
    }
  }
}

TEST_CASE("interpolated speeds stay inside the reference envelope") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_real_distribution<double> speed(1480.0, 1520.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GeoCoordinate> coords;
    std::vector<std::vector<double>> profiles;
    for (int i = 0; i < 6; ++i) {
      coords.push_back({coord(rng), coord(rng)});
      profiles.push_back({speed(rng), speed(rng)});
    }
    Sample s = make_sample(coords, profiles, {coord(rng), coord(rng)});
    SoundSpeedProfile p = idw_estimate(s);
    for (int d = 0; d < 2; ++d) {
      double lo = 1e9, hi = -1e9;
      for (const auto& prof : profiles) {
        lo = std::min(lo, prof[static_cast<std::size_t>(d)]);
        hi = std::max(hi, prof[static_cast<std::size_t>(d)]);
      }
      CHECK(p[static_cast<std::size_t>(d)] >= lo - 1e-12);
      CHECK(p[static_cast<std::size_t>(d)] <= hi + 1e-12);
    }
  }
}

TEST_CASE("interpolation input validation") {
  Sample empty;
  empty.target_coord = {0.0, 0.0};
  CHECK_THROWS_AS(idw_estimate(empty), EmptyDataset);

  Sample ragged = make_sample({{1.0, 0.0}, {2.0, 0.0}},
                              {{1500.0, 1490.0}, {1510.0}}, {0.0, 0.0});
  CHECK_THROWS_AS(idw_estimate(ragged), ShapeError);

  IdwConfig bad;
  bad.p = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("convolutional baseline shape bookkeeping") {
  CnnConfig cfg;
  CHECK(cfg.in_channels() == 35);
  CHECK(cfg.pooled_len() == 8);
  CHECK_NOTHROW(cfg.validate());

  CnnConfig shallow = cfg;
  shallow.depth = 7;  // cannot survive three halvings
  CHECK_THROWS_AS(shallow.validate(), ShapeError);
}

namespace {

// 3x3 windows from a synthetic field, desk-style split at a small depth.
SampleSplit cnn_fixture(int depth) {
  GridField f = synthesize_field(9, 12, 12, 12, depth);
  SplitSpec s;
  s.train_begin = {2000, 1};
  s.train_end = {2000, 9};
  s.test_begin = {2000, 10};
  s.test_end = {2000, 12};
  return build_samples(f, s);
}

}  // namespace

TEST_CASE("zero-initialized conv baseline predicts the reference mean") {
  SampleSplit split = cnn_fixture(16);
  CnnConfig cfg;
  cfg.depth = 16;
  cfg.c1 = 4;
  cfg.c2 = 4;
  cfg.c3 = 4;
  cfg.fc_hidden = 8;
  CnnBaseline cnn(cfg);
  ParameterStore store;
  cnn.init_params(store, 3);
  NormStats stats = normalize_stats(split.train);

  const Sample& s = split.test.front();
  SoundSpeedProfile got = cnn.estimate(store, apply_norm(s, stats), stats);
  SoundSpeedProfile mean = mean_estimate(s);
  REQUIRE(got.size() == mean.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got[i] - mean[i]) <= 1e-9);
}

TEST_CASE("conv baseline input image stacks profiles then label channels") {
  CnnConfig cfg;
  cfg.depth = 8;
  cfg.n_refs = 2;
  CnnBaseline cnn(cfg);

  NormalizedSample ns;
  ns.n_refs = 2;
  ns.depth = 8;
  ns.target_label = {0.5, -0.5, 0.25};
  ns.ref_coords = {0.1, 0.2, 0.3, 0.4};
  ns.ref_ssts = {0.7, -0.7};
  ns.ref_profiles.assign(16, 0.0);
  for (int i = 0; i < 16; ++i)
    ns.ref_profiles[static_cast<std::size_t>(i)] = 0.01 * i;
  ns.ref_mean_norm.assign(8, 0.0);
  ns.ref_mean_phys.assign(8, 1500.0);

  std::vector<double> img = cnn.input_image(ns);
  REQUIRE(img.size() == static_cast<std::size_t>(cfg.in_channels() * 8));
  CHECK(img[0] == 0.0);          // first profile row
  CHECK(img[8 + 3] == 0.01 * 11);  // second profile row
  // label channels are constant across depth
  for (int ch = 2; ch < cfg.in_channels(); ++ch) {
    const double v0 = img[static_cast<std::size_t>(ch * 8)];
    for (int d = 1; d < 8; ++d)
      CHECK(img[static_cast<std::size_t>(ch * 8 + d)] == v0);
  }
}

TEST_CASE("conv baseline gradients agree with finite differences") {
  SampleSplit split = cnn_fixture(8);
  CnnConfig cfg;
  cfg.depth = 8;
  cfg.c1 = 2;
  cfg.c2 = 2;
  cfg.c3 = 2;
  cfg.fc_hidden = 4;
  CnnBaseline cnn(cfg);
  auto store = std::make_shared<ParameterStore>();
  cnn.init_params(*store, 5);
  // the zero-initialized output layer would zero every upstream gradient
  {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> dist(-0.3, 0.3);
    for (auto& e : store->entries()) {
      bool zero = true;
      for (double v : e.value) zero = zero && v == 0.0;
      if (zero)
        for (double& v : e.value) v = dist(rng);
    }
  }
  NormStats stats = normalize_stats(split.train);
  NormalizedSample ns = apply_norm(split.train.front(), stats);

  GradCheckResult r = grad_check(
      *store,
      [&](diff::Tape& tape, TapeBinding& bind) {
        diff::Tensor delta = cnn.forward(tape, bind, ns);
        diff::Tensor target = tape.constant(
            {1, cfg.depth},
            std::vector<double>(ns.target_norm.begin(), ns.target_norm.end()));
        return reconstruction_term(delta, target);
      },
      1e-5, 6, 1);
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("conv baseline training reduces the loss and is deterministic") {
  SampleSplit split = cnn_fixture(16);
  CnnConfig cfg;
  cfg.depth = 16;
  cfg.c1 = 4;
  cfg.c2 = 4;
  cfg.c3 = 4;
  cfg.fc_hidden = 8;
  cfg.epochs = 5;
  cfg.seed = 2;

  ParameterStore s1, s2;
  NormStats n1, n2;
  std::vector<double> l1 = cnn_train(cfg, s1, n1, split.train);
  std::vector<double> l2 = cnn_train(cfg, s2, n2, split.train);
  REQUIRE(l1.size() == 5);
  CHECK(l1.back() < l1.front());
  CHECK(l1 == l2);
  CHECK(hash_params(s1, "cnn.") == hash_params(s2, "cnn."));
}
