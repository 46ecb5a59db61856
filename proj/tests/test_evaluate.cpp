#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "sspfield/baselines.hpp"
#include "sspfield/errors.hpp"
#include "sspfield/evaluate.hpp"
#include "sspfield/grid.hpp"
#include "sspfield/trainer.hpp"

using namespace sspfield;

namespace {

std::string temp_dir(const char* tag) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "/tmp/sspfield_eval_%s_%d", tag,
                static_cast<int>(getpid()));
  std::string cmd = "rm -rf " + std::string(buf) + " && mkdir -p " + buf;
  REQUIRE(std::system(cmd.c_str()) == 0);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("overall score is the root of the mean L2 distance") {
  // Two profiles with error norms 3 and 4: sqrt((3 + 4) / 2), not
  // sqrt((9 + 16) / 2) -- the distances are not squared again.
  std::vector<std::vector<double>> preds = {{3.0, 0.0}, {0.0, 4.0}};
  std::vector<std::vector<double>> truths = {{0.0, 0.0}, {0.0, 0.0}};
  CHECK(std::abs(rmse_eq33(preds, truths) - std::sqrt(3.5)) <= 1e-12);

  // One sample: sqrt(|e|).
  std::vector<std::vector<double>> p1 = {{0.7}};
  std::vector<std::vector<double>> t1 = {{0.0}};
  CHECK(std::abs(rmse_eq33(p1, t1) - std::sqrt(0.7)) <= 1e-12);

  // Perfect predictions score zero.
  CHECK(rmse_eq33(truths, truths) == 0.0);
}

TEST_CASE("overall score matches a direct-formula oracle on random data") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 7, d = 1 + rng() % 5;
    std::vector<std::vector<double>> preds(n), truths(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i].resize(d);
      truths[i].resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        preds[i][j] = dist(rng);
        truths[i][j] = dist(rng);
      }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double e = preds[i][j] - truths[i][j];
        sq += e * e;
      }
      acc += std::sqrt(sq);
    }
    double oracle = std::sqrt(acc / static_cast<double>(n));
    CHECK(std::abs(rmse_eq33(preds, truths) - oracle) <= 1e-12);
  }
}

TEST_CASE("overall score input validation") {
  CHECK_THROWS_AS(rmse_eq33({}, {}), EmptyDataset);
  CHECK_THROWS_AS(rmse_eq33({{1.0}}, {{1.0}, {2.0}}), ShapeError);
  CHECK_THROWS_AS(rmse_eq33({{1.0, 2.0}}, {{1.0}}), ShapeError);
}

TEST_CASE("per-depth error is a conventional root mean square") {
  // Errors 3 and 4 at depth level 2: sqrt((9 + 16) / 2) = sqrt(12.5).
  std::vector<std::vector<double>> preds = {{0, 0, 3.0}, {0, 0, 4.0}};
  std::vector<std::vector<double>> truths = {{0, 0, 0.0}, {0, 0, 0.0}};
  CHECK(std::abs(rmse_per_depth(preds, truths, 2.0) - std::sqrt(12.5)) <=
        1e-12);
  CHECK(rmse_per_depth(preds, truths, 0.0) == 0.0);

  // Non-unit spacing: depth 4m with step 2m is level 2.
  CHECK(std::abs(rmse_per_depth(preds, truths, 4.0, 2.0) - std::sqrt(12.5)) <=
        1e-12);

  CHECK_THROWS_AS(rmse_per_depth(preds, truths, 2.5), RangeError);
  CHECK_THROWS_AS(rmse_per_depth(preds, truths, 7.0), RangeError);
  CHECK_THROWS_AS(rmse_per_depth(preds, truths, -1.0), RangeError);
}

TEST_CASE("ecdf fractions count values at or below each point") {
  EcdfCurve c = ecdf({0.5, 0.1, 0.3});
  REQUIRE(c.values.size() == 3);
  CHECK(c.values == std::vector<double>{0.1, 0.3, 0.5});
  CHECK(c.fractions[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(c.fractions[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(c.fractions[2] == 1.0);

  // Ties: every copy of a repeated value reports the full count.
  EcdfCurve t = ecdf({2.0, 2.0, 1.0});
  CHECK(t.values == std::vector<double>{1.0, 2.0, 2.0});
  CHECK(t.fractions[1] == 1.0);
  CHECK(t.fractions[2] == 1.0);

  CHECK_THROWS_AS(ecdf({}), EmptyDataset);
}

TEST_CASE("ecdf matches a sorted-count oracle on random thresholds") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(0.0, 5.0);
  std::vector<double> errors(40);
  for (double& e : errors) e = dist(rng);
  EcdfCurve c = ecdf(errors);
  REQUIRE(c.values.size() == errors.size());
  CHECK(std::is_sorted(c.values.begin(), c.values.end()));
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    std::size_t count = 0;
    for (double e : errors)
      if (e <= c.values[i]) ++count;
    double oracle = static_cast<double>(count) / static_cast<double>(errors.size());
    CHECK(std::abs(c.fractions[i] - oracle) <= 1e-12);
  }
}

namespace {

SampleSplit eval_fixture() {
  GridField f = synthesize_field(21, 12, 12, 12, 12);
  SplitSpec s;
  s.train_begin = {2000, 1};
  s.train_end = {2000, 9};
  s.test_begin = {2000, 10};
  s.test_end = {2000, 12};
  return build_samples(f, s);
}

std::vector<Estimator> baseline_estimators() {
  return {
      {"MEAN", [](const Sample& s) { return mean_estimate(s); }, 0},
      {"IDW", [](const Sample& s) { return idw_estimate(s); }, 0},
  };
}

}  // namespace

TEST_CASE("evaluation report does not depend on sample order") {
  SampleSplit split = eval_fixture();
  EvaluationReport a = compare_methods(split.test, baseline_estimators());

  std::vector<Sample> shuffled = split.test;
  std::mt19937_64 rng(99);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EvaluationReport b = compare_methods(shuffled, baseline_estimators());

  REQUIRE(a.methods.size() == b.methods.size());
  for (std::size_t m = 0; m < a.methods.size(); ++m) {
    const MethodReport &ma = a.methods[m], &mb = b.methods[m];
    CHECK(ma.method == mb.method);
    CHECK(ma.overall_rmse == mb.overall_rmse);  // bitwise: aggregation is sorted
    CHECK(ma.per_depth_rmse == mb.per_depth_rmse);
    REQUIRE(ma.per_location.size() == mb.per_location.size());
    for (std::size_t i = 0; i < ma.per_location.size(); ++i) {
      CHECK(ma.per_location[i].coord.lon == mb.per_location[i].coord.lon);
      CHECK(ma.per_location[i].coord.lat == mb.per_location[i].coord.lat);
      CHECK(ma.per_location[i].rmse == mb.per_location[i].rmse);
    }
  }
}

TEST_CASE("per-location rows come out sorted by month then position") {
  SampleSplit split = eval_fixture();
  EvaluationReport r = compare_methods(split.test, baseline_estimators());
  const auto& rows = r.methods[0].per_location;
  REQUIRE(!rows.empty());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const LocationError &p = rows[i - 1], &q = rows[i];
    auto key = [](const LocationError& e) {
      return std::make_tuple(e.tag.index(), e.coord.lat, e.coord.lon);
    };
    CHECK(key(p) <= key(q));
  }
}

TEST_CASE("a failing estimator is reported partial, not fatal") {
  SampleSplit split = eval_fixture();
  std::vector<Estimator> est = baseline_estimators();
  int calls = 0;
  est.push_back({"FLAKY",
                 [&calls](const Sample& s) {
                   if (++calls % 3 == 0) throw RangeError("synthetic failure");
                   return mean_estimate(s);
                 },
                 0});
  EvaluationReport r = compare_methods(split.test, est);
  REQUIRE(r.methods.size() == 3);
  const MethodReport& flaky = r.methods[2];
  CHECK(flaky.partial);
  CHECK(!flaky.failures.empty());
  // failure messages carry the sample position and the cause for triage
  CHECK(flaky.failures.front().rfind("sample ", 0) == 0);
  CHECK(flaky.failures.front().find("synthetic failure") != std::string::npos);
  CHECK(std::isfinite(flaky.overall_rmse));
  // the healthy methods are untouched
  CHECK(!r.methods[0].partial);
  CHECK(r.methods[0].failures.empty());
}

TEST_CASE("a method that fails on every sample reports NaN") {
  SampleSplit split = eval_fixture();
  std::vector<Estimator> est = {
      {"BROKEN",
       [](const Sample&) -> SoundSpeedProfile {
         throw RangeError("always fails");
       },
       0}};
  EvaluationReport r = compare_methods(split.test, est);
  CHECK(r.methods[0].partial);
  CHECK(std::isnan(r.methods[0].overall_rmse));
  CHECK(r.methods[0].failures.size() == split.test.size());
}

TEST_CASE("evaluation rejects unusable inputs") {
  SampleSplit split = eval_fixture();
  CHECK_THROWS_AS(compare_methods({}, baseline_estimators()), EmptyDataset);
  CHECK_THROWS_AS(compare_methods(split.test, {}), ConfigError);

  // Unlabeled samples cannot be scored.
  std::vector<Sample> unlabeled = split.test;
  for (Sample& s : unlabeled) s.target_profile.reset();
  CHECK_THROWS_AS(compare_methods(unlabeled, baseline_estimators()),
                  InvalidProfile);

  // Mixed depth counts are a caller bug, not a partial failure.
  std::vector<Sample> ragged = split.test;
  ragged.back().target_profile->speeds.push_back(1500.0);
  CHECK_THROWS_AS(compare_methods(ragged, baseline_estimators()), ShapeError);
}

TEST_CASE("csv artifacts regenerate byte for byte") {
  SampleSplit split = eval_fixture();
  std::string dir = temp_dir("csv");
  EvalOptions opt;
  opt.depths_m = {0.0, 5.0, 11.0};
  opt.out_dir = dir + "/a";
  REQUIRE(std::system(("mkdir -p " + opt.out_dir).c_str()) == 0);
  compare_methods(split.test, baseline_estimators(), opt);

  EvalOptions opt2 = opt;
  opt2.out_dir = dir + "/b";
  REQUIRE(std::system(("mkdir -p " + opt2.out_dir).c_str()) == 0);
  compare_methods(split.test, baseline_estimators(), opt2);

  for (const char* name :
       {"overall.csv", "per_depth.csv", "ecdf_0.csv", "ecdf_5.csv",
        "ecdf_11.csv"}) {
    std::string a = slurp(opt.out_dir + "/" + name);
    CHECK(a == slurp(opt2.out_dir + "/" + name));
    CHECK(!a.empty());
  }

  std::string overall = slurp(opt.out_dir + "/overall.csv");
  CHECK(overall.rfind("method,rmse_eq33,n_params,inference_ms", 0) == 0);
  std::string per_depth = slurp(opt.out_dir + "/per_depth.csv");
  CHECK(per_depth.rfind("method,depth_m,rmse", 0) == 0);
  std::string ec = slurp(opt.out_dir + "/ecdf_5.csv");
  CHECK(ec.rfind("method,value,fraction", 0) == 0);
}

TEST_CASE("embedding export writes three feature rows per sample") {
  SampleSplit split = eval_fixture();
  GeneratorConfig gcfg;
  gcfg.d_r = 8;
  gcfg.n_attn_layers = 1;
  gcfg.depth = 12;
  DiscriminatorConfig dcfg;
  dcfg.d_r = 8;
  dcfg.n_attn_layers = 1;
  dcfg.depth = 12;
  ParameterStore store;
  init_model_params(store, gcfg, dcfg, 4);
  NormStats stats = normalize_stats(split.train);

  std::vector<Sample> subset(split.test.begin(), split.test.begin() + 5);
  std::string path = temp_dir("emb") + "/embeddings.csv";
  export_embeddings(Generator(gcfg), Discriminator(dcfg), store, stats, subset,
                    path);

  std::string text = slurp(path);
  CHECK(text.rfind("kind,tag,f0,f1,f2,f3,f4,f5,f6,f7", 0) == 0);
  std::size_t rows = static_cast<std::size_t>(
      std::count(text.begin(), text.end(), '\n'));
  CHECK(rows == 1 + 3 * subset.size());
  CHECK(text.find("neighbor_label,real") != std::string::npos);
  CHECK(text.find("loc_label,generated") != std::string::npos);
  CHECK(text.find("sst_label,generated") != std::string::npos);

  DiscriminatorConfig wide = dcfg;
  wide.d_r = 16;
  ParameterStore other;
  init_model_params(other, gcfg, wide, 4);
  CHECK_THROWS_AS(export_embeddings(Generator(gcfg), Discriminator(wide), other,
                                    stats, subset, path),
                  ContractError);
}

TEST_CASE("default depth selection spans the profile") {
  SampleSplit split = eval_fixture();
  EvaluationReport r = compare_methods(split.test, baseline_estimators());
  // depth 12 profiles: surface, quarter, half, bottom
  CHECK(r.depths == std::vector<double>{0.0, 3.0, 6.0, 11.0});
  for (const MethodReport& m : r.methods) {
    CHECK(m.per_depth_rmse.size() == r.depths.size());
    CHECK(m.ecdf_by_depth.size() == r.depths.size());
  }
}
