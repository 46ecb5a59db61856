#include "sspfield/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "sspfield/errors.hpp"

namespace sspfield {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_pair_shapes(const std::vector<std::vector<double>>& preds,
                       const std::vector<std::vector<double>>& truths) {
  if (preds.empty()) throw EmptyDataset("no samples to score");
  if (preds.size() != truths.size())
    throw ShapeError("prediction and truth counts differ");
  std::size_t d = truths.front().size();
  if (d == 0) throw ShapeError("profiles are empty");
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].size() != d || truths[i].size() != d)
      throw ShapeError("profiles disagree on depth count");
}

std::size_t level_for(double depth_m, double step, std::size_t d) {
  double ratio = depth_m / step;
  double rounded = std::round(ratio);
  if (std::fabs(ratio - rounded) > 1e-9 || rounded < 0.0 ||
      rounded >= static_cast<double>(d))
    throw RangeError("depth is not on the profile grid");
  return static_cast<std::size_t>(rounded);
}

}  // namespace

double rmse_eq33(const std::vector<std::vector<double>>& preds,
                 const std::vector<std::vector<double>>& truths) {
  check_pair_shapes(preds, truths);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < preds[i].size(); ++j) {
      double e = preds[i][j] - truths[i][j];
      sq += e * e;
    }
    acc += std::sqrt(sq);  // unsquared norms averaged under the root
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double rmse_per_depth(const std::vector<std::vector<double>>& preds,
                      const std::vector<std::vector<double>>& truths,
                      double depth_m, double depth_step) {
  check_pair_shapes(preds, truths);
  std::size_t level = level_for(depth_m, depth_step, truths.front().size());
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double e = preds[i][level] - truths[i][level];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

EcdfCurve ecdf(const std::vector<double>& errors) {
  if (errors.empty()) throw EmptyDataset("no errors to rank");
  EcdfCurve curve;
  curve.values = errors;
  std::sort(curve.values.begin(), curve.values.end());
  curve.fractions.resize(curve.values.size());
  double n = static_cast<double>(curve.values.size());
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    auto upper = std::upper_bound(curve.values.begin(), curve.values.end(),
                                  curve.values[i]);
    curve.fractions[i] =
        static_cast<double>(upper - curve.values.begin()) / n;
  }
  return curve;
}

EvaluationReport compare_methods(const std::vector<Sample>& samples,
                                 const std::vector<Estimator>& estimators,
                                 const EvalOptions& options) {
  if (estimators.empty()) throw ConfigError("need at least one estimator");
  if (samples.empty()) throw EmptyDataset("no samples to evaluate");
  for (const Sample& s : samples)
    if (!s.target_profile)
      throw InvalidProfile("evaluation sample lacks a measured profile");
  std::size_t d = samples.front().target_profile->size();
  for (const Sample& s : samples)
    if (s.target_profile->size() != d)
      throw ShapeError("samples disagree on depth count");

  EvaluationReport rep;
  double step = options.depth_step;
  if (options.depths_m.empty()) {
    rep.depths = {0.0, static_cast<double>(d / 4) * step,
                  static_cast<double>(d / 2) * step,
                  static_cast<double>(d - 1) * step};
  } else {
    rep.depths = options.depths_m;
  }
  std::vector<std::size_t> levels;
  for (double depth_m : rep.depths) levels.push_back(level_for(depth_m, step, d));

  for (const Estimator& est : estimators) {
    MethodReport mr;
    mr.method = est.name;
    mr.n_params = est.n_params;

    std::vector<const Sample*> ok_samples;
    std::vector<std::vector<double>> preds;
    double total_ms = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      SoundSpeedProfile pred;
      try {
        auto t0 = std::chrono::steady_clock::now();
        pred = est.estimate(samples[i]);
        auto t1 = std::chrono::steady_clock::now();
        if (options.measure_timing)
          total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
      } catch (const std::exception& ex) {
        char head[96];
        std::snprintf(head, sizeof head, "sample %zu (%.6g, %.6g, %04d-%02d): ",
                      i, samples[i].target_coord.lon,
                      samples[i].target_coord.lat, samples[i].epoch_tag.year,
                      samples[i].epoch_tag.month);
        mr.failures.push_back(std::string(head) + ex.what());
        mr.partial = true;
        continue;
      }
      if (pred.size() != d) {
        mr.failures.push_back("sample " + std::to_string(i) +
                              ": estimator returned wrong depth count");
        mr.partial = true;
        continue;
      }
      ok_samples.push_back(&samples[i]);
      preds.push_back(pred.speeds);
    }

    if (preds.empty()) {
      double nan = std::numeric_limits<double>::quiet_NaN();
      mr.overall_rmse = nan;
      mr.per_depth_rmse.assign(rep.depths.size(), nan);
      mr.ecdf_by_depth.resize(rep.depths.size());
      rep.methods.push_back(std::move(mr));
      continue;
    }

    // Sorted accumulation everywhere below keeps the report independent of
    // the sample order.
    std::vector<double> norms(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      double sq = 0.0;
      const std::vector<double>& truth = ok_samples[i]->target_profile->speeds;
      for (std::size_t j = 0; j < d; ++j) {
        double e = preds[i][j] - truth[j];
        sq += e * e;
      }
      norms[i] = std::sqrt(sq);
      LocationError loc;
      loc.coord = ok_samples[i]->target_coord;
      loc.tag = ok_samples[i]->epoch_tag;
      loc.rmse = std::sqrt(sq / static_cast<double>(d));
      mr.per_location.push_back(loc);
    }
    std::sort(norms.begin(), norms.end());
    double acc = 0.0;
    for (double v : norms) acc += v;
    mr.overall_rmse = std::sqrt(acc / static_cast<double>(norms.size()));

    for (std::size_t k = 0; k < levels.size(); ++k) {
      std::vector<double> abs_err(preds.size());
      for (std::size_t i = 0; i < preds.size(); ++i)
        abs_err[i] = std::fabs(preds[i][levels[k]] -
                               ok_samples[i]->target_profile->speeds[levels[k]]);
      std::sort(abs_err.begin(), abs_err.end());
      double sq_sum = 0.0;
      for (double e : abs_err) sq_sum += e * e;
      mr.per_depth_rmse.push_back(
          std::sqrt(sq_sum / static_cast<double>(abs_err.size())));
      mr.ecdf_by_depth.push_back(ecdf(abs_err));
    }

    std::sort(mr.per_location.begin(), mr.per_location.end(),
              [](const LocationError& a, const LocationError& b) {
                if (a.tag.index() != b.tag.index())
                  return a.tag.index() < b.tag.index();
                if (a.coord.lat != b.coord.lat) return a.coord.lat < b.coord.lat;
                if (a.coord.lon != b.coord.lon) return a.coord.lon < b.coord.lon;
                return a.rmse < b.rmse;
              });
    mr.inference_ms = options.measure_timing
                          ? total_ms / static_cast<double>(preds.size())
                          : 0.0;
    rep.methods.push_back(std::move(mr));
  }

  if (!options.out_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec)
      throw IoError("cannot create " + options.out_dir + ": " + ec.message());
    auto open = [&](const std::string& name) {
      std::ofstream f(options.out_dir + "/" + name, std::ios::trunc);
      if (!f) throw IoError("cannot write " + options.out_dir + "/" + name);
      return f;
    };

    std::ofstream overall = open("overall.csv");
    overall << "method,rmse_eq33,n_params,inference_ms\n";
    for (const MethodReport& mr : rep.methods)
      overall << mr.method << ',' << g17(mr.overall_rmse) << ',' << mr.n_params
              << ',' << g17(mr.inference_ms) << '\n';
    overall.flush();
    if (!overall) throw IoError("failed writing overall.csv");

    std::ofstream per_depth = open("per_depth.csv");
    per_depth << "method,depth_m,rmse\n";
    for (const MethodReport& mr : rep.methods)
      for (std::size_t k = 0; k < rep.depths.size(); ++k)
        per_depth << mr.method << ',' << g17(rep.depths[k]) << ','
                  << g17(mr.per_depth_rmse[k]) << '\n';
    per_depth.flush();
    if (!per_depth) throw IoError("failed writing per_depth.csv");

    for (std::size_t k = 0; k < rep.depths.size(); ++k) {
      char name[48];
      std::snprintf(name, sizeof name, "ecdf_%g.csv", rep.depths[k]);
      std::ofstream f = open(name);
      f << "method,value,fraction\n";
      for (const MethodReport& mr : rep.methods) {
        const EcdfCurve& curve = mr.ecdf_by_depth[k];
        for (std::size_t i = 0; i < curve.values.size(); ++i)
          f << mr.method << ',' << g17(curve.values[i]) << ','
            << g17(curve.fractions[i]) << '\n';
      }
      f.flush();
      if (!f) throw IoError(std::string("failed writing ") + name);
    }
  }
  return rep;
}

void export_embeddings(const Generator& gen, const Discriminator& disc,
                       ParameterStore& store, const NormStats& stats,
                       const std::vector<Sample>& samples,
                       const std::string& path) {
  if (gen.config().d_r != disc.config().d_r)
    throw ContractError("embedding widths differ between the networks");
  int d_r = gen.config().d_r;

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << "kind,tag";
  for (int j = 0; j < d_r; ++j) f << ",f" << j;
  f << '\n';

  auto write_row = [&](const char* kind, const char* tag,
                       const std::vector<double>& feat) {
    f << kind << ',' << tag;
    for (double v : feat) f << ',' << g17(v);
    f << '\n';
  };

  for (const Sample& sample : samples) {
    NormalizedSample ns = apply_norm(sample, stats);
    int n = ns.n_refs;

    diff::Tape tape;
    TapeBinding frozen(tape, store, {""});
    diff::Tensor rc = tape.constant({n, 2}, ns.ref_coords);
    diff::Tensor rs = tape.constant({n, 1}, ns.ref_ssts);
    diff::Tensor labels = gen.lfb_forward(tape, frozen, rc, rs);
    const std::vector<double>& lab = labels.value();
    std::vector<double> pooled(static_cast<std::size_t>(d_r), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d_r; ++j)
        pooled[static_cast<std::size_t>(j)] +=
            lab[static_cast<std::size_t>(i * d_r + j)] / n;
    write_row("neighbor_label", "real", pooled);

    std::vector<double> delta = gen.perturbation(store, ns);
    std::vector<double> fake = ns.ref_mean_norm;
    for (std::size_t j = 0; j < fake.size(); ++j) fake[j] += delta[j];
    diff::Tape tape2;
    TapeBinding frozen2(tape2, store, {""});
    diff::Tensor cand = tape2.constant({1, ns.depth}, fake);
    DiscriminatorOutput out = disc.forward(tape2, frozen2, cand, ns);
    write_row("loc_label", "generated", out.h_loc.value());
    write_row("sst_label", "generated", out.h_sst.value());
  }
  f.flush();
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace sspfield
