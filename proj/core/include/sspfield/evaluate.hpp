#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sspfield/discriminator.hpp"
#include "sspfield/generator.hpp"
#include "sspfield/normalize.hpp"
#include "sspfield/profile.hpp"
#include "sspfield/sample.hpp"

namespace sspfield {

/// Overall score: sqrt of the mean UNSQUARED L2 distance between predicted
/// and measured profiles. Nonstandard on purpose; per-depth errors use the
/// conventional root-mean-square below.
double rmse_eq33(const std::vector<std::vector<double>>& preds,
                 const std::vector<std::vector<double>>& truths);

/// Root mean squared error across samples at one depth (meters). The depth
/// must sit on the profile grid or RangeError is thrown.
double rmse_per_depth(const std::vector<std::vector<double>>& preds,
                      const std::vector<std::vector<double>>& truths,
                      double depth_m, double depth_step = 1.0);

/// Empirical cumulative distribution: values sorted ascending, fraction_i =
/// (count of errors <= value_i) / n.
struct EcdfCurve {
  std::vector<double> values;
  std::vector<double> fractions;
};

EcdfCurve ecdf(const std::vector<double>& errors);

struct Estimator {
  std::string name;
  std::function<SoundSpeedProfile(const Sample&)> estimate;
  std::size_t n_params = 0;
};

struct LocationError {
  GeoCoordinate coord;
  MonthTag tag;
  double rmse = 0.0;  // per-profile root mean square over depth
};

struct MethodReport {
  std::string method;
  double overall_rmse = 0.0;             // rmse_eq33 over the split
  std::vector<double> per_depth_rmse;    // aligned with EvaluationReport.depths
  std::vector<EcdfCurve> ecdf_by_depth;  // same alignment
  std::vector<LocationError> per_location;
  std::size_t n_params = 0;
  double inference_ms = 0.0;  // mean per sample; 0 when timing is off
  bool partial = false;       // some samples failed and were excluded
  std::vector<std::string> failures;
};

struct EvaluationReport {
  std::vector<double> depths;  // meters
  std::vector<MethodReport> methods;
};

struct EvalOptions {
  std::vector<double> depths_m;  // empty picks {0, D/4, D/2, D-1} * step
  double depth_step = 1.0;
  std::string out_dir;        // empty: no CSV artifacts
  bool measure_timing = false;  // keep off for byte-identical regeneration
};

/// Runs every estimator over every labeled sample and aggregates in sorted
/// order, so the report does not depend on sample order. With out_dir set,
/// writes overall.csv, per_depth.csv and one ecdf_{depth}.csv per depth.
EvaluationReport compare_methods(const std::vector<Sample>& samples,
                                 const std::vector<Estimator>& estimators,
                                 const EvalOptions& options = {});

/// CSV of intermediate feature vectors: per sample one pooled neighbor-label
/// embedding (tag "real") and the critic's location/SST branch features for
/// the generated profile (tag "generated"). Columns: kind, tag, f0..f{d_r-1}.
void export_embeddings(const Generator& gen, const Discriminator& disc,
                       ParameterStore& store, const NormStats& stats,
                       const std::vector<Sample>& samples,
                       const std::string& path);

}  // namespace sspfield
