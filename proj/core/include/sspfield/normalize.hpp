#pragma once

#include <vector>

#include "sspfield/sample.hpp"

namespace sspfield {

/// Standardization statistics fitted on the training split only. Profiles are
/// standardized per depth level, SST globally, and coordinates mapped
/// affinely onto [-1, 1] over the training extent.
struct NormStats {
  std::vector<double> depth_mean;
  std::vector<double> depth_std;  // floored at 1e-6
  double sst_mean = 0.0;
  double sst_std = 1.0;
  double lon_min = 0.0, lon_max = 0.0;
  double lat_min = 0.0, lat_max = 0.0;

  std::size_t depth() const { return depth_mean.size(); }

  double norm_speed(std::size_t level, double v) const {
    return (v - depth_mean[level]) / depth_std[level];
  }
  double denorm_speed(std::size_t level, double v) const {
    return v * depth_std[level] + depth_mean[level];
  }
  double norm_sst(double v) const { return (v - sst_mean) / sst_std; }
  double denorm_sst(double v) const { return v * sst_std + sst_mean; }
  double norm_lon(double v) const { return affine(v, lon_min, lon_max); }
  double norm_lat(double v) const { return affine(v, lat_min, lat_max); }

 private:
  static double affine(double v, double lo, double hi) {
    double span = hi - lo;
    if (span < 1e-12) return 0.0;  // degenerate extent collapses to the center
    return 2.0 * (v - lo) / span - 1.0;
  }
};

/// Model-ready view of one sample. Profiles and labels are in normalized
/// units; the reference mean and the true profile are also kept in physical
/// units for reconstruction and scoring.
struct NormalizedSample {
  int n_refs = 0;
  int depth = 0;
  std::vector<double> target_label;      // [2 + 1]: lon, lat, sst (normalized)
  std::vector<double> ref_coords;        // [n_refs * 2]
  std::vector<double> ref_ssts;          // [n_refs]
  std::vector<double> ref_profiles;      // [n_refs * depth], normalized
  std::vector<double> ref_mean_norm;     // [depth], normalized mean of refs
  std::vector<double> ref_mean_phys;     // [depth], physical m/s
  std::vector<double> target_norm;       // [depth] or empty when unlabeled
  std::vector<double> target_phys;       // [depth] or empty when unlabeled
};

/// Fit statistics over every profile, SST and coordinate appearing in the
/// given (training) samples, references and targets alike.
NormStats normalize_stats(const std::vector<Sample>& train);

NormalizedSample apply_norm(const Sample& sample, const NormStats& stats);

std::vector<NormalizedSample> apply_norm(const std::vector<Sample>& samples,
                                         const NormStats& stats);

}  // namespace sspfield
