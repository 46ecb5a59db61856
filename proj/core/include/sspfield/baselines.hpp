#pragma once

#include <cstdint>
#include <vector>

#include "sspfield/normalize.hpp"
#include "sspfield/ops.hpp"
#include "sspfield/params.hpp"
#include "sspfield/profile.hpp"
#include "sspfield/sample.hpp"

namespace sspfield {

/// Reference-mean estimator: the elementwise average of the neighbors.
SoundSpeedProfile mean_estimate(const Sample& sample);

struct IdwConfig {
  double p = 2.0;              // power exponent on planar distance
  double zero_dist_eps = 1e-9; // below this the collocated reference wins
  void validate() const;
};

/// Inverse-distance weighting over the reference window, per depth level.
/// A reference within zero_dist_eps of the target is returned verbatim.
SoundSpeedProfile idw_estimate(const Sample& sample, const IdwConfig& cfg = {});

struct CnnConfig {
  int c1 = 8;   // conv channels; full-scale runs use 64/128/256
  int c2 = 16;
  int c3 = 32;
  int kernel = 3;
  int fc_hidden = 64;
  int n_refs = 8;
  int depth = 64;
  int epochs = 30;
  int batch = 16;
  double lr = 1e-3;
  double weight_decay = 1e-3;
  std::uint64_t seed = 0;

  /// Channels stacked along the input: neighbor profiles, then each
  /// reference coordinate pair, the target coordinates, reference SSTs and
  /// the target SST, all label channels broadcast over depth.
  int in_channels() const { return 4 * n_refs + 3; }
  /// Length after the three width-2 pools.
  int pooled_len() const { return depth / 2 / 2 / 2; }
  void validate() const;
};

/// Convolutional comparison model: three conv/ReLU/pool stages over the
/// stacked sample image, two dense layers, and the same perturbation-plus-
/// reference-mean composition as the generator. The final layer starts at
/// zero so the untrained prediction is the mean baseline.
class CnnBaseline {
 public:
  explicit CnnBaseline(CnnConfig cfg);
  const CnnConfig& config() const { return cfg_; }

  void init_params(ParameterStore& store, std::uint64_t seed) const;

  /// [in_channels, depth] image in normalized units, row-major.
  std::vector<double> input_image(const NormalizedSample& sample) const;

  /// Normalized perturbation of shape [1, depth].
  diff::Tensor forward(diff::Tape& tape, TapeBinding& params,
                       const NormalizedSample& sample) const;

  std::vector<double> perturbation(ParameterStore& store,
                                   const NormalizedSample& sample) const;

  SoundSpeedProfile estimate(ParameterStore& store,
                             const NormalizedSample& sample,
                             const NormStats& stats) const;

  /// Fits on the split with the per-sample RMSE objective; fills `store`
  /// (fresh `cnn.*` entries) and `stats`. Returns mean train loss per epoch.
  std::vector<double> train(ParameterStore& store, NormStats& stats,
                            const std::vector<Sample>& train_samples) const;

 private:
  CnnConfig cfg_;
};

/// Convenience wrappers over CnnBaseline.
std::vector<double> cnn_train(const CnnConfig& cfg, ParameterStore& store,
                              NormStats& stats,
                              const std::vector<Sample>& train_samples);
SoundSpeedProfile cnn_estimate(const CnnConfig& cfg, ParameterStore& store,
                               const NormStats& stats, const Sample& sample);

}  // namespace sspfield
