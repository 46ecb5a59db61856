#pragma once

#include <cstdint>

#include "sspfield/normalize.hpp"
#include "sspfield/ops.hpp"
#include "sspfield/params.hpp"
#include "sspfield/profile.hpp"

namespace sspfield {

struct GeneratorConfig {
  int d_r = 32;          // embedding width
  int n_attn_layers = 2;
  double dropout = 0.05;
  int n_refs = 8;
  int depth = 64;        // profile length D
  int dw_kernel = 3;     // depthwise kernel width in the feature block
  int ffn_hidden = 0;    // 0 means 2 * d_r
  int dec_hidden = 0;    // 0 means 2 * d_r

  int ffn_dim() const { return ffn_hidden > 0 ? ffn_hidden : 2 * d_r; }
  int dec_dim() const { return dec_hidden > 0 ? dec_hidden : 2 * d_r; }
  void validate() const;
};

/// The perturbation generator. Labels are fused per point and gated, the
/// reference profiles are embedded and locally enhanced, a target-label query
/// attends over the references, and a two-layer decoder emits a per-depth
/// perturbation that is added to the reference-mean profile.
class Generator {
 public:
  explicit Generator(GeneratorConfig cfg);
  const GeneratorConfig& config() const { return cfg_; }

  /// Registers all `gen.*` parameters. The final decoder layer starts at
  /// zero so the initial prediction is exactly the reference mean.
  void init_params(ParameterStore& store, std::uint64_t seed) const;

  // Block builders (also the unit-test surface). All shapes are documented
  // against M points with feature width d_r.
  diff::Tensor lfb_forward(diff::Tape& tape, TapeBinding& params,
                           diff::Tensor coords, diff::Tensor ssts) const;
  diff::Tensor embed_profiles(diff::Tape& tape, TapeBinding& params,
                              diff::Tensor profiles) const;
  diff::Tensor fmb_forward(diff::Tape& tape, TapeBinding& params,
                           diff::Tensor z) const;
  diff::Tensor cmpab_forward(diff::Tape& tape, TapeBinding& params,
                             diff::Tensor target_label, diff::Tensor ref_labels,
                             diff::Tensor values) const;
  diff::Tensor decode_perturbation(diff::Tape& tape, TapeBinding& params,
                                   diff::Tensor h) const;

  /// Full pass: normalized perturbation of shape [1, D].
  diff::Tensor forward(diff::Tape& tape, TapeBinding& params,
                       const NormalizedSample& sample) const;

  /// Eval-mode perturbation in normalized units (length D).
  std::vector<double> perturbation(ParameterStore& store,
                                   const NormalizedSample& sample) const;

  /// Eval-mode prediction in physical units: reference mean plus the
  /// denormalized perturbation, composed elementwise.
  SoundSpeedProfile generate(ParameterStore& store, const NormalizedSample& sample,
                             const NormStats& stats) const;

 private:
  GeneratorConfig cfg_;
};

}  // namespace sspfield
