#pragma once

#include <cstdint>

#include "sspfield/normalize.hpp"
#include "sspfield/ops.hpp"
#include "sspfield/params.hpp"

namespace sspfield {

struct DiscriminatorConfig {
  int d_r = 32;
  int n_attn_layers = 2;
  double dropout = 0.05;
  int n_refs = 8;
  int depth = 64;
  int dw_kernel = 3;
  int ffn_hidden = 0;  // 0 means 2 * d_r

  int ffn_dim() const { return ffn_hidden > 0 ? ffn_hidden : 2 * d_r; }
  void validate() const;
};

struct DiscriminatorOutput {
  diff::Tensor realism;   // [1, 1]
  diff::Tensor pred_loc;  // [1, 2] normalized lon/lat
  diff::Tensor pred_sst;  // [1, 1] normalized
  diff::Tensor h_loc;     // [1, d_r] location-branch feature
  diff::Tensor h_sst;     // [1, d_r] SST-branch feature
};

/// Multi-task critic. The candidate profile queries the reference profiles;
/// one branch reads reference location labels as attention values, the other
/// reads SST labels. Each branch regresses its label for the target, and a
/// scalar realism score is read from both branch features together.
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorConfig cfg);
  const DiscriminatorConfig& config() const { return cfg_; }

  void init_params(ParameterStore& store, std::uint64_t seed) const;

  /// `candidate` is a [1, D] normalized profile tensor on the same tape; pass
  /// a tape input to obtain input gradients (for the penalties), a constant
  /// otherwise.
  DiscriminatorOutput forward(diff::Tape& tape, TapeBinding& params,
                              diff::Tensor candidate,
                              const NormalizedSample& sample) const;

 private:
  DiscriminatorConfig cfg_;
};

}  // namespace sspfield
