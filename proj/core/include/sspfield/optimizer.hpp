#pragma once

#include <string>

#include "sspfield/params.hpp"

namespace sspfield {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;  // decoupled
};

/// Adaptive-moment optimizer with decoupled weight decay. One instance per
/// network; moments live in the ParameterStore entries, the step counter
/// lives here.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  /// Updates every trainable entry whose name starts with `prefix` from its
  /// grad buffer. Throws NumericalError naming the parameter on a non-finite
  /// gradient.
  void step(ParameterStore& store, double lr, const std::string& prefix = "");

  int steps_taken() const { return t_; }

 private:
  AdamWConfig cfg_;
  int t_ = 0;
};

}  // namespace sspfield
