#include "sspfield/optimizer.hpp"

#include <cmath>

#include "sspfield/errors.hpp"

namespace sspfield {

void AdamW::step(ParameterStore& store, double lr, const std::string& prefix) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (auto& e : store.entries()) {
    if (!e.trainable) continue;
    if (!prefix.empty() && e.name.rfind(prefix, 0) != 0) continue;
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      double g = e.grad[i];
      if (!std::isfinite(g))
        throw NumericalError("non-finite gradient in parameter " + e.name);
      e.m[i] = cfg_.beta1 * e.m[i] + (1.0 - cfg_.beta1) * g;
      e.v[i] = cfg_.beta2 * e.v[i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = e.m[i] / bc1;
      double vhat = e.v[i] / bc2;
      e.value[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                          cfg_.weight_decay * e.value[i]);
    }
  }
}

}  // namespace sspfield
