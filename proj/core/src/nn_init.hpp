#pragma once

#include <cmath>
#include <random>
#include <string>

#include "sspfield/params.hpp"

namespace sspfield {

/// Registers parameters in a fixed order with fan-in-scaled uniform weights.
/// The draw order is the registration order, so a seed fixes every value.
struct ParamInit {
  ParameterStore& store;
  std::mt19937_64 rng;

  ParamInit(ParameterStore& s, std::uint64_t seed) : store(s), rng(seed) {}

  void matrix(const std::string& name, int rows, int cols, int fan_in,
              bool zero = false) {
    std::vector<double> w(static_cast<std::size_t>(rows) * cols, 0.0);
    if (!zero) {
      double a = std::sqrt(1.0 / static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-a, a);
      for (double& x : w) x = u(rng);
    }
    store.add(name, {rows, cols}, std::move(w));
  }

  void vector(const std::string& name, int n, double fill) {
    store.add(name, {n}, std::vector<double>(static_cast<std::size_t>(n), fill));
  }

  void linear(const std::string& prefix, int in, int out, bool zero = false) {
    matrix(prefix + ".w", in, out, in, zero);
    vector(prefix + ".b", out, 0.0);
  }

  void layer_norm(const std::string& prefix, int n) {
    vector(prefix + ".g", n, 1.0);
    vector(prefix + ".b", n, 0.0);
  }
};

}  // namespace sspfield
