#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sspfield/params.hpp"

namespace sspfield {

/// A scalar objective rebuilt from scratch on every evaluation. The builder
/// must read parameters only through the binding so perturbed values are
/// picked up.
using ScalarBuilder =
    std::function<diff::Tensor(diff::Tape&, TapeBinding&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t coords_checked = 0;
};

/// Compares reverse-sweep gradients against central finite differences
/// (f(θ+h) − f(θ−h)) / 2h on a seeded random subset of coordinates per
/// trainable parameter. Relative error uses max(1, |analytic|, |numeric|) as
/// the denominator. Non-scalar builders throw ContractError.
GradCheckResult grad_check(ParameterStore& store, const ScalarBuilder& f,
                           double h = 1e-5, std::size_t coords_per_param = 8,
                           std::uint64_t seed = 0);

/// One named check scenario owning its parameters. `build` must reconstruct
/// the same objective on every call; scenarios that exercise dropout pin the
/// tape's mask keys themselves so re-forwards see identical masks.
struct GradCheckCase {
  std::string name;
  std::shared_ptr<ParameterStore> store;
  ScalarBuilder build;
};

/// Scenarios covering every differentiable op in isolation plus the full
/// generator and discriminator as composites. Parameter tensors stay at
/// 16 elements or fewer so finite differencing over all of them is quick.
/// Outputs are reduced against a fixed non-uniform weighting, which catches
/// element-permutation mistakes a plain mean would hide.
std::vector<GradCheckCase> standard_gradcheck_cases(std::uint64_t seed = 0);

}  // namespace sspfield
