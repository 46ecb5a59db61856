#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sspfield/ops.hpp"

namespace sspfield {

/// Epsilon inside the per-profile RMSE sqrt; keeps the gradient finite when a
/// candidate matches its target exactly.
inline constexpr double kReconEps = 1e-12;

// Plain-double loss formulas. The trainer logs these and the tape builders
// below must agree with them to rounding error, so they double as oracles.

double softplus_value(double x);

/// -mean_b softplus(fake_b - real_b). Equal logits give -ln 2.
double generator_adversarial_value(const std::vector<double>& fake_logits,
                                   const std::vector<double>& real_logits);

/// +mean_b softplus(fake_b - real_b).
double discriminator_adversarial_value(const std::vector<double>& fake_logits,
                                       const std::vector<double>& real_logits);

/// mean_b sqrt(mean_d (fake - real)^2 + eps), profiles in normalized units.
double reconstruction_value(const std::vector<std::vector<double>>& fake,
                            const std::vector<std::vector<double>>& real);

/// Mean squared error over every element of the stacked predictions.
double mse_value(const std::vector<double>& pred,
                 const std::vector<double>& target);

struct GeneratorLossParts {
  double adversarial = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
};

GeneratorLossParts generator_loss_value(
    const std::vector<double>& fake_logits,
    const std::vector<double>& real_logits,
    const std::vector<std::vector<double>>& fake_profiles,
    const std::vector<std::vector<double>>& real_profiles, double eta_recon);

struct DiscriminatorLossParts {
  double adversarial = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double aux_loc = 0.0;
  double aux_sst = 0.0;
  double total = 0.0;
};

DiscriminatorLossParts discriminator_loss_value(
    const std::vector<double>& fake_logits,
    const std::vector<double>& real_logits, double r1, double r2,
    double eta_r1, double eta_r2, double mse_loc, double mse_sst,
    double lambda_loc, double lambda_sst);

// Tape builders for the differentiable pieces. Logit stacks are [B,1],
// profile stacks [B,D].

diff::Tensor adversarial_pair_term(diff::Tensor fake_logits,
                                   diff::Tensor real_logits);
diff::Tensor reconstruction_term(diff::Tensor fake, diff::Tensor real);
diff::Tensor mse_term(diff::Tensor pred, diff::Tensor target);

/// Full generator objective on the tape:
/// -mean softplus(fake - real) + eta * reconstruction.
diff::Tensor generator_loss_term(diff::Tensor fake_logits,
                                 diff::Tensor real_logits,
                                 diff::Tensor fake_profiles,
                                 diff::Tensor real_profiles, double eta_recon);

/// Dropout keying for the tapes that differentiate the critic with respect to
/// its profile input. Every re-forward of the same (probe, sample) pair sees
/// identical masks, which the finite-difference pass through the penalty
/// requires.
struct PenaltyProbe {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  bool train = false;
};

void configure_penalty_tape(diff::Tape& tape, const PenaltyProbe& probe,
                            std::size_t sample);

/// Builds the critic's scalar realism score for candidate profile `sample` on
/// the given tape. The candidate tensor is [1, D].
using RealismFn = std::function<diff::Tensor(diff::Tape&, diff::Tensor,
                                             std::size_t)>;

struct GradientPenalty {
  double value = 0.0;  // batch mean of the squared input-gradient norm
  std::vector<std::vector<double>> input_grads;  // one [D] vector per sample
};

/// R = (1/B) sum_b || d realism_b / d candidate_b ||^2, with the per-sample
/// gradients returned for the parameter-side finite-difference pass. Throws
/// ContractError if the builder returns a non-scalar.
GradientPenalty input_gradient_penalty(
    const std::vector<std::vector<double>>& candidates, int depth,
    const RealismFn& realism, const PenaltyProbe& probe = {});

}  // namespace sspfield
