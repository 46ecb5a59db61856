#include "sspfield/losses.hpp"

#include <cmath>

#include "sspfield/errors.hpp"
#include "sspfield/rng.hpp"

namespace sspfield {

using diff::Tensor;

double softplus_value(double x) {
  // log(1 + e^x) without overflow for large |x|.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

namespace {

double mean_softplus_diff(const std::vector<double>& fake,
                          const std::vector<double>& real) {
  if (fake.size() != real.size() || fake.empty())
    throw ShapeError("logit stacks must be equal-length and non-empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < fake.size(); ++i)
    acc += softplus_value(fake[i] - real[i]);
  return acc / static_cast<double>(fake.size());
}

}  // namespace

double generator_adversarial_value(const std::vector<double>& fake_logits,
                                   const std::vector<double>& real_logits) {
  return -mean_softplus_diff(fake_logits, real_logits);
}

double discriminator_adversarial_value(const std::vector<double>& fake_logits,
                                       const std::vector<double>& real_logits) {
  return mean_softplus_diff(fake_logits, real_logits);
}

double reconstruction_value(const std::vector<std::vector<double>>& fake,
                            const std::vector<std::vector<double>>& real) {
  if (fake.size() != real.size() || fake.empty())
    throw ShapeError("profile stacks must be equal-length and non-empty");
  double acc = 0.0;
  for (std::size_t b = 0; b < fake.size(); ++b) {
    if (fake[b].size() != real[b].size() || fake[b].empty())
      throw ShapeError("profiles must be equal-length and non-empty");
    double sq = 0.0;
    for (std::size_t i = 0; i < fake[b].size(); ++i) {
      double d = fake[b][i] - real[b][i];
      sq += d * d;
    }
    acc += std::sqrt(sq / static_cast<double>(fake[b].size()) + kReconEps);
  }
  return acc / static_cast<double>(fake.size());
}

double mse_value(const std::vector<double>& pred,
                 const std::vector<double>& target) {
  if (pred.size() != target.size() || pred.empty())
    throw ShapeError("prediction stacks must be equal-length and non-empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

GeneratorLossParts generator_loss_value(
    const std::vector<double>& fake_logits,
    const std::vector<double>& real_logits,
    const std::vector<std::vector<double>>& fake_profiles,
    const std::vector<std::vector<double>>& real_profiles, double eta_recon) {
  GeneratorLossParts parts;
  parts.adversarial = generator_adversarial_value(fake_logits, real_logits);
  parts.reconstruction = reconstruction_value(fake_profiles, real_profiles);
  parts.total = parts.adversarial + eta_recon * parts.reconstruction;
  return parts;
}

DiscriminatorLossParts discriminator_loss_value(
    const std::vector<double>& fake_logits,
    const std::vector<double>& real_logits, double r1, double r2,
    double eta_r1, double eta_r2, double mse_loc, double mse_sst,
    double lambda_loc, double lambda_sst) {
  DiscriminatorLossParts parts;
  parts.adversarial = discriminator_adversarial_value(fake_logits, real_logits);
  parts.r1 = r1;
  parts.r2 = r2;
  parts.aux_loc = mse_loc;
  parts.aux_sst = mse_sst;
  parts.total = parts.adversarial + eta_r1 * r1 + eta_r2 * r2 +
                lambda_loc * mse_loc + lambda_sst * mse_sst;
  return parts;
}

Tensor adversarial_pair_term(Tensor fake_logits, Tensor real_logits) {
  return diff::mean(diff::softplus(diff::sub(fake_logits, real_logits)));
}

Tensor reconstruction_term(Tensor fake, Tensor real) {
  Tensor sq = diff::simple_gate(diff::sub(fake, real));
  return diff::mean(diff::sqrt_eps(diff::row_mean(sq), kReconEps));
}

Tensor mse_term(Tensor pred, Tensor target) {
  return diff::mean(diff::simple_gate(diff::sub(pred, target)));
}

Tensor generator_loss_term(Tensor fake_logits, Tensor real_logits,
                           Tensor fake_profiles, Tensor real_profiles,
                           double eta_recon) {
  Tensor adv = diff::scale(adversarial_pair_term(fake_logits, real_logits), -1.0);
  Tensor recon = reconstruction_term(fake_profiles, real_profiles);
  return diff::add(adv, diff::scale(recon, eta_recon));
}

void configure_penalty_tape(diff::Tape& tape, const PenaltyProbe& probe,
                            std::size_t sample) {
  tape.dropout_seed = splitmix64(probe.seed ^ (sample + 1));
  tape.dropout_step = probe.step;
  tape.train_mode = probe.train;
}

GradientPenalty input_gradient_penalty(
    const std::vector<std::vector<double>>& candidates, int depth,
    const RealismFn& realism, const PenaltyProbe& probe) {
  if (candidates.empty()) throw ShapeError("penalty needs at least one candidate");
  GradientPenalty out;
  out.input_grads.resize(candidates.size());
  for (std::size_t b = 0; b < candidates.size(); ++b) {
    if (static_cast<int>(candidates[b].size()) != depth)
      throw ShapeError("candidate profile width does not match depth");
    diff::Tape tape;
    configure_penalty_tape(tape, probe, b);
    Tensor cand = tape.input({1, depth}, candidates[b]);
    Tensor score = realism(tape, cand, b);
    if (score.size() != 1)
      throw ContractError("realism builder must return a scalar");
    tape.backward(score);
    const std::vector<double>& g = tape.grad_of(cand);
    double norm_sq = 0.0;
    for (double v : g) norm_sq += v * v;
    out.value += norm_sq;
    out.input_grads[b] = g;
  }
  out.value /= static_cast<double>(candidates.size());
  return out;
}

}  // namespace sspfield
