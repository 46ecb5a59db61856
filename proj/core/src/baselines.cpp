#include "sspfield/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nn_init.hpp"
#include "sspfield/errors.hpp"
#include "sspfield/losses.hpp"
#include "sspfield/optimizer.hpp"
#include "sspfield/rng.hpp"

namespace sspfield {

using diff::Tensor;

SoundSpeedProfile mean_estimate(const Sample& sample) {
  return mean_reference_profile(sample.refs);
}

void IdwConfig::validate() const {
  if (!(p > 0.0)) throw ConfigError("power exponent must be > 0");
  if (zero_dist_eps < 0.0)
    throw ConfigError("zero-distance threshold must be >= 0");
}

SoundSpeedProfile idw_estimate(const Sample& sample, const IdwConfig& cfg) {
  cfg.validate();
  const auto& entries = sample.refs.entries;
  if (entries.empty()) throw EmptyDataset("no references to interpolate from");
  std::size_t d = sample.refs.depth_count();
  for (const ReferenceEntry& e : entries)
    if (e.profile.size() != d)
      throw ShapeError("reference profiles disagree on depth count");

  for (const ReferenceEntry& e : entries)
    if (planar_distance(sample.target_coord, e.coord) < cfg.zero_dist_eps)
      return e.profile;

  std::vector<double> w(entries.size());
  double wsum = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double dist = planar_distance(sample.target_coord, entries[i].coord);
    w[i] = 1.0 / std::pow(dist, cfg.p);
    wsum += w[i];
  }
  SoundSpeedProfile out;
  out.depth_step = entries.front().profile.depth_step;
  out.speeds.assign(d, 0.0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double wn = w[i] / wsum;
    for (std::size_t j = 0; j < d; ++j)
      out.speeds[j] += wn * entries[i].profile[j];
  }
  return out;
}

void CnnConfig::validate() const {
  if (depth < 8)
    throw ShapeError("profile too short for three pooling stages");
  if (c1 < 1 || c2 < 1 || c3 < 1) throw ConfigError("channel counts must be >= 1");
  if (kernel < 1 || kernel % 2 == 0)
    throw ConfigError("convolution kernel width must be odd");
  if (fc_hidden < 1) throw ConfigError("dense width must be >= 1");
  if (n_refs < 1) throw ConfigError("need at least one reference point");
  if (epochs < 0) throw ConfigError("epoch count must be >= 0");
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
}

CnnBaseline::CnnBaseline(CnnConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void CnnBaseline::init_params(ParameterStore& store, std::uint64_t seed) const {
  ParamInit init(store, seed);
  int k = cfg_.kernel;
  int in_ch = cfg_.in_channels();
  init.matrix("cnn.conv1.w", cfg_.c1, in_ch * k, in_ch * k);
  init.vector("cnn.conv1.b", cfg_.c1, 0.0);
  init.matrix("cnn.conv2.w", cfg_.c2, cfg_.c1 * k, cfg_.c1 * k);
  init.vector("cnn.conv2.b", cfg_.c2, 0.0);
  init.matrix("cnn.conv3.w", cfg_.c3, cfg_.c2 * k, cfg_.c2 * k);
  init.vector("cnn.conv3.b", cfg_.c3, 0.0);
  init.linear("cnn.fc1", cfg_.c3 * cfg_.pooled_len(), cfg_.fc_hidden);
  init.linear("cnn.fc2", cfg_.fc_hidden, cfg_.depth, /*zero=*/true);
}

std::vector<double> CnnBaseline::input_image(const NormalizedSample& ns) const {
  if (ns.n_refs != cfg_.n_refs || ns.depth != cfg_.depth)
    throw ShapeError("sample does not match model configuration");
  std::size_t d = static_cast<std::size_t>(cfg_.depth);
  std::vector<double> img;
  img.reserve(static_cast<std::size_t>(cfg_.in_channels()) * d);
  img.insert(img.end(), ns.ref_profiles.begin(), ns.ref_profiles.end());
  auto broadcast = [&](double v) { img.insert(img.end(), d, v); };
  for (int i = 0; i < cfg_.n_refs; ++i) {
    broadcast(ns.ref_coords[static_cast<std::size_t>(2 * i)]);
    broadcast(ns.ref_coords[static_cast<std::size_t>(2 * i + 1)]);
  }
  broadcast(ns.target_label[0]);
  broadcast(ns.target_label[1]);
  for (int i = 0; i < cfg_.n_refs; ++i)
    broadcast(ns.ref_ssts[static_cast<std::size_t>(i)]);
  broadcast(ns.target_label[2]);
  return img;
}

Tensor CnnBaseline::forward(diff::Tape& tape, TapeBinding& params,
                            const NormalizedSample& sample) const {
  Tensor x = tape.constant({cfg_.in_channels(), cfg_.depth}, input_image(sample));
  x = diff::maxpool2(diff::relu(diff::conv1d(x, params.get("cnn.conv1.w"),
                                             params.get("cnn.conv1.b"),
                                             cfg_.kernel)));
  x = diff::maxpool2(diff::relu(diff::conv1d(x, params.get("cnn.conv2.w"),
                                             params.get("cnn.conv2.b"),
                                             cfg_.kernel)));
  x = diff::maxpool2(diff::relu(diff::conv1d(x, params.get("cnn.conv3.w"),
                                             params.get("cnn.conv3.b"),
                                             cfg_.kernel)));
  Tensor flat = diff::reshape(x, {1, cfg_.c3 * cfg_.pooled_len()});
  Tensor h = diff::relu(
      diff::linear(flat, params.get("cnn.fc1.w"), params.get("cnn.fc1.b")));
  return diff::linear(h, params.get("cnn.fc2.w"), params.get("cnn.fc2.b"));
}

std::vector<double> CnnBaseline::perturbation(
    ParameterStore& store, const NormalizedSample& sample) const {
  diff::Tape tape;
  TapeBinding params(tape, store, {""});
  return forward(tape, params, sample).value();
}

SoundSpeedProfile CnnBaseline::estimate(ParameterStore& store,
                                        const NormalizedSample& sample,
                                        const NormStats& stats) const {
  std::vector<double> delta = perturbation(store, sample);
  SoundSpeedProfile out;
  out.speeds.resize(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i)
    out.speeds[i] = sample.ref_mean_phys[i] + delta[i] * stats.depth_std[i];
  return out;
}

std::vector<double> CnnBaseline::train(
    ParameterStore& store, NormStats& stats,
    const std::vector<Sample>& train_samples) const {
  if (train_samples.empty()) throw EmptySplit("training split is empty");
  stats = normalize_stats(train_samples);
  std::vector<NormalizedSample> norm = apply_norm(train_samples, stats);
  for (const NormalizedSample& ns : norm)
    if (ns.target_norm.empty())
      throw InvalidProfile("every training sample needs a measured profile");

  init_params(store, splitmix64(cfg_.seed ^ 0x636e6eULL));
  AdamW opt({.weight_decay = cfg_.weight_decay});

  std::vector<std::size_t> order(norm.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> epoch_losses;
  for (int e = 0; e < cfg_.epochs; ++e) {
    std::mt19937_64 rng(splitmix64(
        cfg_.seed ^ (0xc0ffeeULL + static_cast<std::uint64_t>(e))));
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg_.batch)) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch));
      store.zero_grads();
      diff::Tape tape;
      TapeBinding params(tape, store);
      Tensor fakes, reals;
      for (std::size_t i = start; i < end; ++i) {
        const NormalizedSample& ns = norm[order[i]];
        Tensor delta = forward(tape, params, ns);
        Tensor fake =
            diff::add(delta, tape.constant({1, cfg_.depth}, ns.ref_mean_norm));
        Tensor real = tape.constant({1, cfg_.depth}, ns.target_norm);
        fakes = i == start ? fake : diff::concat_rows(fakes, fake);
        reals = i == start ? real : diff::concat_rows(reals, real);
      }
      Tensor loss = reconstruction_term(fakes, reals);
      sum += loss.scalar();
      tape.backward(loss);
      params.harvest_grads(1.0);
      opt.step(store, cfg_.lr, "cnn.");
      ++n_batches;
    }
    epoch_losses.push_back(sum / n_batches);
  }
  return epoch_losses;
}

std::vector<double> cnn_train(const CnnConfig& cfg, ParameterStore& store,
                              NormStats& stats,
                              const std::vector<Sample>& train_samples) {
  return CnnBaseline(cfg).train(store, stats, train_samples);
}

SoundSpeedProfile cnn_estimate(const CnnConfig& cfg, ParameterStore& store,
                               const NormStats& stats, const Sample& sample) {
  CnnBaseline model(cfg);
  return model.estimate(store, apply_norm(sample, stats), stats);
}

}  // namespace sspfield
