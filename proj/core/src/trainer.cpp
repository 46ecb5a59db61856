#include "sspfield/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "sspfield/checkpoint.hpp"
#include "sspfield/errors.hpp"
#include "sspfield/evaluate.hpp"
#include "sspfield/losses.hpp"
#include "sspfield/rng.hpp"
#include "sspfield/schedule.hpp"

namespace sspfield {

using diff::Tensor;

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 1) throw ConfigError("epoch count must be >= 1");
  if (!(lr_g > 0.0) || !(lr_d > 0.0) || !(lr_min > 0.0))
    throw ConfigError("learning rates must be > 0");
  if (warmup_epochs < 0 || warmup_epochs >= epochs)
    throw ConfigError("warmup must be >= 0 and shorter than the run");
  if (stage1_epochs < 0 || stage1_epochs > epochs)
    throw ConfigError("stage-1 length must lie within the run");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (eta_recon < 0.0 || eta_r1 < 0.0 || eta_r2 < 0.0 || lambda_loc < 0.0 ||
      lambda_sst < 0.0)
    throw ConfigError("loss weights must be >= 0");
  if (checkpoint_every < 1) throw ConfigError("checkpoint interval must be >= 1");
}

void init_model_params(ParameterStore& store, const GeneratorConfig& gcfg,
                       const DiscriminatorConfig& dcfg, std::uint64_t seed) {
  Generator(gcfg).init_params(store, splitmix64(seed ^ 0x67656eULL));
  Discriminator(dcfg).init_params(store, splitmix64(seed ^ 0x64697363ULL));
}

void store_norm_stats(ParameterStore& store, const NormStats& stats) {
  int d = static_cast<int>(stats.depth());
  store.add("norm.depth_mean", {d}, stats.depth_mean, /*trainable=*/false);
  store.add("norm.depth_std", {d}, stats.depth_std, /*trainable=*/false);
  store.add("norm.sst_mean_std", {2}, {stats.sst_mean, stats.sst_std},
            /*trainable=*/false);
  store.add("norm.lon_minmax", {2}, {stats.lon_min, stats.lon_max},
            /*trainable=*/false);
  store.add("norm.lat_minmax", {2}, {stats.lat_min, stats.lat_max},
            /*trainable=*/false);
}

void update_norm_stats(ParameterStore& store, const NormStats& stats) {
  if (store.at("norm.depth_mean").value.size() != stats.depth())
    throw ShapeError("normalization depth does not match the stored layout");
  store.at("norm.depth_mean").value = stats.depth_mean;
  store.at("norm.depth_std").value = stats.depth_std;
  store.at("norm.sst_mean_std").value = {stats.sst_mean, stats.sst_std};
  store.at("norm.lon_minmax").value = {stats.lon_min, stats.lon_max};
  store.at("norm.lat_minmax").value = {stats.lat_min, stats.lat_max};
}

NormStats load_norm_stats(const ParameterStore& store) {
  NormStats stats;
  stats.depth_mean = store.at("norm.depth_mean").value;
  stats.depth_std = store.at("norm.depth_std").value;
  const auto& sst = store.at("norm.sst_mean_std").value;
  stats.sst_mean = sst[0];
  stats.sst_std = sst[1];
  const auto& lon = store.at("norm.lon_minmax").value;
  stats.lon_min = lon[0];
  stats.lon_max = lon[1];
  const auto& lat = store.at("norm.lat_minmax").value;
  stats.lat_min = lat[0];
  stats.lat_max = lat[1];
  return stats;
}

namespace {

NormStats placeholder_stats(int depth) {
  NormStats stats;
  stats.depth_mean.assign(static_cast<std::size_t>(depth), 0.0);
  stats.depth_std.assign(static_cast<std::size_t>(depth), 1.0);
  return stats;
}

std::string checkpoint_name(const std::string& dir, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%04d.bin", epoch);
  return dir + "/" + buf;
}

}  // namespace

Trainer::Trainer(GeneratorConfig gcfg, DiscriminatorConfig dcfg,
                 TrainConfig tcfg)
    : gcfg_(gcfg), dcfg_(dcfg), tcfg_(tcfg), gen_(gcfg), disc_(dcfg),
      adam_g_({.weight_decay = tcfg.weight_decay}),
      adam_d_({.weight_decay = tcfg.weight_decay}) {
  tcfg_.validate();
  if (gcfg_.depth != dcfg_.depth || gcfg_.n_refs != dcfg_.n_refs)
    throw ConfigError("generator and discriminator disagree on sample shape");
  init_model_params(store_, gcfg_, dcfg_, tcfg_.seed);
  store_norm_stats(store_, placeholder_stats(gcfg_.depth));
  stats_ = placeholder_stats(gcfg_.depth);
}

double Trainer::generator_step(const std::vector<NormalizedSample>& batch,
                               double lr, std::uint64_t step) {
  int depth = gcfg_.depth;
  store_.zero_grads();
  diff::Tape tape;
  tape.dropout_seed = tcfg_.seed;
  tape.dropout_step = step;
  tape.train_mode = true;
  TapeBinding params(tape, store_, {"disc."});

  Tensor lf, lr_t, fakes, reals;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tensor delta = gen_.forward(tape, params, batch[i]);
    Tensor fake =
        diff::add(delta, tape.constant({1, depth}, batch[i].ref_mean_norm));
    DiscriminatorOutput on_fake = disc_.forward(tape, params, fake, batch[i]);
    Tensor real = tape.constant({1, depth}, batch[i].target_norm);
    DiscriminatorOutput on_real = disc_.forward(tape, params, real, batch[i]);
    lf = i == 0 ? on_fake.realism : diff::concat_rows(lf, on_fake.realism);
    lr_t = i == 0 ? on_real.realism : diff::concat_rows(lr_t, on_real.realism);
    fakes = i == 0 ? fake : diff::concat_rows(fakes, fake);
    reals = i == 0 ? real : diff::concat_rows(reals, real);
  }
  Tensor loss = generator_loss_term(lf, lr_t, fakes, reals, tcfg_.eta_recon);
  double value = loss.scalar();
  tape.backward(loss);
  params.harvest_grads(1.0);
  adam_g_.step(store_, lr, "gen.");
  return value;
}

Trainer::CriticStep Trainer::critic_step(
    const std::vector<NormalizedSample>& batch, double lr,
    std::uint64_t step) {
  std::size_t bn = batch.size();
  int depth = gcfg_.depth;

  // Fakes come from the current generator in eval mode; adding the raw
  // perturbation to the normalized reference mean is the whole composition in
  // normalized units.
  std::vector<std::vector<double>> fake(bn), real(bn);
  for (std::size_t i = 0; i < bn; ++i) {
    std::vector<double> delta = gen_.perturbation(store_, batch[i]);
    fake[i] = batch[i].ref_mean_norm;
    for (std::size_t j = 0; j < fake[i].size(); ++j) fake[i][j] += delta[j];
    real[i] = batch[i].target_norm;
  }

  store_.zero_grads();

  diff::Tape tape;
  tape.dropout_seed = tcfg_.seed;
  tape.dropout_step = step;
  tape.train_mode = true;
  TapeBinding params(tape, store_, {"gen."});

  Tensor lf, lr_t, pred_loc, pred_sst;
  std::vector<double> loc_targets, sst_targets;
  for (std::size_t i = 0; i < bn; ++i) {
    Tensor real_cand = tape.constant({1, depth}, real[i]);
    DiscriminatorOutput on_real = disc_.forward(tape, params, real_cand, batch[i]);
    Tensor fake_cand = tape.constant({1, depth}, fake[i]);
    DiscriminatorOutput on_fake = disc_.forward(tape, params, fake_cand, batch[i]);
    lf = i == 0 ? on_fake.realism : diff::concat_rows(lf, on_fake.realism);
    lr_t = i == 0 ? on_real.realism : diff::concat_rows(lr_t, on_real.realism);
    pred_loc =
        i == 0 ? on_real.pred_loc : diff::concat_rows(pred_loc, on_real.pred_loc);
    pred_sst =
        i == 0 ? on_real.pred_sst : diff::concat_rows(pred_sst, on_real.pred_sst);
    loc_targets.push_back(batch[i].target_label[0]);
    loc_targets.push_back(batch[i].target_label[1]);
    sst_targets.push_back(batch[i].target_label[2]);
  }
  Tensor adv = adversarial_pair_term(lf, lr_t);
  Tensor mse_loc =
      mse_term(pred_loc, tape.constant({static_cast<int>(bn), 2}, loc_targets));
  Tensor mse_sst =
      mse_term(pred_sst, tape.constant({static_cast<int>(bn), 1}, sst_targets));
  Tensor main_loss =
      diff::add(adv, diff::add(diff::scale(mse_loc, tcfg_.lambda_loc),
                               diff::scale(mse_sst, tcfg_.lambda_sst)));
  double mse_loc_v = mse_loc.scalar();
  double mse_sst_v = mse_sst.scalar();
  std::vector<double> lf_v = lf.value();
  std::vector<double> lr_v = lr_t.value();
  tape.backward(main_loss);
  params.harvest_grads(1.0);

  // Zero-centered penalties on both candidate families. The value pass also
  // yields the input gradients; the parameter gradient of each penalty then
  // comes from a symmetric finite difference of the score's parameter
  // gradient along that direction.
  PenaltyProbe probe_r1{splitmix64(tcfg_.seed ^ (2 * step + 1)), step, true};
  PenaltyProbe probe_r2{splitmix64(tcfg_.seed ^ (2 * step + 2)), step, true};
  RealismFn realism = [&](diff::Tape& t, Tensor cand, std::size_t b) {
    TapeBinding frozen(t, store_, {""});
    return disc_.forward(t, frozen, cand, batch[b]).realism;
  };
  GradientPenalty p1 = input_gradient_penalty(real, depth, realism, probe_r1);
  GradientPenalty p2 = input_gradient_penalty(fake, depth, realism, probe_r2);

  auto harvest_penalty = [&](const std::vector<std::vector<double>>& cands,
                             const GradientPenalty& pen, double weight,
                             const PenaltyProbe& probe) {
    if (weight == 0.0) return;
    double max_s = 0.0, max_v = 0.0;
    for (std::size_t b = 0; b < bn; ++b) {
      for (double x : cands[b]) max_s = std::max(max_s, std::fabs(x));
      for (double x : pen.input_grads[b]) max_v = std::max(max_v, std::fabs(x));
    }
    if (max_v == 0.0) return;  // flat score: the penalty gradient vanishes
    double eps = 1e-4 * (1.0 + max_s) / (max_v + 1e-12);
    double scale = weight / (static_cast<double>(bn) * eps);
    for (std::size_t b = 0; b < bn; ++b) {
      for (int sign : {+1, -1}) {
        diff::Tape t;
        configure_penalty_tape(t, probe, b);
        TapeBinding pb(t, store_, {"gen."});
        std::vector<double> shifted = cands[b];
        for (std::size_t j = 0; j < shifted.size(); ++j)
          shifted[j] += sign * eps * pen.input_grads[b][j];
        Tensor cand = t.constant({1, depth}, shifted);
        Tensor score = disc_.forward(t, pb, cand, batch[b]).realism;
        t.backward(score);
        pb.harvest_grads(sign * scale);
      }
    }
  };
  harvest_penalty(real, p1, tcfg_.eta_r1, probe_r1);
  harvest_penalty(fake, p2, tcfg_.eta_r2, probe_r2);

  adam_d_.step(store_, lr, "disc.");

  CriticStep out;
  out.r1 = p1.value;
  out.r2 = p2.value;
  out.loss_d =
      discriminator_loss_value(lf_v, lr_v, p1.value, p2.value, tcfg_.eta_r1,
                               tcfg_.eta_r2, mse_loc_v, mse_sst_v,
                               tcfg_.lambda_loc, tcfg_.lambda_sst)
          .total;
  return out;
}

double Trainer::test_rmse(const std::vector<NormalizedSample>& test) {
  std::vector<std::vector<double>> pred, truth;
  pred.reserve(test.size());
  truth.reserve(test.size());
  for (const NormalizedSample& ns : test) {
    pred.push_back(gen_.generate(store_, ns, stats_).speeds);
    truth.push_back(ns.target_phys);
  }
  return rmse_eq33(pred, truth);
}

TrainResult Trainer::train(const std::vector<Sample>& train_samples,
                           const std::vector<Sample>& test_samples,
                           const std::string& out_dir,
                           const EpochCallback& on_epoch) {
  if (train_samples.empty()) throw EmptySplit("training split is empty");
  if (test_samples.empty()) throw EmptySplit("test split is empty");

  stats_ = normalize_stats(train_samples);
  update_norm_stats(store_, stats_);
  std::vector<NormalizedSample> norm_train = apply_norm(train_samples, stats_);
  std::vector<NormalizedSample> norm_test = apply_norm(test_samples, stats_);
  for (const NormalizedSample& ns : norm_train)
    if (ns.target_norm.empty())
      throw InvalidProfile("every training sample needs a measured profile");
  for (const NormalizedSample& ns : norm_test)
    if (ns.target_phys.empty())
      throw InvalidProfile("every test sample needs a measured profile");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

  TrainResult res;
  res.metrics_path = out_dir + "/metrics.csv";
  std::ofstream metrics(res.metrics_path, std::ios::trunc);
  if (!metrics) throw IoError("cannot write " + res.metrics_path);
  metrics << "epoch,stage,lr_g,lr_d,L_G,L_D,R1,R2,test_rmse\n";

  std::string last_ckpt = checkpoint_name(out_dir, 0);
  save_checkpoint(store_, last_ckpt);
  res.initial_rmse = test_rmse(norm_test);
  res.best_rmse = res.initial_rmse;
  res.best_checkpoint = out_dir + "/ckpt_best.bin";
  save_checkpoint(store_, res.best_checkpoint);

  std::vector<std::size_t> order(norm_train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::uint64_t gstep = 0;

  for (int e = 0; e < tcfg_.epochs; ++e) {
    int stage = e < tcfg_.stage1_epochs ? 1 : 2;
    double lrg = lr_schedule(e + 1, tcfg_.warmup_epochs, tcfg_.epochs,
                             tcfg_.lr_g, tcfg_.lr_min);
    double lrd = lr_schedule(e + 1, tcfg_.warmup_epochs, tcfg_.epochs,
                             tcfg_.lr_d, tcfg_.lr_min);
    std::mt19937_64 shuffle_rng(
        splitmix64(tcfg_.seed ^ (0x9e0001ULL + static_cast<std::uint64_t>(e))));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double sum_lg = 0.0, sum_ld = 0.0, sum_r1 = 0.0, sum_r2 = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tcfg_.batch)) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(tcfg_.batch));
      std::vector<NormalizedSample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(norm_train[order[i]]);
      if (stage == 2) {
        CriticStep cs = critic_step(batch, lrd, gstep++);
        sum_ld += cs.loss_d;
        sum_r1 += cs.r1;
        sum_r2 += cs.r2;
      }
      sum_lg += generator_step(batch, lrg, gstep++);
      ++n_batches;
    }

    EpochRecord rec;
    rec.epoch = e + 1;
    rec.stage = stage;
    rec.lr_g = lrg;
    rec.lr_d = lrd;
    rec.loss_g = sum_lg / n_batches;
    rec.loss_d = stage == 2 ? sum_ld / n_batches : 0.0;
    rec.r1 = stage == 2 ? sum_r1 / n_batches : 0.0;
    rec.r2 = stage == 2 ? sum_r2 / n_batches : 0.0;
    rec.test_rmse = test_rmse(norm_test);

    char row[320];
    std::snprintf(row, sizeof row,
                  "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  rec.epoch, rec.stage, rec.lr_g, rec.lr_d, rec.loss_g,
                  rec.loss_d, rec.r1, rec.r2, rec.test_rmse);
    metrics << row;
    metrics.flush();

    if (!std::isfinite(rec.loss_g) || !std::isfinite(rec.loss_d) ||
        !std::isfinite(rec.test_rmse))
      throw NumericalError("training diverged at epoch " +
                           std::to_string(rec.epoch) +
                           "; last good checkpoint: " + last_ckpt);

    if ((e + 1) % tcfg_.checkpoint_every == 0 || e + 1 == tcfg_.epochs) {
      last_ckpt = checkpoint_name(out_dir, e + 1);
      save_checkpoint(store_, last_ckpt);
    }
    if (rec.test_rmse < res.best_rmse) {
      res.best_rmse = rec.test_rmse;
      save_checkpoint(store_, res.best_checkpoint);
    }
    res.history.push_back(rec);
    if (on_epoch) on_epoch(rec, store_);
  }

  res.final_checkpoint = checkpoint_name(out_dir, tcfg_.epochs);
  metrics.flush();
  if (!metrics) throw IoError("failed writing " + res.metrics_path);
  return res;
}

}  // namespace sspfield
