#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sspfield/discriminator.hpp"
#include "sspfield/generator.hpp"
#include "sspfield/normalize.hpp"
#include "sspfield/optimizer.hpp"
#include "sspfield/params.hpp"
#include "sspfield/sample.hpp"

namespace sspfield {

struct TrainConfig {
  int batch = 16;
  int epochs = 30;
  double lr_g = 4e-4;
  double lr_d = 5e-4;
  int warmup_epochs = 20;
  int stage1_epochs = 20;  // critic held bitwise frozen through these epochs
  double lr_min = 1e-7;
  double weight_decay = 1e-3;
  double eta_recon = 10.0;
  double eta_r1 = 1.0;
  double eta_r2 = 1.0;
  double lambda_loc = 0.1;
  double lambda_sst = 0.1;
  std::uint64_t seed = 0;
  int checkpoint_every = 10;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  int stage = 1;
  double lr_g = 0.0;
  double lr_d = 0.0;
  double loss_g = 0.0;
  double loss_d = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double test_rmse = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double initial_rmse = 0.0;  // zero-init prediction, i.e. the mean baseline
  double best_rmse = 0.0;
  std::string best_checkpoint;
  std::string final_checkpoint;
  std::string metrics_path;
};

/// Registers generator then discriminator parameters, each from a stream
/// derived deterministically from the run seed. Checkpoint layout depends on
/// this registration order, so evaluation must build its store the same way.
void init_model_params(ParameterStore& store, const GeneratorConfig& gcfg,
                       const DiscriminatorConfig& dcfg, std::uint64_t seed);

/// Normalization statistics ride along in the store as non-trainable `norm.*`
/// entries so a checkpoint is self-contained.
void store_norm_stats(ParameterStore& store, const NormStats& stats);
void update_norm_stats(ParameterStore& store, const NormStats& stats);
NormStats load_norm_stats(const ParameterStore& store);

using EpochCallback =
    std::function<void(const EpochRecord&, const ParameterStore&)>;

class Trainer {
 public:
  Trainer(GeneratorConfig gcfg, DiscriminatorConfig dcfg, TrainConfig tcfg);

  /// Two-stage run over the given splits. Writes metrics.csv plus numbered,
  /// best and final checkpoints under out_dir. The callback fires after each
  /// epoch's bookkeeping. Non-finite losses abort with NumericalError; the
  /// newest checkpoint on disk is the last good state.
  TrainResult train(const std::vector<Sample>& train_samples,
                    const std::vector<Sample>& test_samples,
                    const std::string& out_dir,
                    const EpochCallback& on_epoch = {});

  ParameterStore& params() { return store_; }
  const NormStats& stats() const { return stats_; }
  const Generator& generator() const { return gen_; }
  const Discriminator& discriminator() const { return disc_; }

 private:
  double generator_step(const std::vector<NormalizedSample>& batch, double lr,
                        std::uint64_t step);
  struct CriticStep {
    double loss_d = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
  };
  CriticStep critic_step(const std::vector<NormalizedSample>& batch, double lr,
                         std::uint64_t step);
  double test_rmse(const std::vector<NormalizedSample>& test);

  GeneratorConfig gcfg_;
  DiscriminatorConfig dcfg_;
  TrainConfig tcfg_;
  Generator gen_;
  Discriminator disc_;
  ParameterStore store_;
  NormStats stats_;
  AdamW adam_g_;
  AdamW adam_d_;
};

}  // namespace sspfield
