#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sspfield/baselines.hpp"
#include "sspfield/discriminator.hpp"
#include "sspfield/generator.hpp"
#include "sspfield/grid.hpp"
#include "sspfield/trainer.hpp"

namespace sspfield {

/// One bag of knobs for a whole run: model, training, baselines, splits,
/// synthesis and paths. Loadable from a `key = value` file; unknown keys are
/// rejected so typos fail loudly.
struct RunConfig {
  GeneratorConfig gen;
  TrainConfig train;
  IdwConfig idw;
  CnnConfig cnn;
  SplitSpec split;

  int synth_n_lon = 12;
  int synth_n_lat = 12;
  int synth_months = 12;

  std::string data_dir = "data";
  std::string out_dir = "out";
  std::string checkpoint;  // empty: no trained model
  std::uint64_t seed = 0;
  int workers = 8;
  std::vector<double> eval_depths;  // meters; empty picks a default spread

  /// The critic mirrors the generator's shape knobs.
  DiscriminatorConfig disc() const;

  void validate() const;
};

/// Named starting points. "desk" is the laptop-scale setup (D=64, d_r=32,
/// 16-sample batches, 30 epochs, small CNN, splits matching the synthetic
/// field); "paper" is the full-scale setup (D=1977, d_r=384, batch 128,
/// 196 epochs, CNN channels 64/128/256). Unknown names throw ConfigError.
RunConfig preset_config(const std::string& name);

/// Set one key; throws ConfigError for unknown keys or unparseable values.
void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value);

/// Apply a config file on top of cfg. Lines are `key = value`; blank lines
/// and '#' comments are skipped. Missing file throws IoError.
void load_config_file(RunConfig& cfg, const std::string& path);

/// Canonical `key = value` listing of every knob, one per line, fixed order.
std::string dump_config(const RunConfig& cfg);

}  // namespace sspfield
