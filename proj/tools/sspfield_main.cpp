// Command-line front end: synthesize fields, train the model, evaluate
// against the baselines, predict single profiles, and check gradients.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sspfield/baselines.hpp"
#include "sspfield/checkpoint.hpp"
#include "sspfield/errors.hpp"
#include "sspfield/evaluate.hpp"
#include "sspfield/gradcheck.hpp"
#include "sspfield/grid.hpp"
#include "sspfield/normalize.hpp"
#include "sspfield/runconfig.hpp"
#include "sspfield/trainer.hpp"

namespace fs = std::filesystem;
using namespace sspfield;

namespace {

struct CliArgs {
  std::string preset = "desk";
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs from --set
  std::optional<std::uint64_t> seed;
  std::optional<std::string> data_dir, out_dir, checkpoint;
  std::optional<int> workers;
};

// preset -> config file -> --set pairs -> dedicated flags, later wins.
RunConfig resolve_config(const CliArgs& args) {
  RunConfig cfg = preset_config(args.preset);
  if (!args.config_path.empty()) load_config_file(cfg, args.config_path);
  for (const std::string& kv : args.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set wants key=value, got '" + kv + "'");
    set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed) set_config_key(cfg, "seed", std::to_string(*args.seed));
  if (args.data_dir) cfg.data_dir = *args.data_dir;
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  if (args.checkpoint) cfg.checkpoint = *args.checkpoint;
  if (args.workers) cfg.workers = *args.workers;
  cfg.validate();
  std::printf("%s\n", dump_config(cfg).c_str());
  return cfg;
}

std::string ssp_path(const RunConfig& cfg) { return cfg.data_dir + "/ssp.csv"; }
std::string sst_path(const RunConfig& cfg) { return cfg.data_dir + "/sst.csv"; }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

int cmd_synth(const CliArgs& args) {
  RunConfig cfg = resolve_config(args);
  GridField field = synthesize_field(cfg.seed, cfg.synth_n_lon, cfg.synth_n_lat,
                                     cfg.synth_months, cfg.gen.depth);
  ensure_dir(cfg.data_dir);
  save_grid(field, ssp_path(cfg), sst_path(cfg));
  std::printf("wrote %dx%d grid, %zu months, depth %d -> %s, %s\n",
              field.n_lon, field.n_lat, field.months.size(), cfg.gen.depth,
              ssp_path(cfg).c_str(), sst_path(cfg).c_str());
  return 0;
}

int cmd_train(const CliArgs& args) {
  RunConfig cfg = resolve_config(args);
  GridField field = load_grid(ssp_path(cfg), sst_path(cfg));
  SampleSplit split = build_samples(field, cfg.split);
  std::printf("samples: %zu train, %zu test\n", split.train.size(),
              split.test.size());

  Trainer trainer(cfg.gen, cfg.disc(), cfg.train);
  TrainResult result = trainer.train(
      split.train, split.test, cfg.out_dir,
      [](const EpochRecord& r, const ParameterStore&) {
        std::printf("epoch %3d stage %d  L_G %.6f  L_D %.6f  test_rmse %.6f\n",
                    r.epoch, r.stage, r.loss_g, r.loss_d, r.test_rmse);
        std::fflush(stdout);
      });
  std::printf("initial rmse %.6f, best %.6f\nbest checkpoint: %s\n"
              "final checkpoint: %s\nmetrics: %s\n",
              result.initial_rmse, result.best_rmse,
              result.best_checkpoint.c_str(), result.final_checkpoint.c_str(),
              result.metrics_path.c_str());
  return 0;
}

// Rebuilds the parameter store exactly as the trainer registered it, then
// overwrites values from the checkpoint. Returns the stats stored with it.
NormStats load_model(const RunConfig& cfg, ParameterStore& store) {
  init_model_params(store, cfg.gen, cfg.disc(), cfg.seed);
  NormStats placeholder;
  placeholder.depth_mean.assign(static_cast<std::size_t>(cfg.gen.depth), 0.0);
  placeholder.depth_std.assign(static_cast<std::size_t>(cfg.gen.depth), 1.0);
  store_norm_stats(store, placeholder);
  load_checkpoint(store, cfg.checkpoint);
  return load_norm_stats(store);
}

int cmd_eval(const CliArgs& args, bool timing) {
  RunConfig cfg = resolve_config(args);
  GridField field = load_grid(ssp_path(cfg), sst_path(cfg));
  SampleSplit split = build_samples(field, cfg.split);

  std::vector<Estimator> estimators;
  estimators.push_back({"MEAN", mean_estimate, 0});
  IdwConfig idw = cfg.idw;
  estimators.push_back(
      {"IDW", [idw](const Sample& s) { return idw_estimate(s, idw); }, 0});

  // Model-backed estimators only with a trained checkpoint on hand. The CNN
  // comparison is cheap enough to fit fresh on the same train split.
  ParameterStore model_store;
  NormStats model_stats;
  Generator gen(cfg.gen);
  ParameterStore cnn_store;
  NormStats cnn_stats;
  CnnConfig ccfg = cfg.cnn;
  if (!cfg.checkpoint.empty()) {
    model_stats = load_model(cfg, model_store);
    estimators.push_back(
        {"MDF-RAGAN",
         [&](const Sample& s) {
           return gen.generate(model_store, apply_norm(s, model_stats),
                               model_stats);
         },
         model_store.value_count("gen.", true)});

    std::printf("fitting CNN baseline (%d epochs)...\n", ccfg.epochs);
    std::fflush(stdout);
    cnn_train(ccfg, cnn_store, cnn_stats, split.train);
    estimators.push_back(
        {"CNN",
         [&](const Sample& s) {
           return cnn_estimate(ccfg, cnn_store, cnn_stats, s);
         },
         cnn_store.value_count("cnn.", true)});
  }

  ensure_dir(cfg.out_dir);
  EvalOptions options;
  options.depths_m = cfg.eval_depths;
  options.out_dir = cfg.out_dir;
  options.measure_timing = timing;
  EvaluationReport report = compare_methods(split.test, estimators, options);

  for (const MethodReport& m : report.methods) {
    std::printf("%-10s rmse %.6f  params %zu  %s\n", m.method.c_str(),
                m.overall_rmse, m.n_params,
                m.partial ? "(partial: some samples failed)" : "");
    for (const std::string& f : m.failures)
      std::printf("  failed: %s\n", f.c_str());
  }
  if (!cfg.checkpoint.empty()) {
    Discriminator disc(cfg.disc());
    std::string emb = cfg.out_dir + "/embeddings.csv";
    export_embeddings(gen, disc, model_store, model_stats, split.test, emb);
    std::printf("embeddings: %s\n", emb.c_str());
  }
  std::printf("artifacts in %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_predict(const CliArgs& args, double lon, double lat, double sst,
                int year, int month) {
  RunConfig cfg = resolve_config(args);
  if (cfg.checkpoint.empty())
    throw ConfigError("predict needs --checkpoint with a trained model");
  GridField field = load_grid(ssp_path(cfg), sst_path(cfg));

  MonthTag tag{year, month};
  int mi = -1;
  for (std::size_t i = 0; i < field.months.size(); ++i)
    if (field.months[i] == tag) mi = static_cast<int>(i);
  if (mi < 0)
    throw RangeError("month not covered by the grid data");

  // Nearest cell, clamped so a full 3x3 window fits.
  auto clamp_idx = [](double v, int hi) {
    int i = static_cast<int>(std::lround(v));
    return std::max(1, std::min(hi - 2, i));
  };
  int ix = clamp_idx((lon - field.origin.lon) / field.cell_deg, field.n_lon);
  int iy = clamp_idx((lat - field.origin.lat) / field.cell_deg, field.n_lat);

  Sample sample;
  sample.target_coord = {lon, lat};
  sample.target_sst = sst;
  sample.epoch_tag = tag;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const auto& cell = field.at(mi, ix + dx, iy + dy);
      if (!cell)
        throw EmptyDataset("reference window incomplete around the target");
      sample.refs.entries.push_back(
          {field.cell_coord(ix + dx, iy + dy), cell->sst, cell->profile});
    }

  ParameterStore store;
  NormStats stats = load_model(cfg, store);
  Generator gen(cfg.gen);
  SoundSpeedProfile profile =
      gen.generate(store, apply_norm(sample, stats), stats);

  ensure_dir(cfg.out_dir);
  std::string path = cfg.out_dir + "/prediction.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "depth_m,speed_ms\n";
  for (std::size_t i = 0; i < profile.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "%.17g,%.17g\n",
                  static_cast<double>(i) * profile.depth_step, profile[i]);
    out << line;
  }
  std::printf("prediction at (%.3f, %.3f) %04d-%02d -> %s\n", lon, lat, year,
              month, path.c_str());
  return 0;
}

int cmd_gradcheck(const CliArgs& args) {
  std::uint64_t seed = args.seed.value_or(0);
  double tol = 1e-4;
  bool ok = true;
  for (GradCheckCase& c : standard_gradcheck_cases(seed)) {
    GradCheckResult r = grad_check(*c.store, c.build, 1e-5, 8, seed);
    bool pass = r.max_rel_err <= tol;
    ok = ok && pass;
    std::printf("%-18s %s  max_rel_err %.3e  (%zu coords%s%s)\n",
                c.name.c_str(), pass ? "ok  " : "FAIL", r.max_rel_err,
                r.coords_checked, r.worst_param.empty() ? "" : ", worst ",
                r.worst_param.c_str());
  }
  if (!ok) throw NumericalError("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sound speed profile field toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  CliArgs args;
  app.add_option("--preset", args.preset, "starting config: desk or paper");
  app.add_option("--config", args.config_path, "key = value config file");
  app.add_option("--set", args.overrides, "override one config key (key=value)");
  app.add_option("--seed", args.seed, "run seed");
  app.add_option("--data-dir", args.data_dir, "grid CSV directory");
  app.add_option("--out-dir", args.out_dir, "artifact directory");
  app.add_option("--checkpoint", args.checkpoint, "trained model weights");
  app.add_option("--workers", args.workers, "worker threads for evaluation");

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic grid");
  CLI::App* train = app.add_subcommand("train", "fit the model on a grid");
  bool timing = false;
  CLI::App* eval = app.add_subcommand("eval", "score methods on the test split");
  eval->add_flag("--timing", timing, "measure per-sample inference time");
  double lon = 0.0, lat = 0.0, sst = 15.0;
  int year = 2000, month = 1;
  CLI::App* predict = app.add_subcommand("predict", "profile at one location");
  predict->add_option("--lon", lon, "target longitude, degrees")->required();
  predict->add_option("--lat", lat, "target latitude, degrees")->required();
  predict->add_option("--sst", sst, "target surface temperature, C")->required();
  predict->add_option("--year", year, "target year")->required();
  predict->add_option("--month", month, "target month 1..12")->required();
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient audit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 3;  // bad flags are a config problem
  }

  try {
    if (synth->parsed()) return cmd_synth(args);
    if (train->parsed()) return cmd_train(args);
    if (eval->parsed()) return cmd_eval(args, timing);
    if (predict->parsed()) return cmd_predict(args, lon, lat, sst, year, month);
    if (gradcheck->parsed()) return cmd_gradcheck(args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
