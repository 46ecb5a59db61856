#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <unistd.h>

#include "sspfield/errors.hpp"
#include "sspfield/runconfig.hpp"

using namespace sspfield;

namespace {

std::string temp_path(const char* name) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "/tmp/sspfield_cfg_%d_%s",
                static_cast<int>(getpid()), name);
  return buf;
}

}  // namespace

TEST_CASE("desk preset is small enough for a laptop run") {
  RunConfig cfg = preset_config("desk");
  CHECK(cfg.gen.d_r == 32);
  CHECK(cfg.gen.depth == 64);
  CHECK(cfg.synth_n_lon == 12);
  CHECK(cfg.split.train_begin == MonthTag{2000, 1});
  CHECK(cfg.split.train_end == MonthTag{2000, 9});
  CHECK(cfg.split.test_begin == MonthTag{2000, 10});
  CHECK(cfg.split.test_end == MonthTag{2000, 12});
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("paper preset carries the full-scale shapes") {
  RunConfig cfg = preset_config("paper");
  CHECK(cfg.gen.d_r == 384);
  CHECK(cfg.gen.depth == 1977);
  CHECK(cfg.train.batch == 128);
  CHECK(cfg.train.epochs == 196);
  CHECK(cfg.cnn.c1 == 64);
  CHECK(cfg.cnn.c2 == 128);
  CHECK(cfg.cnn.c3 == 256);
  CHECK(cfg.cnn.epochs == 196);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("unknown preset and unknown key are configuration errors") {
  CHECK_THROWS_AS(preset_config("enterprise"), ConfigError);
  RunConfig cfg = preset_config("desk");
  CHECK_THROWS_AS(set_config_key(cfg, "no_such_knob", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "", "1"), ConfigError);
}

TEST_CASE("scalar keys parse strictly") {
  RunConfig cfg = preset_config("desk");
  set_config_key(cfg, "d_r", "48");
  CHECK(cfg.gen.d_r == 48);
  set_config_key(cfg, "lr_g", "2.5e-4");
  CHECK(cfg.train.lr_g == 2.5e-4);
  set_config_key(cfg, "idw_power", "3");
  CHECK(cfg.idw.p == 3.0);

  CHECK_THROWS_AS(set_config_key(cfg, "d_r", "48x"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "d_r", ""), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "lr_g", "fast"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "seed", "-1"), ConfigError);
}

TEST_CASE("shared keys fan out to every consumer") {
  RunConfig cfg = preset_config("desk");
  set_config_key(cfg, "depth", "32");
  CHECK(cfg.gen.depth == 32);
  CHECK(cfg.cnn.depth == 32);
  set_config_key(cfg, "n_refs", "8");
  CHECK(cfg.gen.n_refs == 8);
  CHECK(cfg.cnn.n_refs == 8);
  set_config_key(cfg, "seed", "123");
  CHECK(cfg.seed == 123);
  CHECK(cfg.train.seed == 123);
  CHECK(cfg.cnn.seed == 123);

  // the critic copies the generator's shape knobs
  set_config_key(cfg, "dropout", "0.125");
  DiscriminatorConfig d = cfg.disc();
  CHECK(d.d_r == cfg.gen.d_r);
  CHECK(d.depth == 32);
  CHECK(d.dropout == 0.125);
}

TEST_CASE("month windows parse and reject nonsense") {
  RunConfig cfg = preset_config("desk");
  set_config_key(cfg, "train_begin", "2019-03");
  CHECK(cfg.split.train_begin == MonthTag{2019, 3});
  CHECK_THROWS_AS(set_config_key(cfg, "train_begin", "2019-13"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "train_begin", "2019-00"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "train_begin", "201903"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "train_begin", "March 2019"), ConfigError);
}

TEST_CASE("evaluation depth lists parse as comma-separated meters") {
  RunConfig cfg = preset_config("desk");
  set_config_key(cfg, "eval_depths", "0,10,25.5");
  CHECK(cfg.eval_depths == std::vector<double>{0.0, 10.0, 25.5});
  CHECK_THROWS_AS(set_config_key(cfg, "eval_depths", "0,,10"), ConfigError);
  CHECK_THROWS_AS(set_config_key(cfg, "eval_depths", "0,deep"), ConfigError);
}

TEST_CASE("validation catches cross-field inconsistencies") {
  RunConfig cfg = preset_config("desk");
  cfg.cnn.depth = cfg.gen.depth + 1;  // drifted apart
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = preset_config("desk");
  cfg.synth_n_lon = 2;  // no room for a 3x3 window
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = preset_config("desk");
  cfg.workers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = preset_config("desk");
  cfg.train.warmup_epochs = cfg.train.epochs;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // an impossible model shape surfaces as a configuration error here
  cfg = preset_config("desk");
  set_config_key(cfg, "depth", "4");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config files round-trip through dump and load") {
  RunConfig cfg = preset_config("desk");
  set_config_key(cfg, "d_r", "24");
  set_config_key(cfg, "epochs", "17");
  set_config_key(cfg, "eval_depths", "0,5");
  set_config_key(cfg, "train_begin", "2001-02");
  set_config_key(cfg, "out_dir", "somewhere/else");

  std::string path = temp_path("roundtrip.cfg");
  {
    std::ofstream f(path, std::ios::trunc);
    f << dump_config(cfg);
  }
  RunConfig loaded = preset_config("desk");
  load_config_file(loaded, path);
  CHECK(dump_config(loaded) == dump_config(cfg));
  std::remove(path.c_str());
}

TEST_CASE("config file parse errors carry the file and line") {
  std::string path = temp_path("bad.cfg");
  {
    std::ofstream f(path, std::ios::trunc);
    f << "# a comment\n";
    f << "d_r = 16\n";
    f << "this line has no equals\n";
  }
  RunConfig cfg = preset_config("desk");
  try {
    load_config_file(cfg, path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find(path) != std::string::npos);
    CHECK(msg.find(":3") != std::string::npos);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_config_file(cfg, temp_path("missing.cfg")), IoError);
}

TEST_CASE("config files apply keys in order, comments and blanks ignored") {
  std::string path = temp_path("ok.cfg");
  {
    std::ofstream f(path, std::ios::trunc);
    f << "\n# shapes\nd_r = 16\nd_r = 20\n  epochs =  9 \n";
  }
  RunConfig cfg = preset_config("desk");
  load_config_file(cfg, path);
  CHECK(cfg.gen.d_r == 20);  // later line wins
  CHECK(cfg.train.epochs == 9);
  std::remove(path.c_str());
}
