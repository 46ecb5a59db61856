#include "sspfield/runconfig.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>

#include "sspfield/errors.hpp"

namespace sspfield {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& v, const std::string& key) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "': not a nonnegative integer: '" + v + "'");
  return out;
}

double parse_dbl(const std::string& v, const std::string& key) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  return out;
}

MonthTag parse_month(const std::string& v, const std::string& key) {
  std::size_t dash = v.find('-');
  if (dash == std::string::npos)
    throw ConfigError("key '" + key + "': expected YYYY-MM, got '" + v + "'");
  MonthTag tag;
  tag.year = parse_int(v.substr(0, dash), key);
  tag.month = parse_int(v.substr(dash + 1), key);
  if (tag.month < 1 || tag.month > 12)
    throw ConfigError("key '" + key + "': month out of range in '" + v + "'");
  return tag;
}

std::vector<double> parse_depths(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < v.size()) {
    std::size_t comma = v.find(',', pos);
    if (comma == std::string::npos) comma = v.size();
    std::string item = trim(v.substr(pos, comma - pos));
    if (item.empty())
      throw ConfigError("key '" + key + "': empty entry in list '" + v + "'");
    out.push_back(parse_dbl(item, key));
    pos = comma + 1;
  }
  return out;
}

std::string fmt_int(int v) { return std::to_string(v); }
std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

std::string fmt_dbl(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_month(const MonthTag& t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", t.year, t.month);
  return buf;
}

std::string fmt_depths(const std::vector<double>& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) out += ',';
    out += fmt_dbl(d[i]);
  }
  return out;
}

struct KeyDef {
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      // model shape
      {"d_r", [](const RunConfig& c) { return fmt_int(c.gen.d_r); },
       [](RunConfig& c, const std::string& v) { c.gen.d_r = parse_int(v, "d_r"); }},
      {"n_attn_layers",
       [](const RunConfig& c) { return fmt_int(c.gen.n_attn_layers); },
       [](RunConfig& c, const std::string& v) {
         c.gen.n_attn_layers = parse_int(v, "n_attn_layers");
       }},
      {"dropout", [](const RunConfig& c) { return fmt_dbl(c.gen.dropout); },
       [](RunConfig& c, const std::string& v) {
         c.gen.dropout = parse_dbl(v, "dropout");
       }},
      {"n_refs", [](const RunConfig& c) { return fmt_int(c.gen.n_refs); },
       [](RunConfig& c, const std::string& v) {
         c.gen.n_refs = parse_int(v, "n_refs");
         c.cnn.n_refs = c.gen.n_refs;
       }},
      {"depth", [](const RunConfig& c) { return fmt_int(c.gen.depth); },
       [](RunConfig& c, const std::string& v) {
         c.gen.depth = parse_int(v, "depth");
         c.cnn.depth = c.gen.depth;
       }},
      {"dw_kernel", [](const RunConfig& c) { return fmt_int(c.gen.dw_kernel); },
       [](RunConfig& c, const std::string& v) {
         c.gen.dw_kernel = parse_int(v, "dw_kernel");
       }},
      {"ffn_hidden", [](const RunConfig& c) { return fmt_int(c.gen.ffn_hidden); },
       [](RunConfig& c, const std::string& v) {
         c.gen.ffn_hidden = parse_int(v, "ffn_hidden");
       }},
      {"dec_hidden", [](const RunConfig& c) { return fmt_int(c.gen.dec_hidden); },
       [](RunConfig& c, const std::string& v) {
         c.gen.dec_hidden = parse_int(v, "dec_hidden");
       }},
      // training
      {"batch", [](const RunConfig& c) { return fmt_int(c.train.batch); },
       [](RunConfig& c, const std::string& v) {
         c.train.batch = parse_int(v, "batch");
       }},
      {"epochs", [](const RunConfig& c) { return fmt_int(c.train.epochs); },
       [](RunConfig& c, const std::string& v) {
         c.train.epochs = parse_int(v, "epochs");
       }},
      {"lr_g", [](const RunConfig& c) { return fmt_dbl(c.train.lr_g); },
       [](RunConfig& c, const std::string& v) {
         c.train.lr_g = parse_dbl(v, "lr_g");
       }},
      {"lr_d", [](const RunConfig& c) { return fmt_dbl(c.train.lr_d); },
       [](RunConfig& c, const std::string& v) {
         c.train.lr_d = parse_dbl(v, "lr_d");
       }},
      {"warmup_epochs",
       [](const RunConfig& c) { return fmt_int(c.train.warmup_epochs); },
       [](RunConfig& c, const std::string& v) {
         c.train.warmup_epochs = parse_int(v, "warmup_epochs");
       }},
      {"stage1_epochs",
       [](const RunConfig& c) { return fmt_int(c.train.stage1_epochs); },
       [](RunConfig& c, const std::string& v) {
         c.train.stage1_epochs = parse_int(v, "stage1_epochs");
       }},
      {"lr_min", [](const RunConfig& c) { return fmt_dbl(c.train.lr_min); },
       [](RunConfig& c, const std::string& v) {
         c.train.lr_min = parse_dbl(v, "lr_min");
       }},
      {"weight_decay",
       [](const RunConfig& c) { return fmt_dbl(c.train.weight_decay); },
       [](RunConfig& c, const std::string& v) {
         c.train.weight_decay = parse_dbl(v, "weight_decay");
       }},
      {"eta_recon", [](const RunConfig& c) { return fmt_dbl(c.train.eta_recon); },
       [](RunConfig& c, const std::string& v) {
         c.train.eta_recon = parse_dbl(v, "eta_recon");
       }},
      {"eta_r1", [](const RunConfig& c) { return fmt_dbl(c.train.eta_r1); },
       [](RunConfig& c, const std::string& v) {
         c.train.eta_r1 = parse_dbl(v, "eta_r1");
       }},
      {"eta_r2", [](const RunConfig& c) { return fmt_dbl(c.train.eta_r2); },
       [](RunConfig& c, const std::string& v) {
         c.train.eta_r2 = parse_dbl(v, "eta_r2");
       }},
      {"lambda_loc",
       [](const RunConfig& c) { return fmt_dbl(c.train.lambda_loc); },
       [](RunConfig& c, const std::string& v) {
         c.train.lambda_loc = parse_dbl(v, "lambda_loc");
       }},
      {"lambda_sst",
       [](const RunConfig& c) { return fmt_dbl(c.train.lambda_sst); },
       [](RunConfig& c, const std::string& v) {
         c.train.lambda_sst = parse_dbl(v, "lambda_sst");
       }},
      {"checkpoint_every",
       [](const RunConfig& c) { return fmt_int(c.train.checkpoint_every); },
       [](RunConfig& c, const std::string& v) {
         c.train.checkpoint_every = parse_int(v, "checkpoint_every");
       }},
      // idw
      {"idw_power", [](const RunConfig& c) { return fmt_dbl(c.idw.p); },
       [](RunConfig& c, const std::string& v) {
         c.idw.p = parse_dbl(v, "idw_power");
       }},
      {"idw_zero_dist_eps",
       [](const RunConfig& c) { return fmt_dbl(c.idw.zero_dist_eps); },
       [](RunConfig& c, const std::string& v) {
         c.idw.zero_dist_eps = parse_dbl(v, "idw_zero_dist_eps");
       }},
      // cnn
      {"cnn_c1", [](const RunConfig& c) { return fmt_int(c.cnn.c1); },
       [](RunConfig& c, const std::string& v) { c.cnn.c1 = parse_int(v, "cnn_c1"); }},
      {"cnn_c2", [](const RunConfig& c) { return fmt_int(c.cnn.c2); },
       [](RunConfig& c, const std::string& v) { c.cnn.c2 = parse_int(v, "cnn_c2"); }},
      {"cnn_c3", [](const RunConfig& c) { return fmt_int(c.cnn.c3); },
       [](RunConfig& c, const std::string& v) { c.cnn.c3 = parse_int(v, "cnn_c3"); }},
      {"cnn_kernel", [](const RunConfig& c) { return fmt_int(c.cnn.kernel); },
       [](RunConfig& c, const std::string& v) {
         c.cnn.kernel = parse_int(v, "cnn_kernel");
       }},
      {"cnn_fc_hidden",
       [](const RunConfig& c) { return fmt_int(c.cnn.fc_hidden); },
       [](RunConfig& c, const std::string& v) {
         c.cnn.fc_hidden = parse_int(v, "cnn_fc_hidden");
       }},
      {"cnn_epochs", [](const RunConfig& c) { return fmt_int(c.cnn.epochs); },
       [](RunConfig& c, const std::string& v) {
         c.cnn.epochs = parse_int(v, "cnn_epochs");
       }},
      {"cnn_batch", [](const RunConfig& c) { return fmt_int(c.cnn.batch); },
       [](RunConfig& c, const std::string& v) {
         c.cnn.batch = parse_int(v, "cnn_batch");
       }},
      {"cnn_lr", [](const RunConfig& c) { return fmt_dbl(c.cnn.lr); },
       [](RunConfig& c, const std::string& v) { c.cnn.lr = parse_dbl(v, "cnn_lr"); }},
      {"cnn_weight_decay",
       [](const RunConfig& c) { return fmt_dbl(c.cnn.weight_decay); },
       [](RunConfig& c, const std::string& v) {
         c.cnn.weight_decay = parse_dbl(v, "cnn_weight_decay");
       }},
      // split
      {"train_begin",
       [](const RunConfig& c) { return fmt_month(c.split.train_begin); },
       [](RunConfig& c, const std::string& v) {
         c.split.train_begin = parse_month(v, "train_begin");
       }},
      {"train_end", [](const RunConfig& c) { return fmt_month(c.split.train_end); },
       [](RunConfig& c, const std::string& v) {
         c.split.train_end = parse_month(v, "train_end");
       }},
      {"test_begin",
       [](const RunConfig& c) { return fmt_month(c.split.test_begin); },
       [](RunConfig& c, const std::string& v) {
         c.split.test_begin = parse_month(v, "test_begin");
       }},
      {"test_end", [](const RunConfig& c) { return fmt_month(c.split.test_end); },
       [](RunConfig& c, const std::string& v) {
         c.split.test_end = parse_month(v, "test_end");
       }},
      {"train_stride_deg",
       [](const RunConfig& c) { return fmt_dbl(c.split.train_stride_deg); },
       [](RunConfig& c, const std::string& v) {
         c.split.train_stride_deg = parse_dbl(v, "train_stride_deg");
       }},
      {"test_offset_deg",
       [](const RunConfig& c) { return fmt_dbl(c.split.test_offset_deg); },
       [](RunConfig& c, const std::string& v) {
         c.split.test_offset_deg = parse_dbl(v, "test_offset_deg");
       }},
      // synthesis
      {"synth_n_lon", [](const RunConfig& c) { return fmt_int(c.synth_n_lon); },
       [](RunConfig& c, const std::string& v) {
         c.synth_n_lon = parse_int(v, "synth_n_lon");
       }},
      {"synth_n_lat", [](const RunConfig& c) { return fmt_int(c.synth_n_lat); },
       [](RunConfig& c, const std::string& v) {
         c.synth_n_lat = parse_int(v, "synth_n_lat");
       }},
      {"synth_months", [](const RunConfig& c) { return fmt_int(c.synth_months); },
       [](RunConfig& c, const std::string& v) {
         c.synth_months = parse_int(v, "synth_months");
       }},
      // run
      {"seed", [](const RunConfig& c) { return fmt_u64(c.seed); },
       [](RunConfig& c, const std::string& v) {
         c.seed = parse_u64(v, "seed");
         c.train.seed = c.seed;
         c.cnn.seed = c.seed;
       }},
      {"workers", [](const RunConfig& c) { return fmt_int(c.workers); },
       [](RunConfig& c, const std::string& v) {
         c.workers = parse_int(v, "workers");
       }},
      {"data_dir", [](const RunConfig& c) { return c.data_dir; },
       [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
      {"out_dir", [](const RunConfig& c) { return c.out_dir; },
       [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"checkpoint", [](const RunConfig& c) { return c.checkpoint; },
       [](RunConfig& c, const std::string& v) { c.checkpoint = v; }},
      {"eval_depths", [](const RunConfig& c) { return fmt_depths(c.eval_depths); },
       [](RunConfig& c, const std::string& v) {
         c.eval_depths = parse_depths(v, "eval_depths");
       }},
  };
  return table;
}

}  // namespace

DiscriminatorConfig RunConfig::disc() const {
  DiscriminatorConfig d;
  d.d_r = gen.d_r;
  d.n_attn_layers = gen.n_attn_layers;
  d.dropout = gen.dropout;
  d.n_refs = gen.n_refs;
  d.depth = gen.depth;
  d.dw_kernel = gen.dw_kernel;
  d.ffn_hidden = gen.ffn_hidden;
  return d;
}

void RunConfig::validate() const {
  gen.validate();
  disc().validate();
  train.validate();
  idw.validate();
  try {
    cnn.validate();
  } catch (const ShapeError& e) {
    // at the config level an impossible shape is a configuration problem
    throw ConfigError(e.what());
  }
  if (cnn.depth != gen.depth || cnn.n_refs != gen.n_refs)
    throw ConfigError("baseline and generator disagree on sample shape");
  if (synth_n_lon < 3 || synth_n_lat < 3)
    throw ConfigError("synthetic grid needs at least 3x3 cells");
  if (synth_months < 1) throw ConfigError("synthetic field needs >= 1 month");
  if (workers < 1) throw ConfigError("worker count must be >= 1");
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  if (name == "desk") {
    cfg.split.train_begin = {2000, 1};
    cfg.split.train_end = {2000, 9};
    cfg.split.test_begin = {2000, 10};
    cfg.split.test_end = {2000, 12};
    return cfg;
  }
  if (name == "paper") {
    cfg.gen.depth = 1977;
    cfg.gen.d_r = 384;
    cfg.train.batch = 128;
    cfg.train.epochs = 196;
    cfg.cnn.depth = cfg.gen.depth;
    cfg.cnn.c1 = 64;
    cfg.cnn.c2 = 128;
    cfg.cnn.c3 = 256;
    cfg.cnn.fc_hidden = 256;
    cfg.cnn.batch = 128;
    cfg.cnn.epochs = 196;
    return cfg;  // splits keep their 2004..2023 defaults
  }
  throw ConfigError("unknown preset '" + name + "' (want desk or paper)");
}

void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  for (const KeyDef& def : key_table()) {
    if (key == def.name) {
      def.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    try {
      set_config_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const KeyDef& def : key_table()) {
    out += def.name;
    out += " = ";
    out += def.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace sspfield
