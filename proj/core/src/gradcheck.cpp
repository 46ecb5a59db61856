#include "sspfield/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>
#include <utility>

#include "sspfield/discriminator.hpp"
#include "sspfield/errors.hpp"
#include "sspfield/generator.hpp"
#include "sspfield/normalize.hpp"
#include "sspfield/ops.hpp"
#include "sspfield/rng.hpp"

namespace sspfield {
namespace {

double eval_scalar(ParameterStore& store, const ScalarBuilder& f) {
  diff::Tape tape;
  TapeBinding binding(tape, store);
  diff::Tensor out = f(tape, binding);
  if (out.size() != 1) throw ContractError("grad_check objective must be scalar");
  return out.scalar();
}

}  // namespace

GradCheckResult grad_check(ParameterStore& store, const ScalarBuilder& f, double h,
                           std::size_t coords_per_param, std::uint64_t seed) {
  // Analytic pass: one forward + one reverse sweep.
  store.zero_grads();
  {
    diff::Tape tape;
    TapeBinding binding(tape, store);
    diff::Tensor out = f(tape, binding);
    if (out.size() != 1) throw ContractError("grad_check objective must be scalar");
    tape.backward(out);
    binding.harvest_grads();
  }

  GradCheckResult result;
  std::mt19937_64 rng(seed);
  for (auto& e : store.entries()) {
    if (!e.trainable) continue;
    std::size_t n = e.value.size();
    std::vector<std::size_t> coords;
    if (n <= coords_per_param) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      while (coords.size() < coords_per_param) {
        std::size_t c = pick(rng);
        if (std::find(coords.begin(), coords.end(), c) == coords.end())
          coords.push_back(c);
      }
    }
    for (std::size_t c : coords) {
      double saved = e.value[c];
      e.value[c] = saved + h;
      double fp = eval_scalar(store, f);
      e.value[c] = saved - h;
      double fm = eval_scalar(store, f);
      e.value[c] = saved;
      double numeric = (fp - fm) / (2.0 * h);
      double analytic = e.grad[c];
      double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      double rel = std::abs(numeric - analytic) / denom;
      ++result.coords_checked;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = e.name;
      }
    }
  }
  return result;
}

namespace {

std::vector<double> rand_vals(std::size_t n, std::uint64_t seed, double lo,
                              double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

// Values kept away from zero so kinked activations (relu) see no FD crossing.
std::vector<double> signed_offzero(std::size_t n, std::uint64_t seed) {
  std::vector<double> out = rand_vals(n, seed, -1.0, 1.0);
  for (double& v : out) v = (v < 0 ? -1.0 : 1.0) * (0.2 + 0.7 * std::abs(v));
  return out;
}

// Reduce any tensor against fixed non-uniform weights; every output element
// gets a distinct coefficient.
diff::Tensor weighted_sum(diff::Tape& tape, diff::Tensor y) {
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::sin(0.7 * static_cast<double>(i) + 1.3) + 0.1;
  diff::Tensor c = tape.constant(y.shape(), std::move(w));
  return diff::sum(diff::mul(y, c));
}

struct SuiteBuilder {
  std::uint64_t seed;
  std::vector<GradCheckCase> cases;

  std::uint64_t sub_seed() {
    return splitmix64(seed ^ (0x5eedULL + cases.size()));
  }

  using Body = std::function<diff::Tensor(diff::Tape&, TapeBinding&)>;

  // Registers `params` (name, shape, values) into a fresh store and wraps
  // `body` with the weighted reduction.
  void add(std::string name,
           std::vector<std::tuple<std::string, std::vector<int>,
                                  std::vector<double>>> params,
           Body body) {
    auto store = std::make_shared<ParameterStore>();
    for (auto& [pname, shape, values] : params)
      store->add(pname, shape, values);
    GradCheckCase c;
    c.name = std::move(name);
    c.store = store;
    c.build = [body = std::move(body)](diff::Tape& tape, TapeBinding& bind) {
      return weighted_sum(tape, body(tape, bind));
    };
    cases.push_back(std::move(c));
  }
};

// Zero-initialized tensors (final decoder layer, feature gates) multiply
// into the graph and would silence every upstream gradient, turning the
// composite checks vacuous. Give them small random values instead.
void randomize_zero_entries(ParameterStore& store, std::uint64_t seed) {
  std::size_t i = 0;
  for (ParamEntry& e : store.entries()) {
    ++i;
    if (!e.trainable) continue;
    bool all_zero = true;
    for (double v : e.value) all_zero = all_zero && v == 0.0;
    if (all_zero)
      e.value = rand_vals(e.value.size(), splitmix64(seed ^ i), -0.5, 0.5);
  }
}

// A fixed small sample for the composite network cases: 3 references over a
// 4-level profile, labels already in normalized units.
NormalizedSample tiny_sample(std::uint64_t seed) {
  NormalizedSample s;
  s.n_refs = 3;
  s.depth = 4;
  s.target_label = rand_vals(3, splitmix64(seed ^ 1), -0.8, 0.8);
  s.ref_coords = rand_vals(6, splitmix64(seed ^ 2), -0.8, 0.8);
  s.ref_ssts = rand_vals(3, splitmix64(seed ^ 3), -0.8, 0.8);
  s.ref_profiles = rand_vals(12, splitmix64(seed ^ 4), -0.8, 0.8);
  s.ref_mean_norm.assign(4, 0.0);
  for (int r = 0; r < 3; ++r)
    for (int d = 0; d < 4; ++d)
      s.ref_mean_norm[static_cast<std::size_t>(d)] +=
          s.ref_profiles[static_cast<std::size_t>(r * 4 + d)] / 3.0;
  s.ref_mean_phys = rand_vals(4, splitmix64(seed ^ 5), 1480.0, 1520.0);
  s.target_norm = rand_vals(4, splitmix64(seed ^ 6), -0.8, 0.8);
  s.target_phys = rand_vals(4, splitmix64(seed ^ 7), 1480.0, 1520.0);
  return s;
}

}  // namespace

std::vector<GradCheckCase> standard_gradcheck_cases(std::uint64_t seed) {
  SuiteBuilder sb{seed, {}};
  auto rv = [&](std::size_t n, double lo = -0.9, double hi = 0.9) {
    return rand_vals(n, sb.sub_seed(), lo, hi);
  };

  sb.add("matmul", {{"a", {3, 4}, rv(12)}, {"b", {4, 2}, rv(8)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::matmul(p.get("a"), p.get("b"));
         });
  sb.add("matmul_nt", {{"a", {3, 4}, rv(12)}, {"b", {2, 4}, rv(8)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::matmul_nt(p.get("a"), p.get("b"));
         });
  sb.add("add", {{"a", {2, 3}, rv(6)}, {"b", {2, 3}, rv(6)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::add(p.get("a"), p.get("b"));
         });
  sb.add("sub", {{"a", {2, 3}, rv(6)}, {"b", {2, 3}, rv(6)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::sub(p.get("a"), p.get("b"));
         });
  sb.add("mul", {{"a", {2, 3}, rv(6)}, {"b", {2, 3}, rv(6)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::mul(p.get("a"), p.get("b"));
         });
  sb.add("scale", {{"a", {2, 3}, rv(6)}}, [](diff::Tape&, TapeBinding& p) {
    return diff::scale(p.get("a"), 1.7);
  });
  sb.add("mul_scalar", {{"a", {2, 3}, rv(6)}, {"s", {1}, rv(1)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::mul_scalar(p.get("a"), p.get("s"));
         });
  sb.add("add_scalar", {{"a", {2, 3}, rv(6)}, {"s", {1}, rv(1)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::add_scalar(p.get("a"), p.get("s"));
         });
  sb.add("add_rowvec", {{"a", {2, 3}, rv(6)}, {"b", {3}, rv(3)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::add_rowvec(p.get("a"), p.get("b"));
         });
  sb.add("reshape", {{"a", {2, 6}, rv(12)}}, [](diff::Tape&, TapeBinding& p) {
    return diff::reshape(p.get("a"), {3, 4});
  });
  sb.add("concat_rows", {{"a", {2, 3}, rv(6)}, {"b", {1, 3}, rv(3)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::concat_rows(p.get("a"), p.get("b"));
         });
  sb.add("concat_cols", {{"a", {2, 2}, rv(4)}, {"b", {2, 3}, rv(6)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::concat_cols(p.get("a"), p.get("b"));
         });
  sb.add("slice_rows", {{"a", {4, 3}, rv(12)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::slice_rows(p.get("a"), 1, 3);
         });
  sb.add("relu", {{"a", {2, 4}, signed_offzero(8, sb.sub_seed())}},
         [](diff::Tape&, TapeBinding& p) { return diff::relu(p.get("a")); });
  sb.add("sigmoid", {{"a", {2, 4}, rv(8)}},
         [](diff::Tape&, TapeBinding& p) { return diff::sigmoid(p.get("a")); });
  sb.add("gelu", {{"a", {2, 4}, rv(8)}},
         [](diff::Tape&, TapeBinding& p) { return diff::gelu(p.get("a")); });
  sb.add("softplus", {{"a", {2, 4}, rv(8)}},
         [](diff::Tape&, TapeBinding& p) { return diff::softplus(p.get("a")); });
  sb.add("sqrt_eps", {{"a", {2, 4}, rv(8, 0.5, 1.5)}},
         [](diff::Tape&, TapeBinding& p) { return diff::sqrt_eps(p.get("a")); });
  sb.add("sum", {{"a", {3, 3}, rv(9)}},
         [](diff::Tape&, TapeBinding& p) { return diff::sum(p.get("a")); });
  sb.add("mean", {{"a", {3, 3}, rv(9)}},
         [](diff::Tape&, TapeBinding& p) { return diff::mean(p.get("a")); });
  sb.add("row_mean", {{"a", {3, 4}, rv(12)}},
         [](diff::Tape&, TapeBinding& p) { return diff::row_mean(p.get("a")); });
  sb.add("linear",
         {{"x", {2, 3}, rv(6)}, {"w", {3, 4}, rv(12)}, {"b", {4}, rv(4)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::linear(p.get("x"), p.get("w"), p.get("b"));
         });
  sb.add("layer_norm",
         {{"x", {2, 4}, rv(8)}, {"g", {4}, rv(4, 0.5, 1.5)}, {"b", {4}, rv(4)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::layer_norm(p.get("x"), p.get("g"), p.get("b"));
         });
  sb.add("glu", {{"x", {2, 6}, rv(12)}},
         [](diff::Tape&, TapeBinding& p) { return diff::glu(p.get("x")); });
  sb.add("simple_gate", {{"x", {2, 3}, rv(6)}}, [](diff::Tape&, TapeBinding& p) {
    return diff::simple_gate(p.get("x"));
  });
  sb.add("dsconv1d",
         {{"x", {2, 5}, rv(10)},
          {"kdw", {2, 3}, rv(6)},
          {"kpw", {3, 2}, rv(6)},
          {"b", {3}, rv(3)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::dsconv1d(p.get("x"), p.get("kdw"), p.get("kpw"),
                                 p.get("b"));
         });
  sb.add("conv1d",
         {{"x", {2, 5}, rv(10)}, {"w", {2, 6}, rv(12)}, {"b", {2}, rv(2)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::conv1d(p.get("x"), p.get("w"), p.get("b"), 3);
         });
  {
    // Even columns get a +0.5 lift so each pooling pair has a clear winner
    // and no FD step can flip the argmax.
    std::vector<double> vals = rand_vals(12, sb.sub_seed(), -0.2, 0.2);
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (i % 2 == 0) vals[i] += 0.5;
    sb.add("maxpool2", {{"x", {2, 6}, std::move(vals)}},
           [](diff::Tape&, TapeBinding& p) {
             return diff::maxpool2(p.get("x"));
           });
  }
  sb.add("stab_softmax", {{"x", {2, 4}, rv(8)}}, [](diff::Tape&, TapeBinding& p) {
    return diff::stab_softmax(p.get("x"));
  });
  sb.add("attention_layer",
         {{"q", {2, 4}, rv(8)}, {"k", {3, 4}, rv(12)}, {"v", {3, 4}, rv(12)}},
         [](diff::Tape&, TapeBinding& p) {
           return diff::attention_layer(p.get("q"), p.get("k"), p.get("v"));
         });
  auto ffn_params = [&] {
    return std::vector<std::tuple<std::string, std::vector<int>,
                                  std::vector<double>>>{
        {"x", {2, 3}, rv(6)},      {"ln_g", {3}, rv(3, 0.5, 1.5)},
        {"ln_b", {3}, rv(3)},      {"w1", {3, 4}, rv(12)},
        {"b1", {4}, rv(4)},        {"w2", {4, 3}, rv(12)},
        {"b2", {3}, rv(3)},
    };
  };
  sb.add("ffn_block", ffn_params(), [](diff::Tape&, TapeBinding& p) {
    return diff::ffn_block(p.get("x"), p.get("ln_g"), p.get("ln_b"),
                           p.get("w1"), p.get("b1"), p.get("w2"), p.get("b2"));
  });
  sb.add("ffn_block_dropout", ffn_params(),
         [](diff::Tape& t, TapeBinding& p) {
           t.train_mode = true;
           t.dropout_seed = 99;
           t.dropout_step = 0;
           return diff::ffn_block(p.get("x"), p.get("ln_g"), p.get("ln_b"),
                                  p.get("w1"), p.get("b1"), p.get("w2"),
                                  p.get("b2"), 0.25);
         });
  sb.add("dropout", {{"x", {2, 4}, rv(8)}}, [](diff::Tape& t, TapeBinding& p) {
    t.train_mode = true;
    t.dropout_seed = 41;
    t.dropout_step = 0;
    return diff::dropout(p.get("x"), 0.3);
  });

  // Composites: full networks at miniature width, dropout live.
  GeneratorConfig gcfg;
  gcfg.d_r = 4;
  gcfg.n_attn_layers = 1;
  gcfg.dropout = 0.1;
  gcfg.n_refs = 3;
  gcfg.depth = 4;
  gcfg.ffn_hidden = 4;
  gcfg.dec_hidden = 4;
  {
    auto store = std::make_shared<ParameterStore>();
    Generator gen(gcfg);
    gen.init_params(*store, sb.sub_seed());
    randomize_zero_entries(*store, splitmix64(seed ^ 0xf111ULL));
    NormalizedSample sample = tiny_sample(splitmix64(seed ^ 0xa11ce));
    GradCheckCase c;
    c.name = "generator";
    c.store = store;
    c.build = [gen, sample](diff::Tape& tape, TapeBinding& bind) {
      tape.train_mode = true;
      tape.dropout_seed = 7;
      tape.dropout_step = 0;
      return weighted_sum(tape, gen.forward(tape, bind, sample));
    };
    sb.cases.push_back(std::move(c));
  }
  {
    DiscriminatorConfig dcfg;
    dcfg.d_r = 4;
    dcfg.n_attn_layers = 1;
    dcfg.dropout = 0.1;
    dcfg.n_refs = 3;
    dcfg.depth = 4;
    dcfg.ffn_hidden = 4;
    auto store = std::make_shared<ParameterStore>();
    Discriminator disc(dcfg);
    disc.init_params(*store, sb.sub_seed());
    randomize_zero_entries(*store, splitmix64(seed ^ 0xf222ULL));
    NormalizedSample sample = tiny_sample(splitmix64(seed ^ 0xd15cULL));
    std::vector<double> cand = rand_vals(4, splitmix64(seed ^ 0xca4dULL),
                                         -0.8, 0.8);
    GradCheckCase c;
    c.name = "discriminator";
    c.store = store;
    c.build = [disc, sample, cand](diff::Tape& tape, TapeBinding& bind) {
      tape.train_mode = true;
      tape.dropout_seed = 13;
      tape.dropout_step = 0;
      diff::Tensor x = tape.constant({1, 4}, cand);
      DiscriminatorOutput out = disc.forward(tape, bind, x, sample);
      diff::Tensor heads = diff::concat_cols(
          diff::concat_cols(out.realism, out.pred_loc), out.pred_sst);
      return weighted_sum(tape, heads);
    };
    sb.cases.push_back(std::move(c));
  }
  return sb.cases;
}

}  // namespace sspfield
