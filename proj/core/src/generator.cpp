#include "sspfield/generator.hpp"

#include <string>

#include "nn_init.hpp"
#include "sspfield/errors.hpp"

namespace sspfield {

using diff::Tensor;

void GeneratorConfig::validate() const {
  if (d_r < 2 || d_r % 2 != 0) throw ConfigError("embed dim must be even and >= 2");
  if (n_attn_layers < 1) throw ConfigError("need at least one attention layer");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (n_refs < 1) throw ConfigError("need at least one reference point");
  if (depth < 1) throw ConfigError("profile depth must be positive");
  if (dw_kernel < 1 || dw_kernel % 2 == 0)
    throw ConfigError("depthwise kernel width must be odd");
}

Generator::Generator(GeneratorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Generator::init_params(ParameterStore& store, std::uint64_t seed) const {
  ParamInit init(store, seed);
  int d = cfg_.d_r;
  init.linear("gen.lfb.loc", 2, d);
  init.linear("gen.lfb.sst", 1, d);
  init.layer_norm("gen.lfb.ln1", d);
  init.linear("gen.lfb.fuse", d, d);
  init.layer_norm("gen.lfb.ln2", d);

  init.vector("gen.embed.depth_bias", cfg_.depth, 0.0);
  init.linear("gen.embed", cfg_.depth, d);

  init.matrix("gen.fmb.kdw", 1, cfg_.dw_kernel, cfg_.dw_kernel);
  init.vector("gen.fmb.kpw", 1, 1.0);
  init.vector("gen.fmb.bias", 1, 0.0);
  init.vector("gen.fmb.xi", 1, 0.0);

  init.linear("gen.attn.q", d, d);
  init.linear("gen.attn.k", d, d);
  init.linear("gen.attn.v", d, d);
  for (int l = 0; l < cfg_.n_attn_layers; ++l) {
    std::string p = "gen.attn.l" + std::to_string(l);
    init.layer_norm(p + ".ln", d);
    init.linear(p + ".ffn1", d, cfg_.ffn_dim());
    init.linear(p + ".ffn2", cfg_.ffn_dim(), d);
  }

  init.linear("gen.dec1", d, cfg_.dec_dim());
  init.linear("gen.dec2", cfg_.dec_dim(), cfg_.depth, /*zero=*/true);
}

Tensor Generator::lfb_forward(diff::Tape&, TapeBinding& params,
                              Tensor coords, Tensor ssts) const {
  if (coords.cols() != 2) throw ShapeError("label coords must be [M, 2]");
  if (ssts.cols() != 1) throw ShapeError("label ssts must be [M, 1]");
  if (coords.rows() != ssts.rows())
    throw ShapeError("coords and ssts disagree on point count");
  int m = coords.rows();
  Tensor zl = diff::linear(coords, params.get("gen.lfb.loc.w"),
                           params.get("gen.lfb.loc.b"));
  Tensor zs = diff::linear(ssts, params.get("gen.lfb.sst.w"),
                           params.get("gen.lfb.sst.b"));
  // Both label families stacked along the point axis share one fusion map.
  Tensor z = diff::concat_rows(zl, zs);
  z = diff::layer_norm(z, params.get("gen.lfb.ln1.g"), params.get("gen.lfb.ln1.b"));
  z = diff::linear(z, params.get("gen.lfb.fuse.w"), params.get("gen.lfb.fuse.b"));
  z = diff::layer_norm(z, params.get("gen.lfb.ln2.g"), params.get("gen.lfb.ln2.b"));
  Tensor a = diff::slice_rows(z, 0, m);
  Tensor b = diff::slice_rows(z, m, 2 * m);
  return diff::mul(a, diff::sigmoid(b));
}

Tensor Generator::embed_profiles(diff::Tape&, TapeBinding& params,
                                 Tensor profiles) const {
  if (profiles.cols() != cfg_.depth)
    throw ShapeError("profile width does not match configured depth");
  Tensor biased = diff::add_rowvec(profiles, params.get("gen.embed.depth_bias"));
  return diff::linear(biased, params.get("gen.embed.w"), params.get("gen.embed.b"));
}

Tensor Generator::fmb_forward(diff::Tape&, TapeBinding& params,
                              Tensor z) const {
  Tensor kdw = params.get("gen.fmb.kdw");
  Tensor kpw = params.get("gen.fmb.kpw");
  Tensor bias = params.get("gen.fmb.bias");
  Tensor xi = params.get("gen.fmb.xi");
  Tensor pw = diff::reshape(kpw, {1, 1});
  int m = z.rows();
  // One shared single-channel kernel, applied per point, keeps the reference
  // points exchangeable.
  Tensor enhanced;
  for (int i = 0; i < m; ++i) {
    Tensor row = diff::slice_rows(z, i, i + 1);
    Tensor y = diff::dsconv1d(row, kdw, pw, bias);
    enhanced = i == 0 ? y : diff::concat_rows(enhanced, y);
  }
  return diff::add(z, diff::mul_scalar(diff::simple_gate(enhanced), xi));
}

Tensor Generator::cmpab_forward(diff::Tape&, TapeBinding& params,
                                Tensor target_label, Tensor ref_labels,
                                Tensor values) const {
  Tensor q = diff::linear(target_label, params.get("gen.attn.q.w"),
                          params.get("gen.attn.q.b"));
  Tensor k = diff::linear(ref_labels, params.get("gen.attn.k.w"),
                          params.get("gen.attn.k.b"));
  Tensor v = diff::linear(values, params.get("gen.attn.v.w"),
                          params.get("gen.attn.v.b"));
  Tensor h = q;
  for (int l = 0; l < cfg_.n_attn_layers; ++l) {
    std::string p = "gen.attn.l" + std::to_string(l);
    Tensor o = diff::attention_layer(h, k, v);
    o = diff::dropout(o, cfg_.dropout);
    h = diff::ffn_block(diff::add(h, o), params.get(p + ".ln.g"),
                        params.get(p + ".ln.b"), params.get(p + ".ffn1.w"),
                        params.get(p + ".ffn1.b"), params.get(p + ".ffn2.w"),
                        params.get(p + ".ffn2.b"), cfg_.dropout);
  }
  return h;
}

Tensor Generator::decode_perturbation(diff::Tape&, TapeBinding& params,
                                      Tensor h) const {
  Tensor hidden = diff::gelu(
      diff::linear(h, params.get("gen.dec1.w"), params.get("gen.dec1.b")));
  return diff::linear(hidden, params.get("gen.dec2.w"), params.get("gen.dec2.b"));
}

Tensor Generator::forward(diff::Tape& tape, TapeBinding& params,
                          const NormalizedSample& sample) const {
  if (sample.depth != cfg_.depth || sample.n_refs != cfg_.n_refs)
    throw ShapeError("sample shape does not match generator config");
  int n = sample.n_refs;
  Tensor tc = tape.constant({1, 2}, {sample.target_label[0], sample.target_label[1]});
  Tensor ts = tape.constant({1, 1}, {sample.target_label[2]});
  Tensor rc = tape.constant({n, 2}, sample.ref_coords);
  Tensor rs = tape.constant({n, 1}, sample.ref_ssts);
  Tensor rp = tape.constant({n, cfg_.depth}, sample.ref_profiles);

  Tensor target_label = lfb_forward(tape, params, tc, ts);
  Tensor ref_labels = lfb_forward(tape, params, rc, rs);
  Tensor values = fmb_forward(tape, params, embed_profiles(tape, params, rp));
  Tensor h = cmpab_forward(tape, params, target_label, ref_labels, values);
  return decode_perturbation(tape, params, h);
}

std::vector<double> Generator::perturbation(ParameterStore& store,
                                            const NormalizedSample& sample) const {
  diff::Tape tape;
  tape.train_mode = false;
  TapeBinding params(tape, store, {""});  // everything constant in eval
  Tensor delta = forward(tape, params, sample);
  return delta.value();
}

SoundSpeedProfile Generator::generate(ParameterStore& store,
                                      const NormalizedSample& sample,
                                      const NormStats& stats) const {
  std::vector<double> delta = perturbation(store, sample);
  SoundSpeedProfile out;
  out.speeds.resize(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i)
    out.speeds[i] = sample.ref_mean_phys[i] + delta[i] * stats.depth_std[i];
  return out;
}

}  // namespace sspfield
