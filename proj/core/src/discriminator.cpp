#include "sspfield/discriminator.hpp"

#include <string>

#include "nn_init.hpp"
#include "sspfield/errors.hpp"

namespace sspfield {

using diff::Tensor;

void DiscriminatorConfig::validate() const {
  if (d_r < 2 || d_r % 2 != 0) throw ConfigError("embed dim must be even and >= 2");
  if (n_attn_layers < 1) throw ConfigError("need at least one attention layer");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (n_refs < 1) throw ConfigError("need at least one reference point");
  if (depth < 1) throw ConfigError("profile depth must be positive");
  if (dw_kernel < 1 || dw_kernel % 2 == 0)
    throw ConfigError("depthwise kernel width must be odd");
}

Discriminator::Discriminator(DiscriminatorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Discriminator::init_params(ParameterStore& store, std::uint64_t seed) const {
  ParamInit init(store, seed);
  int d = cfg_.d_r;
  init.vector("disc.embed.depth_bias", cfg_.depth, 0.0);
  init.linear("disc.embed", cfg_.depth, d);

  init.matrix("disc.fmb.kdw", 1, cfg_.dw_kernel, cfg_.dw_kernel);
  init.vector("disc.fmb.kpw", 1, 1.0);
  init.vector("disc.fmb.bias", 1, 0.0);
  init.vector("disc.fmb.xi", 1, 0.0);

  init.linear("disc.lab.loc", 2, d);
  init.layer_norm("disc.lab.loc.ln", d);
  init.linear("disc.lab.sst", 1, d);
  init.layer_norm("disc.lab.sst.ln", d);

  init.linear("disc.attn.q", d, d);
  init.linear("disc.attn.k", d, d);
  init.linear("disc.attn.vloc", d, d);
  init.linear("disc.attn.vsst", d, d);
  for (const char* br : {"loc", "sst"}) {
    for (int l = 0; l < cfg_.n_attn_layers; ++l) {
      std::string p = std::string("disc.attn.") + br + ".l" + std::to_string(l);
      init.layer_norm(p + ".ln", d);
      init.linear(p + ".ffn1", d, cfg_.ffn_dim());
      init.linear(p + ".ffn2", cfg_.ffn_dim(), d);
    }
  }

  init.linear("disc.head.loc", d, 2);
  init.linear("disc.head.sst", d, 1);
  init.linear("disc.head.real", 2 * d, 1);
}

namespace {

// Shared profile pathway: per-depth bias, linear embed, then the same
// single-kernel mixing block the generator uses on its fused features.
Tensor profile_features(TapeBinding& params, Tensor profiles) {
  Tensor biased =
      diff::add_rowvec(profiles, params.get("disc.embed.depth_bias"));
  Tensor z = diff::linear(biased, params.get("disc.embed.w"),
                          params.get("disc.embed.b"));
  Tensor kdw = params.get("disc.fmb.kdw");
  Tensor pw = diff::reshape(params.get("disc.fmb.kpw"), {1, 1});
  Tensor bias = params.get("disc.fmb.bias");
  Tensor xi = params.get("disc.fmb.xi");
  int m = z.rows();
  Tensor enhanced;
  for (int i = 0; i < m; ++i) {
    Tensor row = diff::slice_rows(z, i, i + 1);
    Tensor y = diff::dsconv1d(row, kdw, pw, bias);
    enhanced = i == 0 ? y : diff::concat_rows(enhanced, y);
  }
  return diff::add(z, diff::mul_scalar(diff::simple_gate(enhanced), xi));
}

Tensor label_features(TapeBinding& params, const std::string& prefix,
                      Tensor labels) {
  Tensor z = diff::linear(labels, params.get(prefix + ".w"),
                          params.get(prefix + ".b"));
  return diff::layer_norm(z, params.get(prefix + ".ln.g"),
                          params.get(prefix + ".ln.b"));
}

Tensor attention_branch(const DiscriminatorConfig& cfg, TapeBinding& params,
                        const char* name, Tensor q, Tensor k, Tensor v) {
  Tensor h = q;
  for (int l = 0; l < cfg.n_attn_layers; ++l) {
    std::string p =
        std::string("disc.attn.") + name + ".l" + std::to_string(l);
    Tensor o = diff::attention_layer(h, k, v);
    o = diff::dropout(o, cfg.dropout);
    h = diff::ffn_block(diff::add(h, o), params.get(p + ".ln.g"),
                        params.get(p + ".ln.b"), params.get(p + ".ffn1.w"),
                        params.get(p + ".ffn1.b"), params.get(p + ".ffn2.w"),
                        params.get(p + ".ffn2.b"), cfg.dropout);
  }
  return h;
}

}  // namespace

DiscriminatorOutput Discriminator::forward(diff::Tape& tape,
                                           TapeBinding& params,
                                           Tensor candidate,
                                           const NormalizedSample& sample) const {
  if (candidate.rows() != 1 || candidate.cols() != cfg_.depth)
    throw ShapeError("candidate profile must be [1, depth]");
  if (sample.depth != cfg_.depth || sample.n_refs != cfg_.n_refs)
    throw ShapeError("sample does not match discriminator configuration");
  int n = sample.n_refs;
  Tensor rp = tape.constant({n, cfg_.depth}, sample.ref_profiles);
  Tensor rc = tape.constant({n, 2}, sample.ref_coords);
  Tensor rs = tape.constant({n, 1}, sample.ref_ssts);

  Tensor cand_feat = profile_features(params, candidate);
  Tensor ref_feat = profile_features(params, rp);

  // Both branches ask the same question of the same keys; they differ only in
  // which label family the answer is assembled from.
  Tensor q = diff::linear(cand_feat, params.get("disc.attn.q.w"),
                          params.get("disc.attn.q.b"));
  Tensor k = diff::linear(ref_feat, params.get("disc.attn.k.w"),
                          params.get("disc.attn.k.b"));
  Tensor v_loc = diff::linear(label_features(params, "disc.lab.loc", rc),
                              params.get("disc.attn.vloc.w"),
                              params.get("disc.attn.vloc.b"));
  Tensor v_sst = diff::linear(label_features(params, "disc.lab.sst", rs),
                              params.get("disc.attn.vsst.w"),
                              params.get("disc.attn.vsst.b"));

  DiscriminatorOutput out;
  out.h_loc = attention_branch(cfg_, params, "loc", q, k, v_loc);
  out.h_sst = attention_branch(cfg_, params, "sst", q, k, v_sst);
  out.pred_loc = diff::linear(out.h_loc, params.get("disc.head.loc.w"),
                              params.get("disc.head.loc.b"));
  out.pred_sst = diff::linear(out.h_sst, params.get("disc.head.sst.w"),
                              params.get("disc.head.sst.b"));
  out.realism = diff::linear(diff::concat_cols(out.h_loc, out.h_sst),
                             params.get("disc.head.real.w"),
                             params.get("disc.head.real.b"));
  return out;
}

}  // namespace sspfield
