// Copyright 2026 The ITS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "its/melgen.hpp"

#include <cmath>

#include "its/rng.hpp"

namespace its {

namespace {

constexpr int kStride = 4;  // temporal downsampling factor

double xavier(int64_t fan_in) { return std::sqrt(1.0 / static_cast<double>(fan_in)); }

}  // namespace

MelGenerator::MelGenerator(ParamStore& store, const std::string& prefix,
                           const MelGenConfig& cfg)
    : cfg_(cfg) {
  check(cfg.n_mels >= 1 && cfg.cond_dim >= 1 && cfg.latent_dim >= 1 &&
            cfg.channels >= 1 && cfg.wavenet_layers >= 1,
        "melgen: bad config");
  check(!cfg.use_flow || cfg.latent_dim % 2 == 0,
        "melgen: the coupling flow needs an even latent dim, got ", cfg.latent_dim);
  const int C = cfg.channels, F = cfg.n_mels, Dc = cfg.cond_dim, Z = cfg.latent_dim;
  auto p = [&](const char* s) { return cat(prefix, "/", s); };

  enc_in_w_ = store.add_randn(p("enc/in/w"), {C, F + Dc, kStride},
                              xavier((F + Dc) * kStride));
  enc_in_b_ = store.add_zeros(p("enc/in/b"), {C});
  enc_ln_g_ = store.add_full(p("enc/ln_g"), {C}, 1.0);
  enc_ln_b_ = store.add_zeros(p("enc/ln_b"), {C});
  auto make_stack = [&](const char* side) {
    std::vector<WaveNetLayer> stack;
    for (int i = 0; i < cfg.wavenet_layers; ++i) {
      auto q = [&](const char* s) { return cat(prefix, "/", side, "/wn", i, "/", s); };
      WaveNetLayer l;
      l.dilation = 1 << i;
      l.fw = store.add_randn(q("fw"), {C, C, 3}, xavier(C * 3));
      l.fb = store.add_zeros(q("fb"), {C});
      l.gw = store.add_randn(q("gw"), {C, C, 3}, xavier(C * 3));
      l.gb = store.add_zeros(q("gb"), {C});
      l.rw = store.add_randn(q("rw"), {C, C, 1}, xavier(C));
      l.rb = store.add_zeros(q("rb"), {C});
      l.sw = store.add_randn(q("sw"), {C, C, 1}, xavier(C));
      l.sb = store.add_zeros(q("sb"), {C});
      stack.push_back(std::move(l));
    }
    return stack;
  };
  enc_stack_ = make_stack("enc");
  enc_stat_w_ = store.add_randn(p("enc/stat/w"), {2 * Z, C, 1}, xavier(C));
  enc_stat_b_ = store.add_zeros(p("enc/stat/b"), {2 * Z});

  dec_cond_w_ = store.add_randn(p("dec/cond/w"), {C, Dc, kStride},
                                xavier(Dc * kStride));
  dec_cond_b_ = store.add_zeros(p("dec/cond/b"), {C});
  dec_in_w_ = store.add_randn(p("dec/in/w"), {C, Z + C, 1}, xavier(Z + C));
  dec_in_b_ = store.add_zeros(p("dec/in/b"), {C});
  dec_stack_ = make_stack("dec");
  dec_up_w_ = store.add_randn(p("dec/up/w"), {C, C, kStride}, xavier(C * kStride));
  dec_up_b_ = store.add_zeros(p("dec/up/b"), {C});
  dec_cproj_w_ = store.add_randn(p("dec/cproj/w"), {C, Dc, 1}, xavier(Dc));
  dec_cproj_b_ = store.add_zeros(p("dec/cproj/b"), {C});
  dec_ln_g_ = store.add_full(p("dec/ln_g"), {C}, 1.0);
  dec_ln_b_ = store.add_zeros(p("dec/ln_b"), {C});
  dec_out_w_ = store.add_randn(p("dec/out/w"), {F, C, 1}, xavier(C));
  dec_out_b_ = store.add_zeros(p("dec/out/b"), {F});

  if (cfg.use_flow) {
    const int h = Z / 2;
    CounterRng rng(cfg.flow_seed, "melgen-flow");
    flow_w_.resize(static_cast<size_t>(h) * h);
    flow_b_.resize(static_cast<size_t>(h));
    uint64_t c = 0;
    for (auto& v : flow_w_) v = 0.5 * rng.normal(c++);
    for (auto& v : flow_b_) v = 0.5 * rng.normal(c++);
  }
}

Tensor MelGenerator::wavenet(const std::vector<WaveNetLayer>& stack,
                             const Tensor& x) const {
  Tensor h = x;
  Tensor skips;
  for (const WaveNetLayer& l : stack) {
    Tensor f = tanh_op(conv1d(h, l.fw, l.fb, 1, l.dilation, l.dilation));
    Tensor g = sigmoid(conv1d(h, l.gw, l.gb, 1, l.dilation, l.dilation));
    Tensor gated = mul(f, g);
    Tensor res = conv1d(gated, l.rw, l.rb, 1, 0);   // 1x1 channel mix
    Tensor skip = conv1d(gated, l.sw, l.sb, 1, 0);
    h = add(h, res);
    skips = skips.defined() ? add(skips, skip) : skip;
  }
  return relu(skips);
}

Tensor MelGenerator::pad_time(const Tensor& x, int axis, int64_t pad) const {
  if (pad == 0) return x;
  std::vector<Tensor> parts = {x};
  Tensor last = slice(x, axis, x.dim(axis) - 1, 1);
  for (int64_t i = 0; i < pad; ++i) parts.push_back(last);
  return concat(parts, axis);
}

PosteriorParams MelGenerator::encode(const Tensor& mel, const Tensor& cond) const {
  check(mel.rank() == 2 && mel.dim(0) == cfg_.n_mels, "vae_encode: mel shape ",
        shape_str(mel.shape()), ", expected [", cfg_.n_mels, ",T]");
  check(cond.rank() == 2 && cond.dim(1) == cfg_.cond_dim &&
            cond.dim(0) == mel.dim(1),
        "vae_encode: cond shape ", shape_str(cond.shape()), " does not match mel [",
        cfg_.n_mels, ",", mel.dim(1), "]");
  const int64_t T = mel.dim(1);
  const int64_t pad = (kStride - T % kStride) % kStride;
  Tensor x = concat({pad_time(mel, 1, pad), transpose(pad_time(cond, 0, pad))}, 0);
  x = conv1d(x, enc_in_w_, enc_in_b_, kStride, 0);  // [C, T/4]
  x = layernorm(relu(x), enc_ln_g_, enc_ln_b_, 0);
  x = wavenet(enc_stack_, x);
  Tensor stats = conv1d(x, enc_stat_w_, enc_stat_b_, 1, 0);  // [2Z, T/4]
  PosteriorParams out;
  out.mu = transpose(slice(stats, 0, 0, cfg_.latent_dim));
  out.log_sigma = transpose(slice(stats, 0, cfg_.latent_dim, cfg_.latent_dim));
  out.pad = pad;
  return out;
}

Tensor MelGenerator::decode(const Tensor& z, const Tensor& cond) const {
  check(cond.rank() == 2 && cond.dim(1) == cfg_.cond_dim, "vae_decode: cond shape ",
        shape_str(cond.shape()), ", expected [T,", cfg_.cond_dim, "]");
  const int64_t T = cond.dim(0);
  const int64_t pad = (kStride - T % kStride) % kStride;
  const int64_t t_latent = (T + pad) / kStride;
  check(z.rank() == 2 && z.dim(0) == t_latent && z.dim(1) == cfg_.latent_dim,
        "vae_decode: z shape ", shape_str(z.shape()), ", expected [", t_latent, ",",
        cfg_.latent_dim, "] for ", T, " frames");
  Tensor cond_t = transpose(pad_time(cond, 0, pad));  // [D', T+pad]
  Tensor cond_ds = conv1d(cond_t, dec_cond_w_, dec_cond_b_, kStride, 0);
  Tensor x = concat({transpose(z), cond_ds}, 0);  // [Z+C, T/4]
  x = relu(conv1d(x, dec_in_w_, dec_in_b_, 1, 0));
  x = wavenet(dec_stack_, x);
  Tensor up = transposed_conv1d(x, dec_up_w_, dec_up_b_, kStride, 0);  // [C, T+pad]
  up = add(up, conv1d(cond_t, dec_cproj_w_, dec_cproj_b_, 1, 0));
  up = layernorm(relu(up), dec_ln_g_, dec_ln_b_, 0);
  Tensor out = conv1d(up, dec_out_w_, dec_out_b_, 1, 0);  // [F, T+pad]
  return pad == 0 ? out : slice(out, 1, 0, T);
}

Tensor MelGenerator::sample_posterior(const PosteriorParams& p, uint64_t seed,
                                      uint64_t draw) const {
  check(p.mu.shape() == p.log_sigma.shape(), "sample_posterior: mu ",
        shape_str(p.mu.shape()), " vs log_sigma ", shape_str(p.log_sigma.shape()));
  CounterRng rng(seed, "vae-eps", draw);
  Tensor eps;
  {
    NoGradGuard ng;
    eps = Tensor::randn(p.mu.shape(), rng);
  }
  return add(p.mu, mul(exp_op(p.log_sigma), eps));
}

Tensor MelGenerator::sample_prior(int64_t t_latent, uint64_t seed,
                                  uint64_t draw) const {
  check(t_latent >= 1, "sample_prior: need at least 1 latent step, got ", t_latent);
  CounterRng rng(seed, "prior", draw);
  NoGradGuard ng;
  Tensor z = Tensor::randn({t_latent, cfg_.latent_dim}, rng);
  return cfg_.use_flow ? flow_forward(z) : z;
}

Tensor MelGenerator::prior_mean(int64_t t_latent) const {
  check(t_latent >= 1, "prior_mean: need at least 1 latent step, got ", t_latent);
  NoGradGuard ng;
  Tensor z = Tensor::zeros({t_latent, cfg_.latent_dim});
  // The flow is affine, so the pushforward mean is the flow image of 0.
  return cfg_.use_flow ? flow_forward(z) : z;
}

Tensor MelGenerator::flow_forward(const Tensor& z) const {
  if (!cfg_.use_flow) return z;
  check(z.rank() == 2 && z.dim(1) == cfg_.latent_dim, "flow: z shape ",
        shape_str(z.shape()));
  // couple: [x1 | x2 + t(x1)], then flip the halves.
  const int64_t n = z.dim(0), h = cfg_.latent_dim / 2;
  std::vector<double> out(static_cast<size_t>(z.numel()));
  const auto& d = z.data();
  for (int64_t r = 0; r < n; ++r) {
    const double* x1 = &d[static_cast<size_t>(r * 2 * h)];
    const double* x2 = x1 + h;
    double* y = &out[static_cast<size_t>(r * 2 * h)];
    for (int64_t j = 0; j < h; ++j) {
      double t = flow_b_[static_cast<size_t>(j)];
      for (int64_t k = 0; k < h; ++k)
        t += flow_w_[static_cast<size_t>(j * h + k)] * x1[k];
      y[j] = x2[j] + t;   // shifted half, now first
      y[h + j] = x1[j];   // pass-through half, now second
    }
  }
  return Tensor::from_data(z.shape(), std::move(out));
}

Tensor MelGenerator::flow_inverse(const Tensor& z) const {
  if (!cfg_.use_flow) return z;
  check(z.rank() == 2 && z.dim(1) == cfg_.latent_dim, "flow: z shape ",
        shape_str(z.shape()));
  const int64_t n = z.dim(0), h = cfg_.latent_dim / 2;
  std::vector<double> out(static_cast<size_t>(z.numel()));
  const auto& d = z.data();
  for (int64_t r = 0; r < n; ++r) {
    const double* w1 = &d[static_cast<size_t>(r * 2 * h)];  // = x2 + t(x1)
    const double* w2 = w1 + h;                              // = x1
    double* y = &out[static_cast<size_t>(r * 2 * h)];
    for (int64_t j = 0; j < h; ++j) {
      double t = flow_b_[static_cast<size_t>(j)];
      for (int64_t k = 0; k < h; ++k)
        t += flow_w_[static_cast<size_t>(j * h + k)] * w2[k];
      y[j] = w2[j];
      y[h + j] = w1[j] - t;
    }
  }
  return Tensor::from_data(z.shape(), std::move(out));
}

Tensor melgen_loss(const Tensor& mel_hat, const Tensor& mel,
                   const PosteriorParams& posterior, double kl_weight) {
  check(mel_hat.shape() == mel.shape(), "melgen_loss: mel_hat ",
        shape_str(mel_hat.shape()), " vs mel ", shape_str(mel.shape()));
  Tensor recon = l1(mel_hat, mel);
  Tensor kl = kl_diag_gaussian(posterior.mu, posterior.log_sigma);
  return add(recon, scale(kl, kl_weight));
}

double kl_weight_at(const MelGenConfig& cfg, int64_t step, int64_t total_steps) {
  check(step >= 0 && total_steps >= 1, "kl_weight_at: step ", step, " of ",
        total_steps);
  int64_t warmup = static_cast<int64_t>(
      std::ceil(cfg.kl_warmup_frac * static_cast<double>(total_steps)));
  if (warmup <= 0) return cfg.kl_weight;
  double frac = static_cast<double>(step) / static_cast<double>(warmup);
  return cfg.kl_weight * (frac >= 1.0 ? 1.0 : frac);
}

}  // namespace its
