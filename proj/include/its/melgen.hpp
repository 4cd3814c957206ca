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
//
// VAE Mel-spectrogram generator conditioned on the expanded slot sequence.
// The encoder downsamples (mel ‖ condition) 4x in time into diagonal-
// Gaussian posterior parameters; the decoder maps a latent sequence plus the
// condition back to Mel frames. Both sides use a non-causal WaveNet stack
// (dilated gated convolutions with residual and skip paths). The prior is
// standard normal, optionally pushed through a volume-preserving shift
// coupling flow.

#pragma once

#include <string>
#include <vector>

#include "its/ops.hpp"
#include "its/optim.hpp"
#include "its/tensor.hpp"

namespace its {

struct MelGenConfig {
  int n_mels = 32;      // F
  int cond_dim = 32;    // D', the projected slot-vector width
  int latent_dim = 16;  // Z (must be even when the flow is enabled)
  int channels = 64;    // WaveNet width
  int wavenet_layers = 4;  // dilations 1, 2, 4, ... per layer
  double kl_weight = 1e-2;
  double kl_warmup_frac = 0.1;  // linear warm-up fraction of total steps
  bool use_flow = false;
  uint64_t flow_seed = 7;
};

struct PosteriorParams {
  Tensor mu, log_sigma;  // [T/4, Z] each
  int64_t pad = 0;       // frames appended (by repeating the last) before
                         // downsampling; decode trims them again
};

class MelGenerator {
 public:
  MelGenerator(ParamStore& store, const std::string& prefix, const MelGenConfig& cfg);

  // mel [F,T], cond [T,D'] -> posterior over ceil(T/4) latent steps.
  PosteriorParams encode(const Tensor& mel, const Tensor& cond) const;

  // z [ceil(T/4), Z], cond [T,D'] -> mel [F,T]. The condition enters both at
  // the latent rate and at the frame rate, so a zero latent still yields
  // condition-dependent output.
  Tensor decode(const Tensor& z, const Tensor& cond) const;

  // Reparameterized z = mu + sigma * eps with eps drawn from (seed, draw);
  // differentiable in mu and log_sigma.
  Tensor sample_posterior(const PosteriorParams& p, uint64_t seed,
                          uint64_t draw) const;

  // Standard-normal prior sample (flow-transformed when enabled);
  // deterministic in (t_latent, seed, draw).
  Tensor sample_prior(int64_t t_latent, uint64_t seed, uint64_t draw = 0) const;
  // The prior distribution's mean: zeros, or the flow image of zeros.
  Tensor prior_mean(int64_t t_latent) const;

  // Volume-preserving shift coupling + channel flip; both identity when the
  // flow is disabled. log-det of the Jacobian is exactly 0 by construction.
  Tensor flow_forward(const Tensor& z) const;
  Tensor flow_inverse(const Tensor& z) const;
  double flow_log_det() const { return 0.0; }

  const MelGenConfig& config() const { return cfg_; }

 private:
  struct WaveNetLayer {
    Tensor fw, fb, gw, gb;  // filter and gate convs [C,C,k]
    Tensor rw, rb, sw, sb;  // residual and skip 1x1
    int dilation = 1;
  };
  Tensor wavenet(const std::vector<WaveNetLayer>& stack, const Tensor& x) const;
  Tensor pad_time(const Tensor& x, int axis, int64_t pad) const;

  MelGenConfig cfg_;
  // Encoder: strided input conv, layernorm, WaveNet, posterior head.
  Tensor enc_in_w_, enc_in_b_, enc_ln_g_, enc_ln_b_;
  std::vector<WaveNetLayer> enc_stack_;
  Tensor enc_stat_w_, enc_stat_b_;  // [2Z, C, 1]
  // Decoder: condition downsampler, latent-rate input conv, WaveNet,
  // stride-4 transposed conv, frame-rate condition projection, output conv.
  Tensor dec_cond_w_, dec_cond_b_, dec_in_w_, dec_in_b_;
  std::vector<WaveNetLayer> dec_stack_;
  Tensor dec_up_w_, dec_up_b_, dec_cproj_w_, dec_cproj_b_;
  Tensor dec_ln_g_, dec_ln_b_, dec_out_w_, dec_out_b_;
  // Flow weights are derived from flow_seed at construction (the flow is a
  // fixed sampler transform, not a trained module), so they live outside the
  // parameter store.
  std::vector<double> flow_w_, flow_b_;
};

// L1(mel_hat, mel) + kl_weight * KL(posterior || N(0,I)), both mean-reduced.
Tensor melgen_loss(const Tensor& mel_hat, const Tensor& mel,
                   const PosteriorParams& posterior, double kl_weight);

// Effective KL weight at `step` of `total_steps`: linear ramp from 0 over
// the first kl_warmup_frac of training, then the configured weight.
double kl_weight_at(const MelGenConfig& cfg, int64_t step, int64_t total_steps);

}  // namespace its
