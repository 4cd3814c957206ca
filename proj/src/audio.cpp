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

#include "its/audio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace its {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

void check_cfg(const AudioConfig& cfg) {
  check(is_pow2(cfg.frame_size), "audio: frame_size must be a power of two, got ",
        cfg.frame_size);
  check(cfg.hop >= 1 && cfg.hop <= cfg.frame_size, "audio: hop ", cfg.hop,
        " incompatible with frame_size ", cfg.frame_size);
  check(cfg.n_mels >= 2 && cfg.sample_rate >= 1000, "audio: bad config n_mels=",
        cfg.n_mels, " sample_rate=", cfg.sample_rate);
}

}  // namespace

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  check(is_pow2(static_cast<int>(n)), "fft: size must be a power of two, got ", n);
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1 : -1);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

std::vector<double> hann_window(int size) {
  std::vector<double> w(static_cast<size_t>(size));
  for (int i = 0; i < size; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / size));
  return w;
}

std::vector<std::vector<std::complex<double>>> stft(const std::vector<double>& wave,
                                                    const AudioConfig& cfg) {
  check_cfg(cfg);
  check(static_cast<int>(wave.size()) >= cfg.frame_size, "stft: waveform of ",
        wave.size(), " samples shorter than one frame (", cfg.frame_size, ")");
  int64_t t_frames = (static_cast<int64_t>(wave.size()) - cfg.frame_size) / cfg.hop + 1;
  std::vector<double> win = hann_window(cfg.frame_size);
  std::vector<std::vector<std::complex<double>>> out(static_cast<size_t>(t_frames));
  std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.frame_size));
  for (int64_t t = 0; t < t_frames; ++t) {
    for (int i = 0; i < cfg.frame_size; ++i)
      buf[i] = wave[static_cast<size_t>(t * cfg.hop + i)] * win[i];
    fft_radix2(buf, false);
    out[t].assign(buf.begin(), buf.begin() + cfg.n_bins());
  }
  return out;
}

std::vector<double> istft(const std::vector<std::vector<std::complex<double>>>& frames,
                          const AudioConfig& cfg) {
  check_cfg(cfg);
  check(!frames.empty(), "istft: no frames");
  int64_t t_frames = static_cast<int64_t>(frames.size());
  int64_t n = cfg.samples_for_frames(t_frames);
  std::vector<double> win = hann_window(cfg.frame_size);
  std::vector<double> acc(static_cast<size_t>(n), 0.0);
  std::vector<double> norm(static_cast<size_t>(n), 0.0);
  std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.frame_size));
  for (int64_t t = 0; t < t_frames; ++t) {
    check(static_cast<int>(frames[t].size()) == cfg.n_bins(), "istft: frame ", t,
          " has ", frames[t].size(), " bins, expected ", cfg.n_bins());
    // Rebuild the full spectrum from the half-spectrum (conjugate symmetry).
    for (int b = 0; b < cfg.n_bins(); ++b) buf[b] = frames[t][b];
    for (int b = cfg.n_bins(); b < cfg.frame_size; ++b)
      buf[b] = std::conj(frames[t][static_cast<size_t>(cfg.frame_size - b)]);
    fft_radix2(buf, true);
    for (int i = 0; i < cfg.frame_size; ++i) {
      acc[static_cast<size_t>(t * cfg.hop + i)] += buf[i].real() * win[i];
      norm[static_cast<size_t>(t * cfg.hop + i)] += win[i] * win[i];
    }
  }
  for (size_t i = 0; i < acc.size(); ++i) acc[i] /= std::max(norm[i], 1e-8);
  return acc;
}

std::vector<std::vector<double>> mel_filterbank(const AudioConfig& cfg) {
  check_cfg(cfg);
  const int bins = cfg.n_bins();
  const double fmax = cfg.sample_rate / 2.0;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> centers_hz(static_cast<size_t>(cfg.n_mels) + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    centers_hz[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));
  std::vector<std::vector<double>> fb(static_cast<size_t>(cfg.n_mels),
                                      std::vector<double>(static_cast<size_t>(bins), 0.0));
  for (int m = 0; m < cfg.n_mels; ++m) {
    double lo = centers_hz[m], mid = centers_hz[m + 1], hi = centers_hz[m + 2];
    for (int b = 0; b < bins; ++b) {
      double f = fmax * b / (bins - 1);
      if (f > lo && f < mid)
        fb[m][b] = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb[m][b] = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

Tensor mel_from_waveform(const std::vector<double>& wave, const AudioConfig& cfg) {
  auto frames = stft(wave, cfg);
  auto fb = mel_filterbank(cfg);
  int64_t t_frames = static_cast<int64_t>(frames.size());
  Tensor mel = Tensor::zeros({cfg.n_mels, t_frames});
  auto& md = mel.mutable_data();
  for (int64_t t = 0; t < t_frames; ++t) {
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (int b = 0; b < cfg.n_bins(); ++b)
        acc += fb[m][b] * std::abs(frames[t][b]);
      md[m * t_frames + t] = std::log(std::max(acc, kLogMelFloor));
    }
  }
  return mel;
}

std::vector<std::vector<double>> mel_to_linear_nnls(const Tensor& mel_mag,
                                                    const AudioConfig& cfg,
                                                    int n_iters) {
  check(mel_mag.rank() == 2 && mel_mag.dim(0) == cfg.n_mels,
        "nnls: mel must be [n_mels,T], got ", shape_str(mel_mag.shape()));
  const int bins = cfg.n_bins();
  const int F = cfg.n_mels;
  const int64_t T = mel_mag.dim(1);
  auto fb = mel_filterbank(cfg);

  // Precompute M^T M (bins x bins is large; use implicit products instead).
  std::vector<std::vector<double>> out(static_cast<size_t>(T),
                                       std::vector<double>(static_cast<size_t>(bins)));
  std::vector<double> b(static_cast<size_t>(F));
  std::vector<double> mx(static_cast<size_t>(F));
  std::vector<double> mtb(static_cast<size_t>(bins));
  for (int64_t t = 0; t < T; ++t) {
    for (int m = 0; m < F; ++m) b[m] = mel_mag.at({m, t});
    // x0 = M^T b; zero columns stay zero throughout.
    auto& x = out[static_cast<size_t>(t)];
    for (int k = 0; k < bins; ++k) {
      double acc = 0.0;
      for (int m = 0; m < F; ++m) acc += fb[m][k] * b[m];
      mtb[k] = acc;
      x[k] = acc;
    }
    for (int it = 0; it < n_iters; ++it) {
      for (int m = 0; m < F; ++m) {
        double acc = 0.0;
        for (int k = 0; k < bins; ++k) acc += fb[m][k] * x[k];
        mx[m] = acc;
      }
      for (int k = 0; k < bins; ++k) {
        double denom = 0.0;
        for (int m = 0; m < F; ++m) denom += fb[m][k] * mx[m];
        x[k] *= mtb[k] / (denom + 1e-10);
      }
    }
  }
  return out;
}

double spectral_convergence(const std::vector<std::vector<double>>& a,
                            const std::vector<std::vector<double>>& b) {
  check(a.size() == b.size(), "spectral_convergence: ", a.size(), " vs ", b.size(),
        " frames");
  double num = 0.0, den = 0.0;
  for (size_t t = 0; t < a.size(); ++t) {
    check(a[t].size() == b[t].size(), "spectral_convergence: bin count mismatch");
    for (size_t i = 0; i < a[t].size(); ++i) {
      double d = a[t][i] - b[t][i];
      num += d * d;
      den += b[t][i] * b[t][i];
    }
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

std::vector<double> griffin_lim(const Tensor& mel_log, const AudioConfig& cfg,
                                int n_iters, std::vector<double>* sc_trace) {
  check(n_iters >= 1, "griffin_lim: n_iters must be >= 1, got ", n_iters);
  check(mel_log.rank() == 2 && mel_log.dim(0) == cfg.n_mels,
        "griffin_lim: mel must be [n_mels,T], got ", shape_str(mel_log.shape()));
  const int64_t T = mel_log.dim(1);

  // Log-Mel -> linear Mel magnitude -> linear spectrogram magnitude.
  Tensor mel_mag = Tensor::zeros({cfg.n_mels, T});
  for (int64_t i = 0; i < mel_log.numel(); ++i)
    mel_mag.mutable_data()[i] = std::exp(mel_log.data()[i]);
  std::vector<std::vector<double>> target = mel_to_linear_nnls(mel_mag, cfg);

  // Zero-phase start (deterministic), then alternate time/frequency projections.
  std::vector<std::vector<std::complex<double>>> spec(target.size());
  for (size_t t = 0; t < target.size(); ++t)
    spec[t].assign(target[t].begin(), target[t].end());

  std::vector<double> wave;
  for (int it = 0; it < n_iters; ++it) {
    wave = istft(spec, cfg);
    auto consistent = stft(wave, cfg);
    if (sc_trace) {
      std::vector<std::vector<double>> mag(consistent.size());
      for (size_t t = 0; t < consistent.size(); ++t) {
        mag[t].resize(consistent[t].size());
        for (size_t b = 0; b < consistent[t].size(); ++b)
          mag[t][b] = std::abs(consistent[t][b]);
      }
      sc_trace->push_back(spectral_convergence(mag, target));
    }
    for (size_t t = 0; t < consistent.size(); ++t)
      for (size_t b = 0; b < consistent[t].size(); ++b) {
        double m = std::abs(consistent[t][b]);
        spec[t][b] = m > 1e-12 ? consistent[t][b] * (target[t][b] / m)
                               : std::complex<double>(target[t][b], 0.0);
      }
    wave = istft(spec, cfg);
  }

  double peak = 1e-9;
  for (double v : wave) peak = std::max(peak, std::fabs(v));
  for (double& v : wave) v = v / peak * 0.95;
  return wave;
}

void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  check(os.is_open(), "wav: cannot open \"", path, "\" for writing");
  auto put32 = [&](uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    os.write(b, 4);
  };
  auto put16 = [&](uint16_t v) {
    char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    os.write(b, 2);
  };
  uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  put32(36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put32(16);
  put16(1);  // PCM
  put16(1);  // mono
  put32(static_cast<uint32_t>(sample_rate));
  put32(static_cast<uint32_t>(sample_rate * 2));  // byte rate
  put16(2);                                       // block align
  put16(16);                                      // bits per sample
  os.write("data", 4);
  put32(data_bytes);
  for (double v : samples) {
    double c = std::clamp(v, -1.0, 1.0);
    auto s = static_cast<int16_t>(std::lround(c * 32767.0));
    put16(static_cast<uint16_t>(s));
  }
  os.close();
  check(os.good(), "wav: error writing \"", path, "\"");
}

}  // namespace its
