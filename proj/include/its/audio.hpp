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
// Signal-processing utilities for audible output: radix-2 FFT, Hann STFT,
// HTK-style Mel filterbank, NNLS Mel inversion, Griffin-Lim phase recovery,
// and a RIFF/PCM16 WAV writer. Mel-spectrograms are [n_mels, T] natural-log
// magnitudes with floor log(1e-5).

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "its/tensor.hpp"

namespace its {

struct AudioConfig {
  int sample_rate = 8000;
  int frame_size = 256;  // also the FFT size; must be a power of two
  int hop = 64;
  int n_mels = 32;

  int n_bins() const { return frame_size / 2 + 1; }
  // Analysis is exact-fit: n_samples = frame_size + (T-1) * hop.
  int64_t samples_for_frames(int64_t t) const {
    return frame_size + (t - 1) * static_cast<int64_t>(hop);
  }
};

constexpr double kLogMelFloor = 1e-5;

// In-place iterative Cooley-Tukey; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

// Periodic Hann analysis window of the given size.
std::vector<double> hann_window(int size);

// Complex STFT, frames[t][bin], t = (n - frame_size) / hop + 1 frames.
std::vector<std::vector<std::complex<double>>> stft(const std::vector<double>& wave,
                                                    const AudioConfig& cfg);

// Weighted overlap-add inverse of `stft` (Hann synthesis window).
std::vector<double> istft(const std::vector<std::vector<std::complex<double>>>& frames,
                          const AudioConfig& cfg);

// Triangular HTK-mel filterbank, rows [n_mels, n_bins].
std::vector<std::vector<double>> mel_filterbank(const AudioConfig& cfg);

// Log-Mel extraction: |STFT| -> filterbank -> log(max(., 1e-5)); out [F, T].
Tensor mel_from_waveform(const std::vector<double>& wave, const AudioConfig& cfg);

// Column-wise non-negative least squares ||Mx - b||^2, x >= 0, multiplicative
// updates. mel_mag is the linear-magnitude Mel [F, T]; returns [n_bins, T].
std::vector<std::vector<double>> mel_to_linear_nnls(const Tensor& mel_mag,
                                                    const AudioConfig& cfg,
                                                    int n_iters = 200);

// ||A - B||_F / ||B||_F over equal-size magnitude arrays.
double spectral_convergence(const std::vector<std::vector<double>>& a,
                            const std::vector<std::vector<double>>& b);

// Log-Mel [F, T] -> waveform in [-1, 1] (peak-normalized). Plain alternating
// projections from a zero-phase start; per-iteration spectral convergence
// against the target magnitude is appended to *sc_trace when given.
std::vector<double> griffin_lim(const Tensor& mel_log, const AudioConfig& cfg,
                                int n_iters, std::vector<double>* sc_trace = nullptr);

// RIFF / PCM16 / mono.
void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate);

}  // namespace its
