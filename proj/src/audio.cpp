// Copyright 2026 the emoaug authors
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

#include "emoaug/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace emoaug {

namespace {

std::uint16_t rd_u16(const std::vector<unsigned char>& b, size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t rd_u32(const std::vector<unsigned char>& b, size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

void wr_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void wr_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
  b.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
  b.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
  const double half = 0.5 * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 64; ++k) {
    const double r = half / k;
    term *= r * r;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

constexpr int kSincTaps = 32;      // taps per side
constexpr int kSincPhases = 512;   // fractional-delay resolution of the table
constexpr double kKaiserBeta = 8.6;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

double kernel_at(double u, double cutoff) {
  const double r = u / kSincTaps;
  if (r <= -1.0 || r >= 1.0) return 0.0;
  const double window = bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / bessel_i0(kKaiserBeta);
  return cutoff * sinc(cutoff * u) * window;
}

}  // namespace

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw MalformedWav(path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  size_t data_off = 0, data_size = 0;
  bool have_data = false;

  size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + off);
    const std::uint32_t size = rd_u32(bytes, off + 4);
    const size_t payload = off + 8;
    if (payload + size > bytes.size()) throw MalformedWav(path.string() + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw MalformedWav(path.string() + ": short fmt chunk");
      format = rd_u16(bytes, payload);
      channels = rd_u16(bytes, payload + 2);
      rate = rd_u32(bytes, payload + 4);
      bits = rd_u16(bytes, payload + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = payload;
      data_size = size;
      have_data = true;
    }
    off = payload + size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || !have_data) throw MalformedWav(path.string() + ": missing fmt/data chunk");
  if (rate == 0) throw MalformedWav(path.string() + ": zero sample rate");
  if (channels == 0) throw MalformedWav(path.string() + ": zero channels");
  if (channels > 2) throw UnsupportedEncoding(path.string() + ": more than two channels");

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    throw UnsupportedEncoding(path.string() + ": only PCM16 and float32 are supported");
  }

  const size_t bytes_per_sample = pcm16 ? 2 : 4;
  const size_t block = bytes_per_sample * channels;
  if (data_size % block != 0) throw MalformedWav(path.string() + ": data size not frame-aligned");
  const size_t frames = data_size / block;
  if (frames == 0) throw EmptyAudio(path.string() + ": no audio frames");

  Eigen::ArrayXd samples(static_cast<Eigen::Index>(frames));
  for (size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const size_t p = data_off + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        const auto raw = static_cast<std::int16_t>(rd_u16(bytes, p));
        acc += raw / 32768.0;
      } else {
        float v;
        std::uint32_t u = rd_u32(bytes, p);
        std::memcpy(&v, &u, 4);
        if (!std::isfinite(v)) throw MalformedWav(path.string() + ": non-finite sample");
        acc += std::clamp(static_cast<double>(v), -1.0, 1.0);
      }
    }
    samples[static_cast<Eigen::Index>(i)] = acc / channels;
  }

  return {std::move(samples), static_cast<int>(rate)};
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path) {
  if (!clip.samples.allFinite()) throw std::invalid_argument("save_wav: non-finite samples");
  if (clip.sample_rate <= 0) throw std::invalid_argument("save_wav: invalid sample rate");

  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_size = n * 2;
  std::vector<unsigned char> out;
  out.reserve(44 + data_size);

  auto put_tag = [&out](const char* tag) { out.insert(out.end(), tag, tag + 4); };
  put_tag("RIFF");
  wr_u32(out, 36 + data_size);
  put_tag("WAVE");
  put_tag("fmt ");
  wr_u32(out, 16);
  wr_u16(out, 1);  // PCM
  wr_u16(out, 1);  // mono
  wr_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  wr_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  wr_u16(out, 2);
  wr_u16(out, 16);
  put_tag("data");
  wr_u32(out, data_size);

  for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
    const double clipped = std::clamp(clip.samples[i], -1.0, 1.0);
    auto q = static_cast<long long>(std::llround(clipped * 32768.0));
    q = std::clamp<long long>(q, -32768, 32767);
    wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

Eigen::ArrayXd resample_by_ratio(const Eigen::ArrayXd& x, double ratio) {
  if (!(ratio > 0.0)) throw std::invalid_argument("resample: ratio must be positive");
  const Eigen::Index n_in = x.size();
  const auto n_out = static_cast<Eigen::Index>(std::llround(n_in * ratio));
  Eigen::ArrayXd y = Eigen::ArrayXd::Zero(n_out);
  if (n_in == 0 || n_out == 0) return y;

  // Polyphase table: kernel sampled at kSincPhases fractional offsets,
  // linearly interpolated between rows. Cutoff shrinks when decimating.
  const double cutoff = std::min(1.0, ratio);
  const int width = 2 * kSincTaps + 1;
  Eigen::MatrixXd table(kSincPhases + 1, width);
  for (int q = 0; q <= kSincPhases; ++q) {
    const double frac = static_cast<double>(q) / kSincPhases;
    for (int d = -kSincTaps; d <= kSincTaps; ++d) {
      table(q, d + kSincTaps) = kernel_at(frac + d, cutoff);
    }
  }

  for (Eigen::Index m = 0; m < n_out; ++m) {
    const double t = m / ratio;
    const auto i = static_cast<Eigen::Index>(std::floor(t));
    const double frac = t - static_cast<double>(i);
    const double qf = frac * kSincPhases;
    const int q = std::min(static_cast<int>(qf), kSincPhases - 1);
    const double a = qf - q;

    double acc = 0.0;
    const Eigen::Index j_lo = std::max<Eigen::Index>(0, i - kSincTaps);
    const Eigen::Index j_hi = std::min<Eigen::Index>(n_in - 1, i + kSincTaps);
    for (Eigen::Index j = j_lo; j <= j_hi; ++j) {
      const auto d = static_cast<int>(i - j) + kSincTaps;
      const double w = (1.0 - a) * table(q, d) + a * table(q + 1, d);
      acc += x[j] * w;
    }
    y[m] = acc;
  }
  return y;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
  if (clip.sample_rate <= 0) throw std::invalid_argument("resample: clip has no sample rate");
  if (target_rate == clip.sample_rate) return clip;
  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  return {resample_by_ratio(clip.samples, ratio), target_rate};
}

AudioClip fix_window(const AudioClip& clip, const ClipWindow& window) {
  if (window.duration_s <= 0.0 || window.offset_s < 0.0) {
    throw std::invalid_argument("fix_window: bad window");
  }
  const Eigen::Index out_n = window.length();
  const auto start = static_cast<Eigen::Index>(std::llround(window.offset_s * window.target_rate));

  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(out_n);
  const Eigen::Index avail = clip.samples.size() - start;
  if (avail > 0) {
    const Eigen::Index n = std::min(out_n, avail);
    out.head(n) = clip.samples.segment(start, n);
  }
  return {std::move(out), window.target_rate};
}

AudioClip canonicalize(const AudioClip& clip, const ClipWindow& window) {
  return fix_window(resample(clip, window.target_rate), window);
}

}  // namespace emoaug
