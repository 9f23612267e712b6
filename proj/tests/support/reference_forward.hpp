#pragma once

// Naive re-implementation of the autoencoder forward pass used as an oracle.
// Works on plain nested loops over parameter views; batchnorm is not covered.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "selftrack/autoencoder.hpp"

namespace selftrack::testing {

struct Volume {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  double get(int ch, int y, int x) const {
    if (y < 0 || x < 0 || y >= h || x >= w) return 0.0;
    return v[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
  double& ref(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
};

inline Volume conv(const Volume& in, std::span<const double> weight, std::span<const double> bias, int out, int k) {
  Volume r{out, in.h, in.w, std::vector<double>(static_cast<std::size_t>(out) * in.h * in.w)};
  const int pad = k / 2;
  for (int o = 0; o < out; ++o)
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) {
        double acc = bias[o];
        for (int i = 0; i < in.c; ++i)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              acc += weight[((static_cast<std::size_t>(o) * in.c + i) * k + ky) * k + kx] *
                     in.get(i, y + ky - pad, x + kx - pad);
        r.ref(o, y, x) = acc;
      }
  return r;
}

inline Volume relu(Volume in) {
  for (auto& x : in.v) x = x > 0.0 ? x : 0.0;
  return in;
}

inline Volume pool(const Volume& in) {
  Volume r{in.c, in.h / 2, in.w / 2, std::vector<double>(static_cast<std::size_t>(in.c) * (in.h / 2) * (in.w / 2))};
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) {
        double m = in.get(c, 2 * y, 2 * x);
        m = std::max(m, in.get(c, 2 * y, 2 * x + 1));
        m = std::max(m, in.get(c, 2 * y + 1, 2 * x));
        m = std::max(m, in.get(c, 2 * y + 1, 2 * x + 1));
        r.ref(c, y, x) = m;
      }
  return r;
}

inline Volume upsample(const Volume& in) {
  Volume r{in.c, in.h * 2, in.w * 2, std::vector<double>(static_cast<std::size_t>(in.c) * in.h * in.w * 4)};
  for (int c = 0; c < r.c; ++c)
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) r.ref(c, y, x) = in.get(c, y / 2, x / 2);
  return r;
}

inline std::vector<double> dense(const std::vector<double>& in, std::span<const double> weight,
                                 std::span<const double> bias) {
  std::vector<double> out(bias.size());
  for (std::size_t o = 0; o < out.size(); ++o) {
    double acc = bias[o];
    for (std::size_t i = 0; i < in.size(); ++i) acc += weight[o * in.size() + i] * in[i];
    out[o] = acc;
  }
  return out;
}

struct ReferenceOutput {
  std::vector<double> latent;
  std::vector<double> reconstruction;
};

/// Forward pass of a no-batchnorm model from its parameter views.
inline ReferenceOutput reference_forward(AutoEncoderModel& model, const ImagePatch& image) {
  const ArchConfig& arch = model.architecture();
  if (arch.batchnorm) throw std::invalid_argument("reference forward does not cover batchnorm");
  auto views = model.parameters();
  std::size_t next = 0;
  auto take = [&]() -> std::span<const double> { return views.at(next++).values; };

  ReferenceOutput out;
  if (arch.filters.empty()) {
    auto w = take();
    auto b = take();
    out.latent = dense(image.pixels, w, b);
    auto w2 = take();
    auto b2 = take();
    out.reconstruction = dense(out.latent, w2, b2);
    return out;
  }
  Volume vol{image.channels, image.height, image.width, image.pixels};
  for (int f : arch.filters) {
    auto w = take();
    auto b = take();
    vol = pool(relu(conv(vol, w, b, f, arch.kernel)));
  }
  {
    auto w = take();
    auto b = take();
    out.latent = dense(vol.v, w, b);
  }
  {
    auto w = take();
    auto b = take();
    vol.v = dense(out.latent, w, b);
    vol = relu(vol);
  }
  for (std::size_t i = arch.filters.size(); i-- > 0;) {
    const int o = i > 0 ? arch.filters[i - 1] : arch.channels;
    auto w = take();
    auto b = take();
    vol = conv(upsample(vol), w, b, o, arch.kernel);
    if (i > 0) vol = relu(vol);
  }
  out.reconstruction = vol.v;
  return out;
}

}  // namespace selftrack::testing
