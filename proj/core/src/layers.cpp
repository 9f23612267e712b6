#include "selftrack/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selftrack {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Dense: return "dense";
    case LayerKind::Upsample: return "upsample";
    case LayerKind::Relu: return "relu";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Reshape: return "reshape";
  }
  return "unknown";
}

void Layer::zero_gradients() {
  for (auto g : gradients()) std::fill(g.begin(), g.end(), 0.0);
}

namespace {

void xavier_normal(std::vector<double>& w, double fan_in, double fan_out, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (fan_in + fan_out)));
  for (auto& x : w) x = dist(rng);
}

void mix(std::uint64_t& hash, std::uint64_t value) {
  hash ^= value + 0x9e3779b97f4a7c15ULL + (hash << 6) + (hash >> 2);
}

}  // namespace

// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, bool bias)
    : in_(in_channels),
      out_(out_channels),
      k_(kernel),
      weight_(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel, 0.0),
      bias_(bias ? static_cast<std::size_t>(out_channels) : 0, 0.0),
      grad_weight_(weight_.size(), 0.0),
      grad_bias_(bias_.size(), 0.0) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || kernel % 2 == 0) {
    throw std::invalid_argument("conv layer needs positive channel counts and an odd kernel");
  }
}

Shape Conv2d::output_shape(Shape input) const {
  if (input.channels != in_) throw std::invalid_argument("conv layer input channel mismatch");
  return Shape{out_, input.height, input.width};
}

void Conv2d::initialize(std::mt19937_64& rng) {
  xavier_normal(weight_, static_cast<double>(in_) * k_ * k_, static_cast<double>(out_) * k_ * k_, rng);
  std::fill(bias_.begin(), bias_.end(), 0.0);
}

void Conv2d::forward(const Tensor& in, Tensor& out, LayerCache&, bool) const {
  const int h = in.shape.height;
  const int w = in.shape.width;
  const int pad = k_ / 2;
  out.reset(in.batch, output_shape(in.shape));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int n = 0; n < in.batch; ++n) {
    const double* src = in.sample(n).data();
    double* dst = out.sample(n).data();
    for (int oc = 0; oc < out_; ++oc) {
      double* o = dst + oc * plane;
      std::fill(o, o + plane, bias_.empty() ? 0.0 : bias_[oc]);
      for (int ic = 0; ic < in_; ++ic) {
        const double* s = src + ic * plane;
        const double* wk = &weight_[(static_cast<std::size_t>(oc) * in_ + ic) * k_ * k_];
        for (int ky = 0; ky < k_; ++ky) {
          const int dy = ky - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          for (int kx = 0; kx < k_; ++kx) {
            const int dx = kx - pad;
            const int x0 = std::max(0, -dx);
            const int x1 = std::min(w, w - dx);
            const double wv = wk[ky * k_ + kx];
            for (int y = y0; y < y1; ++y) {
              double* orow = o + static_cast<std::size_t>(y) * w;
              const double* srow = s + static_cast<std::size_t>(y + dy) * w + dx;
              for (int x = x0; x < x1; ++x) orow[x] += wv * srow[x];
            }
          }
        }
      }
    }
  }
}

void Conv2d::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor& grad_in, const LayerCache&) {
  const int h = in.shape.height;
  const int w = in.shape.width;
  const int pad = k_ / 2;
  grad_in.reset(in.batch, in.shape);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int n = 0; n < in.batch; ++n) {
    const double* src = in.sample(n).data();
    const double* g = grad_out.sample(n).data();
    double* gi = grad_in.sample(n).data();
    for (int oc = 0; oc < out_; ++oc) {
      const double* go = g + oc * plane;
      if (!bias_.empty()) {
        double bsum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) bsum += go[i];
        grad_bias_[oc] += bsum;
      }
      for (int ic = 0; ic < in_; ++ic) {
        const double* s = src + ic * plane;
        double* gs = gi + ic * plane;
        const std::size_t base = (static_cast<std::size_t>(oc) * in_ + ic) * k_ * k_;
        for (int ky = 0; ky < k_; ++ky) {
          const int dy = ky - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          for (int kx = 0; kx < k_; ++kx) {
            const int dx = kx - pad;
            const int x0 = std::max(0, -dx);
            const int x1 = std::min(w, w - dx);
            const double wv = weight_[base + ky * k_ + kx];
            double acc = 0.0;
            for (int y = y0; y < y1; ++y) {
              const double* grow = go + static_cast<std::size_t>(y) * w;
              const double* srow = s + static_cast<std::size_t>(y + dy) * w + dx;
              double* girow = gs + static_cast<std::size_t>(y + dy) * w + dx;
              for (int x = x0; x < x1; ++x) {
                acc += grow[x] * srow[x];
                girow[x] += wv * grow[x];
              }
            }
            grad_weight_[base + ky * k_ + kx] += acc;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------

Shape MaxPool2::output_shape(Shape input) const {
  if (input.height < 2 || input.width < 2) throw std::invalid_argument("max pooling needs at least 2x2 input");
  return Shape{input.channels, input.height / 2, input.width / 2};
}

void MaxPool2::forward(const Tensor& in, Tensor& out, LayerCache& cache, bool) const {
  const Shape os = output_shape(in.shape);
  out.reset(in.batch, os);
  auto& argmax = cache.indices;
  argmax.assign(out.data.size(), 0);
  const int w = in.shape.width;
  std::size_t o = 0;
  for (int n = 0; n < in.batch; ++n) {
    const double* src = in.sample(n).data();
    for (int c = 0; c < os.channels; ++c) {
      const double* plane = src + static_cast<std::size_t>(c) * in.shape.height * w;
      for (int y = 0; y < os.height; ++y) {
        for (int x = 0; x < os.width; ++x, ++o) {
          std::uint32_t best = static_cast<std::uint32_t>((2 * y) * w + 2 * x);
          for (const std::uint32_t idx : {static_cast<std::uint32_t>((2 * y) * w + 2 * x + 1),
                                          static_cast<std::uint32_t>((2 * y + 1) * w + 2 * x),
                                          static_cast<std::uint32_t>((2 * y + 1) * w + 2 * x + 1)}) {
            if (plane[idx] > plane[best]) best = idx;
          }
          argmax[o] = best;
          out.data[o] = plane[best];
        }
      }
    }
  }
}

void MaxPool2::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                        const LayerCache& cache) {
  grad_in.reset(in.batch, in.shape);
  const std::size_t in_plane = static_cast<std::size_t>(in.shape.height) * in.shape.width;
  const std::size_t out_plane = static_cast<std::size_t>(out.shape.height) * out.shape.width;
  for (std::size_t o = 0; o < grad_out.data.size(); ++o) {
    const std::size_t plane_index = o / out_plane;  // (n, c) flattened
    grad_in.data[plane_index * in_plane + cache.indices[o]] += grad_out.data[o];
  }
}

void MaxPool2::mix_branch_signature(const LayerCache& cache, std::uint64_t& hash) const {
  for (auto a : cache.indices) mix(hash, a);
}

// ---------------------------------------------------------------------------

Dense::Dense(int inputs, int outputs)
    : in_(inputs),
      out_(outputs),
      weight_(static_cast<std::size_t>(inputs) * outputs, 0.0),
      bias_(static_cast<std::size_t>(outputs), 0.0),
      grad_weight_(weight_.size(), 0.0),
      grad_bias_(bias_.size(), 0.0) {
  if (inputs <= 0 || outputs <= 0) throw std::invalid_argument("dense layer needs positive sizes");
}

Shape Dense::output_shape(Shape input) const {
  if (static_cast<int>(input.size()) != in_) throw std::invalid_argument("dense layer input size mismatch");
  return Shape{out_, 1, 1};
}

void Dense::initialize(std::mt19937_64& rng) {
  xavier_normal(weight_, in_, out_, rng);
  std::fill(bias_.begin(), bias_.end(), 0.0);
}

void Dense::forward(const Tensor& in, Tensor& out, LayerCache&, bool) const {
  out.reset(in.batch, output_shape(in.shape));
  for (int n = 0; n < in.batch; ++n) {
    const double* x = in.sample(n).data();
    double* y = out.sample(n).data();
    for (int o = 0; o < out_; ++o) {
      const double* row = &weight_[static_cast<std::size_t>(o) * in_];
      double acc = bias_[o];
      for (int i = 0; i < in_; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
  }
}

void Dense::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor& grad_in, const LayerCache&) {
  grad_in.reset(in.batch, in.shape);
  for (int n = 0; n < in.batch; ++n) {
    const double* x = in.sample(n).data();
    const double* g = grad_out.sample(n).data();
    double* gi = grad_in.sample(n).data();
    for (int o = 0; o < out_; ++o) {
      const double go = g[o];
      grad_bias_[o] += go;
      const double* row = &weight_[static_cast<std::size_t>(o) * in_];
      double* grow = &grad_weight_[static_cast<std::size_t>(o) * in_];
      for (int i = 0; i < in_; ++i) {
        grow[i] += go * x[i];
        gi[i] += go * row[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------

Shape Upsample2::output_shape(Shape input) const { return Shape{input.channels, input.height * 2, input.width * 2}; }

void Upsample2::forward(const Tensor& in, Tensor& out, LayerCache&, bool) const {
  const Shape os = output_shape(in.shape);
  out.reset(in.batch, os);
  const int h = in.shape.height;
  const int w = in.shape.width;
  for (int n = 0; n < in.batch; ++n) {
    const double* src = in.sample(n).data();
    double* dst = out.sample(n).data();
    for (int c = 0; c < os.channels; ++c) {
      for (int y = 0; y < os.height; ++y) {
        const double* srow = src + (static_cast<std::size_t>(c) * h + y / 2) * w;
        double* drow = dst + (static_cast<std::size_t>(c) * os.height + y) * os.width;
        for (int x = 0; x < os.width; ++x) drow[x] = srow[x / 2];
      }
    }
  }
}

void Upsample2::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                         const LayerCache&) {
  grad_in.reset(in.batch, in.shape);
  const int h = in.shape.height;
  const int w = in.shape.width;
  const Shape os = out.shape;
  for (int n = 0; n < in.batch; ++n) {
    const double* g = grad_out.sample(n).data();
    double* gi = grad_in.sample(n).data();
    for (int c = 0; c < os.channels; ++c) {
      for (int y = 0; y < os.height; ++y) {
        const double* grow = g + (static_cast<std::size_t>(c) * os.height + y) * os.width;
        double* girow = gi + (static_cast<std::size_t>(c) * h + y / 2) * w;
        for (int x = 0; x < os.width; ++x) girow[x / 2] += grow[x];
      }
    }
  }
}

// ---------------------------------------------------------------------------

void Relu::forward(const Tensor& in, Tensor& out, LayerCache& cache, bool) const {
  out.reset(in.batch, in.shape);
  cache.mask.resize(in.data.size());
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    const bool on = in.data[i] > 0.0;
    cache.mask[i] = on;
    out.data[i] = on ? in.data[i] : 0.0;
  }
}

void Relu::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor& grad_in,
                    const LayerCache& cache) {
  grad_in.reset(in.batch, in.shape);
  for (std::size_t i = 0; i < in.data.size(); ++i) grad_in.data[i] = cache.mask[i] ? grad_out.data[i] : 0.0;
}

void Relu::mix_branch_signature(const LayerCache& cache, std::uint64_t& hash) const {
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < cache.mask.size(); ++i) {
    word = (word << 1) | cache.mask[i];
    if (i % 64 == 63) {
      mix(hash, word);
      word = 0;
    }
  }
  mix(hash, word);
}

// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(int channels, double momentum, double epsilon)
    : channels_(channels),
      momentum_(momentum),
      epsilon_(epsilon),
      gamma_(static_cast<std::size_t>(channels), 1.0),
      beta_(static_cast<std::size_t>(channels), 0.0),
      grad_gamma_(gamma_.size(), 0.0),
      grad_beta_(beta_.size(), 0.0),
      running_mean_(gamma_.size(), 0.0),
      running_var_(gamma_.size(), 1.0) {
  if (channels <= 0) throw std::invalid_argument("batchnorm needs a positive channel count");
}

void BatchNorm::initialize(std::mt19937_64&) {
  std::fill(gamma_.begin(), gamma_.end(), 1.0);
  std::fill(beta_.begin(), beta_.end(), 0.0);
  std::fill(running_mean_.begin(), running_mean_.end(), 0.0);
  std::fill(running_var_.begin(), running_var_.end(), 1.0);
}

void BatchNorm::forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const {
  if (in.shape.channels != channels_) throw std::invalid_argument("batchnorm channel mismatch");
  out.reset(in.batch, in.shape);
  const std::size_t plane = static_cast<std::size_t>(in.shape.height) * in.shape.width;
  const double count = static_cast<double>(plane) * in.batch;
  cache.training = training;
  cache.mean.assign(channels_, 0.0);
  cache.inv_std.assign(channels_, 1.0);
  for (int c = 0; c < channels_; ++c) {
    double mean = running_mean_[c];
    double var = running_var_[c];
    if (training) {
      double sum = 0.0;
      for (int n = 0; n < in.batch; ++n) {
        const double* p = in.sample(n).data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int n = 0; n < in.batch; ++n) {
        const double* p = in.sample(n).data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / count;
    }
    const double inv_std = 1.0 / std::sqrt(var + epsilon_);
    cache.mean[c] = mean;
    cache.inv_std[c] = inv_std;
    for (int n = 0; n < in.batch; ++n) {
      const double* p = in.sample(n).data() + c * plane;
      double* q = out.sample(n).data() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) q[i] = gamma_[c] * (p[i] - mean) * inv_std + beta_[c];
    }
  }
}

void BatchNorm::commit(const LayerCache& cache) {
  if (!cache.training) return;
  for (int c = 0; c < channels_; ++c) {
    const double var = 1.0 / (cache.inv_std[c] * cache.inv_std[c]) - epsilon_;
    running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * cache.mean[c];
    running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var;
  }
}

void BatchNorm::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor& grad_in,
                         const LayerCache& cache) {
  grad_in.reset(in.batch, in.shape);
  const std::size_t plane = static_cast<std::size_t>(in.shape.height) * in.shape.width;
  const double count = static_cast<double>(plane) * in.batch;
  for (int c = 0; c < channels_; ++c) {
    const double mean = cache.mean[c];
    const double inv_std = cache.inv_std[c];
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < in.batch; ++n) {
      const double* p = in.sample(n).data() + c * plane;
      const double* g = grad_out.sample(n).data() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * (p[i] - mean) * inv_std;
      }
    }
    grad_gamma_[c] += sum_gx;
    grad_beta_[c] += sum_g;
    const double scale = gamma_[c] * inv_std;
    for (int n = 0; n < in.batch; ++n) {
      const double* p = in.sample(n).data() + c * plane;
      const double* g = grad_out.sample(n).data() + c * plane;
      double* gi = grad_in.sample(n).data() + c * plane;
      if (cache.training) {
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (p[i] - mean) * inv_std;
          gi[i] = scale * (g[i] - sum_g / count - xhat * sum_gx / count);
        }
      } else {
        for (std::size_t i = 0; i < plane; ++i) gi[i] = scale * g[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------

Shape Reshape::output_shape(Shape input) const {
  if (input.size() != target_.size()) throw std::invalid_argument("reshape size mismatch");
  return target_;
}

void Reshape::forward(const Tensor& in, Tensor& out, LayerCache&, bool) const {
  out.batch = in.batch;
  out.shape = output_shape(in.shape);
  out.data = in.data;
}

void Reshape::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor& grad_in,
                       const LayerCache&) {
  grad_in.batch = in.batch;
  grad_in.shape = in.shape;
  grad_in.data = grad_out.data;
}

}  // namespace selftrack
