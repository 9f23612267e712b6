#include "selftrack/autoencoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace selftrack {

void ArchConfig::validate() const {
  if (channels <= 0 || height <= 0 || width <= 0) throw std::invalid_argument("architecture: input must be non-empty");
  if (latent_dim <= 0) throw std::invalid_argument("architecture: latent_dim must be positive");
  if (kernel <= 0 || kernel % 2 == 0) throw std::invalid_argument("architecture: kernel must be odd and positive");
  const int scale = 1 << filters.size();
  if (height % scale != 0 || width % scale != 0) {
    throw std::invalid_argument("architecture: input " + std::to_string(height) + "x" + std::to_string(width) +
                                " is not divisible by 2^" + std::to_string(filters.size()));
  }
  for (int f : filters) {
    if (f <= 0) throw std::invalid_argument("architecture: filter counts must be positive");
  }
}

ArchConfig ArchConfig::desk_default() { return ArchConfig{}; }

ArchConfig ArchConfig::full_scale() {
  ArchConfig a;
  a.height = 64;
  a.width = 64;
  a.filters = {16, 32, 64, 128, 256};
  a.latent_dim = 32;
  a.batchnorm = true;
  return a;
}

ArchConfig ArchConfig::linear(Shape input, int latent_dim) {
  ArchConfig a;
  a.channels = input.channels;
  a.height = input.height;
  a.width = input.width;
  a.filters.clear();
  a.latent_dim = latent_dim;
  return a;
}

double euclidean_distance(const LatentVector& a, const LatentVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("latent vectors differ in length");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  return std::sqrt(sq);
}

const LatentVector& CentroidTable::at(long label) const {
  const auto it = centroid.find(label);
  if (it == centroid.end()) throw std::out_of_range("no centroid for cluster label " + std::to_string(label));
  return it->second;
}

// ---------------------------------------------------------------------------

Sequential::Sequential(const Sequential& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    layers_ = std::move(copy.layers_);
  }
  return *this;
}

Shape Sequential::output_shape(Shape input) const {
  for (const auto& l : layers_) input = l->output_shape(input);
  return input;
}

void Sequential::forward(const Tensor& input, Trace& trace, bool training) const {
  trace.activations.resize(layers_.size() + 1);
  trace.caches.resize(layers_.size());
  trace.activations[0] = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(trace.activations[i], trace.activations[i + 1], trace.caches[i], training);
  }
}

void Sequential::backward(const Trace& trace, const Tensor& grad_output, Tensor& grad_input) {
  Tensor g = grad_output;
  Tensor next;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    layers_[i]->backward(trace.activations[i], trace.activations[i + 1], g, next, trace.caches[i]);
    std::swap(g, next);
  }
  grad_input = std::move(g);
}

void Sequential::commit(const Trace& trace) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->commit(trace.caches[i]);
}

// ---------------------------------------------------------------------------

AutoEncoderModel::AutoEncoderModel(ArchConfig arch, std::uint64_t seed) : arch_(std::move(arch)), seed_(seed) {
  arch_.validate();
  const Shape input = arch_.input_shape();
  if (arch_.filters.empty()) {
    encoder_.add(std::make_unique<Dense>(static_cast<int>(input.size()), arch_.latent_dim));
    decoder_.add(std::make_unique<Dense>(arch_.latent_dim, static_cast<int>(input.size())));
    decoder_.add(std::make_unique<Reshape>(input));
  } else {
    int c = arch_.channels;
    Shape s = input;
    for (int f : arch_.filters) {
      encoder_.add(std::make_unique<Conv2d>(c, f, arch_.kernel, !arch_.batchnorm));
      if (arch_.batchnorm) encoder_.add(std::make_unique<BatchNorm>(f));
      encoder_.add(std::make_unique<Relu>());
      encoder_.add(std::make_unique<MaxPool2>());
      c = f;
      s = Shape{f, s.height / 2, s.width / 2};
    }
    encoder_.add(std::make_unique<Dense>(static_cast<int>(s.size()), arch_.latent_dim));

    decoder_.add(std::make_unique<Dense>(arch_.latent_dim, static_cast<int>(s.size())));
    decoder_.add(std::make_unique<Relu>());
    decoder_.add(std::make_unique<Reshape>(s));
    for (std::size_t i = arch_.filters.size(); i-- > 0;) {
      const int out = i > 0 ? arch_.filters[i - 1] : arch_.channels;
      decoder_.add(std::make_unique<Upsample2>());
      decoder_.add(std::make_unique<Conv2d>(arch_.filters[i], out, arch_.kernel, i == 0 || !arch_.batchnorm));
      if (i > 0) {
        if (arch_.batchnorm) decoder_.add(std::make_unique<BatchNorm>(out));
        decoder_.add(std::make_unique<Relu>());
      }
    }
  }
  std::mt19937_64 rng(seed_);
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_.layer(i).initialize(rng);
  for (std::size_t i = 0; i < decoder_.size(); ++i) decoder_.layer(i).initialize(rng);
}

void AutoEncoderModel::check_image(const ImagePatch& image) const {
  if (image.channels != arch_.channels || image.height != arch_.height || image.width != arch_.width) {
    throw std::invalid_argument("image shape " + std::to_string(image.channels) + "x" + std::to_string(image.height) +
                                "x" + std::to_string(image.width) + " does not match model input " +
                                std::to_string(arch_.channels) + "x" + std::to_string(arch_.height) + "x" +
                                std::to_string(arch_.width));
  }
}

Tensor AutoEncoderModel::to_batch(std::span<const ImagePatch> images) const {
  Tensor t(static_cast<int>(images.size()), arch_.input_shape());
  for (std::size_t i = 0; i < images.size(); ++i) {
    check_image(images[i]);
    std::copy(images[i].pixels.begin(), images[i].pixels.end(), t.sample(static_cast<int>(i)).begin());
  }
  return t;
}

Tensor AutoEncoderModel::to_batch(std::span<const ImagePatch* const> images) const {
  Tensor t(static_cast<int>(images.size()), arch_.input_shape());
  for (std::size_t i = 0; i < images.size(); ++i) {
    check_image(*images[i]);
    std::copy(images[i]->pixels.begin(), images[i]->pixels.end(), t.sample(static_cast<int>(i)).begin());
  }
  return t;
}

LatentVector AutoEncoderModel::encode(const ImagePatch& image) const {
  return encode_all(std::span<const ImagePatch>(&image, 1)).front();
}

std::vector<LatentVector> AutoEncoderModel::encode_all(std::span<const ImagePatch> images) const {
  std::vector<LatentVector> out;
  out.reserve(images.size());
  constexpr std::size_t kChunk = 64;
  Sequential::Trace trace;
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const auto chunk = images.subspan(start, std::min(kChunk, images.size() - start));
    encoder_.forward(to_batch(chunk), trace, false);
    const Tensor& z = trace.activations.back();
    for (int i = 0; i < z.batch; ++i) {
      const auto s = z.sample(i);
      out.push_back(LatentVector{{s.begin(), s.end()}});
    }
  }
  return out;
}

ImagePatch AutoEncoderModel::decode(const LatentVector& z) const {
  if (static_cast<int>(z.size()) != arch_.latent_dim) {
    throw std::invalid_argument("latent vector length " + std::to_string(z.size()) + " does not match latent_dim " +
                                std::to_string(arch_.latent_dim));
  }
  Tensor t(1, Shape{arch_.latent_dim, 1, 1});
  std::copy(z.values.begin(), z.values.end(), t.data.begin());
  Sequential::Trace trace;
  decoder_.forward(t, trace, false);
  ImagePatch out(arch_.channels, arch_.height, arch_.width);
  out.pixels = trace.activations.back().data;
  return out;
}

ImagePatch AutoEncoderModel::reconstruct(const ImagePatch& image) const { return decode(encode(image)); }

std::vector<ParameterView> AutoEncoderModel::parameters() {
  std::vector<ParameterView> views;
  std::vector<ParameterView> buffers;
  auto collect = [&](Sequential& net, const std::string& prefix) {
    for (std::size_t i = 0; i < net.size(); ++i) {
      Layer& layer = net.layer(i);
      const auto values = layer.parameters();
      const auto grads = layer.gradients();
      const auto names = layer.parameter_names();
      for (std::size_t p = 0; p < values.size(); ++p) {
        views.push_back({prefix + "." + std::to_string(i) + "." + names[p], values[p], grads[p], layer.kind(), true});
      }
      const auto bufs = layer.buffers();
      const auto buf_names = layer.buffer_names();
      for (std::size_t b = 0; b < bufs.size(); ++b) {
        buffers.push_back({prefix + "." + std::to_string(i) + "." + buf_names[b], bufs[b], {}, layer.kind(), false});
      }
    }
  };
  collect(encoder_, "encoder");
  collect(decoder_, "decoder");
  views.insert(views.end(), buffers.begin(), buffers.end());
  return views;
}

std::size_t AutoEncoderModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& view : const_cast<AutoEncoderModel*>(this)->parameters()) {
    if (view.trainable) total += view.values.size();
  }
  return total;
}

void AutoEncoderModel::zero_gradients() {
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_.layer(i).zero_gradients();
  for (std::size_t i = 0; i < decoder_.size(); ++i) decoder_.layer(i).zero_gradients();
}

// ---------------------------------------------------------------------------

namespace {

LossTerms forward_loss(const AutoEncoderModel& model, const Tensor& x, std::span<const LatentVector* const> targets,
                       double lambda, bool training, Sequential::Trace& enc, Sequential::Trace& dec) {
  if (x.batch == 0) throw std::invalid_argument("loss needs a non-empty batch");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must lie in [0, 1]");
  model.encoder().forward(x, enc, training);
  model.decoder().forward(enc.activations.back(), dec, training);
  const Tensor& z = enc.activations.back();
  const Tensor& r = dec.activations.back();
  const double inv_batch = 1.0 / x.batch;

  LossTerms terms;
  double rec = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) rec += (r.data[i] - x.data[i]) * (r.data[i] - x.data[i]);
  terms.reconstruction = rec * inv_batch;
  if (lambda > 0.0 || !targets.empty()) {
    if (targets.size() != static_cast<std::size_t>(x.batch)) {
      throw std::invalid_argument("clustering loss needs one centroid per batch element");
    }
    double cl = 0.0;
    for (int n = 0; n < x.batch; ++n) {
      const auto zs = z.sample(n);
      const auto& c = targets[n]->values;
      if (c.size() != zs.size()) throw std::invalid_argument("centroid length does not match latent_dim");
      for (std::size_t k = 0; k < zs.size(); ++k) cl += (zs[k] - c[k]) * (zs[k] - c[k]);
    }
    terms.clustering = cl * inv_batch;
  }
  terms.total = (1.0 - lambda) * terms.reconstruction + lambda * terms.clustering;
  return terms;
}

}  // namespace

LossTerms evaluate_batch(AutoEncoderModel& model, std::span<const ImagePatch* const> batch,
                         std::span<const LatentVector* const> targets, double lambda, bool training, bool gradients,
                         bool commit) {
  const Tensor x = model.to_batch(batch);
  Sequential::Trace enc;
  Sequential::Trace dec;
  const LossTerms terms = forward_loss(model, x, targets, lambda, training, enc, dec);
  if (gradients) {
    const Tensor& z = enc.activations.back();
    const Tensor& r = dec.activations.back();
    const double scale = 2.0 / x.batch;
    Tensor grad_r(x.batch, x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) grad_r.data[i] = (1.0 - lambda) * scale * (r.data[i] - x.data[i]);
    Tensor grad_z;
    model.decoder().backward(dec, grad_r, grad_z);
    if (lambda > 0.0) {
      for (int n = 0; n < x.batch; ++n) {
        auto gz = grad_z.sample(n);
        const auto zs = z.sample(n);
        const auto& c = targets[n]->values;
        for (std::size_t k = 0; k < zs.size(); ++k) gz[k] += lambda * scale * (zs[k] - c[k]);
      }
    }
    Tensor grad_x;
    model.encoder().backward(enc, grad_z, grad_x);
  }
  if (commit) {
    model.encoder().commit(enc);
    model.decoder().commit(dec);
  }
  return terms;
}

double reconstruction_loss(const AutoEncoderModel& model, std::span<const ImagePatch> batch) {
  Sequential::Trace enc;
  Sequential::Trace dec;
  return forward_loss(model, model.to_batch(batch), {}, 0.0, false, enc, dec).reconstruction;
}

double combined_loss(const AutoEncoderModel& model, std::span<const ImagePatch> batch, std::span<const long> labels,
                     const CentroidTable& centroids, double lambda) {
  if (labels.size() != batch.size()) throw std::invalid_argument("one cluster label per image is required");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must lie in [0, 1]");
  std::vector<const LatentVector*> targets;
  targets.reserve(labels.size());
  for (long label : labels) targets.push_back(&centroids.at(label));
  Sequential::Trace enc;
  Sequential::Trace dec;
  return forward_loss(model, model.to_batch(batch), targets, lambda, false, enc, dec).total;
}

CentroidTable compute_centroids(std::span<const LatentVector> latents, std::span<const long> labels) {
  if (latents.size() != labels.size()) throw std::invalid_argument("one cluster label per latent vector is required");
  if (latents.empty()) throw std::invalid_argument("cannot compute centroids of an empty dataset");
  std::map<long, std::size_t> counts;
  CentroidTable table;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    auto& c = table.centroid[labels[i]].values;
    if (c.empty()) c.assign(latents[i].size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += latents[i].values[k];
    ++counts[labels[i]];
  }
  for (auto& [label, c] : table.centroid) {
    const double inv = 1.0 / static_cast<double>(counts[label]);
    for (auto& v : c.values) v *= inv;
  }
  return table;
}

CentroidTable compute_centroids(const AutoEncoderModel& model, std::span<const ImagePatch> dataset,
                                std::span<const long> labels) {
  if (dataset.size() != labels.size()) throw std::invalid_argument("one cluster label per image is required");
  const auto latents = model.encode_all(dataset);
  return compute_centroids(latents, labels);
}

double latent_distance(const AutoEncoderModel& model, const ImagePatch& a, const ImagePatch& b) {
  return euclidean_distance(model.encode(a), model.encode(b));
}

}  // namespace selftrack
