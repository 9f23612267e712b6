#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "selftrack/geometry.hpp"
#include "selftrack/layers.hpp"
#include "selftrack/tensor.hpp"

namespace selftrack {

/// Convolutional autoencoder layout.
///
/// Each entry of `filters` adds one encoder stage conv(kernel) -> [batchnorm]
/// -> relu -> maxpool(2x2), so the spatial size halves per stage. A dense
/// layer maps the flattened features to the latent code. The decoder
/// mirrors this with dense -> relu -> reshape and one upsample -> conv stage
/// per filter entry; its final conv is linear and restores the input
/// channels. With no filters the model is a pair of dense layers.
struct ArchConfig {
  int channels = 3;
  int height = 32;
  int width = 32;
  std::vector<int> filters{8, 16, 32};
  int latent_dim = 32;
  int kernel = 3;
  bool batchnorm = false;

  Shape input_shape() const { return Shape{channels, height, width}; }
  void validate() const;

  /// 32x32 RGB input, three stages, 32-d latent.
  static ArchConfig desk_default();
  /// 64x64 RGB input, five stages with doubling filter counts, 32-d latent.
  static ArchConfig full_scale();
  /// Single dense encoder and decoder layer without activations.
  static ArchConfig linear(Shape input, int latent_dim);

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct LatentVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const LatentVector&, const LatentVector&) = default;
};

double euclidean_distance(const LatentVector& a, const LatentVector& b);

/// Centroid per cluster label.
struct CentroidTable {
  std::map<long, LatentVector> centroid;

  /// Throws std::out_of_range naming the label if it has no centroid.
  const LatentVector& at(long label) const;
  bool contains(long label) const { return centroid.count(label) != 0; }
};

/// Layer stack with value semantics (deep copies).
class Sequential {
 public:
  struct Trace {
    std::vector<Tensor> activations;  // activations[0] is the input
    std::vector<LayerCache> caches;
  };

  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  Shape output_shape(Shape input) const;

  void forward(const Tensor& input, Trace& trace, bool training) const;
  /// Accumulates parameter gradients; grad_input receives d loss / d input.
  void backward(const Trace& trace, const Tensor& grad_output, Tensor& grad_input);
  void commit(const Trace& trace);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Named view on one parameter or buffer tensor of a model.
struct ParameterView {
  std::string name;
  std::span<double> values;
  std::span<double> gradients;  // empty for buffers
  LayerKind layer_kind = LayerKind::Dense;
  bool trainable = true;
};

/// Encoder f and decoder g with their parameters.
class AutoEncoderModel {
 public:
  /// Builds the layers and draws Xavier-normal weights from `seed`.
  AutoEncoderModel(ArchConfig arch, std::uint64_t seed);

  const ArchConfig& architecture() const { return arch_; }
  std::uint64_t seed() const { return seed_; }
  int epoch() const { return epoch_; }
  void set_epoch(int epoch) { epoch_ = epoch; }

  /// Pure forward passes (inference mode); safe to call concurrently.
  LatentVector encode(const ImagePatch& image) const;
  std::vector<LatentVector> encode_all(std::span<const ImagePatch> images) const;
  ImagePatch decode(const LatentVector& z) const;
  ImagePatch reconstruct(const ImagePatch& image) const;

  Sequential& encoder() { return encoder_; }
  Sequential& decoder() { return decoder_; }
  const Sequential& encoder() const { return encoder_; }
  const Sequential& decoder() const { return decoder_; }

  /// Trainable parameters first (encoder then decoder), then buffers.
  std::vector<ParameterView> parameters();
  std::size_t parameter_count() const;
  void zero_gradients();

  Tensor to_batch(std::span<const ImagePatch> images) const;
  Tensor to_batch(std::span<const ImagePatch* const> images) const;

 private:
  void check_image(const ImagePatch& image) const;

  ArchConfig arch_;
  std::uint64_t seed_ = 0;
  int epoch_ = 0;
  Sequential encoder_;
  Sequential decoder_;
};

struct LossTerms {
  double total = 0.0;
  double reconstruction = 0.0;
  double clustering = 0.0;
};

/// Loss (1-lambda) * mean ||g(f(x)) - x||^2 + lambda * mean ||f(x) - c||^2 over
/// a batch, with per-sample centroid targets (may be empty when lambda = 0).
///
/// In training mode batchnorm uses batch statistics. With `gradients` set the
/// parameter gradients are accumulated into the model; with `commit` set the
/// batchnorm running statistics are updated.
LossTerms evaluate_batch(AutoEncoderModel& model, std::span<const ImagePatch* const> batch,
                         std::span<const LatentVector* const> targets, double lambda, bool training, bool gradients,
                         bool commit = false);

/// Mean squared reconstruction error ||g(f(x)) - x||^2 over the batch.
double reconstruction_loss(const AutoEncoderModel& model, std::span<const ImagePatch> batch);

/// (1-lambda) * reconstruction + lambda * mean ||f(x_i) - c_i||^2 where c_i is
/// the centroid of x_i's label. Lambda weights the clustering term.
double combined_loss(const AutoEncoderModel& model, std::span<const ImagePatch> batch, std::span<const long> labels,
                     const CentroidTable& centroids, double lambda);

/// Per-label mean of the latent codes.
CentroidTable compute_centroids(const AutoEncoderModel& model, std::span<const ImagePatch> dataset,
                                std::span<const long> labels);
CentroidTable compute_centroids(std::span<const LatentVector> latents, std::span<const long> labels);

/// ||f(a) - f(b)||.
double latent_distance(const AutoEncoderModel& model, const ImagePatch& a, const ImagePatch& b);

}  // namespace selftrack
