#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "selftrack/tensor.hpp"

namespace selftrack {

enum class LayerKind { Conv, MaxPool, Dense, Upsample, Relu, BatchNorm, Reshape };

std::string to_string(LayerKind kind);

/// Per-call state a forward pass leaves for the matching backward pass.
struct LayerCache {
  std::vector<std::uint32_t> indices;
  std::vector<std::uint8_t> mask;
  std::vector<double> mean;
  std::vector<double> inv_std;
  bool training = false;
};

/// Differentiable layer operating on a whole batch.
///
/// forward() is const and writes what backward() needs into a caller-owned
/// cache, so one model can serve concurrent inference. backward() takes the
/// input, output and cache of a forward pass and accumulates into the
/// parameter gradients.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Shape output_shape(Shape input) const = 0;
  virtual void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const = 0;
  virtual void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                        const LayerCache& cache) = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  /// Fold batch statistics of a training forward pass into running state.
  virtual void commit(const LayerCache& /*cache*/) {}

  /// Trainable parameters and their gradients, index-aligned.
  virtual std::vector<std::span<double>> parameters() { return {}; }
  virtual std::vector<std::span<double>> gradients() { return {}; }
  virtual std::vector<std::string> parameter_names() const { return {}; }

  /// Non-trainable state (batchnorm running statistics).
  virtual std::vector<std::span<double>> buffers() { return {}; }
  virtual std::vector<std::string> buffer_names() const { return {}; }

  /// Hash of the piecewise-linear branch a forward pass took.
  virtual void mix_branch_signature(const LayerCache& /*cache*/, std::uint64_t& /*hash*/) const {}

  /// Xavier-normal weights, zero biases.
  virtual void initialize(std::mt19937_64& /*rng*/) {}

  void zero_gradients();
};

/// 2-D convolution, stride 1, zero "same" padding, odd square kernel.
class Conv2d final : public Layer {
 public:
  /// Without `bias` the layer is meant to feed a batchnorm, which cancels any per-channel offset.
  Conv2d(int in_channels, int out_channels, int kernel, bool bias = true);

  LayerKind kind() const override { return LayerKind::Conv; }
  Shape output_shape(Shape input) const override;
  void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                const LayerCache& cache) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  std::vector<std::span<double>> parameters() override {
    if (bias_.empty()) return {weight_};
    return {weight_, bias_};
  }
  std::vector<std::span<double>> gradients() override {
    if (bias_.empty()) return {grad_weight_};
    return {grad_weight_, grad_bias_};
  }
  std::vector<std::string> parameter_names() const override {
    if (bias_.empty()) return {"weight"};
    return {"weight", "bias"};
  }
  bool has_bias() const { return !bias_.empty(); }
  void initialize(std::mt19937_64& rng) override;

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return k_; }

 private:
  int in_;
  int out_;
  int k_;
  std::vector<double> weight_;  // [out][in][k][k]
  std::vector<double> bias_;
  std::vector<double> grad_weight_;
  std::vector<double> grad_bias_;
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2 final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::MaxPool; }
  Shape output_shape(Shape input) const override;
  void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                const LayerCache& cache) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2>(*this); }
  void mix_branch_signature(const LayerCache& cache, std::uint64_t& hash) const override;
};

/// Fully connected layer on the flattened sample; output shape (out, 1, 1).
class Dense final : public Layer {
 public:
  Dense(int inputs, int outputs);

  LayerKind kind() const override { return LayerKind::Dense; }
  Shape output_shape(Shape input) const override;
  void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                const LayerCache& cache) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  std::vector<std::span<double>> parameters() override {
    if (bias_.empty()) return {weight_};
    return {weight_, bias_};
  }
  std::vector<std::span<double>> gradients() override {
    if (bias_.empty()) return {grad_weight_};
    return {grad_weight_, grad_bias_};
  }
  std::vector<std::string> parameter_names() const override {
    if (bias_.empty()) return {"weight"};
    return {"weight", "bias"};
  }
  bool has_bias() const { return !bias_.empty(); }
  void initialize(std::mt19937_64& rng) override;

  int inputs() const { return in_; }
  int outputs() const { return out_; }

 private:
  int in_;
  int out_;
  std::vector<double> weight_;  // [out][in]
  std::vector<double> bias_;
  std::vector<double> grad_weight_;
  std::vector<double> grad_bias_;
};

/// Nearest-neighbor 2x upsampling.
class Upsample2 final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Upsample; }
  Shape output_shape(Shape input) const override;
  void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                const LayerCache& cache) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Upsample2>(*this); }
};

class Relu final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Relu; }
  Shape output_shape(Shape input) const override { return input; }
  void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                const LayerCache& cache) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  void mix_branch_signature(const LayerCache& cache, std::uint64_t& hash) const override;
};

/// Per-channel batch normalization. Training mode normalizes with batch
/// statistics and updates running averages; inference uses the averages.
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(int channels, double momentum = 0.1, double epsilon = 1e-5);

  LayerKind kind() const override { return LayerKind::BatchNorm; }
  Shape output_shape(Shape input) const override { return input; }
  void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                const LayerCache& cache) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
  std::vector<std::span<double>> parameters() override { return {gamma_, beta_}; }
  std::vector<std::span<double>> gradients() override { return {grad_gamma_, grad_beta_}; }
  std::vector<std::string> parameter_names() const override { return {"gamma", "beta"}; }
  std::vector<std::span<double>> buffers() override { return {running_mean_, running_var_}; }
  std::vector<std::string> buffer_names() const override { return {"running_mean", "running_var"}; }
  void initialize(std::mt19937_64& rng) override;
  void commit(const LayerCache& cache) override;

 private:
  int channels_;
  double momentum_;
  double epsilon_;
  std::vector<double> gamma_;
  std::vector<double> beta_;
  std::vector<double> grad_gamma_;
  std::vector<double> grad_beta_;
  std::vector<double> running_mean_;
  std::vector<double> running_var_;
};

/// Reinterprets the flat sample with a new shape of equal size.
class Reshape final : public Layer {
 public:
  explicit Reshape(Shape target) : target_(target) {}

  LayerKind kind() const override { return LayerKind::Reshape; }
  Shape output_shape(Shape input) const override;
  void forward(const Tensor& in, Tensor& out, LayerCache& cache, bool training) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                const LayerCache& cache) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Reshape>(*this); }

 private:
  Shape target_;
};

}  // namespace selftrack
