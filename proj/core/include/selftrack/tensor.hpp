#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace selftrack {

/// Per-sample activation shape (channels x height x width).
struct Shape {
  int channels = 0;
  int height = 1;
  int width = 1;

  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Batch of samples stored contiguously, sample-major then CHW.
struct Tensor {
  int batch = 0;
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int n, Shape s) : batch(n), shape(s), data(static_cast<std::size_t>(n) * s.size(), 0.0) {}

  std::span<double> sample(int i) { return {data.data() + static_cast<std::size_t>(i) * shape.size(), shape.size()}; }
  std::span<const double> sample(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * shape.size(), shape.size()};
  }
  void reset(int n, Shape s) {
    batch = n;
    shape = s;
    data.assign(static_cast<std::size_t>(n) * s.size(), 0.0);
  }
};

}  // namespace selftrack
