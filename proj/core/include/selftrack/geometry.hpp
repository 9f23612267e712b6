#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace selftrack {

/// Axis-aligned box in pixel coordinates (top-left corner plus extent).
struct BBox {
  double left = 0.0;
  double top = 0.0;
  double width = 1.0;
  double height = 1.0;

  double right() const { return left + width; }
  double bottom() const { return top + height; }
  double area() const { return width * height; }

  /// Throws std::invalid_argument unless all fields are finite and the extent is positive.
  void validate() const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

double intersection_area(const BBox& a, const BBox& b);

/// Intersection over union, symmetric and in [0,1]; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

/// Normalized pixel grid stored channel-major (CHW), values in [0,1].
struct ImagePatch {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  ImagePatch() = default;
  ImagePatch(int c, int h, int w);

  std::size_t size() const { return pixels.size(); }
  double& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }

  bool same_shape(const ImagePatch& other) const {
    return channels == other.channels && height == other.height && width == other.width;
  }

  friend bool operator==(const ImagePatch&, const ImagePatch&) = default;
};

/// One detector output: a box in a frame with a confidence score.
struct Detection {
  int frame = 1;
  BBox box;
  double score = 1.0;
  std::optional<ImagePatch> image;
};

}  // namespace selftrack
