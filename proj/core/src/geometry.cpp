#include "selftrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selftrack {

void BBox::validate() const {
  if (!std::isfinite(left) || !std::isfinite(top) || !std::isfinite(width) || !std::isfinite(height)) {
    throw std::invalid_argument("bounding box has non-finite coordinates");
  }
  if (width <= 0.0 || height <= 0.0) {
    throw std::invalid_argument("bounding box must have positive width and height");
  }
}

double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left, b.left);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
  return iw <= 0.0 || ih <= 0.0 ? 0.0 : iw * ih;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) {
    return 0.0;
  }
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

ImagePatch::ImagePatch(int c, int h, int w)
    : channels(c), height(h), width(w), pixels(static_cast<std::size_t>(c) * h * w, 0.0) {
  if (c <= 0 || h <= 0 || w <= 0) {
    throw std::invalid_argument("image patch dimensions must be positive");
  }
}

}  // namespace selftrack
