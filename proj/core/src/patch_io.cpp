#include "selftrack/patch_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace selftrack {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'P', 'A', 'T', 'C', 'H', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("patch file truncated in header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void quantize(ImagePatch& patch) {
  for (auto& v : patch.pixels) v = to_byte(v) / 255.0;
}

void write_patches(std::ostream& out, std::span<const ImagePatch> patches) {
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(patches.size()));
  const ImagePatch shape = patches.empty() ? ImagePatch{} : patches.front();
  put_u32(out, static_cast<std::uint32_t>(shape.channels));
  put_u32(out, static_cast<std::uint32_t>(shape.height));
  put_u32(out, static_cast<std::uint32_t>(shape.width));
  std::vector<unsigned char> bytes;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (!patches[i].same_shape(shape)) {
      throw std::invalid_argument("patch " + std::to_string(i) + " differs in shape from the first patch");
    }
    bytes.resize(patches[i].pixels.size());
    std::transform(patches[i].pixels.begin(), patches[i].pixels.end(), bytes.begin(), to_byte);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw std::runtime_error("failed writing patches");
}

void write_patches_file(const std::filesystem::path& path, std::span<const ImagePatch> patches) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_patches(out, patches);
}

std::vector<ImagePatch> read_patches(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("not a patch file (bad magic)");
  const auto count = get_u32(in);
  const auto c = static_cast<int>(get_u32(in));
  const auto h = static_cast<int>(get_u32(in));
  const auto w = static_cast<int>(get_u32(in));
  if (count > 0 && (c <= 0 || h <= 0 || w <= 0 || static_cast<long long>(c) * h * w > (1LL << 24))) {
    throw std::runtime_error("patch file has an implausible patch shape");
  }
  std::vector<ImagePatch> out;
  out.reserve(count);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(c) * h * w);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
      throw std::runtime_error("patch file truncated at patch " + std::to_string(i));
    }
    ImagePatch p(c, h, w);
    for (std::size_t k = 0; k < bytes.size(); ++k) p.pixels[k] = bytes[k] / 255.0;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ImagePatch> read_patches_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open patch file " + path.string());
  return read_patches(in);
}

}  // namespace selftrack
