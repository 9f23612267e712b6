#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "selftrack/geometry.hpp"

namespace selftrack {

/// Binary patch container: magic "STPATCH1", u32 count, u32 channels,
/// height, width, then count * channels * height * width bytes (value * 255,
/// rounded). Values that are multiples of 1/255 roundtrip exactly.
void write_patches(std::ostream& out, std::span<const ImagePatch> patches);
void write_patches_file(const std::filesystem::path& path, std::span<const ImagePatch> patches);
std::vector<ImagePatch> read_patches(std::istream& in);
std::vector<ImagePatch> read_patches_file(const std::filesystem::path& path);

/// Rounds every pixel to the nearest multiple of 1/255 after clamping to [0, 1].
void quantize(ImagePatch& patch);

}  // namespace selftrack
