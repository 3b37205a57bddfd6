#pragma once

#include <filesystem>
#include <stdexcept>

#include "cea/image.hpp"

namespace cea {

struct ImageIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads an 8/16-bit PNG (RGB or gray) or a binary PPM/PGM (P6/P5).
/// Samples are divided by the bit-depth maximum; RGB files yield 3 channels,
/// gray files 1. Alpha channels are rejected.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes by extension (.png, .ppm, .pgm). Values are quantized as
/// round(v * max). Throws ImageIoError when any value lies outside [0,1].
void save_image(const ImageTensor& t, const std::filesystem::path& path, int bit_depth = 8);

/// Single-channel convenience wrapper.
void save_image(const PixelMap& m, const std::filesystem::path& path, int bit_depth = 8);

}  // namespace cea
