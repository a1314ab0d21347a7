#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mammo/imageops.hpp"
#include "mammo/pixels.hpp"

namespace mammo {

// Binary portable graymap (P5), maxval up to 65535. 16-bit samples are
// big-endian per the Netpbm convention.
PixelMatrix read_pgm(const std::filesystem::path& path);
PixelMatrix parse_pgm(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_pgm(const PixelMatrix& m);
void write_pgm(const std::filesystem::path& path, const PixelMatrix& m);

// Quantize a normalized image to a 16-bit graymap.
PixelMatrix to_pixels(const NormalizedImage& img, int bits_stored = 16);

} // namespace mammo
