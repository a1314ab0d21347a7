#pragma once

#include <cstdint>
#include <vector>

namespace mammo {

// Raw 2-D integer pixel grid, straight from a decoded payload.
// Invariant: every value fits in bits_stored bits.
struct PixelMatrix {
    std::size_t rows = 0;
    std::size_t columns = 0;
    int bits_stored = 8;
    std::vector<std::uint16_t> values;  // row-major, rows * columns entries

    std::uint16_t at(std::size_t r, std::size_t c) const { return values[r * columns + c]; }
};

enum class Photometric { Monochrome1, Monochrome2 };

} // namespace mammo
