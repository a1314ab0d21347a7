#pragma once

#include <cstddef>
#include <vector>

#include "mammo/errors.hpp"
#include "mammo/pixels.hpp"

namespace mammo {

inline constexpr std::size_t kTargetSize = 512;

// 2-D grid of reals in [0, 1].
struct NormalizedImage {
    std::size_t rows = 0;
    std::size_t columns = 0;
    std::vector<double> values;  // row-major

    double at(std::size_t r, std::size_t c) const { return values[r * columns + c]; }
};

// Per-image min-max scaling to [0, 1]. A constant image maps to all zeros.
NormalizedImage normalize_minmax(const PixelMatrix& m);

// v -> 1 - v. MONOCHROME1 mammograms are stored white-background; inverting
// after normalization matches inverting the raw values before it.
NormalizedImage invert(const NormalizedImage& img);

// Separable resize: area-averaging along axes that shrink, bilinear
// interpolation along axes that grow. Values stay in [0, 1].
NormalizedImage resize(const NormalizedImage& img, std::size_t target_rows = kTargetSize,
                       std::size_t target_cols = kTargetSize);

// Full preprocessing chain: normalize, invert iff MONOCHROME1, resize to
// 512 x 512.
NormalizedImage preprocess(const PixelMatrix& m, Photometric photometric);

} // namespace mammo
