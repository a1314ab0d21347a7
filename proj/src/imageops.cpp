#include "mammo/imageops.hpp"

#include <algorithm>
#include <cmath>

namespace mammo {

namespace {

void require_nonempty(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0)
        throw ImageError(ImageError::Kind::EmptyImage, "image has no pixels");
}

// Per-output-cell source taps for one axis.
using Taps = std::vector<std::vector<std::pair<std::size_t, double>>>;

Taps area_taps(std::size_t src, std::size_t dst) {
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    Taps taps(dst);
    for (std::size_t i = 0; i < dst; ++i) {
        const double lo = static_cast<double>(i) * scale;
        const double hi = static_cast<double>(i + 1) * scale;
        const std::size_t first = static_cast<std::size_t>(lo);
        const std::size_t last = std::min(src - 1, static_cast<std::size_t>(std::ceil(hi)) - 1);
        for (std::size_t k = first; k <= last; ++k) {
            const double overlap = std::min(hi, static_cast<double>(k + 1)) -
                                   std::max(lo, static_cast<double>(k));
            if (overlap > 0.0) taps[i].emplace_back(k, overlap / scale);
        }
    }
    return taps;
}

Taps bilinear_taps(std::size_t src, std::size_t dst) {
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    Taps taps(dst);
    for (std::size_t i = 0; i < dst; ++i) {
        const double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
        if (pos <= 0.0) {
            taps[i].emplace_back(0, 1.0);
        } else if (pos >= static_cast<double>(src - 1)) {
            taps[i].emplace_back(src - 1, 1.0);
        } else {
            const std::size_t k = static_cast<std::size_t>(pos);
            const double f = pos - static_cast<double>(k);
            taps[i].emplace_back(k, 1.0 - f);
            taps[i].emplace_back(k + 1, f);
        }
    }
    return taps;
}

Taps axis_taps(std::size_t src, std::size_t dst) {
    return dst < src ? area_taps(src, dst) : bilinear_taps(src, dst);
}

} // namespace

NormalizedImage normalize_minmax(const PixelMatrix& m) {
    require_nonempty(m.rows, m.columns);
    const auto [lo_it, hi_it] = std::minmax_element(m.values.begin(), m.values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    NormalizedImage out{m.rows, m.columns, std::vector<double>(m.values.size(), 0.0)};
    if (hi > lo) {
        const double inv = 1.0 / (hi - lo);
        for (std::size_t i = 0; i < m.values.size(); ++i)
            out.values[i] = (static_cast<double>(m.values[i]) - lo) * inv;
    }
    return out;
}

NormalizedImage invert(const NormalizedImage& img) {
    NormalizedImage out{img.rows, img.columns, img.values};
    for (double& v : out.values) v = 1.0 - v;
    return out;
}

NormalizedImage resize(const NormalizedImage& img, std::size_t target_rows,
                       std::size_t target_cols) {
    if (target_rows == 0 || target_cols == 0)
        throw ImageError(ImageError::Kind::ZeroTargetDimension, "resize target is empty");
    require_nonempty(img.rows, img.columns);
    if (target_rows == img.rows && target_cols == img.columns) return img;

    // Vertical pass.
    NormalizedImage mid{target_rows, img.columns,
                        std::vector<double>(target_rows * img.columns, 0.0)};
    if (target_rows == img.rows) {
        mid.values = img.values;
    } else {
        const Taps taps = axis_taps(img.rows, target_rows);
        for (std::size_t r = 0; r < target_rows; ++r) {
            double* out_row = mid.values.data() + r * img.columns;
            for (const auto& [k, w] : taps[r]) {
                const double* in_row = img.values.data() + k * img.columns;
                for (std::size_t c = 0; c < img.columns; ++c) out_row[c] += w * in_row[c];
            }
        }
    }

    // Horizontal pass.
    NormalizedImage out{target_rows, target_cols,
                        std::vector<double>(target_rows * target_cols, 0.0)};
    if (target_cols == img.columns) {
        out.values = std::move(mid.values);
    } else {
        const Taps taps = axis_taps(img.columns, target_cols);
        for (std::size_t r = 0; r < target_rows; ++r) {
            const double* in_row = mid.values.data() + r * img.columns;
            double* out_row = out.values.data() + r * target_cols;
            for (std::size_t c = 0; c < target_cols; ++c) {
                double acc = 0.0;
                for (const auto& [k, w] : taps[c]) acc += w * in_row[k];
                out_row[c] = acc;
            }
        }
    }

    // Both kernels are convex combinations; the clamp only absorbs the last
    // ulp of rounding drift.
    for (double& v : out.values) v = std::clamp(v, 0.0, 1.0);
    return out;
}

NormalizedImage preprocess(const PixelMatrix& m, Photometric photometric) {
    NormalizedImage img = normalize_minmax(m);
    if (photometric == Photometric::Monochrome1) img = invert(img);
    return resize(img, kTargetSize, kTargetSize);
}

} // namespace mammo
