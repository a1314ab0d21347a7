#include "mammo/sketch.hpp"

#include <cmath>

#include "mammo/rng.hpp"

namespace mammo {

SketchDef sketch_fit(double gamma, double c0, int degree, std::size_t dim, std::uint64_t seed,
                     std::size_t input_dim) {
    if (degree < 1)
        throw ModelError(ModelError::Kind::BadDegree,
                         "kernel degree must be >= 1, got " + std::to_string(degree));
    if (dim < 1)
        throw ModelError(ModelError::Kind::BadDegree, "sketch dimension must be >= 1");
    if (!(gamma > 0.0))
        throw ModelError(ModelError::Kind::BadDegree, "gamma must be positive");
    if (c0 < 0.0)
        throw ModelError(ModelError::Kind::BadDegree, "c0 must be non-negative");

    SketchDef def;
    def.gamma = gamma;
    def.c0 = c0;
    def.degree = degree;
    def.dim = dim;
    def.input_dim = input_dim;
    def.seed = seed;

    const std::size_t width = input_dim + 1;  // + the sqrt(c0) constant slot
    Rng rng(seed);
    def.hash.resize(static_cast<std::size_t>(degree));
    def.sign.resize(static_cast<std::size_t>(degree));
    for (int j = 0; j < degree; ++j) {
        Rng stream = rng.fork();
        auto& h = def.hash[static_cast<std::size_t>(j)];
        auto& s = def.sign[static_cast<std::size_t>(j)];
        h.resize(width);
        s.resize(width);
        for (std::size_t i = 0; i < width; ++i) {
            h[i] = static_cast<std::uint32_t>(stream.uniform_index(dim));
            s[i] = stream.bernoulli(0.5) ? 1.0f : -1.0f;
        }
    }
    return def;
}

Vec sketch_transform(const SketchDef& def, std::span<const double> x) {
    if (x.size() != def.input_dim)
        throw ModelError(ModelError::Kind::WidthMismatch,
                         "sketch expects " + std::to_string(def.input_dim) + " inputs, got " +
                             std::to_string(x.size()));
    const std::size_t D = def.dim;
    const double sqrt_gamma = std::sqrt(def.gamma);
    const double sqrt_c0 = std::sqrt(def.c0);

    // Count-sketch of the augmented input per degree.
    std::vector<Vec> cs(static_cast<std::size_t>(def.degree), Vec(D, 0.0));
    for (int j = 0; j < def.degree; ++j) {
        auto& out = cs[static_cast<std::size_t>(j)];
        const auto& h = def.hash[static_cast<std::size_t>(j)];
        const auto& s = def.sign[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < def.input_dim; ++i)
            out[h[i]] += s[i] * sqrt_gamma * x[i];
        out[h[def.input_dim]] += s[def.input_dim] * sqrt_c0;
    }

    // Fold by circular convolution. D is small enough that the direct
    // O(D^2) form beats setting up an FFT here.
    Vec acc = std::move(cs[0]);
    for (std::size_t j = 1; j < cs.size(); ++j) {
        const Vec& b = cs[j];
        Vec next(D, 0.0);
        for (std::size_t p = 0; p < D; ++p) {
            const double a = acc[p];
            if (a == 0.0) continue;
            std::size_t q = p;
            for (std::size_t r = 0; r < D; ++r) {
                next[q] += a * b[r];
                if (++q == D) q = 0;
            }
        }
        acc = std::move(next);
    }
    return acc;
}

double poly_kernel(double gamma, double c0, int degree, std::span<const double> x,
                   std::span<const double> z) {
    if (degree < 1)
        throw ModelError(ModelError::Kind::BadDegree, "kernel degree must be >= 1");
    if (x.size() != z.size())
        throw ModelError(ModelError::Kind::WidthMismatch, "kernel inputs differ in width");
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
    return std::pow(gamma * dot + c0, degree);
}

} // namespace mammo
