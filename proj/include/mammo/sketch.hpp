#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mammo/errors.hpp"
#include "mammo/numcore.hpp"

namespace mammo {

// Tensor-Sketch feature map for the polynomial kernel (gamma x.z + c0)^d:
// the input is scaled by sqrt(gamma) and augmented with sqrt(c0), one
// count-sketch per degree is built from an independent hash/sign pair, and
// the count-sketches are combined by circular convolution. The resulting
// phi satisfies E[phi(x).phi(z)] = (gamma x.z + c0)^d.
struct SketchDef {
    double gamma = 1.0;
    double c0 = 0.0;
    int degree = 2;
    std::size_t dim = 512;        // D, the sketch output width
    std::size_t input_dim = 0;    // before augmentation
    std::uint64_t seed = 0;
    std::vector<std::vector<std::uint32_t>> hash;  // degree x (input_dim + 1)
    std::vector<std::vector<float>> sign;          // entries in {-1, +1}
};

SketchDef sketch_fit(double gamma, double c0, int degree, std::size_t dim, std::uint64_t seed,
                     std::size_t input_dim);

Vec sketch_transform(const SketchDef& def, std::span<const double> x);

// Exact kernel value, for tests and calibration of the approximation.
double poly_kernel(double gamma, double c0, int degree, std::span<const double> x,
                   std::span<const double> z);

} // namespace mammo
