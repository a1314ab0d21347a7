#pragma once

#include <cstdint>
#include <filesystem>

#include "mammo/dataset.hpp"

namespace mammo {

// Seeded synthetic corpus: per-class Gaussian clusters in feature space plus
// class-conditioned metadata, at the source corpus' class ratio by default.
// `separation` scales both the distance between the feature cluster centers
// and the metadata signal, so separation 0 means the classes are genuinely
// indistinguishable.
struct SynthConfig {
    std::size_t n_images = 5470;
    // Positive count = floor(n_images * pos_fraction).
    double pos_fraction = 1158.0 / 54706.0;
    double separation = 2.0;
    double noise_sigma = 0.2;       // per-coordinate feature noise
    std::size_t images_per_patient = 4;
    double missing_age_fraction = 0.01;
    std::uint64_t seed = 7;
};

struct SynthData {
    std::vector<CaseRecord> metadata;
    FeatureTable features;
};

std::size_t synth_positive_count(const SynthConfig& cfg);

SynthData generate_synthetic(const SynthConfig& cfg);

void write_metadata_csv(const std::filesystem::path& path,
                        const std::vector<CaseRecord>& records);

} // namespace mammo
