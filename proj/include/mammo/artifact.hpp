#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mammo/classifiers.hpp"

namespace mammo {

inline constexpr std::uint32_t kArtifactVersion = 1;

enum class ModelKind : std::uint32_t {
    Logistic = 1,
    SketchSvm = 2,
    TwoBranchDnn = 3,
};

// Self-describing serialized model. Hyperparameters are named f64 scalars;
// weights live in named sections of little-endian f32, indexed by offset
// from a common base. The byte layout is documented in the README.
struct ModelArtifact {
    std::uint32_t format_version = kArtifactVersion;
    ModelKind kind = ModelKind::Logistic;
    std::uint64_t seed = 0;
    std::map<std::string, double> hyper;  // sorted => deterministic bytes
    std::vector<std::pair<std::string, std::vector<float>>> sections;

    double hyper_or(const std::string& name, double fallback) const;
    double hyper_required(const std::string& name) const;
    const std::vector<float>& section(const std::string& name) const;
};

std::vector<std::uint8_t> encode_artifact(const ModelArtifact& artifact);
ModelArtifact decode_artifact(std::span<const std::uint8_t> bytes);

void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::filesystem::path& path);

// Typed conversions. The artifact additionally carries whatever pipeline
// context the caller stores in `hyper` (age stats, split seed, threshold).
ModelArtifact artifact_from(const LogisticModel& model, std::uint64_t seed);
ModelArtifact artifact_from(const SketchSVM& model, std::uint64_t seed);
ModelArtifact artifact_from(const TwoBranchDNN& model, std::uint64_t seed);

using AnyModel = std::variant<LogisticModel, SketchSVM, TwoBranchDNN>;

AnyModel model_from_artifact(const ModelArtifact& artifact);

double predict_proba(const AnyModel& model, std::span<const double> x);

} // namespace mammo
