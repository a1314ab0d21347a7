#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mammo/errors.hpp"
#include "mammo/rng.hpp"

namespace mammo {

inline constexpr std::size_t kFeatureDim = 1000;
inline constexpr std::size_t kExampleDim = kFeatureDim + 2;  // + normalized age + implant

enum class Laterality { L, R };
enum class View { MLO, CC };

struct CaseRecord {
    std::string patient_id;
    std::string image_id;
    Laterality laterality = Laterality::L;
    View view = View::MLO;
    std::optional<double> age;  // years, in (0, 130) when present
    bool implant = false;
    bool cancer = false;
};

struct FeatureRow {
    std::string image_id;
    std::vector<float> features;  // exactly kFeatureDim entries
};

struct FeatureTable {
    std::vector<FeatureRow> rows;
};

// One model input: 1000 image features, normalized age, implant flag.
struct Example {
    std::vector<double> x;  // kExampleDim entries
    double y = 0.0;         // binary label
    std::string patient_id;
    std::string image_id;
};

struct AgeStats {
    double min = 0.0;
    double max = 0.0;
};

// Metadata CSV. Required columns (by header name, any order, extras
// ignored): patient_id,image_id,laterality,view,age,implant,cancer.
// An empty age field parses as absent.
std::vector<CaseRecord> load_metadata(const std::filesystem::path& path);

// Feature table, either CSV with header image_id,f0..f999 or the flat
// binary format (magic "MMFV"); the format is sniffed from the leading
// bytes.
FeatureTable load_features(const std::filesystem::path& path);

void write_features_csv(const std::filesystem::path& path, const FeatureTable& table);
void write_features_binary(const std::filesystem::path& path, const FeatureTable& table);

struct AssembledData {
    std::vector<Example> examples;
    AgeStats age_stats;
};

// Joins feature rows with metadata into kExampleDim-wide examples. Age is
// min-max normalized with stats fitted here, or applied as given for
// validation data; out-of-range ages clamp to [0,1]; absent age imputes 0.5.
AssembledData assemble_examples(const std::vector<CaseRecord>& meta,
                                const FeatureTable& features,
                                std::optional<AgeStats> age_stats = std::nullopt);

// Patient-grouped split: all images of a patient land on one side, and
// positive patients are allocated proportionally so neither side drifts
// from the global positive fraction. Deterministic given seed.
std::pair<std::vector<Example>, std::vector<Example>> split_by_patient(
    const std::vector<Example>& examples, double val_fraction, std::uint64_t seed);

// Per-class batch quotas: round(batch_size / N * N_class), each represented
// class gets at least one slot, largest-remainder adjustment to sum to
// batch_size. Exposed for tests and for the sampler itself.
std::pair<std::size_t, std::size_t> sbs_quotas(std::size_t n_neg, std::size_t n_pos,
                                               std::size_t batch_size);

// Stratified batch sampler: every batch carries the per-class quotas above;
// within a class, sampling is without replacement until the class pool is
// exhausted, then the pool reshuffles. Works over labels so callers can
// batch indices without materializing example copies.
class StratifiedBatchSampler {
public:
    StratifiedBatchSampler(std::vector<std::uint8_t> labels, std::size_t batch_size,
                           std::uint64_t seed);

    std::vector<std::size_t> next_batch();

    std::size_t quota_neg() const { return quota_neg_; }
    std::size_t quota_pos() const { return quota_pos_; }
    std::size_t batch_size() const { return quota_neg_ + quota_pos_; }

private:
    std::size_t draw(std::vector<std::size_t>& pool, std::size_t& cursor);

    std::vector<std::size_t> neg_pool_;
    std::vector<std::size_t> pos_pool_;
    std::size_t neg_cursor_ = 0;
    std::size_t pos_cursor_ = 0;
    std::size_t quota_neg_ = 0;
    std::size_t quota_pos_ = 0;
    Rng rng_;
};

std::vector<std::uint8_t> labels_of(const std::vector<Example>& examples);

// Drops majority-class examples uniformly until minority:majority = ratio.
std::vector<Example> random_undersample(const std::vector<Example>& examples, double ratio,
                                        std::uint64_t seed);

// Duplicates minority-class examples uniformly with replacement until
// minority:majority = ratio.
std::vector<Example> random_oversample(const std::vector<Example>& examples, double ratio,
                                       std::uint64_t seed);

// SMOTE-style interpolation: each synthetic point lies on the segment
// between a minority example and one of its k nearest minority neighbors.
// The implant component is re-binarized at 0.5. Returns the originals plus
// n_new synthetic positives.
std::vector<Example> smote_interpolate(const std::vector<Example>& examples, std::size_t k,
                                       std::size_t n_new, std::uint64_t seed);

} // namespace mammo
