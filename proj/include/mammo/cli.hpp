#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mammo/classifiers.hpp"
#include "mammo/errors.hpp"

namespace mammo {
namespace cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitUsage = 2;

enum class ModelChoice { Lr, Svm, Dnn };
enum class ImbalanceMode { None, ClassWeights, Sbs, Undersample, Oversample, Smote };

const char* model_name(ModelChoice m);
const char* imbalance_name(ImbalanceMode m);

// Resolved run configuration. Populated from a key=value config file plus
// flag overrides; `validate()` enforces the cross-field rules.
struct RunConfig {
    std::optional<std::uint64_t> seed;  // required for every run
    ModelChoice model = ModelChoice::Dnn;

    // Model hyperparameters.
    double C = 1.0;
    std::optional<double> class_weight_neg;
    std::optional<double> class_weight_pos;
    double gamma = 1.0 / static_cast<double>(kExampleDim);
    double c0 = 1.0;
    int degree = 3;
    std::size_t sketch_dim = 512;
    Fusion fusion = Fusion::Mean;

    // Optimizer and stopping.
    double eta = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 256;
    std::size_t max_iters = 1000;
    std::size_t patience = 0;
    double min_delta = 0.0;
    double threshold = 0.5;

    // Imbalance handling.
    ImbalanceMode imbalance = ImbalanceMode::None;
    double ratio = 1.0;
    std::size_t smote_k = 5;
    std::size_t smote_n = 0;  // 0 derives the count from `ratio`

    // Data and paths.
    double val_fraction = 0.2;
    std::string metadata_path;
    std::string features_path;
    std::string out_dir = ".";
    std::string external_decoder;  // command template with {input} and {output}

    // Synthetic corpus.
    std::size_t synth_n = 5470;
    double synth_separation = 2.0;
    double synth_noise = 0.2;
    std::string synth_format = "binary";  // or "csv"

    std::size_t jobs = 1;

    void set(const std::string& key, const std::string& value);
    void validate() const;

    // Every key in canonical order with its current value; the provenance
    // echo and the config documentation both come from here.
    std::vector<std::pair<std::string, std::string>> items() const;
};

RunConfig load_config_file(const std::filesystem::path& path);

// FNV-1a 64 over a file's bytes, hex-encoded; used for provenance.
std::string file_checksum(const std::filesystem::path& path);

struct BatchSummary {
    std::size_t ok = 0;
    std::size_t failed = 0;

    int exit_code() const { return failed == 0 ? kExitOk : kExitPartialFailure; }
};

// DICOM -> graymap conversion for every .dcm under input_dir. Encapsulated
// payloads go through the external decoder; each image gets a sidecar
// .meta file recording what preprocessing needs to know.
BatchSummary cmd_convert(const std::filesystem::path& input_dir,
                         const std::filesystem::path& output_dir, const RunConfig& cfg,
                         std::ostream& log);

// 512x512 preprocessing of every .pgm (+ sidecar) under input_dir.
BatchSummary cmd_preprocess(const std::filesystem::path& input_dir,
                            const std::filesystem::path& output_dir, const RunConfig& cfg,
                            std::ostream& log);

int cmd_synth(const RunConfig& cfg, std::ostream& log);

struct TrainOutputs {
    std::filesystem::path artifact;
    std::filesystem::path history;
    std::filesystem::path provenance;
};

TrainOutputs cmd_train(const RunConfig& cfg, std::ostream& log);

enum class EvalSplit { Train, Val, All };

int cmd_evaluate(const std::filesystem::path& artifact_path, const RunConfig& cfg,
                 EvalSplit split, std::ostream& out, std::ostream& log);

int cmd_predict(const std::filesystem::path& artifact_path, const RunConfig& cfg,
                EvalSplit split, std::ostream& out, std::ostream& log);

int cmd_report(const std::vector<std::filesystem::path>& artifact_paths, const RunConfig& cfg,
               std::ostream& out, std::ostream& log);

} // namespace cli
} // namespace mammo
