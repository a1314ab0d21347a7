#include "mammo/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <thread>
#include <unordered_map>

#include "mammo/artifact.hpp"
#include "mammo/dicom.hpp"
#include "mammo/imageops.hpp"
#include "mammo/metrics.hpp"
#include "mammo/pgm.hpp"
#include "mammo/synth.hpp"

namespace fs = std::filesystem;

namespace mammo {
namespace cli {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == extension)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

// Fixed worker pool over an index range; output slots are pre-sized so the
// result order is independent of scheduling.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n == 0 ? 1 : n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : workers) t.join();
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::string decoder_template(const RunConfig& cfg) {
    if (const char* env = std::getenv("MAMMO_EXTERNAL_DECODER"); env && *env) return env;
    return cfg.external_decoder;
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    for (std::size_t pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key))
        tmpl.replace(pos, key.size(), value);
    return tmpl;
}

PixelMatrix decode_via_external(const std::string& tmpl, const fs::path& codestream,
                                const fs::path& decoded) {
    if (tmpl.empty())
        throw ConfigError(
            "encapsulated pixel data needs an external decoder; set external_decoder or "
            "MAMMO_EXTERNAL_DECODER");
    std::string command = substitute(tmpl, "{input}", codestream.string());
    command = substitute(command, "{output}", decoded.string());
    const int rc = std::system(command.c_str());
    if (rc != 0)
        throw ConfigError("external decoder failed (exit " + std::to_string(rc) +
                          "): " + command);
    return read_pgm(decoded);
}

void write_sidecar(const fs::path& path, const dicom::DicomObject& obj) {
    std::ofstream out(path);
    out << "photometric = "
        << (obj.photometric_interpretation == Photometric::Monochrome1 ? "MONOCHROME1"
                                                                       : "MONOCHROME2")
        << "\n";
    out << "rows = " << obj.rows << "\n";
    out << "columns = " << obj.columns << "\n";
    out << "bits_stored = " << obj.bits_stored << "\n";
    out << "transfer_syntax = " << obj.transfer_syntax_uid << "\n";
}

Photometric read_sidecar_photometric(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("missing sidecar " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto strip = [](std::string& s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        };
        strip(key);
        strip(value);
        if (key == "photometric") {
            if (value == "MONOCHROME1") return Photometric::Monochrome1;
            if (value == "MONOCHROME2") return Photometric::Monochrome2;
            throw ConfigError("sidecar photometric '" + value + "'");
        }
    }
    throw ConfigError("sidecar " + path.string() + " lacks photometric");
}

struct FileStatus {
    bool ok = false;
    std::string message;
};

BatchSummary run_batch(const std::vector<fs::path>& files, std::size_t jobs, std::ostream& log,
                       const std::function<void(const fs::path&)>& process) {
    std::vector<FileStatus> status(files.size());
    parallel_for(files.size(), jobs, [&](std::size_t i) {
        try {
            process(files[i]);
            status[i].ok = true;
        } catch (const std::exception& e) {
            status[i].message = e.what();
        }
    });
    BatchSummary summary;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (status[i].ok) {
            ++summary.ok;
            log << "ok " << files[i].filename().string() << "\n";
        } else {
            ++summary.failed;
            log << "fail " << files[i].filename().string() << ": " << status[i].message << "\n";
        }
    }
    log << summary.ok << " ok, " << summary.failed << " failed\n";
    return summary;
}

} // namespace

BatchSummary cmd_convert(const fs::path& input_dir, const fs::path& output_dir,
                         const RunConfig& cfg, std::ostream& log) {
    fs::create_directories(output_dir);
    const std::vector<fs::path> files = list_files(input_dir, ".dcm");
    const std::string tmpl = decoder_template(cfg);

    return run_batch(files, cfg.jobs, log, [&](const fs::path& file) {
        const std::vector<std::uint8_t> bytes = read_file(file);
        const dicom::DicomObject obj = dicom::parse_dicom(bytes);
        const std::string stem = file.stem().string();

        PixelMatrix pixels;
        if (obj.payload_kind == dicom::PayloadKind::Native) {
            pixels = dicom::decode_native_pixels(obj);
        } else {
            const std::vector<std::uint8_t> codestream = dicom::extract_pixel_payload(obj);
            const fs::path cs_path = output_dir / (stem + ".j2k");
            write_file(cs_path, codestream);
            pixels = decode_via_external(tmpl, cs_path, output_dir / (stem + ".dec.pgm"));
        }
        write_pgm(output_dir / (stem + ".pgm"), pixels);
        write_sidecar(output_dir / (stem + ".meta"), obj);
    });
}

BatchSummary cmd_preprocess(const fs::path& input_dir, const fs::path& output_dir,
                            const RunConfig& cfg, std::ostream& log) {
    fs::create_directories(output_dir);
    std::vector<fs::path> files = list_files(input_dir, ".pgm");
    // Intermediate decoder outputs are not pipeline inputs.
    std::erase_if(files, [](const fs::path& p) { return p.stem().extension() == ".dec"; });

    return run_batch(files, cfg.jobs, log, [&](const fs::path& file) {
        const Photometric photometric =
            read_sidecar_photometric(fs::path(file).replace_extension(".meta"));
        const PixelMatrix pixels = read_pgm(file);
        const NormalizedImage processed = preprocess(pixels, photometric);
        write_pgm(output_dir / file.filename(), to_pixels(processed, 16));
    });
}

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    SynthConfig synth;
    synth.n_images = cfg.synth_n;
    synth.separation = cfg.synth_separation;
    synth.noise_sigma = cfg.synth_noise;
    synth.seed = *cfg.seed;
    const SynthData data = generate_synthetic(synth);

    fs::create_directories(cfg.out_dir);
    const fs::path meta_path = fs::path(cfg.out_dir) / "metadata.csv";
    write_metadata_csv(meta_path, data.metadata);
    fs::path feat_path;
    if (cfg.synth_format == "csv") {
        feat_path = fs::path(cfg.out_dir) / "features.csv";
        write_features_csv(feat_path, data.features);
    } else {
        feat_path = fs::path(cfg.out_dir) / "features.mmfv";
        write_features_binary(feat_path, data.features);
    }

    std::size_t n_pos = 0;
    for (const CaseRecord& rec : data.metadata) n_pos += rec.cancer ? 1 : 0;
    log << "wrote " << data.metadata.size() << " images (" << n_pos << " positive) to "
        << meta_path.string() << " and " << feat_path.string() << "\n";
    return kExitOk;
}

namespace {

struct PreparedData {
    std::vector<Example> train;
    std::vector<Example> val;
    AgeStats age_stats;
};

// Assemble, split by patient, then refit age normalization on the training
// side only and reapply it to both sides.
PreparedData prepare_training_data(const RunConfig& cfg) {
    if (cfg.metadata_path.empty() || cfg.features_path.empty())
        throw ConfigError("metadata and features paths are required");
    const std::vector<CaseRecord> meta = load_metadata(cfg.metadata_path);
    const FeatureTable features = load_features(cfg.features_path);

    std::unordered_map<std::string, std::optional<double>> age_by_image;
    age_by_image.reserve(meta.size());
    for (const CaseRecord& rec : meta) age_by_image[rec.image_id] = rec.age;

    AssembledData assembled = assemble_examples(meta, features);
    auto [train, val] = split_by_patient(assembled.examples, cfg.val_fraction, *cfg.seed);

    AgeStats stats{std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
    for (const Example& ex : train) {
        const auto& age = age_by_image.at(ex.image_id);
        if (age) {
            stats.min = std::min(stats.min, *age);
            stats.max = std::max(stats.max, *age);
        }
    }
    if (!(stats.min <= stats.max)) stats = {0.0, 0.0};

    const auto apply = [&](std::vector<Example>& side) {
        for (Example& ex : side) {
            const auto& age = age_by_image.at(ex.image_id);
            double norm = 0.5;
            if (age && stats.max > stats.min)
                norm = std::clamp((*age - stats.min) / (stats.max - stats.min), 0.0, 1.0);
            ex.x[kFeatureDim] = norm;
        }
    };
    apply(train);
    apply(val);
    return {std::move(train), std::move(val), stats};
}

std::vector<Example> apply_imbalance(std::vector<Example> train, const RunConfig& cfg,
                                     LossSpec& weights) {
    weights = {1.0, 1.0};
    const std::uint64_t seed = *cfg.seed + 101;
    switch (cfg.imbalance) {
    case ImbalanceMode::None:
    case ImbalanceMode::Sbs:
        return train;
    case ImbalanceMode::ClassWeights:
        if (cfg.class_weight_neg || cfg.class_weight_pos)
            weights = {cfg.class_weight_neg.value_or(1.0), cfg.class_weight_pos.value_or(1.0)};
        else
            weights = inverse_frequency_weights(train);
        return train;
    case ImbalanceMode::Undersample:
        return random_undersample(train, cfg.ratio, seed);
    case ImbalanceMode::Oversample:
        return random_oversample(train, cfg.ratio, seed);
    case ImbalanceMode::Smote: {
        std::size_t n_new = cfg.smote_n;
        if (n_new == 0) {
            std::size_t n_pos = 0;
            for (const Example& ex : train)
                if (ex.y > 0.5) ++n_pos;
            const std::size_t n_maj = train.size() - n_pos;
            const auto target = static_cast<std::size_t>(
                std::llround(cfg.ratio * static_cast<double>(n_maj)));
            n_new = target > n_pos ? target - n_pos : 0;
        }
        return smote_interpolate(train, cfg.smote_k, n_new, seed);
    }
    }
    return train;
}

struct HistoryRow {
    std::size_t iteration;
    double train_loss;
    std::optional<double> val_loss;
};

void write_history_csv(const fs::path& path, const std::vector<HistoryRow>& rows) {
    std::ofstream out(path);
    out << "iteration,train_loss,val_loss\n";
    for (const HistoryRow& row : rows) {
        out << row.iteration << ',' << fmt_double(row.train_loss) << ',';
        if (row.val_loss) out << fmt_double(*row.val_loss);
        out << "\n";
    }
}

std::vector<HistoryRow> rows_from_history(const TrainHistory& history) {
    std::vector<HistoryRow> rows;
    rows.reserve(history.train_loss.size());
    std::size_t vi = 0;
    for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
        HistoryRow row{i + 1, history.train_loss[i], std::nullopt};
        if (vi < history.val_loss.size() && history.val_loss[vi].first == i + 1)
            row.val_loss = history.val_loss[vi++].second;
        rows.push_back(row);
    }
    return rows;
}

void write_provenance(const fs::path& path, const RunConfig& cfg,
                      const fs::path& artifact_path) {
    std::ofstream out(path);
    out << "# run provenance; re-running train with this configuration reproduces the\n";
    out << "# artifact byte for byte\n";
    for (const auto& [key, value] : cfg.items()) {
        if (value.empty()) continue;
        out << key << " = " << value << "\n";
    }
    out << "metadata_checksum = " << file_checksum(cfg.metadata_path) << "\n";
    out << "features_checksum = " << file_checksum(cfg.features_path) << "\n";
    out << "artifact = " << artifact_path.filename().string() << "\n";
}

} // namespace

TrainOutputs cmd_train(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    PreparedData data = prepare_training_data(cfg);
    LossSpec weights;
    std::vector<Example> train = apply_imbalance(std::move(data.train), cfg, weights);

    ModelArtifact artifact;
    std::vector<HistoryRow> history;

    switch (cfg.model) {
    case ModelChoice::Lr: {
        LrTrainConfig lr_cfg;
        lr_cfg.C = cfg.C;
        lr_cfg.class_weights = weights;
        lr_cfg.stop.max_iters = cfg.max_iters;
        lr_cfg.eta = cfg.eta;
        lr_cfg.beta1 = cfg.beta1;
        lr_cfg.beta2 = cfg.beta2;
        lr_cfg.eps = cfg.eps;
        LrTrainResult result = lr_train(train, lr_cfg);
        artifact = artifact_from(result.model, *cfg.seed);
        history.reserve(result.objective_history.size());
        for (std::size_t i = 0; i < result.objective_history.size(); ++i)
            history.push_back({i + 1, result.objective_history[i], std::nullopt});
        break;
    }
    case ModelChoice::Svm: {
        SvmTrainConfig svm_cfg;
        svm_cfg.C = cfg.C;
        svm_cfg.gamma = cfg.gamma;
        svm_cfg.c0 = cfg.c0;
        svm_cfg.degree = cfg.degree;
        svm_cfg.sketch_dim = cfg.sketch_dim;
        svm_cfg.class_weights = weights;
        svm_cfg.batch_size = cfg.batch_size;
        svm_cfg.max_iters = cfg.max_iters;
        svm_cfg.seed = *cfg.seed;
        SvmTrainResult result = svm_train(train, svm_cfg);
        artifact = artifact_from(result.model, *cfg.seed);
        history.reserve(result.objective_history.size());
        for (std::size_t i = 0; i < result.objective_history.size(); ++i)
            history.push_back({i + 1, result.objective_history[i], std::nullopt});
        break;
    }
    case ModelChoice::Dnn: {
        TwoBranchDNN model = dnn_build(cfg.fusion);
        dnn_init(model, *cfg.seed);
        DnnTrainConfig dnn_cfg;
        dnn_cfg.regime = cfg.imbalance == ImbalanceMode::Sbs ? DnnRegime::StratifiedBatches
                                                             : DnnRegime::WeightedBce;
        dnn_cfg.class_weights = weights;
        dnn_cfg.batch_size = cfg.batch_size;
        dnn_cfg.seed = *cfg.seed;
        dnn_cfg.stop.max_iters = cfg.max_iters;
        dnn_cfg.stop.patience = cfg.patience;
        dnn_cfg.stop.min_delta = cfg.min_delta;
        dnn_cfg.eta = cfg.eta;
        dnn_cfg.beta1 = cfg.beta1;
        dnn_cfg.beta2 = cfg.beta2;
        dnn_cfg.eps = cfg.eps;
        const TrainHistory th = dnn_train(model, train, data.val, dnn_cfg);
        artifact = artifact_from(model, *cfg.seed);
        history = rows_from_history(th);
        break;
    }
    }

    artifact.hyper["age_min"] = data.age_stats.min;
    artifact.hyper["age_max"] = data.age_stats.max;
    artifact.hyper["val_fraction"] = cfg.val_fraction;
    artifact.hyper["split_seed"] = static_cast<double>(*cfg.seed);
    artifact.hyper["threshold"] = cfg.threshold;

    fs::create_directories(cfg.out_dir);
    TrainOutputs outputs;
    const std::string stem = std::string("model_") + model_name(cfg.model);
    outputs.artifact = fs::path(cfg.out_dir) / (stem + ".mmar");
    outputs.history = fs::path(cfg.out_dir) / (stem + "_history.csv");
    outputs.provenance = fs::path(cfg.out_dir) / (stem + "_provenance.txt");
    save_artifact(outputs.artifact, artifact);
    write_history_csv(outputs.history, history);
    write_provenance(outputs.provenance, cfg, outputs.artifact);

    log << "trained " << model_name(cfg.model) << " on " << train.size() << " examples ("
        << data.val.size() << " validation); artifact " << outputs.artifact.string() << "\n";
    return outputs;
}

namespace {

// Reconstructs the exact split an artifact was trained against: stored age
// stats applied to the full assembly, then the stored (seed, fraction)
// patient split.
std::vector<Example> eval_examples(const ModelArtifact& artifact, const RunConfig& cfg,
                                   EvalSplit split) {
    if (cfg.metadata_path.empty() || cfg.features_path.empty())
        throw ConfigError("metadata and features paths are required");
    const std::vector<CaseRecord> meta = load_metadata(cfg.metadata_path);
    const FeatureTable features = load_features(cfg.features_path);
    const AgeStats stats{artifact.hyper_required("age_min"),
                         artifact.hyper_required("age_max")};
    AssembledData assembled = assemble_examples(meta, features, stats);
    if (split == EvalSplit::All) return std::move(assembled.examples);

    auto [train, val] = split_by_patient(
        assembled.examples, artifact.hyper_required("val_fraction"),
        static_cast<std::uint64_t>(artifact.hyper_required("split_seed")));
    return split == EvalSplit::Train ? std::move(train) : std::move(val);
}

Vec predict_all(const AnyModel& model, const std::vector<Example>& examples) {
    Vec probs(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i)
        probs[i] = predict_proba(model, examples[i].x);
    return probs;
}

} // namespace

int cmd_evaluate(const fs::path& artifact_path, const RunConfig& cfg, EvalSplit split,
                 std::ostream& out, std::ostream& log) {
    const ModelArtifact artifact = load_artifact(artifact_path);
    const AnyModel model = model_from_artifact(artifact);
    const std::vector<Example> examples = eval_examples(artifact, cfg, split);
    if (examples.empty()) throw ConfigError("no examples in the requested split");
    const Vec probs = predict_all(model, examples);
    const Vec labels = [&]() {
        Vec y(examples.size());
        for (std::size_t i = 0; i < examples.size(); ++i) y[i] = examples[i].y;
        return y;
    }();
    const EvalReport report = evaluate(probs, labels, cfg.threshold);
    out << compare_reports({{artifact_path.stem().string(), report}});
    log << "evaluated " << examples.size() << " examples\n";
    return kExitOk;
}

int cmd_predict(const fs::path& artifact_path, const RunConfig& cfg, EvalSplit split,
                std::ostream& out, std::ostream& log) {
    const ModelArtifact artifact = load_artifact(artifact_path);
    const AnyModel model = model_from_artifact(artifact);
    const std::vector<Example> examples = eval_examples(artifact, cfg, split);
    out << "image_id,probability\n";
    for (const Example& ex : examples)
        out << ex.image_id << ',' << fmt_double(predict_proba(model, ex.x)) << "\n";
    log << "predicted " << examples.size() << " examples\n";
    return kExitOk;
}

int cmd_report(const std::vector<fs::path>& artifact_paths, const RunConfig& cfg,
               std::ostream& out, std::ostream& log) {
    std::vector<std::pair<std::string, EvalReport>> rows;
    rows.reserve(artifact_paths.size());
    for (const fs::path& path : artifact_paths) {
        const ModelArtifact artifact = load_artifact(path);
        const AnyModel model = model_from_artifact(artifact);
        const std::vector<Example> examples = eval_examples(artifact, cfg, EvalSplit::Val);
        if (examples.empty()) throw ConfigError("no validation examples for " + path.string());
        const Vec probs = predict_all(model, examples);
        Vec labels(examples.size());
        for (std::size_t i = 0; i < examples.size(); ++i) labels[i] = examples[i].y;
        rows.emplace_back(path.stem().string(), evaluate(probs, labels, cfg.threshold));
    }
    out << compare_reports(rows);
    log << "reported " << rows.size() << " model(s)\n";
    return kExitOk;
}

} // namespace cli
} // namespace mammo
