#include "mammo/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

namespace mammo {
namespace cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + value +
                          "'");
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

const char* model_name(ModelChoice m) {
    switch (m) {
    case ModelChoice::Lr: return "lr";
    case ModelChoice::Svm: return "svm";
    case ModelChoice::Dnn: return "dnn";
    }
    return "?";
}

const char* imbalance_name(ImbalanceMode m) {
    switch (m) {
    case ImbalanceMode::None: return "none";
    case ImbalanceMode::ClassWeights: return "class_weights";
    case ImbalanceMode::Sbs: return "sbs";
    case ImbalanceMode::Undersample: return "undersample";
    case ImbalanceMode::Oversample: return "oversample";
    case ImbalanceMode::Smote: return "smote";
    }
    return "?";
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") {
        seed = parse_u64(key, value);
    } else if (key == "model") {
        if (value == "lr")
            model = ModelChoice::Lr;
        else if (value == "svm")
            model = ModelChoice::Svm;
        else if (value == "dnn")
            model = ModelChoice::Dnn;
        else
            throw ConfigError("model must be lr|svm|dnn, got '" + value + "'");
    } else if (key == "C") {
        C = parse_double(key, value);
    } else if (key == "class_weight_neg") {
        class_weight_neg = parse_double(key, value);
    } else if (key == "class_weight_pos") {
        class_weight_pos = parse_double(key, value);
    } else if (key == "gamma") {
        gamma = parse_double(key, value);
    } else if (key == "c0") {
        c0 = parse_double(key, value);
    } else if (key == "degree") {
        degree = static_cast<int>(parse_u64(key, value));
    } else if (key == "sketch_dim") {
        sketch_dim = parse_u64(key, value);
    } else if (key == "fusion") {
        if (value == "mean")
            fusion = Fusion::Mean;
        else if (value == "mean_sigmoid")
            fusion = Fusion::MeanThenSigmoid;
        else
            throw ConfigError("fusion must be mean|mean_sigmoid, got '" + value + "'");
    } else if (key == "eta") {
        eta = parse_double(key, value);
    } else if (key == "beta1") {
        beta1 = parse_double(key, value);
    } else if (key == "beta2") {
        beta2 = parse_double(key, value);
    } else if (key == "eps") {
        eps = parse_double(key, value);
    } else if (key == "batch_size") {
        batch_size = parse_u64(key, value);
    } else if (key == "max_iters") {
        max_iters = parse_u64(key, value);
    } else if (key == "patience") {
        patience = parse_u64(key, value);
    } else if (key == "min_delta") {
        min_delta = parse_double(key, value);
    } else if (key == "threshold") {
        threshold = parse_double(key, value);
    } else if (key == "imbalance") {
        if (value == "none")
            imbalance = ImbalanceMode::None;
        else if (value == "class_weights")
            imbalance = ImbalanceMode::ClassWeights;
        else if (value == "sbs")
            imbalance = ImbalanceMode::Sbs;
        else if (value == "undersample")
            imbalance = ImbalanceMode::Undersample;
        else if (value == "oversample")
            imbalance = ImbalanceMode::Oversample;
        else if (value == "smote")
            imbalance = ImbalanceMode::Smote;
        else
            throw ConfigError(
                "imbalance must be none|class_weights|sbs|undersample|oversample|smote, got '" +
                value + "'");
    } else if (key == "ratio") {
        ratio = parse_double(key, value);
    } else if (key == "smote_k") {
        smote_k = parse_u64(key, value);
    } else if (key == "smote_n") {
        smote_n = parse_u64(key, value);
    } else if (key == "val_fraction") {
        val_fraction = parse_double(key, value);
    } else if (key == "metadata") {
        metadata_path = value;
    } else if (key == "features") {
        features_path = value;
    } else if (key == "out_dir") {
        out_dir = value;
    } else if (key == "external_decoder") {
        external_decoder = value;
    } else if (key == "synth_n") {
        synth_n = parse_u64(key, value);
    } else if (key == "synth_separation") {
        synth_separation = parse_double(key, value);
    } else if (key == "synth_noise") {
        synth_noise = parse_double(key, value);
    } else if (key == "synth_format") {
        if (value != "binary" && value != "csv")
            throw ConfigError("synth_format must be binary|csv");
        synth_format = value;
    } else if (key == "jobs") {
        jobs = std::max<std::size_t>(1, parse_u64(key, value));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void RunConfig::validate() const {
    if (!seed) throw ConfigError("seed is required; unseeded runs are not reproducible");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("val_fraction must be in (0,1)");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in [0,1]");
    if (imbalance == ImbalanceMode::Sbs) {
        if (model != ModelChoice::Dnn)
            throw ConfigError("imbalance=sbs is defined for the dnn batch trainer only");
        if (class_weight_neg || class_weight_pos)
            throw ConfigError(
                "imbalance=sbs uses the unweighted loss; class_weight_* conflicts with it");
    }
    if ((class_weight_neg || class_weight_pos) && imbalance != ImbalanceMode::ClassWeights)
        throw ConfigError("class_weight_* requires imbalance=class_weights");
    if (imbalance == ImbalanceMode::Undersample || imbalance == ImbalanceMode::Oversample) {
        if (!(ratio > 0.0)) throw ConfigError("ratio must be positive");
    }
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (degree < 1) throw ConfigError("degree must be >= 1");
    if (sketch_dim < 1) throw ConfigError("sketch_dim must be >= 1");
}

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("seed", seed ? std::to_string(*seed) : "");
    kv.emplace_back("model", model_name(model));
    kv.emplace_back("C", fmt(C));
    kv.emplace_back("class_weight_neg", class_weight_neg ? fmt(*class_weight_neg) : "");
    kv.emplace_back("class_weight_pos", class_weight_pos ? fmt(*class_weight_pos) : "");
    kv.emplace_back("gamma", fmt(gamma));
    kv.emplace_back("c0", fmt(c0));
    kv.emplace_back("degree", std::to_string(degree));
    kv.emplace_back("sketch_dim", std::to_string(sketch_dim));
    kv.emplace_back("fusion", fusion == Fusion::Mean ? "mean" : "mean_sigmoid");
    kv.emplace_back("eta", fmt(eta));
    kv.emplace_back("beta1", fmt(beta1));
    kv.emplace_back("beta2", fmt(beta2));
    kv.emplace_back("eps", fmt(eps));
    kv.emplace_back("batch_size", std::to_string(batch_size));
    kv.emplace_back("max_iters", std::to_string(max_iters));
    kv.emplace_back("patience", std::to_string(patience));
    kv.emplace_back("min_delta", fmt(min_delta));
    kv.emplace_back("threshold", fmt(threshold));
    kv.emplace_back("imbalance", imbalance_name(imbalance));
    kv.emplace_back("ratio", fmt(ratio));
    kv.emplace_back("smote_k", std::to_string(smote_k));
    kv.emplace_back("smote_n", std::to_string(smote_n));
    kv.emplace_back("val_fraction", fmt(val_fraction));
    kv.emplace_back("metadata", metadata_path);
    kv.emplace_back("features", features_path);
    kv.emplace_back("out_dir", out_dir);
    kv.emplace_back("external_decoder", external_decoder);
    kv.emplace_back("synth_n", std::to_string(synth_n));
    kv.emplace_back("synth_separation", fmt(synth_separation));
    kv.emplace_back("synth_noise", fmt(synth_noise));
    kv.emplace_back("synth_format", synth_format);
    kv.emplace_back("jobs", std::to_string(jobs));
    return kv;
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string() + " for checksum");
    std::uint64_t h = 14695981039346656037ull;
    char buf[8192];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

} // namespace cli
} // namespace mammo
