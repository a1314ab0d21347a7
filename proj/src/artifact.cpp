#include "mammo/artifact.hpp"

#include <cstring>
#include <fstream>

namespace mammo {

namespace {

using Kind = ModelError::Kind;

constexpr char kMagic[4] = {'M', 'M', 'A', 'R'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

struct Cursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (bytes.size() - pos < n)
            throw ModelError(Kind::MalformedArtifact, "artifact truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
        return s;
    }
};

} // namespace

double ModelArtifact::hyper_or(const std::string& name, double fallback) const {
    const auto it = hyper.find(name);
    return it == hyper.end() ? fallback : it->second;
}

double ModelArtifact::hyper_required(const std::string& name) const {
    const auto it = hyper.find(name);
    if (it == hyper.end())
        throw ModelError(Kind::MalformedArtifact, "artifact lacks hyperparameter '" + name + "'");
    return it->second;
}

const std::vector<float>& ModelArtifact::section(const std::string& name) const {
    for (const auto& [n, data] : sections)
        if (n == name) return data;
    throw ModelError(Kind::MalformedArtifact, "artifact lacks section '" + name + "'");
}

std::vector<std::uint8_t> encode_artifact(const ModelArtifact& artifact) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, artifact.format_version);
    put_u32(out, static_cast<std::uint32_t>(artifact.kind));
    put_u64(out, artifact.seed);

    put_u32(out, static_cast<std::uint32_t>(artifact.hyper.size()));
    for (const auto& [name, value] : artifact.hyper) {
        put_string(out, name);
        put_f64(out, value);
    }

    put_u32(out, static_cast<std::uint32_t>(artifact.sections.size()));
    std::uint64_t offset = 0;
    for (const auto& [name, data] : artifact.sections) {
        put_string(out, name);
        put_u64(out, offset);
        put_u64(out, data.size());
        offset += data.size();
    }
    put_u64(out, offset);  // total float count, marks the weights base
    for (const auto& [name, data] : artifact.sections) {
        (void)name;
        for (float f : data) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }
    }
    return out;
}

ModelArtifact decode_artifact(std::span<const std::uint8_t> bytes) {
    Cursor c{bytes};
    c.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ModelError(Kind::MalformedArtifact, "bad magic");
    c.pos = 4;

    ModelArtifact artifact;
    artifact.format_version = c.u32();
    if (artifact.format_version != kArtifactVersion)
        throw ModelError(Kind::ArtifactVersionMismatch,
                         "artifact format_version " + std::to_string(artifact.format_version) +
                             ", this build reads " + std::to_string(kArtifactVersion));
    const std::uint32_t kind = c.u32();
    if (kind < 1 || kind > 3)
        throw ModelError(Kind::MalformedArtifact, "unknown model kind " + std::to_string(kind));
    artifact.kind = static_cast<ModelKind>(kind);
    artifact.seed = c.u64();

    const std::uint32_t n_hyper = c.u32();
    for (std::uint32_t i = 0; i < n_hyper; ++i) {
        std::string name = c.str();
        artifact.hyper[name] = c.f64();
    }

    const std::uint32_t n_sections = c.u32();
    std::vector<std::pair<std::string, std::pair<std::uint64_t, std::uint64_t>>> index;
    index.reserve(n_sections);
    for (std::uint32_t i = 0; i < n_sections; ++i) {
        std::string name = c.str();
        const std::uint64_t offset = c.u64();
        const std::uint64_t count = c.u64();
        index.emplace_back(std::move(name), std::make_pair(offset, count));
    }
    const std::uint64_t total = c.u64();
    c.need(total * 4);
    const std::size_t base = c.pos;
    for (auto& [name, range] : index) {
        const auto [offset, count] = range;
        if (offset + count > total)
            throw ModelError(Kind::MalformedArtifact, "section '" + name + "' out of range");
        std::vector<float> data(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            const std::size_t p = base + (offset + i) * 4;
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(bytes[p + static_cast<std::size_t>(b)])
                        << (8 * b);
            float f;
            std::memcpy(&f, &bits, 4);
            data[i] = f;
        }
        artifact.sections.emplace_back(std::move(name), std::move(data));
    }
    return artifact;
}

void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact) {
    const std::vector<std::uint8_t> bytes = encode_artifact(artifact);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ModelError(Kind::MalformedArtifact, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ModelError(Kind::MalformedArtifact, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_artifact(bytes);
}

namespace {

std::vector<float> to_f32(std::span<const double> v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

Vec to_f64(std::span<const float> v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
    return out;
}

} // namespace

ModelArtifact artifact_from(const LogisticModel& model, std::uint64_t seed) {
    ModelArtifact a;
    a.kind = ModelKind::Logistic;
    a.seed = seed;
    a.hyper["C"] = model.C;
    a.hyper["class_weight_neg"] = model.class_weights.w_neg;
    a.hyper["class_weight_pos"] = model.class_weights.w_pos;
    a.hyper["input_dim"] = static_cast<double>(model.w.size());
    a.sections.emplace_back("w", to_f32(model.w));
    a.sections.emplace_back("w0", std::vector<float>{static_cast<float>(model.w0)});
    return a;
}

ModelArtifact artifact_from(const SketchSVM& model, std::uint64_t seed) {
    ModelArtifact a;
    a.kind = ModelKind::SketchSvm;
    a.seed = seed;
    a.hyper["gamma"] = model.sketch.gamma;
    a.hyper["c0"] = model.sketch.c0;
    a.hyper["degree"] = static_cast<double>(model.sketch.degree);
    a.hyper["sketch_dim"] = static_cast<double>(model.sketch.dim);
    a.hyper["input_dim"] = static_cast<double>(model.sketch.input_dim);
    a.hyper["sketch_seed"] = static_cast<double>(model.sketch.seed);
    a.hyper["lambda"] = model.lambda;
    a.hyper["calib_a"] = model.calib_a;
    a.hyper["calib_c"] = model.calib_c;
    a.sections.emplace_back("w", to_f32(model.w));
    a.sections.emplace_back("b", std::vector<float>{static_cast<float>(model.b)});
    return a;
}

ModelArtifact artifact_from(const TwoBranchDNN& model, std::uint64_t seed) {
    ModelArtifact a;
    a.kind = ModelKind::TwoBranchDnn;
    a.seed = seed;
    a.hyper["fusion"] = model.fusion == Fusion::MeanThenSigmoid ? 1.0 : 0.0;
    a.hyper["image_dim"] = static_cast<double>(model.image_dim());
    const auto dump = [&a](const char* prefix, const Network& net) {
        for (std::size_t l = 0; l < net.size(); ++l) {
            const std::string stem = std::string(prefix) + std::to_string(l);
            a.sections.emplace_back(stem + ".W", to_f32(net[l].W.data));
            a.sections.emplace_back(stem + ".b", to_f32(net[l].b));
        }
    };
    dump("img", model.image_branch);
    dump("meta", model.meta_branch);
    return a;
}

AnyModel model_from_artifact(const ModelArtifact& artifact) {
    switch (artifact.kind) {
    case ModelKind::Logistic: {
        LogisticModel model;
        model.w = to_f64(artifact.section("w"));
        model.w0 = artifact.section("w0").at(0);
        model.C = artifact.hyper_or("C", 1.0);
        model.class_weights = {artifact.hyper_or("class_weight_neg", 1.0),
                               artifact.hyper_or("class_weight_pos", 1.0)};
        return model;
    }
    case ModelKind::SketchSvm: {
        SketchSVM model;
        model.sketch = sketch_fit(
            artifact.hyper_required("gamma"), artifact.hyper_required("c0"),
            static_cast<int>(artifact.hyper_required("degree")),
            static_cast<std::size_t>(artifact.hyper_required("sketch_dim")),
            static_cast<std::uint64_t>(artifact.hyper_required("sketch_seed")),
            static_cast<std::size_t>(artifact.hyper_required("input_dim")));
        model.w = to_f64(artifact.section("w"));
        model.b = artifact.section("b").at(0);
        model.lambda = artifact.hyper_or("lambda", 0.0);
        model.calib_a = artifact.hyper_required("calib_a");
        model.calib_c = artifact.hyper_required("calib_c");
        if (model.w.size() != model.sketch.dim)
            throw ModelError(Kind::MalformedArtifact, "svm weight width vs sketch_dim");
        return model;
    }
    case ModelKind::TwoBranchDnn: {
        TwoBranchDNN model = dnn_build(
            artifact.hyper_or("fusion", 0.0) > 0.5 ? Fusion::MeanThenSigmoid : Fusion::Mean,
            static_cast<std::size_t>(artifact.hyper_required("image_dim")));
        const auto fill = [&artifact](const char* prefix, Network& net) {
            for (std::size_t l = 0; l < net.size(); ++l) {
                const std::string stem = std::string(prefix) + std::to_string(l);
                const auto& w = artifact.section(stem + ".W");
                const auto& b = artifact.section(stem + ".b");
                if (w.size() != net[l].W.data.size() || b.size() != net[l].b.size())
                    throw ModelError(Kind::MalformedArtifact, "layer shape in " + stem);
                net[l].W.data = to_f64(w);
                net[l].b = to_f64(b);
            }
        };
        fill("img", model.image_branch);
        fill("meta", model.meta_branch);
        return model;
    }
    }
    throw ModelError(Kind::MalformedArtifact, "unreachable model kind");
}

double predict_proba(const AnyModel& model, std::span<const double> x) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticModel>)
                return lr_predict_proba(m, x);
            else if constexpr (std::is_same_v<T, SketchSVM>)
                return svm_predict_proba(m, x);
            else
                return dnn_predict(m, x);
        },
        model);
}

} // namespace mammo
