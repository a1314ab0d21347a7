#include "mammo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mammo {

namespace {

using Kind = DatasetError::Kind;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DatasetError(Kind::MalformedFeatureFile, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

[[noreturn]] void bad_value(std::size_t row, const std::string& column,
                            const std::string& value) {
    throw DatasetError(Kind::BadValue, "row " + std::to_string(row) + ", column '" + column +
                                           "': '" + value + "'");
}

double parse_real(const std::string& s, std::size_t row, const std::string& column) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(s, &consumed);
        if (consumed != s.size()) bad_value(row, column, s);
        return v;
    } catch (const std::logic_error&) {
        bad_value(row, column, s);
    }
}

bool parse_binary(const std::string& s, std::size_t row, const std::string& column) {
    if (s == "0") return false;
    if (s == "1") return true;
    bad_value(row, column, s);
}

} // namespace

std::vector<CaseRecord> load_metadata(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw DatasetError(Kind::MissingColumn, "empty metadata file");

    const std::vector<std::string> header = split_csv_line(lines[0]);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* name :
         {"patient_id", "image_id", "laterality", "view", "age", "implant", "cancer"}) {
        if (!col.count(name))
            throw DatasetError(Kind::MissingColumn, std::string("metadata lacks '") + name + "'");
    }

    std::vector<CaseRecord> records;
    records.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::vector<std::string> fields = split_csv_line(lines[r]);
        if (fields.size() < header.size())
            throw DatasetError(Kind::BadValue,
                               "row " + std::to_string(r) + " has " +
                                   std::to_string(fields.size()) + " fields, header has " +
                                   std::to_string(header.size()));
        CaseRecord rec;
        rec.patient_id = fields[col["patient_id"]];
        rec.image_id = fields[col["image_id"]];
        if (rec.patient_id.empty()) bad_value(r, "patient_id", "");
        if (rec.image_id.empty()) bad_value(r, "image_id", "");

        const std::string& lat = fields[col["laterality"]];
        if (lat == "L")
            rec.laterality = Laterality::L;
        else if (lat == "R")
            rec.laterality = Laterality::R;
        else
            bad_value(r, "laterality", lat);

        const std::string& view = fields[col["view"]];
        if (view == "MLO")
            rec.view = View::MLO;
        else if (view == "CC")
            rec.view = View::CC;
        else
            bad_value(r, "view", view);

        const std::string& age = fields[col["age"]];
        if (!age.empty()) {
            const double years = parse_real(age, r, "age");
            if (years <= 0.0 || years >= 130.0) bad_value(r, "age", age);
            rec.age = years;
        }
        rec.implant = parse_binary(fields[col["implant"]], r, "implant");
        rec.cancer = parse_binary(fields[col["cancer"]], r, "cancer");
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

constexpr char kFeatureMagic[4] = {'M', 'M', 'F', 'V'};

FeatureTable load_features_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw DatasetError(Kind::MissingColumn, "empty feature file");
    const std::vector<std::string> header = split_csv_line(lines[0]);
    if (header.empty() || header[0] != "image_id")
        throw DatasetError(Kind::MissingColumn, "feature CSV must start with 'image_id'");
    if (header.size() != kFeatureDim + 1)
        throw DatasetError(Kind::WidthMismatch,
                           "feature CSV header has " + std::to_string(header.size() - 1) +
                               " feature columns, expected " + std::to_string(kFeatureDim));

    FeatureTable table;
    std::set<std::string> ids;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::vector<std::string> fields = split_csv_line(lines[r]);
        if (fields.size() != kFeatureDim + 1)
            throw DatasetError(Kind::WidthMismatch,
                               "image_id '" + (fields.empty() ? "" : fields[0]) + "' has " +
                                   std::to_string(fields.size() - 1) + " features");
        FeatureRow row;
        row.image_id = fields[0];
        if (!ids.insert(row.image_id).second)
            throw DatasetError(Kind::DuplicateImageId, row.image_id);
        row.features.reserve(kFeatureDim);
        for (std::size_t i = 1; i < fields.size(); ++i)
            row.features.push_back(
                static_cast<float>(parse_real(fields[i], r, "f" + std::to_string(i - 1))));
        table.rows.push_back(std::move(row));
    }
    return table;
}

FeatureTable load_features_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError(Kind::MalformedFeatureFile, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    const auto need = [&](std::size_t n) {
        if (bytes.size() - pos < n)
            throw DatasetError(Kind::MalformedFeatureFile, "truncated feature file");
    };
    const auto u32 = [&]() {
        need(4);
        const std::uint32_t v = static_cast<std::uint32_t>(bytes[pos]) |
                                (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                                (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                                (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
        pos += 4;
        return v;
    };
    need(4);
    if (std::memcmp(bytes.data(), kFeatureMagic, 4) != 0)
        throw DatasetError(Kind::MalformedFeatureFile, "bad magic");
    pos += 4;
    const std::uint32_t count = u32();

    FeatureTable table;
    table.rows.reserve(count);
    std::set<std::string> ids;
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint32_t id_len = u32();
        need(id_len);
        FeatureRow row;
        row.image_id.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                            bytes.begin() + static_cast<std::ptrdiff_t>(pos + id_len));
        pos += id_len;
        if (!ids.insert(row.image_id).second)
            throw DatasetError(Kind::DuplicateImageId, row.image_id);
        need(kFeatureDim * 4);
        row.features.resize(kFeatureDim);
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            std::uint32_t bits = static_cast<std::uint32_t>(bytes[pos]) |
                                 (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                                 (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                                 (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
            pos += 4;
            float f;
            std::memcpy(&f, &bits, 4);
            row.features[i] = f;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace

FeatureTable load_features(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DatasetError(Kind::MalformedFeatureFile, "cannot open " + path.string());
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, kFeatureMagic, 4) == 0) return load_features_binary(path);
    return load_features_csv(path);
}

void write_features_csv(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream out(path);
    out << "image_id";
    for (std::size_t i = 0; i < kFeatureDim; ++i) out << ",f" << i;
    out << "\n";
    out.precision(9);
    for (const FeatureRow& row : table.rows) {
        out << row.image_id;
        for (float f : row.features) out << ',' << f;
        out << "\n";
    }
}

void write_features_binary(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream out(path, std::ios::binary);
    const auto put_u32 = [&](std::uint32_t v) {
        const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                           static_cast<char>((v >> 16) & 0xFF),
                           static_cast<char>((v >> 24) & 0xFF)};
        out.write(b, 4);
    };
    out.write(kFeatureMagic, 4);
    put_u32(static_cast<std::uint32_t>(table.rows.size()));
    for (const FeatureRow& row : table.rows) {
        put_u32(static_cast<std::uint32_t>(row.image_id.size()));
        out.write(row.image_id.data(), static_cast<std::streamsize>(row.image_id.size()));
        for (float f : row.features) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(bits);
        }
    }
}

AssembledData assemble_examples(const std::vector<CaseRecord>& meta, const FeatureTable& features,
                                std::optional<AgeStats> age_stats) {
    std::unordered_map<std::string, const CaseRecord*> by_image;
    by_image.reserve(meta.size());
    for (const CaseRecord& rec : meta) by_image[rec.image_id] = &rec;

    AgeStats stats;
    if (age_stats) {
        stats = *age_stats;
    } else {
        stats.min = std::numeric_limits<double>::infinity();
        stats.max = -std::numeric_limits<double>::infinity();
        for (const CaseRecord& rec : meta) {
            if (rec.age) {
                stats.min = std::min(stats.min, *rec.age);
                stats.max = std::max(stats.max, *rec.age);
            }
        }
        if (!(stats.min <= stats.max)) stats = {0.0, 0.0};  // no ages present
    }

    AssembledData out;
    out.age_stats = stats;
    out.examples.reserve(features.rows.size());
    for (const FeatureRow& row : features.rows) {
        const auto it = by_image.find(row.image_id);
        if (it == by_image.end())
            throw DatasetError(Kind::UnmatchedImageId,
                               "feature row '" + row.image_id + "' has no metadata");
        const CaseRecord& rec = *it->second;
        Example ex;
        ex.x.resize(kExampleDim);
        for (std::size_t i = 0; i < kFeatureDim; ++i) ex.x[i] = row.features[i];
        double age_norm = 0.5;  // imputation for absent age, and the degenerate-stats value
        if (rec.age && stats.max > stats.min)
            age_norm = std::clamp((*rec.age - stats.min) / (stats.max - stats.min), 0.0, 1.0);
        ex.x[kFeatureDim] = age_norm;
        ex.x[kFeatureDim + 1] = rec.implant ? 1.0 : 0.0;
        ex.y = rec.cancer ? 1.0 : 0.0;
        ex.patient_id = rec.patient_id;
        ex.image_id = rec.image_id;
        out.examples.push_back(std::move(ex));
    }
    return out;
}

std::pair<std::vector<Example>, std::vector<Example>> split_by_patient(
    const std::vector<Example>& examples, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw DatasetError(Kind::BadRatio,
                           "val_fraction must be in (0,1), got " + std::to_string(val_fraction));

    // Patient order must not depend on the examples' ordering hash-wise;
    // a sorted map keeps the split a pure function of (data, seed).
    std::map<std::string, bool> patient_positive;
    for (const Example& ex : examples) patient_positive[ex.patient_id] |= ex.y > 0.5;
    const std::size_t n_patients = patient_positive.size();
    if (n_patients < 2)
        throw DatasetError(Kind::TooFewPatients,
                           std::to_string(n_patients) + " patient(s); need at least 2");

    std::vector<std::string> positives, negatives;
    for (const auto& [pid, pos] : patient_positive) (pos ? positives : negatives).push_back(pid);

    Rng rng(seed);
    rng.shuffle(positives);
    rng.shuffle(negatives);

    const std::size_t target = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n_patients))),
        1, n_patients - 1);

    // Allocate the validation quota across the two strata by largest
    // remainder so the positive-patient fraction tracks the global one.
    const double share_pos = val_fraction * static_cast<double>(positives.size());
    const double share_neg = val_fraction * static_cast<double>(negatives.size());
    std::size_t take_pos = std::min(positives.size(), static_cast<std::size_t>(share_pos));
    std::size_t take_neg = std::min(negatives.size(), static_cast<std::size_t>(share_neg));
    while (take_pos + take_neg < target) {
        const double rem_pos =
            positives.size() > take_pos ? share_pos - static_cast<double>(take_pos) : -1.0;
        const double rem_neg =
            negatives.size() > take_neg ? share_neg - static_cast<double>(take_neg) : -1.0;
        if (rem_neg >= rem_pos && take_neg < negatives.size())
            ++take_neg;
        else if (take_pos < positives.size())
            ++take_pos;
        else
            break;
    }
    while (take_pos + take_neg > target) {
        if (take_neg > 0 && (share_neg - static_cast<double>(take_neg) <
                             share_pos - static_cast<double>(take_pos) || take_pos == 0))
            --take_neg;
        else
            --take_pos;
    }

    std::set<std::string> val_patients;
    for (std::size_t i = 0; i < take_pos; ++i) val_patients.insert(positives[i]);
    for (std::size_t i = 0; i < take_neg; ++i) val_patients.insert(negatives[i]);

    std::vector<Example> train, val;
    for (const Example& ex : examples)
        (val_patients.count(ex.patient_id) ? val : train).push_back(ex);
    return {std::move(train), std::move(val)};
}

std::pair<std::size_t, std::size_t> sbs_quotas(std::size_t n_neg, std::size_t n_pos,
                                               std::size_t batch_size) {
    if (n_neg == 0 || n_pos == 0)
        throw DatasetError(Kind::SingleClassDataset, "both classes must be present");
    const std::size_t total = n_neg + n_pos;
    if (batch_size < 2)
        throw DatasetError(Kind::BadRatio, "batch_size must be at least 2");
    if (batch_size > total) batch_size = total;

    const double share_neg =
        static_cast<double>(batch_size) * static_cast<double>(n_neg) / static_cast<double>(total);
    const double share_pos =
        static_cast<double>(batch_size) * static_cast<double>(n_pos) / static_cast<double>(total);
    std::size_t q_neg = std::max<std::size_t>(1, static_cast<std::size_t>(share_neg));
    std::size_t q_pos = std::max<std::size_t>(1, static_cast<std::size_t>(share_pos));
    while (q_neg + q_pos < batch_size) {
        const double rem_neg = share_neg - static_cast<double>(q_neg);
        const double rem_pos = share_pos - static_cast<double>(q_pos);
        if (rem_neg >= rem_pos)
            ++q_neg;
        else
            ++q_pos;
    }
    while (q_neg + q_pos > batch_size) {
        if (q_neg >= q_pos && q_neg > 1)
            --q_neg;
        else if (q_pos > 1)
            --q_pos;
        else
            --q_neg;
    }
    return {q_neg, q_pos};
}

StratifiedBatchSampler::StratifiedBatchSampler(std::vector<std::uint8_t> labels,
                                               std::size_t batch_size, std::uint64_t seed)
    : rng_(seed) {
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] ? pos_pool_ : neg_pool_).push_back(i);
    const auto [q_neg, q_pos] = sbs_quotas(neg_pool_.size(), pos_pool_.size(), batch_size);
    quota_neg_ = q_neg;
    quota_pos_ = q_pos;
    rng_.shuffle(neg_pool_);
    rng_.shuffle(pos_pool_);
}

std::size_t StratifiedBatchSampler::draw(std::vector<std::size_t>& pool, std::size_t& cursor) {
    if (cursor == pool.size()) {
        rng_.shuffle(pool);
        cursor = 0;
    }
    return pool[cursor++];
}

std::vector<std::size_t> StratifiedBatchSampler::next_batch() {
    std::vector<std::size_t> batch;
    batch.reserve(quota_neg_ + quota_pos_);
    for (std::size_t i = 0; i < quota_neg_; ++i) batch.push_back(draw(neg_pool_, neg_cursor_));
    for (std::size_t i = 0; i < quota_pos_; ++i) batch.push_back(draw(pos_pool_, pos_cursor_));
    return batch;
}

std::vector<std::uint8_t> labels_of(const std::vector<Example>& examples) {
    std::vector<std::uint8_t> labels(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) labels[i] = examples[i].y > 0.5 ? 1 : 0;
    return labels;
}

namespace {

struct ClassSplit {
    std::vector<std::size_t> minority;
    std::vector<std::size_t> majority;
    bool minority_is_positive = true;
};

ClassSplit split_classes(const std::vector<Example>& examples) {
    ClassSplit s;
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < examples.size(); ++i)
        (examples[i].y > 0.5 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw DatasetError(Kind::SingleClassDataset, "both classes must be present");
    s.minority_is_positive = pos.size() <= neg.size();
    s.minority = s.minority_is_positive ? std::move(pos) : std::move(neg);
    s.majority = s.minority_is_positive ? std::move(neg) : std::move(pos);
    return s;
}

void check_ratio(double ratio) {
    if (!(ratio > 0.0))
        throw DatasetError(Kind::BadRatio, "ratio must be positive, got " + std::to_string(ratio));
}

} // namespace

std::vector<Example> random_undersample(const std::vector<Example>& examples, double ratio,
                                        std::uint64_t seed) {
    check_ratio(ratio);
    ClassSplit s = split_classes(examples);
    const std::size_t target = std::min(
        s.majority.size(),
        static_cast<std::size_t>(
            std::llround(static_cast<double>(s.minority.size()) / ratio)));

    Rng rng(seed);
    rng.shuffle(s.majority);
    s.majority.resize(std::max<std::size_t>(1, target));

    std::vector<std::uint8_t> keep(examples.size(), 0);
    for (std::size_t i : s.minority) keep[i] = 1;
    for (std::size_t i : s.majority) keep[i] = 1;
    std::vector<Example> out;
    out.reserve(s.minority.size() + s.majority.size());
    for (std::size_t i = 0; i < examples.size(); ++i)
        if (keep[i]) out.push_back(examples[i]);
    return out;
}

std::vector<Example> random_oversample(const std::vector<Example>& examples, double ratio,
                                       std::uint64_t seed) {
    check_ratio(ratio);
    const ClassSplit s = split_classes(examples);
    const std::size_t target = std::max(
        s.minority.size(),
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(s.majority.size()))));

    Rng rng(seed);
    std::vector<Example> out = examples;
    for (std::size_t i = s.minority.size(); i < target; ++i)
        out.push_back(examples[s.minority[rng.uniform_index(s.minority.size())]]);
    return out;
}

std::vector<Example> smote_interpolate(const std::vector<Example>& examples, std::size_t k,
                                       std::size_t n_new, std::uint64_t seed) {
    const ClassSplit s = split_classes(examples);
    const std::vector<std::size_t>& minority =
        s.minority_is_positive ? s.minority : s.majority;
    if (minority.size() <= k)
        throw DatasetError(Kind::TooFewMinority,
                           std::to_string(minority.size()) + " minority examples, need > k = " +
                               std::to_string(k));

    // k nearest minority neighbors per minority point, Euclidean, brute force.
    const std::size_t m = minority.size();
    std::vector<std::vector<std::size_t>> neighbors(m);
    for (std::size_t a = 0; a < m; ++a) {
        std::vector<std::pair<double, std::size_t>> dists;
        dists.reserve(m - 1);
        const auto& xa = examples[minority[a]].x;
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a) continue;
            const auto& xb = examples[minority[b]].x;
            double d2 = 0.0;
            for (std::size_t j = 0; j < xa.size(); ++j) {
                const double d = xa[j] - xb[j];
                d2 += d * d;
            }
            dists.emplace_back(d2, b);
        }
        std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k),
                          dists.end());
        neighbors[a].reserve(k);
        for (std::size_t j = 0; j < k; ++j) neighbors[a].push_back(dists[j].second);
    }

    Rng rng(seed);
    std::vector<Example> out = examples;
    out.reserve(examples.size() + n_new);
    for (std::size_t i = 0; i < n_new; ++i) {
        const std::size_t a = rng.uniform_index(m);
        const std::size_t b = neighbors[a][rng.uniform_index(k)];
        const double u = rng.uniform();
        const Example& ea = examples[minority[a]];
        const Example& eb = examples[minority[b]];
        Example synth;
        synth.x.resize(kExampleDim);
        for (std::size_t j = 0; j < kExampleDim; ++j)
            synth.x[j] = ea.x[j] + u * (eb.x[j] - ea.x[j]);
        synth.x[kFeatureDim + 1] = synth.x[kFeatureDim + 1] >= 0.5 ? 1.0 : 0.0;
        synth.y = 1.0;
        synth.patient_id = ea.patient_id;
        synth.image_id = ea.image_id + "#synth" + std::to_string(i);
        out.push_back(std::move(synth));
    }
    return out;
}

} // namespace mammo
