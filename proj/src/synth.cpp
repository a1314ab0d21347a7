#include "mammo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mammo/rng.hpp"

namespace mammo {

std::size_t synth_positive_count(const SynthConfig& cfg) {
    return static_cast<std::size_t>(static_cast<double>(cfg.n_images) * cfg.pos_fraction);
}

SynthData generate_synthetic(const SynthConfig& cfg) {
    Rng rng(cfg.seed);

    // Positive cluster center: `separation` along a random unit direction.
    std::vector<double> direction(kFeatureDim);
    double norm2 = 0.0;
    for (double& d : direction) {
        d = rng.gauss();
        norm2 += d * d;
    }
    const double scale = cfg.separation / std::sqrt(norm2);
    for (double& d : direction) d *= scale;

    const std::size_t n_pos = std::min(synth_positive_count(cfg), cfg.n_images);
    const std::size_t per_patient = std::max<std::size_t>(1, cfg.images_per_patient);

    SynthData data;
    data.metadata.reserve(cfg.n_images);
    data.features.rows.reserve(cfg.n_images);

    std::size_t patient_counter = 0;
    std::size_t image_counter = 0;

    const auto emit_patient = [&](bool cancer, std::size_t n_images_this_patient) {
        char pid[16];
        std::snprintf(pid, sizeof pid, "p%05zu", ++patient_counter);

        // Metadata signal scales with separation; at 0 the classes share one
        // distribution and the corpus is pure noise.
        const double age_mean = cancer ? 55.0 + 10.0 * cfg.separation
                                       : 55.0 - 5.0 * cfg.separation;
        const double implant_p =
            cancer ? std::clamp(0.08 + 0.30 * cfg.separation, 0.0, 0.9) : 0.08;
        const double age = std::clamp(std::round(age_mean + 6.0 * rng.gauss()), 20.0, 100.0);
        const bool age_missing = rng.uniform() < cfg.missing_age_fraction;
        const bool implant = rng.bernoulli(implant_p);

        for (std::size_t k = 0; k < n_images_this_patient; ++k) {
            char iid[16];
            std::snprintf(iid, sizeof iid, "i%06zu", ++image_counter);

            CaseRecord rec;
            rec.patient_id = pid;
            rec.image_id = iid;
            rec.laterality = (k % 4) < 2 ? Laterality::L : Laterality::R;
            rec.view = (k % 2) == 0 ? View::MLO : View::CC;
            if (!age_missing) rec.age = age;
            rec.implant = implant;
            rec.cancer = cancer;
            data.metadata.push_back(std::move(rec));

            FeatureRow row;
            row.image_id = iid;
            row.features.resize(kFeatureDim);
            for (std::size_t j = 0; j < kFeatureDim; ++j) {
                const double mean = cancer ? direction[j] : 0.0;
                row.features[j] = static_cast<float>(mean + cfg.noise_sigma * rng.gauss());
            }
            data.features.rows.push_back(std::move(row));
        }
    };

    const auto emit_class = [&](bool cancer, std::size_t n_images_total) {
        std::size_t remaining = n_images_total;
        while (remaining > 0) {
            const std::size_t take = std::min(per_patient, remaining);
            emit_patient(cancer, take);
            remaining -= take;
        }
    };

    emit_class(true, n_pos);
    emit_class(false, cfg.n_images - n_pos);
    return data;
}

void write_metadata_csv(const std::filesystem::path& path,
                        const std::vector<CaseRecord>& records) {
    std::ofstream out(path);
    out << "patient_id,image_id,laterality,view,age,implant,cancer\n";
    for (const CaseRecord& rec : records) {
        out << rec.patient_id << ',' << rec.image_id << ','
            << (rec.laterality == Laterality::L ? 'L' : 'R') << ','
            << (rec.view == View::MLO ? "MLO" : "CC") << ',';
        if (rec.age) out << *rec.age;
        out << ',' << (rec.implant ? 1 : 0) << ',' << (rec.cancer ? 1 : 0) << "\n";
    }
}

} // namespace mammo
