#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace mammo {

// Seeded RNG wrapper. The mt19937_64 engine output is specified by the
// standard, but the standard *distributions* are not; every draw here is
// implemented on top of raw engine output so that a given seed produces the
// same sequence on every platform. Frozen test values depend on this.
class Rng {
public:
    // mt19937_64 seeded from a single small word has visibly correlated
    // early outputs; expand the seed through SplitMix64 first.
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        const auto next = [&s]() {
            s += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            return z ^ (z >> 31);
        };
        std::uint32_t words[8];
        for (auto& w : words) w = static_cast<std::uint32_t>(next() >> 16);
        std::seed_seq seq(words, words + 8);
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, bound). Rejection-free modulo is fine here: bound is
    // tiny relative to 2^64, the bias is unmeasurable for sampling work.
    std::uint64_t uniform_index(std::uint64_t bound) {
        return bound == 0 ? 0 : engine_() % bound;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Marsaglia polar; second value cached.
    double gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Derive an independent stream, e.g. one per sketch hash function.
    Rng fork() { return Rng(next_u64() ^ 0x9e3779b97f4a7c15ull); }

private:
    // mt19937_64 seeded from a single small word has visibly correlated
    // early outputs; expand the seed through SplitMix64 first.
    static std::seed_seq expand_seed(std::uint64_t seed) {
        std::uint64_t s = seed;
        const auto next = [&s]() {
            s += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            return z ^ (z >> 31);
        };
        std::uint32_t words[8];
        for (auto& w : words) w = static_cast<std::uint32_t>(next() >> 16);
        return std::seed_seq(words, words + 8);
    }

    explicit Rng(std::seed_seq&& seq) : engine_(seq) {}

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mammo
