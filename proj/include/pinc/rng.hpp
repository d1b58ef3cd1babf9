#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pinc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Seedable random generator with explicitly defined output mappings, so
/// two runs of this implementation produce bit-identical streams.
/// Datasets are portable across implementations in distribution only;
/// the manifest records the algorithm name for auditability.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64/splitmix64-stream";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Derives the stream for one unit of work (e.g. a trajectory index),
    /// so parallel and serial generation yield the same draws.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix64(seed + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1): top 53 bits of the raw draw.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (always consumes two draws).
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is < 2^-53 for the n used here (shuffles of small arrays)
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace pinc
