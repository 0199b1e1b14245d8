#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace sbgen {

// FNV-1a, used for vocabulary hashes, config digests and file digests.
inline uint64_t fnv1a64_bytes(const void* data, size_t len,
                              uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t seed = 0xcbf29ce484222325ull) {
    return fnv1a64_bytes(s.data(), s.size(), seed);
}

std::string to_hex(uint64_t v);

// Deterministic RNG wrapper. Distributions are implemented here rather than
// with std::*_distribution so that streams are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_real01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [lo, hi], inclusive.
    int64_t next_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1u;
        return lo + static_cast<int64_t>(engine_() % span);
    }

    // Box-Muller with cached spare.
    double next_normal(double mean = 0.0, double stddev = 1.0);

    // Independent stream derived from a base seed and an index; used for
    // per-sample / per-record seeding so results are order-independent.
    static Rng derive(uint64_t seed, uint64_t stream) {
        uint64_t h = fnv1a64_bytes(&seed, sizeof seed);
        h = fnv1a64_bytes(&stream, sizeof stream, h);
        return Rng(h);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Writes `contents` to `path` via a temp file + rename so readers never see
// a partially written file.
void atomic_write_file(const std::string& path, std::string_view contents);

std::string read_file(const std::string& path);

uint64_t file_digest(const std::string& path);

}  // namespace sbgen
