#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace migplan {

// Malformed or schema-violating input files. CLI maps this to exit code 2.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Infeasible workloads, invalid deployments, planning failures. Exit code 1.
struct PlanningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An action whose preconditions do not hold in the simulated state. Exit code 1.
struct ExecutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent seed streams.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Unbiased uniform draw in [0, n). Hand-rolled so sequences do not depend on
// the standard library's distribution implementation.
inline size_t pick_index(Rng& rng, size_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<size_t>(r % n);
}

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; one sample per call (the second branch is discarded to keep the
// stream position predictable).
inline double normal_sample(Rng& rng, double mu, double sigma) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline double lognormal_sample(Rng& rng, double mu_log, double sigma_log) {
    return std::exp(normal_sample(rng, mu_log, sigma_log));
}

inline uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace migplan
