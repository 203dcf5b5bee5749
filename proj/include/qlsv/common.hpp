#ifndef QLSV_COMMON_HPP
#define QLSV_COMMON_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlsv {

// Argument outside the documented domain of an operation.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Two grid functions with incompatible discretizations.
struct GridMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An iterative numeric procedure failed to converge.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Request that hits an analytic singularity (e.g. second derivative at the
// neutral fixed point).
struct SingularityError : NumericError {
    using NumericError::NumericError;
};

// Density dropped below the configured lower bound; normalized operators
// would divide by ~0.
struct DegenerateDensityError : NumericError {
    using NumericError::NumericError;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Pairwise (tree) summation: deterministic and accurate independent of any
// threading used to fill the input array.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

// FNV-1a, used for config hashes and output checksums in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(s.data(), s.size());
}

// Counter-based RNG: a pure function of (seed, stream, counter).  Distinct
// streams partition the key space, so parallel work items draw independent
// values without shared state.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t rng_u64(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
    std::uint64_t z = mix64(seed ^ mix64(stream));
    return mix64(z ^ mix64(counter ^ 0xD1B54A32D192ED03ull));
}

inline double rng_uniform(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t counter) {
    return static_cast<double>(rng_u64(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Sequential stream view over the counter RNG.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : seed_(seed), stream_(stream) {}
    double uniform() { return rng_uniform(seed_, stream_, counter_++); }
    std::uint64_t next_u64() { return rng_u64(seed_, stream_, counter_++); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace qlsv

#endif
