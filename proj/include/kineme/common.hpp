#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kineme {

// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 2, DataError -> 3, ProtocolError -> 4, anything else -> 5.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed/unsupported input files, insufficient data, checksum failures.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation protocol violations (e.g. overlapping train/test corpora).
struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal contracts; reaching one of these is a bug in the caller.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Wrap an angle into [0, 360). Idempotent.
double wrap_degrees(double x);

constexpr double kDegreesPerRadian = 57.29577951308232;

// Deterministic RNG used throughout. std:: distributions are implementation
// defined, so uniform/normal draws are generated here from raw mt19937_64
// output and behave identically on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed_sequence(seed)), have_spare_(false), spare_(0.0) {}

    std::uint64_t next_u64();
    // uniform in [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    // standard normal, Box-Muller
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n);
    // in-place Fisher-Yates shuffle of indices
    void shuffle(std::vector<int>& v);

private:
    static std::uint64_t seed_sequence(std::uint64_t seed);
    std::uint64_t state_;
    bool have_spare_;
    double spare_;
};

// SplitMix-style mixing for deriving independent child seeds from a master
// seed, e.g. per (repetition, fold) or per tree.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// FNV-1a over a byte range; used for container checksums and fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ull);

// Run fn(i) for i in [0, n) on up to `jobs` threads (jobs <= 0 means all
// hardware threads). Work items must be independent; results keyed by index
// stay deterministic regardless of thread count.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double value);

}  // namespace kineme
