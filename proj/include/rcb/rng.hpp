#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rcb {

// 64-bit FNV-1a over raw bytes. Used for config and artifact fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

std::uint64_t splitmix64(std::uint64_t x);

// Named sub-seed derivation. A master seed fans out into independent streams
// ("data", "init", "rollout", ...) so that runs sharing a master seed also
// share the per-stage randomness they are supposed to share.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index);

// mt19937_64 with explicit sampling transforms. The std::* distributions are
// implementation-defined, so every draw in the project goes through these
// helpers to keep generated data portable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // [0,1)
    double uniform();
    double uniform(double lo, double hi);
    // inclusive bounds
    int uniform_int(int lo, int hi);
    // Box-Muller with a cached spare
    double normal();
    double normal(double mean, double stddev);
    double lognormal(double log_loc, double log_scale);
    bool bernoulli(double p);
    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rcb
