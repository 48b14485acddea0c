#pragma once

#include <cstdint>
#include <cstring>
#include <random>

#include <Eigen/Core>

namespace sasgen::core {

inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic child seed for a named stream of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    return splitmix64(s);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull)
{
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; i++) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Hash of a parameter vector; used to derive per-scenario simulation seeds
/// so that replay from stored parameters is exact.
inline std::uint64_t hash_vector(std::uint64_t seed, const Eigen::VectorXd& v)
{
    std::uint64_t h = fnv1a64(&seed, sizeof(seed));
    if (v.size() > 0)
        h = fnv1a64(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double), h);
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    double uniform() { return unif_(eng_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(eng_); }
    double gauss() { return gauss_(eng_); }
    double gauss(double mean, double stddev) { return mean + stddev * gauss_(eng_); }

    // Uniform integer in [0, n).
    int uniform_int(int n)
    {
        std::uniform_int_distribution<int> d(0, n - 1);
        return d(eng_);
    }

    std::uint64_t next_u64() { return eng_(); }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

} // namespace sasgen::core
