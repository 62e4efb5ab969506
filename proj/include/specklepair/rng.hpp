#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace specklepair {

// Stateless splitmix64 step; used for seed derivation only.
inline std::uint64_t splitmix64_step(std::uint64_t v)
{
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

// Counter-based child-seed derivation: child streams for (purpose, index)
// are decorrelated from the root stream and from each other.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t purpose,
                                 std::uint64_t index = 0)
{
    std::uint64_t x = splitmix64_step(root ^ (purpose * 0xbf58476d1ce4e5b9ULL));
    return splitmix64_step(x ^ (index * 0x94d049bb133111ebULL));
}

namespace seed_tag {
constexpr std::uint64_t screen  = 0x5343524eULL; // "SCRN"
constexpr std::uint64_t frame   = 0x4652414dULL; // "FRAM"
constexpr std::uint64_t rate    = 0x52415445ULL; // "RATE"
constexpr std::uint64_t test    = 0x54455354ULL; // "TEST"
} // namespace seed_tag

// Deterministic random stream. The engine is std::mt19937_64 (its output
// sequence is fixed by the standard); all variate transforms are done by
// hand so that results are identical across standard-library vendors.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Standard normal via Box-Muller (cached spare).
    double normal();

    // Unit-variance-per-component complex normal.
    std::complex<double> normal_complex()
    {
        const double re = normal();
        return {re, normal()};
    }

    // Poisson variate; Knuth product method for small means, Hormann's
    // transformed-rejection (PTRD) for large ones.
    long long poisson(double mean);

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace specklepair
