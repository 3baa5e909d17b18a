#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nmfs {

// Every random decision in the library draws from an Rng seeded through
// derive_seed(master, {path...}). Streams are identified by where they sit in
// the computation (niche, generation, role, shard, ...), never by draw order,
// so results do not depend on thread count or scheduling.

// splitmix64 finalizer; bijective on 64-bit values.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master);
    std::uint64_t salt = 1;
    for (std::uint64_t p : path) {
        s = mix64(s ^ mix64(p + salt));
        salt += 0x632be59bd9b4e019ULL;
    }
    return s;
}

// Stream roles used by derive_seed paths.
enum StreamRole : std::uint64_t {
    kRoleInit = 1,
    kRoleBreed = 2,
    kRoleFolds = 3,
    kRoleNoise = 4,
    kRoleSample = 5,
    kRolePermute = 6,
    kRoleShard = 7,
    kRoleCell = 8,
};

// mt19937_64 engine with self-contained distribution code. The standard pins
// the engine's output exactly; the std::*_distribution adapters are
// implementation-defined, so we do not use them.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0,1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1]; safe as a log argument
    double uniform_open01() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    // unbiased integer in [0, n); Lemire's multiply-shift with rejection
    std::uint64_t below(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = (0 - n) % n;
            while (lo < t) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // standard normal via Box-Muller, spare value cached
    double normal();

    // Fisher-Yates shuffle
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace nmfs
