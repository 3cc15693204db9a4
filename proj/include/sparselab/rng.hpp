#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sparselab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <class... Ts>
std::uint64_t mix_seed(std::uint64_t first, Ts... rest) {
    std::uint64_t h = splitmix64(first);
    for (std::uint64_t v : std::initializer_list<std::uint64_t>{static_cast<std::uint64_t>(rest)...}) h = splitmix64(h ^ v);
    return h;
}

/// mt19937_64 with library-independent conversions, so streams are identical
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next() { return eng_(); }
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : eng_() % n; }

private:
    std::mt19937_64 eng_;
};

}  // namespace sparselab
