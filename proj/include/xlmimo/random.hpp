#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace xlmimo {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Counter-based seed derivation: master -> drop -> stage -> realization.
/// A node's seed depends only on its path, never on how many draws were
/// consumed elsewhere, so parallel scheduling cannot change any stream.
class SeedTree {
public:
    constexpr explicit SeedTree(std::uint64_t seed) : seed_(seed) {}

    constexpr SeedTree child(std::string_view tag) const {
        return SeedTree(detail::splitmix64(seed_ ^ detail::splitmix64(detail::fnv1a(tag))));
    }
    constexpr SeedTree child(std::uint64_t index) const {
        return SeedTree(detail::splitmix64(detail::splitmix64(seed_) + 0x632be59bd9b4e019ULL * (index + 1)));
    }

    constexpr std::uint64_t seed() const { return seed_; }
    Rng engine() const { return Rng(seed_); }

private:
    std::uint64_t seed_;
};

/// Circularly-symmetric complex Gaussian CN(0, 1).
template <typename Real = double>
std::complex<Real> complex_normal(Rng& rng) {
    std::normal_distribution<Real> normal(Real(0), Real(1));
    const Real re = normal(rng);
    const Real im = normal(rng);
    return {re / std::sqrt(Real(2)), im / std::sqrt(Real(2))};
}

} // namespace xlmimo
