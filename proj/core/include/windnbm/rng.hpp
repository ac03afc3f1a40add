#ifndef WINDNBM_RNG_HPP
#define WINDNBM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace windnbm {

/// Seeded random stream used everywhere randomness is needed.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard)
/// and derives doubles with fixed arithmetic, so identical seeds give
/// bit-identical streams on every platform. Gaussian draws use Box-Muller
/// without caching: every call consumes exactly two engine outputs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53 random bits.
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; safe as a log argument.
    double next_open_unit() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [lo, hi] via rejection-free 128-bit scaling.
    std::int64_t next_in_range(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        const auto x = static_cast<unsigned __int128>(engine_());
        return lo + static_cast<std::int64_t>((x * span) >> 64);
    }

    double next_gaussian() {
        const double u1 = next_open_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Deterministic sub-seed derivation: every random stream in a run is keyed
/// by (master seed, textual label, ordinal). Streams with different labels
/// or ordinals are statistically independent.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t ordinal = 0) {
    std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a(label));
    return detail::splitmix64(h ^ detail::splitmix64(ordinal));
}

}  // namespace windnbm

#endif
