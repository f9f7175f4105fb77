#ifndef CIL_RNG_HPP
#define CIL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace cil {

// splitmix64 finalizer; decorrelates sub-seeds derived from one global seed.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable sub-seed for a named stream (data, init, shuffle, ...) so that
// consumers never share generator state.
inline std::uint64_t derive_seed(std::uint64_t global, std::string_view stream) {
    std::uint64_t h = mix64(global);
    for (char c : stream)
        h = mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t global, std::string_view stream,
                                 std::uint64_t index) {
    return mix64(derive_seed(global, stream) ^ mix64(index));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace cil

#endif  // CIL_RNG_HPP
