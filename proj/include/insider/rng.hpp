#pragma once

#include <cstdint>
#include <random>

namespace insider {

// Purpose streams derived from the root seed.
enum class Stream : std::uint64_t {
    noise = 1,
    directions = 2,
    evaluation_points = 3,
};

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// seed(root, stream, index) = sm(sm(sm(root) ^ stream) ^ index)
inline std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index) {
    std::uint64_t s = splitmix64(root);
    s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
    return splitmix64(s ^ index);
}

inline std::mt19937_64 make_engine(std::uint64_t root, Stream stream, std::uint64_t index) {
    return std::mt19937_64(derive_seed(root, stream, index));
}

}  // namespace insider
