#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tvnet {

// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for the named sub-stream of a master seed. Streams with different
/// names (or indices) are statistically independent.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(master ^ hash_name(name)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
    return Rng(stream_seed(master, name, index));
}

}  // namespace tvnet
