#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace survcobra {

// splitmix64 step; used to derive independent stream seeds from one master
// seed. Bit-identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derives the seed for a named substream, e.g. derive_seed(master, "rep", 3).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    return splitmix64(base ^ splitmix64(hash_tag(tag) + 0x632be59bd9b4e019ULL * (index + 1)));
}

// std::shuffle's draw sequence is implementation-defined, so shuffling is
// done by hand to keep partitions reproducible across standard libraries.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(gen() % i);
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    seeded_shuffle(idx, seed);
    return idx;
}

}  // namespace survcobra
