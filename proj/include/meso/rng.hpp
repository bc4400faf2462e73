#ifndef MESO_RNG_HPP
#define MESO_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace meso {

// One global scenario seed fans out into named substreams so that the
// population, optimizer and event-sampling stages stay independently
// reproducible.  Derivation: FNV-1a of the stream name, mixed with the
// root seed and an index through splitmix64.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
    std::uint64_t s = root ^ fnv1a64(stream);
    splitmix64(s);
    s ^= index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    return splitmix64(s);
}

inline std::mt19937_64 make_stream(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(root, stream, index));
}

}  // namespace meso

#endif
