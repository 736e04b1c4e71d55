#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace wepo {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

// FNV-1a over raw bytes. Used for content digests and feature hashing; all
// digests in manifests and metadata come from this function so outputs are
// reproducible across platforms.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffsetBasis) {
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// Finalizer from the splitmix64 generator; also serves as a mixing step when
// deriving per-step seeds and feature indices.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

inline std::string digest_hex(std::string_view data) {
    return to_hex(fnv1a64(data));
}

}  // namespace wepo
