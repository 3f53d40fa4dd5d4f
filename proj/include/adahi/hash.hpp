#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace adahi {

inline uint64_t fnv1a(const void* data, std::size_t len,
                      uint64_t h = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace adahi
