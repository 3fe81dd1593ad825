#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "rlgnet/types.hpp"

namespace rlgnet::io {

// Little-endian binary primitives for cache/checkpoint files. All target
// platforms for this artifact are little-endian; the format is tagged so a
// mismatch would fail the magic check rather than silently misread.

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error(errc::io, "unexpected end of stream");
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_pod<uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const auto n = read_pod<uint64_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw Error(errc::io, "unexpected end of stream");
    return s;
}

inline void expect_magic(std::istream& is, const std::string& magic,
                         const std::string& what) {
    std::string got(magic.size(), '\0');
    is.read(got.data(), static_cast<std::streamsize>(magic.size()));
    if (!is || got != magic)
        throw Error(errc::version,
                    what + ": bad or unsupported file header (expected " + magic + ")");
}

// FNV-1a, used for config hashes; stable across platforms and builds.
inline uint64_t fnv1a(const std::string& data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace rlgnet::io
