#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tiercode {

// FNV-1a, used for code-spec hashes and report digests. Stable across
// platforms by construction.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex64(uint64_t v);
uint64_t from_hex64(const std::string& s);

}  // namespace tiercode
