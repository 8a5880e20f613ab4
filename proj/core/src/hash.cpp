#include "tiercode/hash.hpp"

#include <stdexcept>

namespace tiercode {

std::string to_hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

uint64_t from_hex64(const std::string& s) {
  uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9')
      v |= uint64_t(c - '0');
    else if (c >= 'a' && c <= 'f')
      v |= uint64_t(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F')
      v |= uint64_t(c - 'A' + 10);
    else
      throw std::invalid_argument("bad hex digit");
  }
  return v;
}

}  // namespace tiercode
