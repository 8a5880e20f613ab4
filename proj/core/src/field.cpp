#include "tiercode/field.hpp"

#include <cctype>

namespace tiercode {

Field::Field(unsigned degree, uint32_t poly) : m_(degree), poly_(poly) {
  if (degree < 2 || degree > 16) fail(Errc::degree_mismatch, "extension degree must be in 2..16");
  q_ = 1u << degree;
  if (poly < q_ || poly >= (q_ << 1))
    fail(Errc::degree_mismatch, "polynomial degree must equal the extension degree");

  log_.assign(q_, 0);
  antilog_.assign(q_ - 1, 0);
  uint32_t b = 1;
  for (uint32_t e = 0; e < q_ - 1; ++e) {
    antilog_[e] = uint16_t(b);
    log_[b] = uint16_t(e);
    b <<= 1;
    if (b & q_) b ^= poly_;
    if (b == 1 && e + 1 < q_ - 1)
      fail(Errc::not_primitive,
           "generator order is " + std::to_string(e + 1) + ", expected " + std::to_string(q_ - 1));
  }
  if (b != 1) fail(Errc::not_primitive, "generator does not have full order");
}

std::string Field::to_beta_string(uint16_t a) const {
  if (a == 0) return "0";
  if (a == 1) return "1";
  uint16_t e = log_[a];
  if (e == 1) return "b";
  return "b^" + std::to_string(e);
}

uint16_t Field::parse_element(const std::string& text) const {
  if (text.empty()) fail(Errc::invalid_input, "empty field element");
  if (text == "0") return 0;
  if (text == "1") return 1;
  if (text[0] == 'b' || text[0] == 'B') {
    size_t pos = 1;
    if (pos < text.size() && text[pos] == '^') ++pos;
    if (pos == text.size()) return beta_pow(1);
    uint32_t e = 0;
    for (; pos < text.size(); ++pos) {
      if (!std::isdigit(static_cast<unsigned char>(text[pos])))
        fail(Errc::invalid_input, "bad beta-power element: " + text);
      e = e * 10 + unsigned(text[pos] - '0');
    }
    return beta_pow(e);
  }
  // plain decimal value
  uint32_t v = 0;
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      fail(Errc::invalid_input, "bad field element: " + text);
    v = v * 10 + unsigned(c - '0');
  }
  if (!contains(v)) fail(Errc::invalid_input, "value outside field: " + text);
  return uint16_t(v);
}

uint32_t Field::default_poly(unsigned degree) {
  switch (degree) {
    case 2: return 0x7;       // X^2+X+1
    case 3: return 0xB;       // X^3+X+1
    case 4: return 0x13;      // X^4+X+1
    case 5: return 0x25;      // X^5+X^2+1
    case 6: return 0x43;      // X^6+X+1
    case 7: return 0x89;      // X^7+X^3+1
    case 8: return 0x11D;     // X^8+X^4+X^3+X^2+1
    case 9: return 0x211;     // X^9+X^4+1
    case 10: return 0x409;    // X^10+X^3+1
    case 11: return 0x805;    // X^11+X^2+1
    case 12: return 0x1053;   // X^12+X^6+X^4+X+1
    case 13: return 0x201B;   // X^13+X^4+X^3+X+1
    case 14: return 0x4443;   // X^14+X^10+X^6+X+1
    case 15: return 0x8003;   // X^15+X+1
    case 16: return 0x1100B;  // X^16+X^12+X^3+X+1
    default: fail(Errc::degree_mismatch, "no default polynomial for degree " + std::to_string(degree));
  }
}

std::shared_ptr<const Field> Field::make(unsigned degree, uint32_t poly) {
  return std::make_shared<const Field>(degree, poly);
}

std::shared_ptr<const Field> Field::make_default(unsigned degree) {
  return make(degree, default_poly(degree));
}

}  // namespace tiercode
