#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tiercode/errors.hpp"

namespace tiercode {

// GF(2^m), 2 <= m <= 16, defined by a primitive polynomial g(X) over GF(2).
// Elements are bitmasks: bit i holds the coefficient of X^i. Addition is XOR;
// multiplication and inversion go through log/antilog tables for the
// generator beta = X, built once at construction. Construction verifies that
// beta generates all q-1 nonzero elements, i.e. that g is primitive.
//
// Immutable after construction; safe to share across threads read-only.
class Field {
 public:
  Field(unsigned degree, uint32_t poly);

  unsigned degree() const { return m_; }
  uint32_t order() const { return q_; }  // q = 2^m
  uint32_t poly() const { return poly_; }
  unsigned symbol_bytes() const { return (m_ + 7) / 8; }

  uint16_t add(uint16_t a, uint16_t b) const { return a ^ b; }
  uint16_t sub(uint16_t a, uint16_t b) const { return a ^ b; }  // char 2

  uint16_t mul(uint16_t a, uint16_t b) const {
    if (a == 0 || b == 0) return 0;
    uint32_t e = uint32_t(log_[a]) + uint32_t(log_[b]);
    if (e >= q_ - 1) e -= q_ - 1;
    return antilog_[e];
  }

  uint16_t inv(uint16_t a) const {
    if (a == 0) fail(Errc::divide_by_zero, "inverse of zero");
    return antilog_[(q_ - 1 - log_[a]) % (q_ - 1)];
  }

  uint16_t div(uint16_t a, uint16_t b) const { return mul(a, inv(b)); }

  // beta^e, exponent taken mod q-1
  uint16_t beta_pow(uint32_t e) const { return antilog_[e % (q_ - 1)]; }
  uint16_t log_of(uint16_t a) const {
    if (a == 0) fail(Errc::divide_by_zero, "log of zero");
    return log_[a];
  }

  bool contains(uint32_t value) const { return value < q_; }

  // "0", "1", "b", "b^5" -- the notation used by traces and golden tests
  std::string to_beta_string(uint16_t a) const;
  uint16_t parse_element(const std::string& text) const;

  static uint32_t default_poly(unsigned degree);
  static std::shared_ptr<const Field> make(unsigned degree, uint32_t poly);
  static std::shared_ptr<const Field> make_default(unsigned degree);

 private:
  unsigned m_;
  uint32_t q_;
  uint32_t poly_;
  std::vector<uint16_t> log_;      // indexed by element value, defined for 1..q-1
  std::vector<uint16_t> antilog_;  // indexed by exponent 0..q-2
};

using FieldRef = std::shared_ptr<const Field>;

// A scalar bound to its field. Arithmetic across distinct fields throws
// field_mismatch; fields are compared by identity, not by parameters.
class Gf {
 public:
  Gf(const Field& field, uint16_t value) : field_(&field), v_(value) {
    if (!field.contains(value)) fail(Errc::invalid_input, "value outside field");
  }

  uint16_t value() const { return v_; }
  const Field& field() const { return *field_; }
  bool is_zero() const { return v_ == 0; }

  friend Gf operator+(Gf a, Gf b) {
    a.check(b);
    return Gf(*a.field_, a.field_->add(a.v_, b.v_));
  }
  friend Gf operator-(Gf a, Gf b) { return a + b; }
  friend Gf operator*(Gf a, Gf b) {
    a.check(b);
    return Gf(*a.field_, a.field_->mul(a.v_, b.v_));
  }
  friend Gf operator/(Gf a, Gf b) {
    a.check(b);
    return Gf(*a.field_, a.field_->div(a.v_, b.v_));
  }
  Gf inverse() const { return Gf(*field_, field_->inv(v_)); }

  friend bool operator==(Gf a, Gf b) {
    a.check(b);
    return a.v_ == b.v_;
  }
  friend bool operator!=(Gf a, Gf b) { return !(a == b); }

 private:
  void check(const Gf& other) const {
    if (field_ != other.field_) fail(Errc::field_mismatch, "operands from different fields");
  }

  const Field* field_;
  uint16_t v_;
};

}  // namespace tiercode
