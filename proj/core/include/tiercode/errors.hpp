#pragma once

#include <stdexcept>
#include <string>

namespace tiercode {

// Every failure the library reports, as one exception type carrying a
// machine-checkable code. Decode-time codes (too_many_erasures, ...) double
// as escalation signals for the read planner.
enum class Errc {
  not_primitive,
  degree_mismatch,
  field_mismatch,
  divide_by_zero,
  duplicate_point,
  redundancy_out_of_range,
  dimension_mismatch,
  singular,
  unsolvable,
  underdetermined,
  field_too_small,
  invalid_params,
  length_mismatch,
  too_many_erasures,
  siblings_undecoded,
  others_undecoded,
  inconsistent,
  gamma_too_large,
  odd_group_half_gamma,
  point_collision,
  target_undecodable,
  unknown_server,
  io_failure,
  invalid_input,
  unrecoverable,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::not_primitive: return "not_primitive";
    case Errc::degree_mismatch: return "degree_mismatch";
    case Errc::field_mismatch: return "field_mismatch";
    case Errc::divide_by_zero: return "divide_by_zero";
    case Errc::duplicate_point: return "duplicate_point";
    case Errc::redundancy_out_of_range: return "redundancy_out_of_range";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::singular: return "singular";
    case Errc::unsolvable: return "unsolvable";
    case Errc::underdetermined: return "underdetermined";
    case Errc::field_too_small: return "field_too_small";
    case Errc::invalid_params: return "invalid_params";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::too_many_erasures: return "too_many_erasures";
    case Errc::siblings_undecoded: return "siblings_undecoded";
    case Errc::others_undecoded: return "others_undecoded";
    case Errc::inconsistent: return "inconsistent";
    case Errc::gamma_too_large: return "gamma_too_large";
    case Errc::odd_group_half_gamma: return "odd_group_half_gamma";
    case Errc::point_collision: return "point_collision";
    case Errc::target_undecodable: return "target_undecodable";
    case Errc::unknown_server: return "unknown_server";
    case Errc::io_failure: return "io_failure";
    case Errc::invalid_input: return "invalid_input";
    case Errc::unrecoverable: return "unrecoverable";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace tiercode
