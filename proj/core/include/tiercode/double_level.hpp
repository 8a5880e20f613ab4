#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tiercode/matrix.hpp"

namespace tiercode {

struct DlCloudParams {
  size_t n = 0;      // local codeword length
  size_t k = 0;      // local message length
  size_t delta = 0;  // cross-parity budget contributed by this cloud
  size_t r() const { return n - k; }
};

// Parameters of a double-level code over p clouds. Per cloud x the derived
// erasure-correction radii are d1 = r_x - delta_x + 1 (local access) and
// d2 = r_x - delta_x + delta + 1 (global access).
struct DlParams {
  FieldRef field;
  std::vector<DlCloudParams> clouds;

  size_t cloud_count() const { return clouds.size(); }
  size_t delta_total() const;
  size_t d1(size_t x) const { return clouds[x].r() - clouds[x].delta + 1; }
  size_t d2(size_t x) const { return clouds[x].r() - clouds[x].delta + delta_total() + 1; }
  // Cauchy shape of cloud x: u rows (k + delta), v columns (r - delta_x + delta)
  size_t u(size_t x) const { return clouds[x].k + clouds[x].delta; }
  size_t v(size_t x) const { return clouds[x].r() - clouds[x].delta + delta_total(); }

  void validate() const;  // invalid_params / field_too_small
};

// Evaluation points of one cloud's Cauchy matrix, in partition order:
// a = (k message rows, then delta cross-parity rows),
// b = (r parity columns, then the cross blocks toward the other clouds in
// ascending cloud order).
struct CloudPoints {
  std::vector<uint16_t> a;
  std::vector<uint16_t> b;
};

struct DlCodeword {
  std::vector<std::vector<uint16_t>> segments;  // per cloud, length n_x
  std::vector<std::vector<uint8_t>> erased;     // 1 = symbol lost

  void erase_symbol(size_t cloud, size_t pos) { erased[cloud][pos] = 1; }
  size_t erasure_count(size_t cloud) const;
  bool intact(size_t cloud) const { return erasure_count(cloud) == 0; }
  bool operator==(const DlCodeword&) const = default;
};

struct DlLocalTrace {
  std::vector<size_t> erased_positions;  // positions solved within the segment
  std::vector<uint16_t> filled;          // their solved values
  std::vector<uint16_t> cross_parity;    // the solved y_x appendix
};

struct DlGlobalTrace {
  std::vector<uint16_t> cross_parity;                  // y_x folded out of the parity
  std::vector<std::vector<uint16_t>> syndrome_blocks;  // m_x B_{x,y} per other cloud, ascending
  std::vector<size_t> erased_positions;
  std::vector<uint16_t> shifted_filled;  // solved values of the shifted word
  std::vector<uint16_t> filled;          // final symbol values
};

// CRS-based code with double-level access. Each cloud x owns a Cauchy matrix
// T_x partitioned into the self block A_{x,x}, the cross blocks B_{x,y} and
// the parity combiner U_x; the generator couples clouds through
// A_{x,y} = B_{x,y} U_y. Immutable once built; encode/decode are pure.
class DoubleLevelCode {
 public:
  struct CloudBlocks {
    GfMatrix a_self;                     // k_x x r_x
    GfMatrix u;                          // delta_x x r_x
    std::map<size_t, GfMatrix> b_cross;  // y -> B_{x,y} (k_x x delta_y), y != x
  };

  static DoubleLevelCode build(DlParams params);  // deterministic default points
  static DoubleLevelCode build(DlParams params, std::vector<CloudPoints> points);
  static DoubleLevelCode from_cauchy(DlParams params, std::vector<GfMatrix> cauchy,
                                     std::vector<CloudPoints> points = {});
  static DoubleLevelCode from_blocks(DlParams params, std::vector<CloudBlocks> blocks,
                                     std::vector<CloudPoints> points = {});

  // default evaluation points for one cloud: the first u+v elements of the
  // canonical sequence beta^1, beta^2, ..., beta^(q-1), 0
  static CloudPoints default_points(const DlParams& params, size_t x);

  const DlParams& params() const { return params_; }
  size_t cloud_count() const { return params_.clouds.size(); }
  const CloudBlocks& blocks(size_t x) const { return blocks_[x]; }
  const GfMatrix& cloud_cauchy(size_t x) const;  // T_x; only for Cauchy-built codes
  bool has_cauchy() const { return !cauchy_.empty(); }
  const std::vector<CloudPoints>& points() const { return points_; }

  const GfMatrix& a_cross(size_t x, size_t y) const;  // B_{x,y} U_y
  const GfMatrix& generator() const { return generator_; }
  const GfMatrix& h_local(size_t x) const { return h_local_[x]; }
  const GfMatrix& h_global(size_t x) const { return h_global_[x]; }

  // rows d1, d2; one column per cloud
  std::vector<std::vector<size_t>> distance_matrix() const;

  DlCodeword encode(const std::vector<std::vector<uint16_t>>& messages) const;

  // Repairs up to d1-1 erasures from the cloud's own segment and returns its
  // message. The cross-parity appendix y_x is treated as delta_x extra
  // unknowns of the local parity-check system.
  std::vector<uint16_t> decode_local(const DlCodeword& cw, size_t x,
                                     DlLocalTrace* trace = nullptr) const;

  // Repairs up to d2-1 erasures in cloud x. Every other cloud's segment must
  // be erasure-free (already repaired); their parities yield the syndrome
  // blocks m_x B_{x,y}.
  std::vector<uint16_t> decode_global(const DlCodeword& cw, size_t x,
                                      DlGlobalTrace* trace = nullptr) const;

  // Like the decoders, but returning the fully repaired segment (message and
  // parity) instead of just the message.
  std::vector<uint16_t> repair_local(const DlCodeword& cw, size_t x,
                                     DlLocalTrace* trace = nullptr) const;
  std::vector<uint16_t> repair_global(const DlCodeword& cw, size_t x,
                                      DlGlobalTrace* trace = nullptr) const;

  // Solve y U_x = parity - m A_{x,x} for an intact segment.
  std::vector<uint16_t> recover_cross_parity(size_t x, std::span<const uint16_t> segment) const;

  // parity vector of cloud x given all messages (the encoder's formula)
  std::vector<uint16_t> parity_of(size_t x,
                                  const std::vector<std::vector<uint16_t>>& messages) const;

 private:
  DoubleLevelCode(DlParams params, std::vector<GfMatrix> cauchy, std::vector<CloudBlocks> blocks,
                  std::vector<CloudPoints> points);

  void assemble();
  std::vector<uint16_t> cross_parity_from_messages(
      size_t x, const std::vector<std::vector<uint16_t>>& messages) const;
  std::vector<uint16_t> local_filled(const DlCodeword& cw, size_t x, DlLocalTrace* trace) const;
  std::pair<std::vector<uint16_t>, std::vector<uint16_t>> global_filled(
      const DlCodeword& cw, size_t x, DlGlobalTrace* trace) const;

  DlParams params_;
  std::vector<GfMatrix> cauchy_;  // may be empty (block-built codes)
  std::vector<CloudBlocks> blocks_;
  std::vector<CloudPoints> points_;  // may be empty
  std::map<std::pair<size_t, size_t>, GfMatrix> a_cross_;
  std::vector<GfMatrix> h_local_;
  std::vector<GfMatrix> h_global_;
  GfMatrix generator_;
};

// Canonical element sequence used for default point assignment.
std::vector<uint16_t> default_point_sequence(const Field& f);

// Repair cloud x at the lowest sufficient access level: local first, then
// global after repairing every sibling locally. Throws target_undecodable
// when neither works.
std::vector<uint16_t> repair_cloud(const DoubleLevelCode& code, const DlCodeword& cw, size_t x);

}  // namespace tiercode
