#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "tiercode/double_level.hpp"
#include "tiercode/matrix.hpp"

namespace tiercode {

using TlCloudParams = DlCloudParams;

// One group of clouds sharing a cross-parity weight gamma_x. gamma may be
// half-integral, so it is carried as 2*gamma; odd values require an even
// cloud count (the even-group E-block layout below).
struct TlGroupParams {
  std::vector<TlCloudParams> clouds;
  unsigned two_gamma = 0;

  size_t p() const { return clouds.size(); }
  size_t delta_group() const;
  bool even_pair_layout() const { return two_gamma % 2 == 1; }
  // p_x * gamma_x, always an integer after validation
  size_t p_gamma() const { return p() * two_gamma / 2; }
};

struct TlIndex {
  size_t group = 0;
  size_t cloud = 0;
  auto operator<=>(const TlIndex&) const = default;
};

// Parameters of a triple-level code: groups of clouds, each cloud with its
// own (n, k, delta) and each group with gamma. Derived radii per cloud:
//   d1 = r - delta - 2 gamma_x + 1          (local access)
//   d2 = r - delta + delta_x + 1            (middle level, within the group)
//   d3 = r - delta + delta_x - p_x gamma_x + gamma + 1   (global access)
struct TlParams {
  FieldRef field;
  std::vector<TlGroupParams> groups;

  size_t group_count() const { return groups.size(); }
  size_t cloud_count() const;
  size_t gamma_total() const;  // sum of p_x * gamma_x

  size_t u(size_t x, size_t i) const;
  size_t v(size_t x, size_t i) const;
  size_t d1(size_t x, size_t i) const;
  size_t d2(size_t x, size_t i) const;
  size_t d3(size_t x, size_t i) const;

  DlParams group_dl_params(size_t x) const;

  void validate() const;
};

struct TlCodeword {
  std::vector<std::vector<std::vector<uint16_t>>> segments;  // [group][cloud]
  std::vector<std::vector<std::vector<uint8_t>>> erased;

  void erase_symbol(size_t x, size_t i, size_t pos) { erased[x][i][pos] = 1; }
  size_t erasure_count(size_t x, size_t i) const;
  bool intact(size_t x, size_t i) const { return erasure_count(x, i) == 0; }
  bool operator==(const TlCodeword&) const = default;
};

struct TlLocalTrace {
  std::vector<size_t> erased_positions;
  std::vector<uint16_t> filled;
  std::vector<uint16_t> cross_parity;  // solved y appendix
  std::vector<uint16_t> z_pair;        // solved z appendix
};

struct TlMiddleTrace {
  struct Sibling {
    size_t cloud;
    std::vector<uint16_t> cross_parity;  // y_{x,i'}
    std::vector<uint16_t> z_pair;        // z coefficients of V_{x,i'}
  };
  std::vector<Sibling> siblings;
  std::vector<uint16_t> z_pair;      // z coefficients used for the target
  std::vector<uint16_t> correction;  // z_pair * V, removed from the parity
  DlGlobalTrace group;               // the inner double-level solve
  std::vector<size_t> erased_positions;
  std::vector<uint16_t> filled;  // final symbol values
};

struct TlGlobalTrace {
  std::vector<uint16_t> cross_parity;  // y_{x,i}
  std::vector<uint16_t> z_pair;        // z coefficients of V_{x,i}
  std::vector<std::vector<uint16_t>> syndrome_blocks;
  std::vector<size_t> erased_positions;
  std::vector<uint16_t> shifted_filled;
  std::vector<uint16_t> filled;
};

// Hierarchical code with triple-level access. Each cloud (x,i) owns a Cauchy
// matrix T_{x,i} partitioned into the self block A, the within-group cross
// blocks B, the cross-group blocks E, the parity combiners U (group level)
// and V (global level). Within each group the A/B/U blocks form a
// double-level code, exposed via group_code(). Immutable once built.
class TripleLevelCode {
 public:
  struct CloudBlocks {
    GfMatrix a_self;                                  // k x r
    std::map<size_t, GfMatrix> b_cross;               // i' -> B_{x,x;i,i'}
    std::map<size_t, std::vector<GfMatrix>> e_cross;  // y -> E blocks toward group y
    GfMatrix u;                                       // delta x r
    GfMatrix v;                                       // 2 gamma_x x r
  };

  using Messages = std::vector<std::vector<std::vector<uint16_t>>>;

  static TripleLevelCode build(TlParams params);  // deterministic default points
  static TripleLevelCode build(TlParams params, std::vector<std::vector<CloudPoints>> points);
  static TripleLevelCode from_cauchy(TlParams params, std::vector<std::vector<GfMatrix>> cauchy,
                                     std::vector<std::vector<CloudPoints>> points = {});
  static TripleLevelCode from_blocks(TlParams params,
                                     std::vector<std::vector<CloudBlocks>> blocks,
                                     std::vector<std::vector<CloudPoints>> points = {});

  static CloudPoints default_points(const TlParams& params, size_t x, size_t i);

  const TlParams& params() const { return params_; }
  const CloudBlocks& blocks(size_t x, size_t i) const { return blocks_[x][i]; }
  const GfMatrix& cloud_cauchy(size_t x, size_t i) const;
  const std::vector<std::vector<CloudPoints>>& points() const { return points_; }
  const DoubleLevelCode& group_code(size_t x) const { return group_codes_[x]; }

  // A blocks of the full generator: self, within-group, or cross-group
  const GfMatrix& a_cross(TlIndex from, TlIndex to) const;
  const GfMatrix& generator() const { return generator_; }
  const GfMatrix& h_local(size_t x, size_t i) const { return h_local_[x][i]; }
  const GfMatrix& h_global(size_t x, size_t i) const { return h_global_[x][i]; }

  // rows d1, d2, d3; one column per cloud, groups in order
  std::vector<std::vector<size_t>> distance_matrix() const;

  TlCodeword encode(const Messages& messages) const;

  std::vector<uint16_t> decode_local(const TlCodeword& cw, size_t x, size_t i,
                                     TlLocalTrace* trace = nullptr) const;

  // Requires every other cloud of group x to be erasure-free; removes the
  // global cross parities and finishes with the group's double-level decode.
  std::vector<uint16_t> decode_middle(const TlCodeword& cw, size_t x, size_t i,
                                      TlMiddleTrace* trace = nullptr) const;

  // Requires every other cloud of the whole code to be erasure-free.
  std::vector<uint16_t> decode_global(const TlCodeword& cw, size_t x, size_t i,
                                      TlGlobalTrace* trace = nullptr) const;

  // Like the decoders, but returning the fully repaired segment.
  std::vector<uint16_t> repair_local(const TlCodeword& cw, size_t x, size_t i,
                                     TlLocalTrace* trace = nullptr) const;
  std::vector<uint16_t> repair_middle(const TlCodeword& cw, size_t x, size_t i,
                                      TlMiddleTrace* trace = nullptr) const;
  std::vector<uint16_t> repair_global(const TlCodeword& cw, size_t x, size_t i,
                                      TlGlobalTrace* trace = nullptr) const;

  // Solve [y z] [U; V] = parity - m A for an intact segment; returns (y, z).
  std::pair<std::vector<uint16_t>, std::vector<uint16_t>> recover_cross_parities(
      size_t x, size_t i, std::span<const uint16_t> segment) const;

 private:
  TripleLevelCode(TlParams params, std::vector<std::vector<GfMatrix>> cauchy,
                  std::vector<std::vector<CloudBlocks>> blocks,
                  std::vector<std::vector<CloudPoints>> points);

  void assemble();
  // z coefficients of V_{x,i} from all other groups' messages
  std::vector<uint16_t> z_pair_from_messages(size_t x, size_t i, const Messages& messages) const;
  std::vector<uint16_t> y_from_messages(size_t x, size_t i, const Messages& messages) const;
  std::vector<uint16_t> target_z_pair(const std::vector<std::vector<uint16_t>>& pairs, size_t x,
                                      size_t i) const;
  std::vector<uint16_t> local_filled(const TlCodeword& cw, size_t x, size_t i,
                                     TlLocalTrace* trace) const;
  std::vector<uint16_t> middle_repaired(const TlCodeword& cw, size_t x, size_t i,
                                        TlMiddleTrace* trace) const;
  std::pair<std::vector<uint16_t>, std::vector<uint16_t>> global_filled(
      const TlCodeword& cw, size_t x, size_t i, TlGlobalTrace* trace) const;

  TlParams params_;
  std::vector<std::vector<GfMatrix>> cauchy_;
  std::vector<std::vector<CloudBlocks>> blocks_;
  std::vector<std::vector<CloudPoints>> points_;
  std::vector<DoubleLevelCode> group_codes_;
  std::map<std::pair<TlIndex, TlIndex>, GfMatrix> a_cross_;
  std::vector<std::vector<GfMatrix>> h_local_;
  std::vector<std::vector<GfMatrix>> h_global_;
  GfMatrix generator_;
};

}  // namespace tiercode
