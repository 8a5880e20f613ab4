#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tiercode/double_level.hpp"

namespace tiercode {

// One hop of the scale-out exchange between a local cloud and the central
// cloud. The transcript preserves the protocol's communication structure so
// a simulator can count exchanged symbols.
struct ProtocolMessage {
  std::string from;
  std::string to;
  std::string label;
  std::vector<uint16_t> payload;

  std::string to_string(const Field& f) const;
};

// Adding cloud p (0-based index) to a live double-level code. The new cloud
// picks its own Cauchy points; every existing cloud extends its matrix by
// delta_new fresh columns. Existing A, U and B blocks stay bit-identical.
struct ScaleOutSpec {
  DlCloudParams cloud;
  std::vector<uint16_t> message;              // length k of the new cloud
  std::optional<CloudPoints> points;          // new cloud's T points
  std::optional<std::vector<std::vector<uint16_t>>> extension_points;  // per existing cloud
};

struct ScaleOutResult {
  DoubleLevelCode code;
  DlCodeword codeword;
  std::vector<ProtocolMessage> transcript;
};

ScaleOutResult scale_out(const DoubleLevelCode& code, const DlCodeword& stored,
                         const ScaleOutSpec& spec);

// Splitting one cloud into two, all new matrices sliced out of the old ones.
// Sibling clouds keep their matrices and codeword segments bit-identical.
struct SplitPlan {
  size_t cloud = 0;
  DlCloudParams part_a;
  DlCloudParams part_b;
};

struct SplitResult {
  DoubleLevelCode code;
  DlCodeword codeword;
};

SplitResult split_cloud(const DoubleLevelCode& code, const DlCodeword& stored,
                        const SplitPlan& plan);

}  // namespace tiercode
