#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiercode/double_level.hpp"
#include "tiercode/triple_level.hpp"

namespace tiercode {

// A built code of either depth plus its identity hash. The hash is FNV-1a
// over the canonical serialized form, so logically equal codes hash equally
// across runs and machines.
struct CodeBundle {
  unsigned levels = 2;
  std::optional<DoubleLevelCode> dl;
  std::optional<TripleLevelCode> tl;
  uint64_t hash = 0;
  uint64_t default_seed = 0;

  const FieldRef& field() const { return levels == 2 ? dl->params().field : tl->params().field; }
  size_t total_message_symbols() const;
  size_t total_symbols() const;
};

// Build from the JSON code-spec config (schema documented in the README).
CodeBundle build_from_config_text(const std::string& text);
CodeBundle build_from_config_file(const std::filesystem::path& path);

// Code artifact files: pretty-printed JSON carrying every block matrix.
void save_code(const std::filesystem::path& path, const CodeBundle& bundle);
CodeBundle load_code(const std::filesystem::path& path);

std::string serialize_code(const CodeBundle& bundle);  // canonical form

// D matrix in the published row layout: one row per access level, one column
// per cloud, vertical bars between groups (between clouds for double level).
std::string format_distance_matrix(const CodeBundle& bundle);

// bytes <-> m-bit symbols, MSB-first bit order; the tail is zero-padded
std::vector<uint16_t> pack_bytes(std::span<const uint8_t> bytes, unsigned m);
std::vector<uint8_t> unpack_symbols(std::span<const uint16_t> symbols, unsigned m,
                                    size_t byte_count);

}  // namespace tiercode
