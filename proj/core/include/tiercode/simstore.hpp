#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tiercode/double_level.hpp"
#include "tiercode/triple_level.hpp"

namespace tiercode {

// Groups -> clouds -> servers; one server per codeword symbol. Double-level
// codes are modelled as a single group.
struct Topology {
  unsigned levels = 2;
  std::vector<std::vector<size_t>> servers;  // [group][cloud] -> server count

  static Topology of(const DoubleLevelCode& code);
  static Topology of(const TripleLevelCode& code);

  size_t group_count() const { return servers.size(); }
  size_t cloud_count(size_t g) const { return servers[g].size(); }
  size_t total_symbols() const;
  // flat symbol index of server s of cloud (g,c)
  size_t symbol_index(size_t g, size_t c, size_t s) const;
  void check(size_t g, size_t c, size_t s) const;  // unknown_server
  bool operator==(const Topology&) const = default;
};

// Deterministic 64-bit generator (splitmix64). Used for every randomized
// selection so that a seed reproduces runs bit-for-bit on any platform.
struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  uint64_t below(uint64_t n) { return next() % n; }
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return next() < uint64_t(p * 18446744073709551616.0);
  }
};

// Read-side view of one stored codeword; the planner pulls symbols through
// this interface. fetch() must only be called on live shards.
class ShardSource {
 public:
  virtual ~ShardSource() = default;
  virtual const Topology& topology() const = 0;
  virtual bool failed(size_t g, size_t c, size_t s) const = 0;
  virtual uint16_t fetch(size_t g, size_t c, size_t s) = 0;
};

// In-memory view, used by trials and tests.
class MemoryShardView : public ShardSource {
 public:
  MemoryShardView(Topology topology, std::vector<uint16_t> symbols);

  const Topology& topology() const override { return topo_; }
  bool failed(size_t g, size_t c, size_t s) const override;
  uint16_t fetch(size_t g, size_t c, size_t s) override;

  void fail_server(size_t g, size_t c, size_t s);
  void clear_failures() { failed_.assign(failed_.size(), 0); }
  std::vector<std::array<size_t, 3>> failed_servers() const;

 private:
  Topology topo_;
  std::vector<uint16_t> symbols_;
  std::vector<uint8_t> failed_;
};

// One stored codeword on disk: a directory tree of single-symbol shard files
// plus a key=value manifest recording the code-spec hash, the topology and
// the erasure flags. Decoders never read shards flagged as failed.
class ShardStore : public ShardSource {
 public:
  static ShardStore create(const std::filesystem::path& root, const Topology& topology,
                           uint64_t code_hash, const std::vector<uint16_t>& symbols,
                           unsigned symbol_bytes, size_t codeword_id = 0);
  static ShardStore open(const std::filesystem::path& root);

  const Topology& topology() const override { return topo_; }
  bool failed(size_t g, size_t c, size_t s) const override;
  uint16_t fetch(size_t g, size_t c, size_t s) override;

  uint64_t code_hash() const { return code_hash_; }
  const std::vector<uint64_t>& previous_hashes() const { return prev_hashes_; }
  size_t codeword_id() const { return codeword_id_; }
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path shard_path(size_t g, size_t c, size_t s) const;

  void fail_server(size_t g, size_t c, size_t s);
  void fail_explicit(const std::vector<std::array<size_t, 3>>& servers);
  void fail_random_per_cloud(size_t per_cloud, uint64_t seed);
  void fail_iid(double probability, uint64_t seed);
  void clear_failures();

  // Store surgery for the dynamic operations. set_code_hash moves the old
  // hash onto the manifest's previous-hash list so untouched shard files
  // keep validating byte-identically; rewrites then use the current hash.
  void set_code_hash(uint64_t new_hash);
  void rewrite_cloud(size_t g, size_t c, std::span<const uint16_t> symbols,
                     size_t from_server = 0);
  void add_cloud(size_t g, std::span<const uint16_t> symbols);
  void apply_split(size_t g, size_t c, std::span<const uint16_t> part_a,
                   std::span<const uint16_t> part_b);

  void set_trace_sink(std::vector<std::string>* sink) { trace_ = sink; }

 private:
  ShardStore() = default;
  void write_manifest() const;
  void write_shard(size_t g, size_t c, size_t s, uint16_t value, uint64_t hash) const;

  std::filesystem::path root_;
  Topology topo_;
  uint64_t code_hash_ = 0;
  std::vector<uint64_t> prev_hashes_;
  unsigned symbol_bytes_ = 1;
  size_t codeword_id_ = 0;
  std::set<std::array<size_t, 3>> failed_;
  std::vector<std::string>* trace_ = nullptr;
};

struct ReadReport {
  enum class Level { local, middle, global, unrecoverable };
  static const char* level_name(Level level);

  std::string target;
  Level level = Level::unrecoverable;
  size_t symbols_read = 0;       // distinct live shards opened
  size_t servers_contacted = 0;  // distinct servers touched, failed ones included
  bool success = false;
  std::vector<uint16_t> message;
  std::string reason;  // escalation / failure chain

  std::string to_string() const;  // canonical one-line form
};

// Escalating read of one cloud's message: local access first, then (triple
// level) the group, then the whole codeword. Never fetches a shard twice and
// never touches failed shards.
ReadReport read_cloud(ShardSource& src, const DoubleLevelCode& code, size_t cloud,
                      std::vector<std::string>* trace = nullptr);
ReadReport read_cloud(ShardSource& src, const TripleLevelCode& code, TlIndex target,
                      std::vector<std::string>* trace = nullptr);

struct FailureModel {
  enum class Kind { none, explicit_list, per_cloud, iid };
  Kind kind = Kind::none;
  std::vector<std::array<size_t, 3>> servers;  // explicit_list
  size_t per_cloud = 0;                        // per_cloud
  double probability = 0.0;                    // iid

  static FailureModel none_model() { return {}; }
  static FailureModel explicit_model(std::vector<std::array<size_t, 3>> servers);
  static FailureModel per_cloud_model(size_t k);
  static FailureModel iid_model(double p);
};

void apply_failures(MemoryShardView& view, const FailureModel& model, SplitMix64& rng);

struct TrialStats {
  size_t trials = 0;
  size_t reads = 0;
  std::map<std::string, size_t> level_counts;
  double mean_symbols_read = 0.0;
  double failure_rate = 0.0;
  uint64_t report_digest = 0;  // running FNV over every report's canonical form

  std::string to_string() const;
};

// Seeded Monte-Carlo reads: every trial draws a fresh random message, applies
// the failure model and reads every cloud once. Deterministic per seed.
TrialStats run_trials(const DoubleLevelCode& code, const FailureModel& model, size_t trials,
                      uint64_t seed);
TrialStats run_trials(const TripleLevelCode& code, const FailureModel& model, size_t trials,
                      uint64_t seed);

}  // namespace tiercode
