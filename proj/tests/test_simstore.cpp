#include "tiercode/simstore.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "worked_codes.hpp"

using namespace tiercode;
using worked::B;
using worked::for_each_pattern;

namespace {

namespace fs = std::filesystem;

const std::vector<std::vector<uint16_t>> kDlMessages{{1, B(1), B(2)}, {B(1), 1, 0}};
const TripleLevelCode::Messages kTlMessages{{{1, B(1), B(2)}, {B(1), 1, 0}},
                                            {{B(2), 0, B(1)}, {0, B(1), 1}}};

std::vector<uint16_t> flatten_dl(const DlCodeword& cw) {
  std::vector<uint16_t> flat;
  for (const auto& seg : cw.segments) flat.insert(flat.end(), seg.begin(), seg.end());
  return flat;
}

std::vector<uint16_t> flatten_tl(const TlCodeword& cw) {
  std::vector<uint16_t> flat;
  for (const auto& g : cw.segments)
    for (const auto& seg : g) flat.insert(flat.end(), seg.begin(), seg.end());
  return flat;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

size_t count_files(const fs::path& root, const std::string& ext) {
  size_t count = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ext) ++count;
  return count;
}

}  // namespace

TEST_CASE("topology bookkeeping") {
  Topology t = Topology::of(worked::dl_code());
  CHECK(t.levels == 2);
  CHECK(t.group_count() == 1);
  CHECK(t.total_symbols() == 12);
  CHECK(t.symbol_index(0, 1, 2) == 8);
  CHECK_THROWS_AS(t.check(0, 2, 0), Error);

  Topology t3 = Topology::of(worked::tl_code());
  CHECK(t3.levels == 3);
  CHECK(t3.total_symbols() == 24);
  CHECK(t3.symbol_index(1, 0, 0) == 12);
}

TEST_CASE("store layout and counts") {
  DoubleLevelCode code = worked::dl_code();
  DlCodeword cw = code.encode(kDlMessages);
  TempDir dir("tiercode_store_counts");

  ShardStore store = ShardStore::create(dir.path, Topology::of(code), 0x1234, flatten_dl(cw),
                                        code.params().field->symbol_bytes());
  CHECK(count_files(dir.path, ".shard") == 12);
  CHECK(fs::exists(dir.path / "manifest.txt"));
  CHECK(store.fetch(0, 1, 3) == B(6));

  // idempotent overwrite
  ShardStore again = ShardStore::create(dir.path, Topology::of(code), 0x1234, flatten_dl(cw),
                                        code.params().field->symbol_bytes());
  CHECK(count_files(dir.path, ".shard") == 12);

  TripleLevelCode tl = worked::tl_code();
  TempDir dir3("tiercode_store_counts_tl");
  ShardStore::create(dir3.path, Topology::of(tl), 0x99, flatten_tl(tl.encode(kTlMessages)),
                     tl.params().field->symbol_bytes());
  CHECK(count_files(dir3.path, ".shard") == 24);
}

TEST_CASE("store input validation") {
  DoubleLevelCode code = worked::dl_code();
  TempDir dir("tiercode_store_invalid");
  try {
    ShardStore::create(dir.path, Topology::of(code), 1, {}, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_input);
  }
  CHECK_THROWS_AS(ShardStore::create(dir.path, Topology::of(code), 1, {1, 2, 3}, 1), Error);
}

TEST_CASE("stores reopen with persisted failure flags") {
  DoubleLevelCode code = worked::dl_code();
  DlCodeword cw = code.encode(kDlMessages);
  TempDir dir("tiercode_store_reopen");
  ShardStore store = ShardStore::create(dir.path, Topology::of(code), 0xabc, flatten_dl(cw),
                                        code.params().field->symbol_bytes());
  store.fail_server(0, 0, 2);
  store.fail_server(0, 1, 5);

  ShardStore reopened = ShardStore::open(dir.path);
  CHECK(reopened.code_hash() == 0xabc);
  CHECK(reopened.failed(0, 0, 2));
  CHECK(reopened.failed(0, 1, 5));
  CHECK(!reopened.failed(0, 0, 0));
  CHECK(reopened.fetch(0, 0, 0) == 1);
  CHECK_THROWS_AS(reopened.fetch(0, 0, 2), Error);
  CHECK_THROWS_AS(reopened.fail_server(0, 0, 9), Error);
}

TEST_CASE("shard headers are validated on fetch") {
  DoubleLevelCode code = worked::dl_code();
  DlCodeword cw = code.encode(kDlMessages);
  TempDir dir("tiercode_store_headers");
  ShardStore store = ShardStore::create(dir.path, Topology::of(code), 7, flatten_dl(cw),
                                        code.params().field->symbol_bytes());

  std::ofstream(store.shard_path(0, 0, 1), std::ios::trunc) << "garbage";
  try {
    store.fetch(0, 0, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io_failure);
  }

  // a shard written under a different, unknown hash is rejected
  ShardStore other = ShardStore::create(dir.path / "other", Topology::of(code), 8,
                                        flatten_dl(cw), code.params().field->symbol_bytes());
  fs::copy_file(other.shard_path(0, 0, 0), store.shard_path(0, 0, 0),
                fs::copy_options::overwrite_existing);
  CHECK_THROWS_AS(store.fetch(0, 0, 0), Error);
}

TEST_CASE("failure injection is deterministic under a seed") {
  DoubleLevelCode code = worked::dl_code();
  DlCodeword cw = code.encode(kDlMessages);
  TempDir d1("tiercode_fail_a"), d2("tiercode_fail_b");
  ShardStore s1 = ShardStore::create(d1.path, Topology::of(code), 1, flatten_dl(cw), 1);
  ShardStore s2 = ShardStore::create(d2.path, Topology::of(code), 1, flatten_dl(cw), 1);

  s1.fail_iid(0.4, 99);
  s2.fail_iid(0.4, 99);
  for (size_t c = 0; c < 2; ++c)
    for (size_t s = 0; s < 6; ++s) CHECK(s1.failed(0, c, s) == s2.failed(0, c, s));

  s1.clear_failures();
  s1.fail_iid(0.0, 5);
  for (size_t c = 0; c < 2; ++c)
    for (size_t s = 0; s < 6; ++s) CHECK(!s1.failed(0, c, s));
  s1.fail_iid(1.0, 5);
  for (size_t c = 0; c < 2; ++c)
    for (size_t s = 0; s < 6; ++s) CHECK(s1.failed(0, c, s));

  s2.clear_failures();
  s2.fail_random_per_cloud(2, 123);
  for (size_t c = 0; c < 2; ++c) {
    size_t count = 0;
    for (size_t s = 0; s < 6; ++s) count += s2.failed(0, c, s);
    CHECK(count == 2);
  }
}

TEST_CASE("reads stay local while the local radius covers the damage") {
  DoubleLevelCode code = worked::dl_code();
  DlCodeword cw = code.encode(kDlMessages);
  MemoryShardView view(Topology::of(code), flatten_dl(cw));

  SUBCASE("no failures") {
    ReadReport r = read_cloud(view, code, 0);
    CHECK(r.success);
    CHECK(r.level == ReadReport::Level::local);
    CHECK(r.symbols_read == 6);
    CHECK(r.servers_contacted == 6);
    CHECK(r.message == kDlMessages[0]);
    CHECK(r.reason.empty());
  }
  SUBCASE("two failures are still a local read, fetching the live shards") {
    view.fail_server(0, 0, 1);
    view.fail_server(0, 0, 3);
    ReadReport r = read_cloud(view, code, 0);
    CHECK(r.success);
    CHECK(r.level == ReadReport::Level::local);
    CHECK(r.symbols_read == 4);
    CHECK(r.servers_contacted == 6);
    CHECK(r.message == kDlMessages[0]);
  }
  SUBCASE("every two-failure pattern in one cloud reads locally") {
    for_each_pattern(6, 2, [&](const std::vector<size_t>& pattern) {
      MemoryShardView v(Topology::of(code), flatten_dl(cw));
      for (size_t p : pattern) v.fail_server(0, 0, p);
      ReadReport r = read_cloud(v, code, 0);
      CHECK(r.level == ReadReport::Level::local);
      CHECK(r.message == kDlMessages[0]);
    });
  }
}

TEST_CASE("reads escalate to global access and report the chain") {
  DoubleLevelCode code = worked::dl_code();
  DlCodeword cw = code.encode(kDlMessages);

  SUBCASE("three failures force global access") {
    MemoryShardView view(Topology::of(code), flatten_dl(cw));
    view.fail_server(0, 0, 0);
    view.fail_server(0, 0, 2);
    view.fail_server(0, 0, 4);
    ReadReport r = read_cloud(view, code, 0);
    CHECK(r.success);
    CHECK(r.level == ReadReport::Level::global);
    CHECK(r.symbols_read == 3 + 6);
    CHECK(r.servers_contacted == 12);
    CHECK(r.message == kDlMessages[0]);
    CHECK(r.reason.find("local") != std::string::npos);
  }
  SUBCASE("five failures are unrecoverable with a level-by-level reason") {
    MemoryShardView view(Topology::of(code), flatten_dl(cw));
    for (size_t s = 0; s < 5; ++s) view.fail_server(0, 0, s);
    ReadReport r = read_cloud(view, code, 0);
    CHECK(!r.success);
    CHECK(r.level == ReadReport::Level::unrecoverable);
    CHECK(r.reason.find("local:") != std::string::npos);
    CHECK(r.reason.find("global:") != std::string::npos);
    CHECK(r.message.empty());
  }
}

TEST_CASE("triple-level reads escalate through the middle level") {
  TripleLevelCode code = worked::tl_code();
  TlCodeword cw = code.encode(kTlMessages);

  SUBCASE("three failures with an intact group sibling stop at the middle level") {
    MemoryShardView view(Topology::of(code), flatten_tl(cw));
    view.fail_server(0, 0, 0);
    view.fail_server(0, 0, 3);
    view.fail_server(0, 0, 4);
    ReadReport r = read_cloud(view, code, TlIndex{0, 0});
    CHECK(r.success);
    CHECK(r.level == ReadReport::Level::middle);
    CHECK(r.symbols_read == 3 + 6);
    CHECK(r.servers_contacted == 12);
    CHECK(r.message == kTlMessages[0][0]);
  }
  SUBCASE("five failures go all the way to global access") {
    MemoryShardView view(Topology::of(code), flatten_tl(cw));
    for (size_t s = 0; s < 5; ++s) view.fail_server(0, 0, s);
    ReadReport r = read_cloud(view, code, TlIndex{0, 0});
    CHECK(r.success);
    CHECK(r.level == ReadReport::Level::global);
    CHECK(r.symbols_read == 1 + 18);
    CHECK(r.servers_contacted == 24);
    CHECK(r.message == kTlMessages[0][0]);
  }
  SUBCASE("damage in another group does not stop a middle read") {
    MemoryShardView view(Topology::of(code), flatten_tl(cw));
    view.fail_server(0, 0, 1);
    view.fail_server(0, 0, 2);
    view.fail_server(1, 0, 0);
    ReadReport r = read_cloud(view, code, TlIndex{0, 0});
    CHECK(r.success);
    CHECK(r.level == ReadReport::Level::middle);
    CHECK(r.message == kTlMessages[0][0]);
  }
  SUBCASE("the global pass repairs other clouds at middle level if needed") {
    MemoryShardView view(Topology::of(code), flatten_tl(cw));
    for (size_t s = 0; s < 5; ++s) view.fail_server(0, 0, s);  // past the middle budget
    view.fail_server(1, 0, 0);  // needs its own middle repair
    view.fail_server(1, 0, 1);
    ReadReport r = read_cloud(view, code, TlIndex{0, 0});
    CHECK(r.success);
    CHECK(r.level == ReadReport::Level::global);
    CHECK(r.message == kTlMessages[0][0]);
  }
  SUBCASE("two heavily damaged clouds in one group are unrecoverable") {
    MemoryShardView view(Topology::of(code), flatten_tl(cw));
    view.fail_server(0, 0, 0);
    view.fail_server(0, 0, 1);
    view.fail_server(0, 1, 0);
    view.fail_server(0, 1, 1);
    ReadReport r = read_cloud(view, code, TlIndex{0, 0});
    CHECK(!r.success);
    CHECK(r.level == ReadReport::Level::unrecoverable);
    CHECK(r.reason.find("middle:") != std::string::npos);
    CHECK(r.reason.find("global:") != std::string::npos);
  }
}

TEST_CASE("escalation is monotone under fewer failures") {
  TripleLevelCode code = worked::tl_code();
  TlCodeword cw = code.encode(kTlMessages);
  Topology topo = Topology::of(code);
  worked::Rng rng(0x60133);

  auto level_rank = [](ReadReport::Level level) {
    switch (level) {
      case ReadReport::Level::local: return 0;
      case ReadReport::Level::middle: return 1;
      case ReadReport::Level::global: return 2;
      case ReadReport::Level::unrecoverable: return 3;
    }
    return 3;
  };

  for (int t = 0; t < 60; ++t) {
    std::vector<std::array<size_t, 3>> failures;
    MemoryShardView full(topo, flatten_tl(cw));
    for (size_t g = 0; g < 2; ++g)
      for (size_t c = 0; c < 2; ++c)
        for (size_t s = 0; s < 6; ++s)
          if (rng.next() % 100 < 20) {
            full.fail_server(g, c, s);
            failures.push_back({g, c, s});
          }
    ReadReport base = read_cloud(full, code, TlIndex{0, 0});

    MemoryShardView fewer(topo, flatten_tl(cw));
    for (const auto& f : failures)
      if (rng.next() % 2) fewer.fail_server(f[0], f[1], f[2]);
    ReadReport sub = read_cloud(fewer, code, TlIndex{0, 0});
    CHECK(level_rank(sub.level) <= level_rank(base.level));
  }
}

TEST_CASE("cost accounting matches the io trace") {
  DoubleLevelCode code = worked::dl_code();
  DlCodeword cw = code.encode(kDlMessages);
  TempDir dir("tiercode_trace");
  ShardStore store = ShardStore::create(dir.path, Topology::of(code), 5, flatten_dl(cw), 1);
  store.fail_explicit({{0, 0, 0}, {0, 0, 2}, {0, 0, 4}});

  std::vector<std::string> trace;
  store.set_trace_sink(&trace);
  ReadReport r = read_cloud(store, code, 0);
  CHECK(r.level == ReadReport::Level::global);
  size_t opens = 0;
  for (const auto& line : trace)
    if (line.rfind("open ", 0) == 0) ++opens;
  CHECK(r.symbols_read == opens);
}

TEST_CASE("round-trip through a store") {
  DoubleLevelCode code = worked::dl_code();
  worked::Rng rng(0x2024);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::vector<uint16_t>> messages(2);
    for (auto& m : messages)
      for (int j = 0; j < 3; ++j) m.push_back(uint16_t(rng.next() % 16));
    DlCodeword cw = code.encode(messages);
    MemoryShardView view(Topology::of(code), flatten_dl(cw));
    for (size_t x = 0; x < 2; ++x) {
      ReadReport r = read_cloud(view, code, x);
      CHECK(r.success);
      CHECK(r.message == messages[x]);
    }
  }
}

TEST_CASE("trial batches are deterministic and classify levels") {
  DoubleLevelCode code = worked::dl_code();

  SUBCASE("no failures means all-local reads") {
    TrialStats stats = run_trials(code, FailureModel::none_model(), 50, 7);
    CHECK(stats.reads == 100);
    CHECK(stats.level_counts.at("local") == 100);
    CHECK(stats.failure_rate == 0.0);
    CHECK(stats.mean_symbols_read == doctest::Approx(6.0));
  }
  SUBCASE("certain failure means no recovery") {
    TrialStats stats = run_trials(code, FailureModel::iid_model(1.0), 20, 7);
    CHECK(stats.level_counts.at("unrecoverable") == 40);
    CHECK(stats.failure_rate == 1.0);
  }
  SUBCASE("same seed, same digest; different seed, different digest") {
    FailureModel model = FailureModel::iid_model(0.3);
    TrialStats a = run_trials(code, model, 200, 42);
    TrialStats b = run_trials(code, model, 200, 42);
    TrialStats c = run_trials(code, model, 200, 43);
    CHECK(a.report_digest == b.report_digest);
    CHECK(a.report_digest != c.report_digest);
    CHECK(a.to_string() == b.to_string());
  }
  SUBCASE("two failures per cloud stay local on every trial") {
    TrialStats stats = run_trials(code, FailureModel::per_cloud_model(2), 100, 11);
    CHECK(stats.level_counts.at("local") == 200);
  }
  SUBCASE("triple-level trials touch the higher levels") {
    TripleLevelCode tl = worked::tl_code();
    TrialStats stats = run_trials(tl, FailureModel::iid_model(0.12), 150, 99);
    CHECK(stats.reads == 600);
    CHECK(stats.level_counts.count("local"));
    CHECK(stats.level_counts.count("middle") + stats.level_counts.count("global") > 0);
    CHECK(run_trials(tl, FailureModel::iid_model(0.12), 150, 99).report_digest ==
          stats.report_digest);
  }
}

TEST_CASE("store surgery preserves untouched shard files") {
  DlParams params{worked::gf16(), {{6, 3, 1}, {6, 3, 1}, {6, 3, 1}}};
  DoubleLevelCode code = DoubleLevelCode::build(params);
  DlCodeword cw = code.encode({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  TempDir dir("tiercode_surgery");
  ShardStore store = ShardStore::create(dir.path, Topology::of(code), 0xAAAA, flatten_dl(cw), 1);
  store.fail_server(0, 2, 5);

  auto file_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  std::vector<std::string> sibling_bytes;
  for (size_t c = 1; c < 3; ++c)
    for (size_t s = 0; s < 6; ++s) sibling_bytes.push_back(file_bytes(store.shard_path(0, c, s)));

  SUBCASE("split rewrites only the target cloud") {
    store.set_code_hash(0xBBBB);
    std::vector<uint16_t> part_a{1, 2, 10, 11};
    std::vector<uint16_t> part_b{3, 12};
    store.apply_split(0, 0, part_a, part_b);

    CHECK(store.topology().cloud_count(0) == 4);
    CHECK(store.topology().servers[0] == std::vector<size_t>{4, 2, 6, 6});
    size_t idx = 0;
    for (size_t c = 2; c < 4; ++c)
      for (size_t s = 0; s < 6; ++s)
        CHECK(file_bytes(store.shard_path(0, c, s)) == sibling_bytes[idx++]);
    // old-hash shards keep validating through the previous-hash list
    CHECK(store.fetch(0, 2, 0) == 4);
    CHECK(store.fetch(0, 0, 2) == 10);
    CHECK(store.fetch(0, 1, 1) == 12);
    // the failure flag followed the renumbering
    CHECK(store.failed(0, 3, 5));

    ShardStore reopened = ShardStore::open(dir.path);
    CHECK(reopened.code_hash() == 0xBBBB);
    CHECK(reopened.previous_hashes() == std::vector<uint64_t>{0xAAAA});
    CHECK(reopened.fetch(0, 3, 0) == 7);
  }

  SUBCASE("scale-out rewrites parities and appends the new cloud") {
    store.set_code_hash(0xCCCC);
    std::vector<uint16_t> new_parity{13, 14, 15};
    store.rewrite_cloud(0, 0, new_parity, 3);
    store.add_cloud(0, std::vector<uint16_t>{1, 1, 2, 2, 3, 3});

    CHECK(store.topology().servers[0] == std::vector<size_t>{6, 6, 6, 6});
    CHECK(store.fetch(0, 0, 0) == 1);    // untouched message shard, old hash
    CHECK(store.fetch(0, 0, 4) == 14);   // rewritten parity shard
    CHECK(store.fetch(0, 3, 5) == 3);    // new cloud
    size_t idx = 0;
    for (size_t c = 1; c < 3; ++c)
      for (size_t s = 0; s < 6; ++s)
        CHECK(file_bytes(store.shard_path(0, c, s)) == sibling_bytes[idx++]);

    CHECK_THROWS_AS(store.rewrite_cloud(0, 0, new_parity, 2), Error);  // wrong tail
  }
}
