#include "tiercode/simstore.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tiercode/hash.hpp"

namespace tiercode {

namespace fs = std::filesystem;

Topology Topology::of(const DoubleLevelCode& code) {
  Topology t;
  t.levels = 2;
  t.servers.emplace_back();
  for (const auto& c : code.params().clouds) t.servers[0].push_back(c.n);
  return t;
}

Topology Topology::of(const TripleLevelCode& code) {
  Topology t;
  t.levels = 3;
  for (const auto& g : code.params().groups) {
    t.servers.emplace_back();
    for (const auto& c : g.clouds) t.servers.back().push_back(c.n);
  }
  return t;
}

size_t Topology::total_symbols() const {
  size_t total = 0;
  for (const auto& g : servers)
    for (size_t n : g) total += n;
  return total;
}

size_t Topology::symbol_index(size_t g, size_t c, size_t s) const {
  size_t off = 0;
  for (size_t gg = 0; gg < g; ++gg)
    for (size_t n : servers[gg]) off += n;
  for (size_t cc = 0; cc < c; ++cc) off += servers[g][cc];
  return off + s;
}

void Topology::check(size_t g, size_t c, size_t s) const {
  if (g >= servers.size() || c >= servers[g].size() || s >= servers[g][c])
    fail(Errc::unknown_server, "no server (" + std::to_string(g) + "," + std::to_string(c) +
                                   "," + std::to_string(s) + ")");
}

MemoryShardView::MemoryShardView(Topology topology, std::vector<uint16_t> symbols)
    : topo_(std::move(topology)), symbols_(std::move(symbols)) {
  if (symbols_.size() != topo_.total_symbols())
    fail(Errc::invalid_input, "symbol count does not match topology");
  failed_.assign(symbols_.size(), 0);
}

bool MemoryShardView::failed(size_t g, size_t c, size_t s) const {
  topo_.check(g, c, s);
  return failed_[topo_.symbol_index(g, c, s)] != 0;
}

uint16_t MemoryShardView::fetch(size_t g, size_t c, size_t s) {
  topo_.check(g, c, s);
  size_t idx = topo_.symbol_index(g, c, s);
  if (failed_[idx]) fail(Errc::io_failure, "fetch of a failed shard");
  return symbols_[idx];
}

void MemoryShardView::fail_server(size_t g, size_t c, size_t s) {
  topo_.check(g, c, s);
  failed_[topo_.symbol_index(g, c, s)] = 1;
}

std::vector<std::array<size_t, 3>> MemoryShardView::failed_servers() const {
  std::vector<std::array<size_t, 3>> out;
  for (size_t g = 0; g < topo_.group_count(); ++g)
    for (size_t c = 0; c < topo_.cloud_count(g); ++c)
      for (size_t s = 0; s < topo_.servers[g][c]; ++s)
        if (failed_[topo_.symbol_index(g, c, s)]) out.push_back({g, c, s});
  return out;
}

namespace {

constexpr char kMagic[4] = {'T', 'C', 'S', '1'};
constexpr size_t kHeaderSize = 16;

std::string cloud_dir_name(const Topology& t, size_t g, size_t c) {
  if (t.levels == 2) return "c" + std::to_string(c);
  return "g" + std::to_string(g) + "c" + std::to_string(c);
}

void put_le(std::string& buf, uint64_t v, size_t bytes) {
  for (size_t i = 0; i < bytes; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

uint64_t get_le(const std::string& buf, size_t off, size_t bytes) {
  uint64_t v = 0;
  for (size_t i = 0; i < bytes; ++i) v |= uint64_t(uint8_t(buf[off + i])) << (8 * i);
  return v;
}

}  // namespace

std::filesystem::path ShardStore::shard_path(size_t g, size_t c, size_t s) const {
  return root_ / cloud_dir_name(topo_, g, c) / ("s" + std::to_string(s) + ".shard");
}

void ShardStore::write_shard(size_t g, size_t c, size_t s, uint16_t value, uint64_t hash) const {
  std::string buf;
  buf.append(kMagic, 4);
  put_le(buf, hash, 8);
  put_le(buf, topo_.symbol_index(g, c, s), 4);
  put_le(buf, value, symbol_bytes_);
  fs::path path = shard_path(g, c, s);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << buf)) fail(Errc::io_failure, "cannot write " + path.string());
}

void ShardStore::write_manifest() const {
  std::ostringstream out;
  out << "format=tiercode-shards-v1\n";
  out << "code_hash=" << to_hex64(code_hash_) << "\n";
  for (uint64_t h : prev_hashes_) out << "prev_hash=" << to_hex64(h) << "\n";
  out << "levels=" << topo_.levels << "\n";
  out << "topology=";
  for (size_t g = 0; g < topo_.group_count(); ++g) {
    if (g) out << ";";
    for (size_t c = 0; c < topo_.cloud_count(g); ++c) {
      if (c) out << ",";
      out << topo_.servers[g][c];
    }
  }
  out << "\n";
  out << "symbol_bytes=" << symbol_bytes_ << "\n";
  out << "codeword_id=" << codeword_id_ << "\n";
  for (const auto& f : failed_)
    out << "erased=" << f[0] << ":" << f[1] << ":" << f[2] << "\n";
  std::ofstream file(root_ / "manifest.txt", std::ios::trunc);
  if (!file || !(file << out.str())) fail(Errc::io_failure, "cannot write manifest");
}

ShardStore ShardStore::create(const std::filesystem::path& root, const Topology& topology,
                              uint64_t code_hash, const std::vector<uint16_t>& symbols,
                              unsigned symbol_bytes, size_t codeword_id) {
  if (symbols.empty()) fail(Errc::invalid_input, "refusing to store an empty codeword");
  if (symbols.size() != topology.total_symbols())
    fail(Errc::invalid_input, "symbol count does not match topology");
  ShardStore store;
  store.root_ = root;
  store.topo_ = topology;
  store.code_hash_ = code_hash;
  store.symbol_bytes_ = symbol_bytes;
  store.codeword_id_ = codeword_id;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (!fs::exists(root)) fail(Errc::io_failure, "cannot create " + root.string());
  for (size_t g = 0; g < topology.group_count(); ++g)
    for (size_t c = 0; c < topology.cloud_count(g); ++c)
      for (size_t s = 0; s < topology.servers[g][c]; ++s)
        store.write_shard(g, c, s, symbols[topology.symbol_index(g, c, s)], code_hash);
  store.write_manifest();
  return store;
}

ShardStore ShardStore::open(const std::filesystem::path& root) {
  std::ifstream file(root / "manifest.txt");
  if (!file) fail(Errc::io_failure, "cannot open manifest in " + root.string());
  ShardStore store;
  store.root_ = root;
  std::string line;
  bool format_seen = false;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::io_failure, "bad manifest line: " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "format") {
      if (value != "tiercode-shards-v1") fail(Errc::io_failure, "unknown store format");
      format_seen = true;
    } else if (key == "code_hash") {
      store.code_hash_ = from_hex64(value);
    } else if (key == "prev_hash") {
      store.prev_hashes_.push_back(from_hex64(value));
    } else if (key == "levels") {
      store.topo_.levels = unsigned(std::stoul(value));
    } else if (key == "topology") {
      store.topo_.servers.clear();
      std::stringstream groups(value);
      std::string group;
      while (std::getline(groups, group, ';')) {
        store.topo_.servers.emplace_back();
        std::stringstream clouds(group);
        std::string n;
        while (std::getline(clouds, n, ',')) store.topo_.servers.back().push_back(std::stoul(n));
      }
    } else if (key == "symbol_bytes") {
      store.symbol_bytes_ = unsigned(std::stoul(value));
    } else if (key == "codeword_id") {
      store.codeword_id_ = std::stoul(value);
    } else if (key == "erased") {
      size_t a = value.find(':');
      size_t b = value.find(':', a + 1);
      if (a == std::string::npos || b == std::string::npos)
        fail(Errc::io_failure, "bad erased entry: " + value);
      store.failed_.insert({std::stoul(value.substr(0, a)),
                            std::stoul(value.substr(a + 1, b - a - 1)),
                            std::stoul(value.substr(b + 1))});
    }
  }
  if (!format_seen) fail(Errc::io_failure, "manifest missing format line");
  return store;
}

bool ShardStore::failed(size_t g, size_t c, size_t s) const {
  topo_.check(g, c, s);
  return failed_.contains({g, c, s});
}

uint16_t ShardStore::fetch(size_t g, size_t c, size_t s) {
  topo_.check(g, c, s);
  if (failed_.contains({g, c, s})) fail(Errc::io_failure, "fetch of a failed shard");
  fs::path path = shard_path(g, c, s);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() != kHeaderSize + symbol_bytes_)
    fail(Errc::io_failure, "truncated shard " + path.string());
  if (std::string_view(buf.data(), 4) != std::string_view(kMagic, 4))
    fail(Errc::io_failure, "bad shard magic in " + path.string());
  uint64_t hash = get_le(buf, 4, 8);
  if (hash != code_hash_ &&
      std::find(prev_hashes_.begin(), prev_hashes_.end(), hash) == prev_hashes_.end())
    fail(Errc::io_failure, "shard belongs to a different code: " + path.string());
  if (get_le(buf, 12, 4) != topo_.symbol_index(g, c, s))
    fail(Errc::io_failure, "shard index mismatch in " + path.string());
  if (trace_) trace_->push_back("open " + path.string());
  return uint16_t(get_le(buf, kHeaderSize, symbol_bytes_));
}

void ShardStore::fail_server(size_t g, size_t c, size_t s) {
  topo_.check(g, c, s);
  failed_.insert({g, c, s});
  write_manifest();
}

void ShardStore::fail_explicit(const std::vector<std::array<size_t, 3>>& servers) {
  for (const auto& f : servers) {
    topo_.check(f[0], f[1], f[2]);
    failed_.insert(f);
  }
  write_manifest();
}

void ShardStore::fail_random_per_cloud(size_t per_cloud, uint64_t seed) {
  SplitMix64 rng(seed);
  for (size_t g = 0; g < topo_.group_count(); ++g)
    for (size_t c = 0; c < topo_.cloud_count(g); ++c) {
      size_t n = topo_.servers[g][c];
      std::vector<size_t> order(n);
      for (size_t s = 0; s < n; ++s) order[s] = s;
      for (size_t s = 0; s < std::min(per_cloud, n); ++s) {
        size_t j = s + size_t(rng.below(n - s));
        std::swap(order[s], order[j]);
        failed_.insert({g, c, order[s]});
      }
    }
  write_manifest();
}

void ShardStore::fail_iid(double probability, uint64_t seed) {
  SplitMix64 rng(seed);
  for (size_t g = 0; g < topo_.group_count(); ++g)
    for (size_t c = 0; c < topo_.cloud_count(g); ++c)
      for (size_t s = 0; s < topo_.servers[g][c]; ++s)
        if (rng.bernoulli(probability)) failed_.insert({g, c, s});
  write_manifest();
}

void ShardStore::clear_failures() {
  failed_.clear();
  write_manifest();
}

void ShardStore::set_code_hash(uint64_t new_hash) {
  if (new_hash == code_hash_) return;
  prev_hashes_.push_back(code_hash_);
  code_hash_ = new_hash;
  write_manifest();
}

void ShardStore::rewrite_cloud(size_t g, size_t c, std::span<const uint16_t> symbols,
                               size_t from_server) {
  topo_.check(g, c, from_server);
  if (from_server + symbols.size() != topo_.servers[g][c])
    fail(Errc::invalid_input, "rewrite must cover the cloud's tail");
  for (size_t s = 0; s < symbols.size(); ++s)
    write_shard(g, c, from_server + s, symbols[s], code_hash_);
  for (size_t s = from_server; s < topo_.servers[g][c]; ++s) failed_.erase({g, c, s});
  write_manifest();
}

void ShardStore::add_cloud(size_t g, std::span<const uint16_t> symbols) {
  if (g >= topo_.group_count()) fail(Errc::unknown_server, "no such group");
  topo_.servers[g].push_back(symbols.size());
  size_t c = topo_.servers[g].size() - 1;
  for (size_t s = 0; s < symbols.size(); ++s) write_shard(g, c, s, symbols[s], code_hash_);
  write_manifest();
}

void ShardStore::apply_split(size_t g, size_t c, std::span<const uint16_t> part_a,
                             std::span<const uint16_t> part_b) {
  topo_.check(g, c, 0);
  if (part_a.size() + part_b.size() != topo_.servers[g][c])
    fail(Errc::invalid_input, "split parts must cover the cloud");

  // shift later cloud directories up by one, highest first
  Topology new_topo = topo_;
  new_topo.servers[g][c] = part_a.size();
  new_topo.servers[g].insert(new_topo.servers[g].begin() + c + 1, part_b.size());
  for (size_t cc = topo_.cloud_count(g); cc-- > c + 1;) {
    std::error_code ec;
    fs::rename(root_ / cloud_dir_name(topo_, g, cc), root_ / cloud_dir_name(new_topo, g, cc + 1),
               ec);
    if (ec) fail(Errc::io_failure, "cannot rename cloud directory: " + ec.message());
  }

  std::set<std::array<size_t, 3>> remapped;
  for (const auto& f : failed_) {
    if (f[0] != g || f[1] < c) {
      remapped.insert(f);
    } else if (f[1] > c) {
      remapped.insert({f[0], f[1] + 1, f[2]});
    }
    // entries of the split cloud are dropped; its shards are rewritten
  }
  failed_ = std::move(remapped);

  std::error_code ec;
  fs::remove_all(root_ / cloud_dir_name(topo_, g, c), ec);
  topo_ = std::move(new_topo);
  for (size_t s = 0; s < part_a.size(); ++s) write_shard(g, c, s, part_a[s], code_hash_);
  for (size_t s = 0; s < part_b.size(); ++s) write_shard(g, c + 1, s, part_b[s], code_hash_);
  write_manifest();
}

const char* ReadReport::level_name(Level level) {
  switch (level) {
    case Level::local: return "local";
    case Level::middle: return "middle";
    case Level::global: return "global";
    case Level::unrecoverable: return "unrecoverable";
  }
  return "?";
}

std::string ReadReport::to_string() const {
  std::string out = "target=" + target + " level=" + level_name(level) +
                    " ok=" + (success ? "1" : "0") +
                    " symbols_read=" + std::to_string(symbols_read) +
                    " servers_contacted=" + std::to_string(servers_contacted) + " message=";
  for (size_t i = 0; i < message.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(message[i]);
  }
  if (message.empty()) out += "-";
  out += " reason=" + (reason.empty() ? "-" : reason);
  return out;
}

namespace {

// Shared fetch bookkeeping: a cloud is contacted at most once; fetched
// symbols land in the erasure-aware view.
struct FetchState {
  ShardSource& src;
  std::set<size_t> contacted;
  std::set<size_t> opened;

  explicit FetchState(ShardSource& s) : src(s) {}

  void contact(size_t g, size_t c, std::vector<uint16_t>& segment,
               std::vector<uint8_t>& erased) {
    const Topology& t = src.topology();
    for (size_t s = 0; s < t.servers[g][c]; ++s) {
      size_t flat = t.symbol_index(g, c, s);
      if (!contacted.insert(flat).second) continue;
      if (src.failed(g, c, s)) {
        erased[s] = 1;
      } else {
        segment[s] = src.fetch(g, c, s);
        erased[s] = 0;
        opened.insert(flat);
      }
    }
  }
};

void append_reason(std::string& chain, const std::string& part) {
  if (!chain.empty()) chain += "; ";
  chain += part;
}

void note(std::vector<std::string>* trace, const std::string& line) {
  if (trace) trace->push_back(line);
}

}  // namespace

ReadReport read_cloud(ShardSource& src, const DoubleLevelCode& code, size_t cloud,
                      std::vector<std::string>* trace) {
  const Topology& topo = src.topology();
  const DlParams& params = code.params();
  if (topo.levels != 2 || topo.group_count() != 1 ||
      topo.cloud_count(0) != params.clouds.size())
    fail(Errc::invalid_input, "store topology does not match the code");
  if (cloud >= params.clouds.size()) fail(Errc::unknown_server, "no such cloud");

  ReadReport report;
  report.target = "c" + std::to_string(cloud);

  DlCodeword view;
  for (const auto& c : params.clouds) {
    view.segments.emplace_back(c.n, 0);
    view.erased.emplace_back(c.n, 1);  // unfetched counts as erased
  }

  FetchState fetch(src);
  auto finish = [&](ReadReport::Level level, bool ok, std::vector<uint16_t> message) {
    report.level = level;
    report.success = ok;
    report.message = std::move(message);
    report.symbols_read = fetch.opened.size();
    report.servers_contacted = fetch.contacted.size();
    return report;
  };

  fetch.contact(0, cloud, view.segments[cloud], view.erased[cloud]);
  size_t erasures = view.erasure_count(cloud);
  if (erasures + 1 <= params.d1(cloud)) {
    try {
      std::vector<uint16_t> m = code.decode_local(view, cloud);
      note(trace, "local decode of c" + std::to_string(cloud) + " solved H_local");
      return finish(ReadReport::Level::local, true, std::move(m));
    } catch (const Error& err) {
      append_reason(report.reason, std::string("local: ") + err.what());
    }
  } else {
    append_reason(report.reason, "local: " + std::to_string(erasures) + " erasures exceed " +
                                     std::to_string(params.d1(cloud) - 1));
  }
  note(trace, "escalating c" + std::to_string(cloud) + " to global access");

  for (size_t y = 0; y < params.clouds.size(); ++y)
    if (y != cloud) fetch.contact(0, y, view.segments[y], view.erased[y]);
  for (size_t y = 0; y < params.clouds.size(); ++y) {
    if (y == cloud || view.intact(y)) continue;
    try {
      view.segments[y] = code.repair_local(view, y);
      view.erased[y].assign(params.clouds[y].n, 0);
      note(trace, "repaired sibling c" + std::to_string(y) + " locally");
    } catch (const Error& err) {
      append_reason(report.reason,
                    "global: sibling c" + std::to_string(y) + " unrepairable (" + err.what() + ")");
      return finish(ReadReport::Level::unrecoverable, false, {});
    }
  }
  try {
    std::vector<uint16_t> m = code.decode_global(view, cloud);
    note(trace, "global decode of c" + std::to_string(cloud) + " solved H_global");
    return finish(ReadReport::Level::global, true, std::move(m));
  } catch (const Error& err) {
    append_reason(report.reason, std::string("global: ") + err.what());
    return finish(ReadReport::Level::unrecoverable, false, {});
  }
}

ReadReport read_cloud(ShardSource& src, const TripleLevelCode& code, TlIndex target,
                      std::vector<std::string>* trace) {
  const Topology& topo = src.topology();
  const TlParams& params = code.params();
  if (topo.levels != 3 || topo.group_count() != params.group_count())
    fail(Errc::invalid_input, "store topology does not match the code");
  for (size_t g = 0; g < params.group_count(); ++g)
    if (topo.cloud_count(g) != params.groups[g].p())
      fail(Errc::invalid_input, "store topology does not match the code");
  size_t x = target.group, i = target.cloud;
  if (x >= params.group_count() || i >= params.groups[x].p())
    fail(Errc::unknown_server, "no such cloud");

  ReadReport report;
  report.target = "g" + std::to_string(x) + "c" + std::to_string(i);

  TlCodeword view;
  view.segments.resize(params.group_count());
  view.erased.resize(params.group_count());
  for (size_t g = 0; g < params.group_count(); ++g)
    for (const auto& c : params.groups[g].clouds) {
      view.segments[g].emplace_back(c.n, 0);
      view.erased[g].emplace_back(c.n, 1);
    }

  FetchState fetch(src);
  auto finish = [&](ReadReport::Level level, bool ok, std::vector<uint16_t> message) {
    report.level = level;
    report.success = ok;
    report.message = std::move(message);
    report.symbols_read = fetch.opened.size();
    report.servers_contacted = fetch.contacted.size();
    return report;
  };
  auto cloud_name = [&](size_t g, size_t c) {
    return "g" + std::to_string(g) + "c" + std::to_string(c);
  };

  // local
  fetch.contact(x, i, view.segments[x][i], view.erased[x][i]);
  size_t erasures = view.erasure_count(x, i);
  if (erasures + 1 <= params.d1(x, i)) {
    try {
      std::vector<uint16_t> m = code.decode_local(view, x, i);
      note(trace, "local decode of " + cloud_name(x, i));
      return finish(ReadReport::Level::local, true, std::move(m));
    } catch (const Error& err) {
      append_reason(report.reason, std::string("local: ") + err.what());
    }
  } else {
    append_reason(report.reason, "local: " + std::to_string(erasures) + " erasures exceed " +
                                     std::to_string(params.d1(x, i) - 1));
  }

  // middle: all group siblings must repair locally, otherwise go global
  note(trace, "escalating " + cloud_name(x, i) + " to middle access");
  bool siblings_ok = true;
  for (size_t ip = 0; ip < params.groups[x].p(); ++ip) {
    if (ip == i) continue;
    fetch.contact(x, ip, view.segments[x][ip], view.erased[x][ip]);
    if (view.intact(x, ip)) continue;
    try {
      view.segments[x][ip] = code.repair_local(view, x, ip);
      view.erased[x][ip].assign(params.groups[x].clouds[ip].n, 0);
      note(trace, "repaired sibling " + cloud_name(x, ip) + " locally");
    } catch (const Error& err) {
      append_reason(report.reason, "middle: sibling " + cloud_name(x, ip) +
                                       " not locally repairable (" + err.what() + ")");
      siblings_ok = false;
      break;
    }
  }
  if (siblings_ok) {
    try {
      std::vector<uint16_t> m = code.decode_middle(view, x, i);
      note(trace, "middle decode of " + cloud_name(x, i));
      return finish(ReadReport::Level::middle, true, std::move(m));
    } catch (const Error& err) {
      append_reason(report.reason, std::string("middle: ") + err.what());
    }
  }

  // global: repair every other cloud, locally first, then within its group
  note(trace, "escalating " + cloud_name(x, i) + " to global access");
  for (size_t g = 0; g < params.group_count(); ++g)
    for (size_t c = 0; c < params.groups[g].p(); ++c)
      if (!(g == x && c == i)) fetch.contact(g, c, view.segments[g][c], view.erased[g][c]);

  for (size_t g = 0; g < params.group_count(); ++g)
    for (size_t c = 0; c < params.groups[g].p(); ++c) {
      if ((g == x && c == i) || view.intact(g, c)) continue;
      try {
        view.segments[g][c] = code.repair_local(view, g, c);
        view.erased[g][c].assign(params.groups[g].clouds[c].n, 0);
        note(trace, "repaired " + cloud_name(g, c) + " locally");
      } catch (const Error&) {
        // second chance below once the group mates are repaired
      }
    }
  for (size_t g = 0; g < params.group_count(); ++g)
    for (size_t c = 0; c < params.groups[g].p(); ++c) {
      if ((g == x && c == i) || view.intact(g, c)) continue;
      try {
        view.segments[g][c] = code.repair_middle(view, g, c);
        view.erased[g][c].assign(params.groups[g].clouds[c].n, 0);
        note(trace, "repaired " + cloud_name(g, c) + " at middle level");
      } catch (const Error& err) {
        append_reason(report.reason, "global: cloud " + cloud_name(g, c) + " unrepairable (" +
                                         err.what() + ")");
        return finish(ReadReport::Level::unrecoverable, false, {});
      }
    }
  try {
    std::vector<uint16_t> m = code.decode_global(view, x, i);
    note(trace, "global decode of " + cloud_name(x, i));
    return finish(ReadReport::Level::global, true, std::move(m));
  } catch (const Error& err) {
    append_reason(report.reason, std::string("global: ") + err.what());
    return finish(ReadReport::Level::unrecoverable, false, {});
  }
}

FailureModel FailureModel::explicit_model(std::vector<std::array<size_t, 3>> servers) {
  FailureModel m;
  m.kind = Kind::explicit_list;
  m.servers = std::move(servers);
  return m;
}

FailureModel FailureModel::per_cloud_model(size_t k) {
  FailureModel m;
  m.kind = Kind::per_cloud;
  m.per_cloud = k;
  return m;
}

FailureModel FailureModel::iid_model(double p) {
  FailureModel m;
  m.kind = Kind::iid;
  m.probability = p;
  return m;
}

void apply_failures(MemoryShardView& view, const FailureModel& model, SplitMix64& rng) {
  const Topology& t = view.topology();
  switch (model.kind) {
    case FailureModel::Kind::none: break;
    case FailureModel::Kind::explicit_list:
      for (const auto& f : model.servers) view.fail_server(f[0], f[1], f[2]);
      break;
    case FailureModel::Kind::per_cloud:
      for (size_t g = 0; g < t.group_count(); ++g)
        for (size_t c = 0; c < t.cloud_count(g); ++c) {
          size_t n = t.servers[g][c];
          std::vector<size_t> order(n);
          for (size_t s = 0; s < n; ++s) order[s] = s;
          for (size_t s = 0; s < std::min(model.per_cloud, n); ++s) {
            size_t j = s + size_t(rng.below(n - s));
            std::swap(order[s], order[j]);
            view.fail_server(g, c, order[s]);
          }
        }
      break;
    case FailureModel::Kind::iid:
      for (size_t g = 0; g < t.group_count(); ++g)
        for (size_t c = 0; c < t.cloud_count(g); ++c)
          for (size_t s = 0; s < t.servers[g][c]; ++s)
            if (rng.bernoulli(model.probability)) view.fail_server(g, c, s);
      break;
  }
}

std::string TrialStats::to_string() const {
  std::ostringstream out;
  out << "trials=" << trials << " reads=" << reads << "\n";
  for (const auto& [level, count] : level_counts) {
    out << "  " << level << ": " << count;
    if (reads) out << " (" << 100.0 * double(count) / double(reads) << "%)";
    out << "\n";
  }
  out << "  mean_symbols_read=" << mean_symbols_read << "\n";
  out << "  failure_rate=" << failure_rate << "\n";
  out << "  report_digest=" << to_hex64(report_digest) << "\n";
  return out.str();
}

namespace {

template <typename EncodeFn, typename ReadAllFn>
TrialStats run_trials_impl(const FailureModel& model, size_t trials, uint64_t seed,
                           const Topology& topo, EncodeFn encode, ReadAllFn read_all) {
  if (trials < 1) fail(Errc::invalid_params, "at least one trial required");
  TrialStats stats;
  stats.trials = trials;
  SplitMix64 rng(seed);
  uint64_t digest = 0xcbf29ce484222325ull;
  double symbol_sum = 0.0;
  size_t failures = 0;

  for (size_t t = 0; t < trials; ++t) {
    std::vector<uint16_t> symbols = encode(rng);
    MemoryShardView view(topo, std::move(symbols));
    apply_failures(view, model, rng);
    for (const ReadReport& report : read_all(view)) {
      ++stats.reads;
      ++stats.level_counts[ReadReport::level_name(report.level)];
      symbol_sum += double(report.symbols_read);
      if (!report.success) ++failures;
      digest = fnv1a64(report.to_string(), digest);
    }
  }
  stats.mean_symbols_read = stats.reads ? symbol_sum / double(stats.reads) : 0.0;
  stats.failure_rate = stats.reads ? double(failures) / double(stats.reads) : 0.0;
  stats.report_digest = digest;
  return stats;
}

}  // namespace

TrialStats run_trials(const DoubleLevelCode& code, const FailureModel& model, size_t trials,
                      uint64_t seed) {
  Topology topo = Topology::of(code);
  uint32_t q = code.params().field->order();
  auto encode = [&](SplitMix64& rng) {
    std::vector<std::vector<uint16_t>> messages;
    for (const auto& c : code.params().clouds) {
      std::vector<uint16_t> m(c.k);
      for (auto& s : m) s = uint16_t(rng.below(q));
      messages.push_back(std::move(m));
    }
    DlCodeword cw = code.encode(messages);
    std::vector<uint16_t> flat;
    for (const auto& seg : cw.segments) flat.insert(flat.end(), seg.begin(), seg.end());
    return flat;
  };
  auto read_all = [&](MemoryShardView& view) {
    std::vector<ReadReport> reports;
    for (size_t x = 0; x < code.cloud_count(); ++x) reports.push_back(read_cloud(view, code, x));
    return reports;
  };
  return run_trials_impl(model, trials, seed, topo, encode, read_all);
}

TrialStats run_trials(const TripleLevelCode& code, const FailureModel& model, size_t trials,
                      uint64_t seed) {
  Topology topo = Topology::of(code);
  uint32_t q = code.params().field->order();
  auto encode = [&](SplitMix64& rng) {
    TripleLevelCode::Messages messages(code.params().group_count());
    for (size_t x = 0; x < code.params().group_count(); ++x)
      for (const auto& c : code.params().groups[x].clouds) {
        std::vector<uint16_t> m(c.k);
        for (auto& s : m) s = uint16_t(rng.below(q));
        messages[x].push_back(std::move(m));
      }
    TlCodeword cw = code.encode(messages);
    std::vector<uint16_t> flat;
    for (const auto& g : cw.segments)
      for (const auto& seg : g) flat.insert(flat.end(), seg.begin(), seg.end());
    return flat;
  };
  auto read_all = [&](MemoryShardView& view) {
    std::vector<ReadReport> reports;
    for (size_t x = 0; x < code.params().group_count(); ++x)
      for (size_t i = 0; i < code.params().groups[x].p(); ++i)
        reports.push_back(read_cloud(view, code, TlIndex{x, i}));
    return reports;
  };
  return run_trials_impl(model, trials, seed, topo, encode, read_all);
}

}  // namespace tiercode
