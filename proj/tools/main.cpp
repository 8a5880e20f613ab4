#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tiercode/codec_io.hpp"
#include "tiercode/dynamics.hpp"
#include "tiercode/hash.hpp"
#include "tiercode/simstore.hpp"

namespace fs = std::filesystem;
using namespace tiercode;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 2 config error, 3 io error, 4 unrecoverable decode
int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::io_failure:
      return 3;
    case Errc::unrecoverable:
    case Errc::too_many_erasures:
    case Errc::siblings_undecoded:
    case Errc::others_undecoded:
    case Errc::inconsistent:
    case Errc::unsolvable:
    case Errc::underdetermined:
    case Errc::target_undecodable:
      return 4;
    default:
      return 2;
  }
}

std::vector<uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open " + path.string());
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

void write_file_bytes(const fs::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) fail(Errc::io_failure, "cannot write " + path.string());
}

std::string stripe_dir(size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "stripe%03zu", index);
  return buf;
}

struct FileManifest {
  uint64_t code_hash = 0;
  size_t message_bytes = 0;
  size_t stripes = 0;
  // clouds carrying the file's byte stream, in stream order; scale-out adds
  // clouds that are not part of the original file
  std::vector<std::pair<size_t, size_t>> file_clouds;

  void save(const fs::path& dir) const {
    std::ofstream out(dir / "file.manifest", std::ios::trunc);
    if (!out) fail(Errc::io_failure, "cannot write file manifest");
    out << "format=tiercode-file-v1\n"
        << "code_hash=" << to_hex64(code_hash) << "\n"
        << "message_bytes=" << message_bytes << "\n"
        << "stripes=" << stripes << "\n";
    for (const auto& [g, c] : file_clouds) out << "file_cloud=" << g << ":" << c << "\n";
  }

  static FileManifest load(const fs::path& dir) {
    std::ifstream in(dir / "file.manifest");
    if (!in) fail(Errc::io_failure, "cannot open file manifest in " + dir.string());
    FileManifest m;
    std::string line;
    while (std::getline(in, line)) {
      size_t eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "code_hash") m.code_hash = from_hex64(value);
      if (key == "message_bytes") m.message_bytes = std::stoul(value);
      if (key == "stripes") m.stripes = std::stoul(value);
      if (key == "file_cloud") {
        size_t colon = value.find(':');
        m.file_clouds.emplace_back(std::stoul(value.substr(0, colon)),
                                   std::stoul(value.substr(colon + 1)));
      }
    }
    return m;
  }
};

// message symbols of one stripe, split per cloud
std::vector<std::vector<uint16_t>> split_dl_messages(const CodeBundle& bundle,
                                                     std::span<const uint16_t> symbols) {
  std::vector<std::vector<uint16_t>> messages;
  size_t off = 0;
  for (const auto& c : bundle.dl->params().clouds) {
    messages.emplace_back(symbols.begin() + off, symbols.begin() + off + c.k);
    off += c.k;
  }
  return messages;
}

TripleLevelCode::Messages split_tl_messages(const CodeBundle& bundle,
                                            std::span<const uint16_t> symbols) {
  TripleLevelCode::Messages messages(bundle.tl->params().group_count());
  size_t off = 0;
  for (size_t x = 0; x < messages.size(); ++x)
    for (const auto& c : bundle.tl->params().groups[x].clouds) {
      messages[x].emplace_back(symbols.begin() + off, symbols.begin() + off + c.k);
      off += c.k;
    }
  return messages;
}

DlCodeword dl_codeword_from_store(ShardStore& store) {
  const Topology& t = store.topology();
  DlCodeword cw;
  for (size_t c = 0; c < t.cloud_count(0); ++c) {
    size_t n = t.servers[0][c];
    std::vector<uint16_t> seg(n, 0);
    std::vector<uint8_t> mask(n, 0);
    for (size_t s = 0; s < n; ++s) {
      if (store.failed(0, c, s))
        mask[s] = 1;
      else
        seg[s] = store.fetch(0, c, s);
    }
    cw.segments.push_back(std::move(seg));
    cw.erased.push_back(std::move(mask));
  }
  return cw;
}

void check_store_matches(const CodeBundle& bundle, const ShardStore& store) {
  if (store.code_hash() != bundle.hash)
    fail(Errc::invalid_input, "shards were written for code " + to_hex64(store.code_hash()) +
                                  ", not " + to_hex64(bundle.hash));
}

std::optional<std::pair<size_t, size_t>> parse_cloud_flag(const std::string& text,
                                                          unsigned levels) {
  if (text.empty()) return std::nullopt;
  size_t comma = text.find(',');
  if (levels == 2) {
    if (comma != std::string::npos)
      fail(Errc::invalid_params, "double-level codes take a single cloud index");
    return std::make_pair(size_t(0), size_t(std::stoul(text)));
  }
  if (comma == std::string::npos)
    fail(Errc::invalid_params, "triple-level codes take --cloud group,cloud");
  return std::make_pair(size_t(std::stoul(text.substr(0, comma))),
                        size_t(std::stoul(text.substr(comma + 1))));
}

std::vector<std::array<size_t, 3>> parse_server_list(const std::string& text, unsigned levels) {
  std::vector<std::array<size_t, 3>> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    std::vector<size_t> parts;
    std::stringstream ts(token);
    std::string part;
    while (std::getline(ts, part, ':')) parts.push_back(std::stoul(part));
    if (levels == 2 && parts.size() == 2)
      out.push_back({0, parts[0], parts[1]});
    else if (parts.size() == 3)
      out.push_back({parts[0], parts[1], parts[2]});
    else
      fail(Errc::invalid_params, "bad server token: " + token);
  }
  return out;
}

struct StripeSet {
  FileManifest manifest;
  std::vector<ShardStore> stores;
};

StripeSet open_stripes(const fs::path& dir) {
  StripeSet set;
  set.manifest = FileManifest::load(dir);
  for (size_t i = 0; i < set.manifest.stripes; ++i)
    set.stores.push_back(ShardStore::open(dir / stripe_dir(i)));
  return set;
}

int cmd_build(const fs::path& config, const fs::path& out) {
  CodeBundle bundle = build_from_config_file(config);
  save_code(out, bundle);
  std::cout << format_distance_matrix(bundle);
  std::cout << "code " << to_hex64(bundle.hash) << " -> " << out.string() << "\n";
  return 0;
}

int cmd_encode(const fs::path& code_path, const fs::path& input, const fs::path& out) {
  CodeBundle bundle = load_code(code_path);
  std::vector<uint8_t> bytes = read_file_bytes(input);
  if (bytes.empty()) fail(Errc::invalid_input, "refusing to encode an empty file");
  std::vector<uint16_t> symbols = pack_bytes(bytes, bundle.field()->degree());

  size_t stripe_symbols = bundle.total_message_symbols();
  size_t stripes = (symbols.size() + stripe_symbols - 1) / stripe_symbols;
  symbols.resize(stripes * stripe_symbols, 0);

  fs::create_directories(out);
  Topology topo = bundle.levels == 2 ? Topology::of(*bundle.dl) : Topology::of(*bundle.tl);
  for (size_t i = 0; i < stripes; ++i) {
    std::span<const uint16_t> part(symbols.data() + i * stripe_symbols, stripe_symbols);
    std::vector<uint16_t> flat;
    if (bundle.levels == 2) {
      DlCodeword cw = bundle.dl->encode(split_dl_messages(bundle, part));
      for (const auto& seg : cw.segments) flat.insert(flat.end(), seg.begin(), seg.end());
    } else {
      TlCodeword cw = bundle.tl->encode(split_tl_messages(bundle, part));
      for (const auto& g : cw.segments)
        for (const auto& seg : g) flat.insert(flat.end(), seg.begin(), seg.end());
    }
    ShardStore::create(out / stripe_dir(i), topo, bundle.hash, flat,
                       bundle.field()->symbol_bytes(), i);
  }
  FileManifest manifest{bundle.hash, bytes.size(), stripes, {}};
  for (size_t g = 0; g < topo.group_count(); ++g)
    for (size_t c = 0; c < topo.cloud_count(g); ++c) manifest.file_clouds.emplace_back(g, c);
  manifest.save(out);
  std::cout << "encoded " << bytes.size() << " bytes into " << stripes << " stripe(s), "
            << topo.total_symbols() << " shards each -> " << out.string() << "\n";
  return 0;
}

int cmd_fail(const fs::path& shards, const std::string& servers, std::optional<size_t> per_cloud,
             std::optional<double> iid, uint64_t seed) {
  StripeSet set = open_stripes(shards);
  if (set.stores.empty()) fail(Errc::io_failure, "no stripes found");
  const Topology& topo = set.stores[0].topology();

  // one server selection, applied to every stripe: a down server loses all
  // of its stripes at once
  std::vector<std::array<size_t, 3>> selection;
  if (!servers.empty()) {
    selection = parse_server_list(servers, topo.levels);
  } else {
    MemoryShardView probe(topo, std::vector<uint16_t>(topo.total_symbols(), 0));
    SplitMix64 rng(seed);
    FailureModel model = per_cloud ? FailureModel::per_cloud_model(*per_cloud)
                                   : FailureModel::iid_model(iid.value_or(0.0));
    apply_failures(probe, model, rng);
    selection = probe.failed_servers();
  }
  for (auto& store : set.stores) store.fail_explicit(selection);
  std::cout << "failed " << selection.size() << " server(s) across " << set.stores.size()
            << " stripe(s)\n";
  return 0;
}

int cmd_read(const fs::path& code_path, const fs::path& shards, const std::string& cloud_flag,
             const fs::path& out, bool verbose) {
  CodeBundle bundle = load_code(code_path);
  StripeSet set = open_stripes(shards);
  auto target = parse_cloud_flag(cloud_flag, bundle.levels);

  std::vector<std::string> trace;
  std::vector<std::string>* trace_ptr = verbose ? &trace : nullptr;
  bool all_ok = true;
  std::vector<uint16_t> recovered;

  for (size_t i = 0; i < set.stores.size(); ++i) {
    ShardStore& store = set.stores[i];
    check_store_matches(bundle, store);
    auto run_one = [&](size_t g, size_t c) {
      ReadReport r = bundle.levels == 2
                         ? read_cloud(store, *bundle.dl, c, trace_ptr)
                         : read_cloud(store, *bundle.tl, TlIndex{g, c}, trace_ptr);
      std::cout << "stripe " << i << " " << r.to_string() << "\n";
      if (!r.success) all_ok = false;
      recovered.insert(recovered.end(), r.message.begin(), r.message.end());
    };
    if (target) {
      run_one(target->first, target->second);
    } else {
      for (const auto& [g, c] : set.manifest.file_clouds) run_one(g, c);
    }
  }
  if (verbose)
    for (const auto& line : trace) std::cout << "  " << line << "\n";
  if (!all_ok) fail(Errc::unrecoverable, "one or more reads failed");

  if (!target && !out.empty()) {
    std::vector<uint8_t> bytes =
        unpack_symbols(recovered, bundle.field()->degree(), set.manifest.message_bytes);
    write_file_bytes(out, bytes);
    std::cout << "recovered " << bytes.size() << " bytes -> " << out.string() << "\n";
  } else if (target) {
    std::cout << "message:";
    for (uint16_t s : recovered) std::cout << " " << bundle.field()->to_beta_string(s);
    std::cout << "\n";
  }
  return 0;
}

int cmd_trials(const fs::path& code_path, std::optional<double> iid,
               std::optional<size_t> per_cloud, size_t trials, std::optional<uint64_t> seed) {
  CodeBundle bundle = load_code(code_path);
  FailureModel model = FailureModel::none_model();
  if (iid) model = FailureModel::iid_model(*iid);
  if (per_cloud) model = FailureModel::per_cloud_model(*per_cloud);
  uint64_t s = seed.value_or(bundle.default_seed);
  TrialStats stats = bundle.levels == 2 ? run_trials(*bundle.dl, model, trials, s)
                                        : run_trials(*bundle.tl, model, trials, s);
  std::cout << stats.to_string();
  return 0;
}

uint16_t parse_point_json(const Field& f, const json& v) {
  if (v.is_string()) return f.parse_element(v.get<std::string>());
  uint32_t raw = v.get<uint32_t>();
  if (!f.contains(raw)) fail(Errc::invalid_params, "point value outside field");
  return uint16_t(raw);
}

int cmd_scale(const fs::path& code_path, const fs::path& shards, const fs::path& cloud_config,
              const fs::path& input, const fs::path& out_code) {
  CodeBundle bundle = load_code(code_path);
  if (bundle.levels != 2)
    fail(Errc::invalid_params, "scale-out is defined for double-level codes");
  StripeSet set = open_stripes(shards);

  json jc;
  {
    std::ifstream in(cloud_config);
    if (!in) fail(Errc::io_failure, "cannot open " + cloud_config.string());
    try {
      in >> jc;
    } catch (const json::exception& e) {
      fail(Errc::invalid_params, std::string("bad new-cloud config: ") + e.what());
    }
  }
  ScaleOutSpec spec;
  try {
    spec.cloud.n = jc.at("n").get<size_t>();
    spec.cloud.k = jc.at("k").get<size_t>();
    spec.cloud.delta = jc.at("delta").get<size_t>();
    if (jc.contains("points")) {
      CloudPoints p;
      for (const auto& v : jc["points"].at("a")) p.a.push_back(parse_point_json(*bundle.field(), v));
      for (const auto& v : jc["points"].at("b")) p.b.push_back(parse_point_json(*bundle.field(), v));
      spec.points = std::move(p);
    }
  } catch (const json::exception& e) {
    fail(Errc::invalid_params, std::string("bad new-cloud config: ") + e.what());
  }

  std::vector<uint8_t> bytes = read_file_bytes(input);
  std::vector<uint16_t> symbols = pack_bytes(bytes, bundle.field()->degree());
  symbols.resize(set.stores.size() * spec.cloud.k, 0);

  CodeBundle grown_bundle;
  size_t p = bundle.dl->cloud_count();
  for (size_t i = 0; i < set.stores.size(); ++i) {
    ShardStore& store = set.stores[i];
    check_store_matches(bundle, store);
    DlCodeword stored = dl_codeword_from_store(store);
    spec.message.assign(symbols.begin() + ptrdiff_t(i * spec.cloud.k),
                        symbols.begin() + ptrdiff_t((i + 1) * spec.cloud.k));
    ScaleOutResult grown = scale_out(*bundle.dl, stored, spec);

    if (i == 0) {
      grown_bundle.levels = 2;
      grown_bundle.dl = grown.code;
      grown_bundle.hash = fnv1a64(serialize_code(grown_bundle));
      grown_bundle.default_seed = bundle.default_seed;
      save_code(out_code, grown_bundle);
      for (const auto& msg : grown.transcript)
        std::cout << "stripe 0 exchange: " << msg.to_string(*bundle.field()) << "\n";
    }
    store.set_code_hash(grown_bundle.hash);
    for (size_t x = 0; x < p; ++x) {
      const auto& c = bundle.dl->params().clouds[x];
      std::span<const uint16_t> parity(grown.codeword.segments[x].data() + c.k, c.r());
      store.rewrite_cloud(0, x, parity, c.k);
    }
    store.add_cloud(0, grown.codeword.segments[p]);
  }
  set.manifest.code_hash = grown_bundle.hash;
  set.manifest.save(shards);
  std::cout << "scaled out to " << p + 1 << " clouds; new code " << to_hex64(grown_bundle.hash)
            << " -> " << out_code.string() << "\n";
  return 0;
}

int cmd_split(const fs::path& code_path, const fs::path& shards, const fs::path& plan_config,
              const fs::path& out_code) {
  CodeBundle bundle = load_code(code_path);
  if (bundle.levels != 2) fail(Errc::invalid_params, "split is defined for double-level codes");
  StripeSet set = open_stripes(shards);

  json jp;
  {
    std::ifstream in(plan_config);
    if (!in) fail(Errc::io_failure, "cannot open " + plan_config.string());
    try {
      in >> jp;
    } catch (const json::exception& e) {
      fail(Errc::invalid_params, std::string("bad split plan: ") + e.what());
    }
  }
  SplitPlan plan;
  try {
    plan.cloud = jp.at("cloud").get<size_t>();
    auto parse_part = [&](const json& j) {
      return DlCloudParams{j.at("n").get<size_t>(), j.at("k").get<size_t>(),
                           j.at("delta").get<size_t>()};
    };
    plan.part_a = parse_part(jp.at("a"));
    plan.part_b = parse_part(jp.at("b"));
  } catch (const json::exception& e) {
    fail(Errc::invalid_params, std::string("bad split plan: ") + e.what());
  }

  CodeBundle split_bundle;
  for (size_t i = 0; i < set.stores.size(); ++i) {
    ShardStore& store = set.stores[i];
    check_store_matches(bundle, store);
    DlCodeword stored = dl_codeword_from_store(store);
    SplitResult result = split_cloud(*bundle.dl, stored, plan);

    if (i == 0) {
      split_bundle.levels = 2;
      split_bundle.dl = result.code;
      split_bundle.hash = fnv1a64(serialize_code(split_bundle));
      split_bundle.default_seed = bundle.default_seed;
      save_code(out_code, split_bundle);
    }
    store.set_code_hash(split_bundle.hash);
    store.apply_split(0, plan.cloud, result.codeword.segments[plan.cloud],
                      result.codeword.segments[plan.cloud + 1]);
  }
  set.manifest.code_hash = split_bundle.hash;
  std::vector<std::pair<size_t, size_t>> remapped;
  for (const auto& [g, c] : set.manifest.file_clouds) {
    if (c < plan.cloud) {
      remapped.emplace_back(g, c);
    } else if (c == plan.cloud) {  // both parts carry the stream, in order
      remapped.emplace_back(g, c);
      remapped.emplace_back(g, c + 1);
    } else {
      remapped.emplace_back(g, c + 1);
    }
  }
  set.manifest.file_clouds = std::move(remapped);
  set.manifest.save(shards);
  std::cout << "split cloud " << plan.cloud << "; new code " << to_hex64(split_bundle.hash)
            << " -> " << out_code.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical Cauchy Reed-Solomon erasure codes for tiered cloud storage"};
  app.require_subcommand(1);

  std::string config, code_path, input, out, shards, cloud_flag, servers, plan_path;
  std::string new_cloud;
  std::optional<double> iid;
  std::optional<size_t> per_cloud;
  std::optional<uint64_t> seed_flag;
  size_t trials = 1000;
  uint64_t seed = 0;
  bool verbose = false;

  auto* build = app.add_subcommand("build", "build a code from a config and print D");
  build->add_option("--config", config, "code-spec config (JSON)")->required();
  build->add_option("--out", out, "output code artifact")->default_val("code.json");

  auto* encode = app.add_subcommand("encode", "encode a file into shard directories");
  encode->add_option("--code", code_path, "code artifact")->required();
  encode->add_option("--input", input, "input file")->required();
  encode->add_option("--out", out, "output shard directory")->required();

  auto* fail_cmd = app.add_subcommand("fail", "mark servers as failed");
  fail_cmd->add_option("--shards", shards, "shard directory")->required();
  fail_cmd->add_option("--servers", servers, "explicit list g:c:s,... (c:s,... for level 2)");
  fail_cmd->add_option("--random-per-cloud", per_cloud, "fail k random servers per cloud");
  fail_cmd->add_option("--iid", iid, "fail each server independently with probability p");
  fail_cmd->add_option("--seed", seed, "selection seed");

  auto* read = app.add_subcommand("read", "read a cloud (or the whole file) with escalation");
  read->add_option("--code", code_path, "code artifact")->required();
  read->add_option("--shards", shards, "shard directory")->required();
  read->add_option("--cloud", cloud_flag, "target cloud x (level 2) or x,i (level 3)");
  read->add_option("--out", out, "write the recovered file here");
  read->add_flag("--verbose", verbose, "print the decode trace");

  auto* trials_cmd = app.add_subcommand("trials", "seeded failure-injection read trials");
  trials_cmd->add_option("--code", code_path, "code artifact")->required();
  trials_cmd->add_option("--iid", iid, "iid failure probability");
  trials_cmd->add_option("--per-cloud", per_cloud, "failures per cloud");
  trials_cmd->add_option("--trials", trials, "trial count")->default_val(1000);
  trials_cmd->add_option("--seed", seed_flag, "trial seed");

  auto* scale = app.add_subcommand("scale", "add a cloud to a live double-level code");
  scale->add_option("--code", code_path, "code artifact")->required();
  scale->add_option("--shards", shards, "shard directory")->required();
  scale->add_option("--new-cloud", new_cloud, "new cloud config (JSON: n, k, delta)")->required();
  scale->add_option("--input", input, "file carrying the new cloud's message bytes")->required();
  scale->add_option("--out-code", out, "output artifact for the grown code")->required();

  auto* split = app.add_subcommand("split", "split one cloud of a live double-level code");
  split->add_option("--code", code_path, "code artifact")->required();
  split->add_option("--shards", shards, "shard directory")->required();
  split->add_option("--plan", plan_path, "split plan (JSON: cloud, a{n,k,delta}, b{...})")
      ->required();
  split->add_option("--out-code", out, "output artifact for the split code")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) return cmd_build(config, out);
    if (encode->parsed()) return cmd_encode(code_path, input, out);
    if (fail_cmd->parsed()) return cmd_fail(shards, servers, per_cloud, iid, seed);
    if (read->parsed()) return cmd_read(code_path, shards, cloud_flag, out, verbose);
    if (trials_cmd->parsed()) return cmd_trials(code_path, iid, per_cloud, trials, seed_flag);
    if (scale->parsed()) return cmd_scale(code_path, shards, new_cloud, input, out);
    if (split->parsed()) return cmd_split(code_path, shards, plan_path, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
