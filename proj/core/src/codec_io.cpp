#include "tiercode/codec_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tiercode/hash.hpp"

namespace tiercode {

using nlohmann::json;

size_t CodeBundle::total_message_symbols() const {
  size_t k = 0;
  if (levels == 2)
    for (const auto& c : dl->params().clouds) k += c.k;
  else
    for (const auto& g : tl->params().groups)
      for (const auto& c : g.clouds) k += c.k;
  return k;
}

size_t CodeBundle::total_symbols() const {
  size_t n = 0;
  if (levels == 2)
    for (const auto& c : dl->params().clouds) n += c.n;
  else
    for (const auto& g : tl->params().groups)
      for (const auto& c : g.clouds) n += c.n;
  return n;
}

namespace {

uint32_t parse_poly_hex(const std::string& text) {
  size_t pos = 0;
  if (text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0) pos = 2;
  uint32_t v = 0;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    v <<= 4;
    if (c >= '0' && c <= '9')
      v |= uint32_t(c - '0');
    else if (c >= 'a' && c <= 'f')
      v |= uint32_t(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F')
      v |= uint32_t(c - 'A' + 10);
    else
      fail(Errc::invalid_params, "bad poly_hex: " + text);
  }
  return v;
}

uint16_t parse_point(const Field& f, const json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    uint32_t v = j.get<uint32_t>();
    if (!f.contains(v)) fail(Errc::invalid_params, "point value outside field");
    return uint16_t(v);
  }
  if (j.is_string()) return f.parse_element(j.get<std::string>());
  fail(Errc::invalid_params, "points must be integers or beta-power strings");
}

FieldRef parse_field(const json& j) {
  if (!j.contains("field") || !j["field"].contains("m"))
    fail(Errc::invalid_params, "config needs field.m");
  unsigned m = j["field"]["m"].get<unsigned>();
  uint32_t poly = j["field"].contains("poly_hex")
                      ? parse_poly_hex(j["field"]["poly_hex"].get<std::string>())
                      : Field::default_poly(m);
  return Field::make(m, poly);
}

DlCloudParams parse_cloud(const json& j) {
  DlCloudParams c;
  c.n = j.at("n").get<size_t>();
  c.k = j.at("k").get<size_t>();
  c.delta = j.at("delta").get<size_t>();
  return c;
}

CloudPoints parse_points(const Field& f, const json& j) {
  CloudPoints p;
  for (const auto& v : j.at("a")) p.a.push_back(parse_point(f, v));
  for (const auto& v : j.at("b")) p.b.push_back(parse_point(f, v));
  return p;
}

json matrix_to_json(const GfMatrix& m) {
  json rows = json::array();
  for (size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

GfMatrix matrix_from_json(FieldRef field, const json& j) {
  std::vector<std::vector<uint16_t>> rows;
  for (const auto& row : j) rows.push_back(row.get<std::vector<uint16_t>>());
  return GfMatrix::from_rows(std::move(field), rows);
}

json points_to_json(const CloudPoints& p) {
  return json{{"a", p.a}, {"b", p.b}};
}

CloudPoints points_from_json(const json& j) {
  CloudPoints p;
  p.a = j.at("a").get<std::vector<uint16_t>>();
  p.b = j.at("b").get<std::vector<uint16_t>>();
  return p;
}

json serialize_to_json(const CodeBundle& bundle) {
  json out;
  out["format"] = "tiercode-code-v1";
  out["levels"] = bundle.levels;
  const Field& f = *bundle.field();
  out["field"] = json{{"m", f.degree()}, {"poly", f.poly()}};
  out["seed"] = bundle.default_seed;
  if (bundle.levels == 2) {
    const DoubleLevelCode& code = *bundle.dl;
    json clouds = json::array();
    for (size_t x = 0; x < code.cloud_count(); ++x) {
      const auto& c = code.params().clouds[x];
      const auto& b = code.blocks(x);
      json jc{{"n", c.n}, {"k", c.k}, {"delta", c.delta}};
      jc["a_self"] = matrix_to_json(b.a_self);
      jc["u"] = matrix_to_json(b.u);
      json cross;
      for (const auto& [y, mat] : b.b_cross) cross[std::to_string(y)] = matrix_to_json(mat);
      jc["b_cross"] = std::move(cross);
      if (!code.points().empty()) jc["points"] = points_to_json(code.points()[x]);
      clouds.push_back(std::move(jc));
    }
    out["clouds"] = std::move(clouds);
  } else {
    const TripleLevelCode& code = *bundle.tl;
    json groups = json::array();
    for (size_t x = 0; x < code.params().group_count(); ++x) {
      const auto& g = code.params().groups[x];
      json jg{{"two_gamma", g.two_gamma}};
      json clouds = json::array();
      for (size_t i = 0; i < g.p(); ++i) {
        const auto& c = g.clouds[i];
        const auto& b = code.blocks(x, i);
        json jc{{"n", c.n}, {"k", c.k}, {"delta", c.delta}};
        jc["a_self"] = matrix_to_json(b.a_self);
        jc["u"] = matrix_to_json(b.u);
        jc["v"] = matrix_to_json(b.v);
        json cross;
        for (const auto& [ip, mat] : b.b_cross) cross[std::to_string(ip)] = matrix_to_json(mat);
        jc["b_cross"] = std::move(cross);
        json ecross;
        for (const auto& [y, blks] : b.e_cross) {
          json list = json::array();
          for (const auto& blk : blks) list.push_back(matrix_to_json(blk));
          ecross[std::to_string(y)] = std::move(list);
        }
        jc["e_cross"] = std::move(ecross);
        if (!code.points().empty()) jc["points"] = points_to_json(code.points()[x][i]);
        clouds.push_back(std::move(jc));
      }
      jg["clouds"] = std::move(clouds);
      groups.push_back(std::move(jg));
    }
    out["groups"] = std::move(groups);
  }
  return out;
}

CodeBundle bundle_from_artifact(const json& j) {
  if (!j.contains("format") || j["format"] != "tiercode-code-v1")
    fail(Errc::invalid_params, "not a code artifact");
  CodeBundle bundle;
  bundle.levels = j.at("levels").get<unsigned>();
  FieldRef field = Field::make(j.at("field").at("m").get<unsigned>(),
                               j.at("field").at("poly").get<uint32_t>());
  bundle.default_seed = j.value("seed", uint64_t(0));
  if (bundle.levels == 2) {
    DlParams params;
    params.field = field;
    std::vector<DoubleLevelCode::CloudBlocks> blocks;
    std::vector<CloudPoints> points;
    bool has_points = true;
    for (const auto& jc : j.at("clouds")) {
      params.clouds.push_back(parse_cloud(jc));
      DoubleLevelCode::CloudBlocks b;
      b.a_self = matrix_from_json(field, jc.at("a_self"));
      b.u = matrix_from_json(field, jc.at("u"));
      for (const auto& [key, mat] : jc.at("b_cross").items())
        b.b_cross.emplace(std::stoul(key), matrix_from_json(field, mat));
      blocks.push_back(std::move(b));
      if (jc.contains("points"))
        points.push_back(points_from_json(jc.at("points")));
      else
        has_points = false;
    }
    bundle.dl = DoubleLevelCode::from_blocks(std::move(params), std::move(blocks),
                                             has_points ? std::move(points)
                                                        : std::vector<CloudPoints>{});
  } else if (bundle.levels == 3) {
    TlParams params;
    params.field = field;
    std::vector<std::vector<TripleLevelCode::CloudBlocks>> blocks;
    std::vector<std::vector<CloudPoints>> points;
    bool has_points = true;
    for (const auto& jg : j.at("groups")) {
      TlGroupParams g;
      g.two_gamma = jg.at("two_gamma").get<unsigned>();
      blocks.emplace_back();
      points.emplace_back();
      for (const auto& jc : jg.at("clouds")) {
        g.clouds.push_back(parse_cloud(jc));
        TripleLevelCode::CloudBlocks b;
        b.a_self = matrix_from_json(field, jc.at("a_self"));
        b.u = matrix_from_json(field, jc.at("u"));
        b.v = matrix_from_json(field, jc.at("v"));
        for (const auto& [key, mat] : jc.at("b_cross").items())
          b.b_cross.emplace(std::stoul(key), matrix_from_json(field, mat));
        for (const auto& [key, list] : jc.at("e_cross").items()) {
          std::vector<GfMatrix> blks;
          for (const auto& mat : list) blks.push_back(matrix_from_json(field, mat));
          b.e_cross.emplace(std::stoul(key), std::move(blks));
        }
        blocks.back().push_back(std::move(b));
        if (jc.contains("points"))
          points.back().push_back(points_from_json(jc.at("points")));
        else
          has_points = false;
      }
      params.groups.push_back(std::move(g));
    }
    bundle.tl = TripleLevelCode::from_blocks(
        std::move(params), std::move(blocks),
        has_points ? std::move(points) : std::vector<std::vector<CloudPoints>>{});
  } else {
    fail(Errc::invalid_params, "levels must be 2 or 3");
  }
  bundle.hash = fnv1a64(serialize_code(bundle));
  return bundle;
}

}  // namespace

std::string serialize_code(const CodeBundle& bundle) { return serialize_to_json(bundle).dump(); }

CodeBundle build_from_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::invalid_params, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    CodeBundle bundle;
    bundle.levels = j.at("levels").get<unsigned>();
    FieldRef field = parse_field(j);
    bundle.default_seed = j.value("seed", uint64_t(0));
    if (bundle.levels == 2) {
      DlParams params;
      params.field = field;
      for (const auto& jc : j.at("clouds")) params.clouds.push_back(parse_cloud(jc));
      if (j.contains("points")) {
        std::vector<CloudPoints> points;
        for (const auto& jp : j["points"]) points.push_back(parse_points(*field, jp));
        bundle.dl = DoubleLevelCode::build(std::move(params), std::move(points));
      } else {
        bundle.dl = DoubleLevelCode::build(std::move(params));
      }
    } else if (bundle.levels == 3) {
      TlParams params;
      params.field = field;
      for (const auto& jg : j.at("groups")) {
        TlGroupParams g;
        g.two_gamma = jg.at("two_gamma").get<unsigned>();
        for (const auto& jc : jg.at("clouds")) g.clouds.push_back(parse_cloud(jc));
        params.groups.push_back(std::move(g));
      }
      if (j.contains("points")) {
        std::vector<std::vector<CloudPoints>> points;
        for (const auto& jgp : j["points"]) {
          points.emplace_back();
          for (const auto& jp : jgp) points.back().push_back(parse_points(*field, jp));
        }
        bundle.tl = TripleLevelCode::build(std::move(params), std::move(points));
      } else {
        bundle.tl = TripleLevelCode::build(std::move(params));
      }
    } else {
      fail(Errc::invalid_params, "levels must be 2 or 3");
    }
    bundle.hash = fnv1a64(serialize_code(bundle));
    return bundle;
  } catch (const json::exception& e) {
    fail(Errc::invalid_params, std::string("bad config: ") + e.what());
  }
}

CodeBundle build_from_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return build_from_config_text(buf.str());
}

void save_code(const std::filesystem::path& path, const CodeBundle& bundle) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_failure, "cannot write " + path.string());
  out << serialize_to_json(bundle).dump(1) << "\n";
  if (!out) fail(Errc::io_failure, "cannot write " + path.string());
}

CodeBundle load_code(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::io_failure, std::string("bad code artifact: ") + e.what());
  }
  try {
    return bundle_from_artifact(j);
  } catch (const json::exception& e) {
    fail(Errc::invalid_params, std::string("bad code artifact: ") + e.what());
  }
}

std::string format_distance_matrix(const CodeBundle& bundle) {
  std::vector<std::vector<size_t>> rows;
  std::vector<size_t> group_sizes;
  if (bundle.levels == 2) {
    rows = bundle.dl->distance_matrix();
    group_sizes.assign(bundle.dl->cloud_count(), 1);  // bars between clouds
  } else {
    rows = bundle.tl->distance_matrix();
    for (const auto& g : bundle.tl->params().groups) group_sizes.push_back(g.p());
  }
  size_t width = 1;
  for (const auto& row : rows)
    for (size_t v : row) width = std::max(width, std::to_string(v).size());

  std::string out = "D =\n";
  for (const auto& row : rows) {
    std::string line;
    size_t col = 0;
    for (size_t gi = 0; gi < group_sizes.size(); ++gi) {
      if (gi) line += " |";
      for (size_t c = 0; c < group_sizes[gi]; ++c, ++col) {
        std::string v = std::to_string(row[col]);
        line += " " + std::string(width - v.size(), ' ') + v;
      }
    }
    out += line + "\n";
  }
  return out;
}

std::vector<uint16_t> pack_bytes(std::span<const uint8_t> bytes, unsigned m) {
  std::vector<uint16_t> symbols;
  uint32_t acc = 0;
  unsigned bits = 0;
  for (uint8_t byte : bytes) {
    acc = (acc << 8) | byte;
    bits += 8;
    while (bits >= m) {
      bits -= m;
      symbols.push_back(uint16_t((acc >> bits) & ((1u << m) - 1)));
    }
  }
  if (bits > 0) symbols.push_back(uint16_t((acc << (m - bits)) & ((1u << m) - 1)));
  return symbols;
}

std::vector<uint8_t> unpack_symbols(std::span<const uint16_t> symbols, unsigned m,
                                    size_t byte_count) {
  std::vector<uint8_t> bytes;
  uint32_t acc = 0;
  unsigned bits = 0;
  for (uint16_t s : symbols) {
    acc = (acc << m) | s;
    bits += m;
    while (bits >= 8 && bytes.size() < byte_count) {
      bits -= 8;
      bytes.push_back(uint8_t((acc >> bits) & 0xff));
    }
    if (bytes.size() == byte_count) break;
  }
  if (bytes.size() < byte_count)
    fail(Errc::invalid_input, "not enough symbols for the requested byte count");
  return bytes;
}

}  // namespace tiercode
