#include "tiercode/codec_io.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tiercode/hash.hpp"
#include "worked_codes.hpp"

using namespace tiercode;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const char* kConfigDir = TIERCODE_TEST_CONFIG_DIR;

}  // namespace

TEST_CASE("the worked double-level config builds the worked code") {
  CodeBundle bundle = build_from_config_file(fs::path(kConfigDir) / "worked_double.json");
  REQUIRE(bundle.levels == 2);
  CHECK(bundle.dl->generator() == worked::dl_code().generator());
  CHECK(bundle.total_message_symbols() == 6);
  CHECK(bundle.total_symbols() == 12);
}

TEST_CASE("the worked triple-level config builds the worked code") {
  CodeBundle bundle = build_from_config_file(fs::path(kConfigDir) / "worked_triple.json");
  REQUIRE(bundle.levels == 3);
  CHECK(bundle.tl->generator() == worked::tl_code().generator());
}

TEST_CASE("distance matrices print in the published layout") {
  CodeBundle hetero = build_from_config_file(fs::path(kConfigDir) / "hetero_double.json");
  CHECK(format_distance_matrix(hetero) ==
        "D =\n"
        " 4 | 3\n"
        " 7 | 6\n");

  CodeBundle triple = build_from_config_file(fs::path(kConfigDir) / "hetero_triple.json");
  CHECK(format_distance_matrix(triple) ==
        "D =\n"
        "  2  3 |  2  2 |  2  2  2  2\n"
        "  6  7 |  5  5 |  8  8  8  8\n"
        "  9 10 |  9  9 | 11 11 11 11\n");

  CodeBundle worked2 = build_from_config_file(fs::path(kConfigDir) / "worked_double.json");
  CHECK(format_distance_matrix(worked2) ==
        "D =\n"
        " 3 | 3\n"
        " 5 | 5\n");
}

TEST_CASE("config hashes are stable and content-sensitive") {
  std::string text = slurp(fs::path(kConfigDir) / "worked_double.json");
  CodeBundle a = build_from_config_text(text);
  CodeBundle b = build_from_config_text(text);
  CHECK(a.hash == b.hash);
  CHECK(a.hash != 0);

  CodeBundle c = build_from_config_file(fs::path(kConfigDir) / "hetero_double.json");
  CHECK(a.hash != c.hash);
}

TEST_CASE("config validation failures surface with their codes") {
  CHECK_THROWS_AS(build_from_config_text("not json"), Error);
  CHECK_THROWS_AS(build_from_config_text("{}"), Error);
  CHECK_THROWS_AS(build_from_config_text(R"({"levels": 4, "field": {"m": 4}})"), Error);

  // gamma bound violated: 2*gamma = r - delta
  std::string bad_gamma = R"({
    "levels": 3, "field": {"m": 4},
    "groups": [
      {"two_gamma": 2, "clouds": [{"n":6,"k":3,"delta":1},{"n":6,"k":3,"delta":1}]},
      {"two_gamma": 1, "clouds": [{"n":6,"k":3,"delta":1},{"n":6,"k":3,"delta":1}]}
    ]})";
  try {
    build_from_config_text(bad_gamma);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::gamma_too_large);
  }
}

TEST_CASE("artifacts round-trip through save and load") {
  worked::TempDirGuard guard("tiercode_codec_io");
  CodeBundle bundle = build_from_config_file(fs::path(kConfigDir) / "worked_double.json");
  fs::path path = guard.path / "code.json";
  save_code(path, bundle);
  CodeBundle loaded = load_code(path);
  CHECK(loaded.levels == 2);
  CHECK(loaded.hash == bundle.hash);
  CHECK(loaded.dl->generator() == bundle.dl->generator());
  CHECK(loaded.dl->points().size() == 2);

  CodeBundle triple = build_from_config_file(fs::path(kConfigDir) / "hetero_triple.json");
  fs::path path3 = guard.path / "code3.json";
  save_code(path3, triple);
  CodeBundle loaded3 = load_code(path3);
  CHECK(loaded3.hash == triple.hash);
  CHECK(loaded3.tl->generator() == triple.tl->generator());

  CHECK_THROWS_AS(load_code(guard.path / "missing.json"), Error);
  std::ofstream(guard.path / "junk.json") << "{\"format\": \"nope\"}";
  CHECK_THROWS_AS(load_code(guard.path / "junk.json"), Error);
}

TEST_CASE("byte packing") {
  SUBCASE("nibbles") {
    std::vector<uint8_t> bytes{0xAB, 0xCD};
    CHECK(pack_bytes(bytes, 4) == std::vector<uint16_t>{0xA, 0xB, 0xC, 0xD});
    CHECK(unpack_symbols(std::vector<uint16_t>{0xA, 0xB, 0xC, 0xD}, 4, 2) == bytes);
  }
  SUBCASE("whole bytes") {
    std::vector<uint8_t> bytes{1, 2, 250};
    CHECK(pack_bytes(bytes, 8) == std::vector<uint16_t>{1, 2, 250});
  }
  SUBCASE("twelve-bit symbols straddle bytes") {
    std::vector<uint8_t> bytes{0x12, 0x34, 0x56};
    CHECK(pack_bytes(bytes, 12) == std::vector<uint16_t>{0x123, 0x456});
    CHECK(unpack_symbols(std::vector<uint16_t>{0x123, 0x456}, 12, 3) == bytes);
  }
  SUBCASE("tails are zero-padded") {
    std::vector<uint8_t> bytes{0xFF};
    CHECK(pack_bytes(bytes, 12) == std::vector<uint16_t>{0xFF0});
    CHECK(unpack_symbols(std::vector<uint16_t>{0xFF0}, 12, 1) == bytes);
  }
  SUBCASE("round-trip on random data") {
    worked::Rng rng(0xbeef);
    for (unsigned m : {4u, 5u, 8u, 12u, 16u}) {
      for (int t = 0; t < 20; ++t) {
        size_t len = 1 + rng.next() % 40;
        std::vector<uint8_t> bytes(len);
        for (auto& b : bytes) b = uint8_t(rng.next());
        std::vector<uint16_t> symbols = pack_bytes(bytes, m);
        for (uint16_t s : symbols) CHECK(s < (1u << m));
        CHECK(unpack_symbols(symbols, m, len) == bytes);
      }
    }
  }
  SUBCASE("asking for more bytes than packed fails") {
    CHECK_THROWS_AS(unpack_symbols(std::vector<uint16_t>{0xA}, 4, 2), Error);
  }
}
