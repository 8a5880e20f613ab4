#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "worked_codes.hpp"

namespace {

namespace fs = std::filesystem;

const char* kCli = TIERCODE_CLI_PATH;
const char* kConfigDir = TIERCODE_CONFIG_DIR;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RunResult run_cli(const fs::path& workdir, const std::string& args) {
  fs::path out = workdir / "_stdout.txt";
  fs::path err = workdir / "_stderr.txt";
  std::string cmd = std::string(kCli) + " " + args + " > " + out.string() + " 2> " +
                    err.string();
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return RunResult{code, slurp(out), slurp(err)};
}

void write_bytes(const fs::path& p, const std::vector<uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::vector<uint8_t> random_bytes(size_t len, uint64_t seed) {
  worked::Rng rng(seed);
  std::vector<uint8_t> bytes(len);
  for (auto& b : bytes) b = uint8_t(rng.next());
  return bytes;
}

}  // namespace

TEST_CASE("build prints the distance matrix and a stable hash") {
  worked::TempDirGuard dir("tiercode_cli_build");
  std::string config = (fs::path(kConfigDir) / "hetero_double.json").string();
  RunResult r = run_cli(dir.path, "build --config " + config + " --out " +
                                      (dir.path / "code.json").string());
  CHECK(r.code == 0);
  CHECK(r.out.find("D =\n 4 | 3\n 7 | 6\n") != std::string::npos);

  RunResult again = run_cli(dir.path, "build --config " + config + " --out " +
                                          (dir.path / "code2.json").string());
  // same logical config, same printed hash
  auto hash_of = [](const std::string& out) {
    size_t pos = out.find("code ");
    REQUIRE(pos != std::string::npos);
    return out.substr(pos + 5, 16);
  };
  CHECK(hash_of(r.out) == hash_of(again.out));
}

TEST_CASE("build rejects bad configs with exit code 2") {
  worked::TempDirGuard dir("tiercode_cli_badcfg");
  std::ofstream(dir.path / "bad.json") << R"({
    "levels": 3, "field": {"m": 4},
    "groups": [
      {"two_gamma": 2, "clouds": [{"n":6,"k":3,"delta":1},{"n":6,"k":3,"delta":1}]},
      {"two_gamma": 1, "clouds": [{"n":6,"k":3,"delta":1},{"n":6,"k":3,"delta":1}]}
    ]})";
  RunResult r = run_cli(dir.path, "build --config " + (dir.path / "bad.json").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("gamma_too_large") != std::string::npos);

  RunResult missing = run_cli(dir.path, "build --config " + (dir.path / "nope.json").string());
  CHECK(missing.code == 3);  // io error
}

TEST_CASE("encode, fail within budget, read back bit-exactly") {
  worked::TempDirGuard dir("tiercode_cli_roundtrip");
  std::string code = (dir.path / "code.json").string();
  run_cli(dir.path, "build --config " +
                        (fs::path(kConfigDir) / "worked_double.json").string() + " --out " + code);

  std::vector<uint8_t> payload = random_bytes(129, 0xd00d);
  write_bytes(dir.path / "msg.bin", payload);
  std::string shards = (dir.path / "shards").string();
  RunResult enc = run_cli(dir.path, "encode --code " + code + " --input " +
                                        (dir.path / "msg.bin").string() + " --out " + shards);
  CHECK(enc.code == 0);

  // two failures per cloud: the local radius covers them everywhere
  RunResult fl = run_cli(dir.path, "fail --shards " + shards + " --random-per-cloud 2 --seed 9");
  CHECK(fl.code == 0);

  RunResult rd = run_cli(dir.path, "read --code " + code + " --shards " + shards + " --out " +
                                       (dir.path / "back.bin").string());
  CHECK(rd.code == 0);
  CHECK(rd.out.find("level=local") != std::string::npos);
  CHECK(slurp(dir.path / "back.bin") == slurp(dir.path / "msg.bin"));
}

TEST_CASE("reads escalate and report; unrecoverable exits 4") {
  worked::TempDirGuard dir("tiercode_cli_escalate");
  std::string code = (dir.path / "code.json").string();
  run_cli(dir.path, "build --config " +
                        (fs::path(kConfigDir) / "worked_double.json").string() + " --out " + code);
  write_bytes(dir.path / "msg.bin", random_bytes(9, 1));
  std::string shards = (dir.path / "shards").string();
  run_cli(dir.path, "encode --code " + code + " --input " + (dir.path / "msg.bin").string() +
                        " --out " + shards);

  run_cli(dir.path, "fail --shards " + shards + " --servers 0:0,0:1,0:2");
  RunResult rd = run_cli(dir.path, "read --code " + code + " --shards " + shards +
                                       " --cloud 0 --verbose");
  CHECK(rd.code == 0);
  CHECK(rd.out.find("level=global") != std::string::npos);
  CHECK(rd.out.find("escalating") != std::string::npos);

  run_cli(dir.path, "fail --shards " + shards + " --servers 0:3,0:4");
  RunResult dead = run_cli(dir.path, "read --code " + code + " --shards " + shards + " --cloud 0");
  CHECK(dead.code == 4);
  CHECK(dead.out.find("level=unrecoverable") != std::string::npos);
}

TEST_CASE("the single-cloud narrative: one failure local, two need full access") {
  worked::TempDirGuard dir("tiercode_cli_narrative");
  std::string code = (dir.path / "code.json").string();
  run_cli(dir.path, "build --config " +
                        (fs::path(kConfigDir) / "single_cloud.json").string() + " --out " + code);
  write_bytes(dir.path / "msg.bin", random_bytes(1, 2));
  std::string shards = (dir.path / "shards").string();
  run_cli(dir.path, "encode --code " + code + " --input " + (dir.path / "msg.bin").string() +
                        " --out " + shards);

  run_cli(dir.path, "fail --shards " + shards + " --servers 0:0");
  RunResult one = run_cli(dir.path, "read --code " + code + " --shards " + shards + " --cloud 0");
  CHECK(one.out.find("level=local") != std::string::npos);

  run_cli(dir.path, "fail --shards " + shards + " --servers 0:1");
  RunResult two = run_cli(dir.path, "read --code " + code + " --shards " + shards + " --cloud 0");
  CHECK(two.code == 0);
  CHECK(two.out.find("level=global") != std::string::npos);
}

TEST_CASE("triple-level reads stop at the middle level") {
  worked::TempDirGuard dir("tiercode_cli_middle");
  std::string code = (dir.path / "code.json").string();
  run_cli(dir.path, "build --config " +
                        (fs::path(kConfigDir) / "worked_triple.json").string() + " --out " + code);
  write_bytes(dir.path / "msg.bin", random_bytes(24, 3));
  std::string shards = (dir.path / "shards").string();
  run_cli(dir.path, "encode --code " + code + " --input " + (dir.path / "msg.bin").string() +
                        " --out " + shards);

  run_cli(dir.path, "fail --shards " + shards + " --servers 0:0:0,0:0:3,0:0:4");
  RunResult rd = run_cli(dir.path, "read --code " + code + " --shards " + shards + " --cloud 0,0");
  CHECK(rd.code == 0);
  CHECK(rd.out.find("level=middle") != std::string::npos);
}

TEST_CASE("split keeps sibling shard files byte-identical and the file readable") {
  worked::TempDirGuard dir("tiercode_cli_split");
  std::ofstream(dir.path / "base.json") << R"({"levels": 2, "field": {"m": 6},
    "clouds": [{"n":8,"k":4,"delta":2},{"n":8,"k":4,"delta":2},{"n":8,"k":4,"delta":2}]})";
  std::string code = (dir.path / "code.json").string();
  run_cli(dir.path, "build --config " + (dir.path / "base.json").string() + " --out " + code);
  std::vector<uint8_t> payload = random_bytes(33, 0xaa);
  write_bytes(dir.path / "msg.bin", payload);
  std::string shards = (dir.path / "shards").string();
  run_cli(dir.path, "encode --code " + code + " --input " + (dir.path / "msg.bin").string() +
                        " --out " + shards);

  // snapshot the sibling clouds' shard files of every stripe
  std::vector<std::pair<fs::path, std::string>> before;
  for (const auto& entry : fs::recursive_directory_iterator(shards)) {
    std::string s = entry.path().string();
    if (entry.is_regular_file() &&
        (s.find("/c1/") != std::string::npos || s.find("/c2/") != std::string::npos))
      before.emplace_back(entry.path(), slurp(entry.path()));
  }
  REQUIRE(!before.empty());

  std::ofstream(dir.path / "plan.json")
      << R"({"cloud": 0, "a": {"n":4,"k":2,"delta":1}, "b": {"n":4,"k":2,"delta":1}})";
  RunResult sp = run_cli(dir.path, "split --code " + code + " --shards " + shards + " --plan " +
                                       (dir.path / "plan.json").string() + " --out-code " +
                                       (dir.path / "split.json").string());
  CHECK(sp.code == 0);

  // old c1 -> c2, old c2 -> c3; contents must be untouched
  for (const auto& [path, bytes] : before) {
    std::string s = path.string();
    size_t pos = s.rfind("/c");
    std::string renamed = s.substr(0, pos + 2) +
                          std::to_string(std::stoul(s.substr(pos + 2, 1)) + 1) +
                          s.substr(pos + 3);
    CHECK(slurp(renamed) == bytes);
  }

  RunResult rd = run_cli(dir.path, "read --code " + (dir.path / "split.json").string() +
                                       " --shards " + shards + " --out " +
                                       (dir.path / "back.bin").string());
  CHECK(rd.code == 0);
  CHECK(slurp(dir.path / "back.bin") == slurp(dir.path / "msg.bin"));
}

TEST_CASE("scale-out grows the store and keeps the file readable") {
  worked::TempDirGuard dir("tiercode_cli_scale");
  std::string code = (dir.path / "code.json").string();
  run_cli(dir.path, "build --config " +
                        (fs::path(kConfigDir) / "worked_double.json").string() + " --out " + code);
  std::vector<uint8_t> payload = random_bytes(21, 0xbb);
  write_bytes(dir.path / "msg.bin", payload);
  write_bytes(dir.path / "new.bin", random_bytes(12, 0xcc));
  std::string shards = (dir.path / "shards").string();
  run_cli(dir.path, "encode --code " + code + " --input " + (dir.path / "msg.bin").string() +
                        " --out " + shards);

  std::ofstream(dir.path / "cloud.json") << R"({"n": 6, "k": 3, "delta": 1})";
  RunResult sc = run_cli(dir.path, "scale --code " + code + " --shards " + shards +
                                       " --new-cloud " + (dir.path / "cloud.json").string() +
                                       " --input " + (dir.path / "new.bin").string() +
                                       " --out-code " + (dir.path / "grown.json").string());
  CHECK(sc.code == 0);
  CHECK(sc.out.find("exchange") != std::string::npos);

  RunResult rd = run_cli(dir.path, "read --code " + (dir.path / "grown.json").string() +
                                       " --shards " + shards + " --out " +
                                       (dir.path / "back.bin").string());
  CHECK(rd.code == 0);
  CHECK(slurp(dir.path / "back.bin") == slurp(dir.path / "msg.bin"));

  RunResult nc = run_cli(dir.path, "read --code " + (dir.path / "grown.json").string() +
                                       " --shards " + shards + " --cloud 2");
  CHECK(nc.code == 0);
  CHECK(nc.out.find("level=local") != std::string::npos);
}

TEST_CASE("trial runs are reproducible through the cli") {
  worked::TempDirGuard dir("tiercode_cli_trials");
  std::string code = (dir.path / "code.json").string();
  run_cli(dir.path, "build --config " +
                        (fs::path(kConfigDir) / "worked_double.json").string() + " --out " + code);
  std::string cmd = "trials --code " + code + " --iid 0.15 --trials 300 --seed 21";
  RunResult a = run_cli(dir.path, cmd);
  RunResult b = run_cli(dir.path, cmd);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("report_digest=") != std::string::npos);

  RunResult zero = run_cli(dir.path, "trials --code " + code + " --trials 50 --seed 1");
  CHECK(zero.out.find("local: 100 (100%)") != std::string::npos);
}
