#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "tiercode/double_level.hpp"
#include "tiercode/triple_level.hpp"

// The worked GF(2^4) instances used across the suites: two clouds of
// (n,k,delta) = (6,3,1) sharing one Cauchy matrix, and the two-group
// extension with half-integral gamma on top of the same blocks.
namespace worked {

inline tiercode::FieldRef gf16() {
  static tiercode::FieldRef f = tiercode::Field::make(4, 0x13);
  return f;
}

inline uint16_t B(unsigned e) { return gf16()->beta_pow(e); }

inline tiercode::CloudPoints dl_points() {
  return {{B(1), B(2), B(3), B(7)}, {B(8), B(9), B(10), B(11)}};
}

inline tiercode::DoubleLevelCode dl_code() {
  tiercode::DlParams params{gf16(), {{6, 3, 1}, {6, 3, 1}}};
  return tiercode::DoubleLevelCode::build(params, {dl_points(), dl_points()});
}

inline tiercode::CloudPoints tl_points() {
  return {{B(1), B(2), B(3), B(7), B(6)}, {B(8), B(9), B(10), B(11), B(12)}};
}

inline tiercode::TripleLevelCode tl_code() {
  tiercode::TlParams params;
  params.field = gf16();
  for (int x = 0; x < 2; ++x) {
    tiercode::TlGroupParams g;
    g.two_gamma = 1;
    g.clouds = {{6, 3, 1}, {6, 3, 1}};
    params.groups.push_back(std::move(g));
  }
  std::vector<std::vector<tiercode::CloudPoints>> points{{tl_points(), tl_points()},
                                                         {tl_points(), tl_points()}};
  return tiercode::TripleLevelCode::build(params, points);
}

// all weight-t subsets of [0, n)
inline void for_each_pattern(size_t n, size_t t,
                             const std::function<void(const std::vector<size_t>&)>& fn) {
  std::vector<size_t> idx(t);
  for (size_t i = 0; i < t; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    size_t i = t;
    while (i > 0 && idx[i - 1] == n - t + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (size_t j = i; j < t; ++j) idx[j] = idx[j - 1] + 1;
  }
}

struct Rng {
  uint64_t s;
  explicit Rng(uint64_t seed = 0xfeedface1234ull) : s(seed) {}
  uint64_t next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  }
};

struct TempDirGuard {
  std::filesystem::path path;
  explicit TempDirGuard(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDirGuard() { std::filesystem::remove_all(path); }
};

}  // namespace worked
