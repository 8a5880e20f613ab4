#include <benchmark/benchmark.h>

#include <random>

#include "tiercode/double_level.hpp"
#include "tiercode/triple_level.hpp"

using namespace tiercode;

namespace {

FieldRef gf256() {
  static FieldRef f = Field::make_default(8);
  return f;
}

DoubleLevelCode production_code(size_t clouds) {
  DlParams params;
  params.field = gf256();
  for (size_t x = 0; x < clouds; ++x) params.clouds.push_back({16, 12, 1});
  return DoubleLevelCode::build(params);
}

std::vector<std::vector<uint16_t>> random_messages(const DlParams& params, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<uint16_t>> m;
  for (const auto& c : params.clouds) {
    std::vector<uint16_t> v(c.k);
    for (auto& s : v) s = uint16_t(rng() % params.field->order());
    m.push_back(std::move(v));
  }
  return m;
}

}  // namespace

static void FieldMul(benchmark::State& state) {
  auto f = gf256();
  uint16_t a = 37, b = 113;
  for (auto _ : state) {
    a = f->mul(a, b);
    b = f->add(b, 1);
    if (b == 0) b = 1;
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(FieldMul);

static void CauchyBuild(benchmark::State& state) {
  auto f = gf256();
  size_t s = size_t(state.range(0));
  std::vector<uint16_t> a, b;
  for (size_t i = 0; i < s; ++i) a.push_back(f->beta_pow(i + 1));
  for (size_t i = 0; i < s; ++i) b.push_back(f->beta_pow(s + i + 1));
  for (auto _ : state) {
    auto cm = make_cauchy(f, a, b);
    benchmark::DoNotOptimize(cm.matrix);
  }
}
BENCHMARK(CauchyBuild)->Arg(8)->Arg(32)->Arg(64);

static void DlEncode(benchmark::State& state) {
  DoubleLevelCode code = production_code(size_t(state.range(0)));
  auto messages = random_messages(code.params(), 42);
  for (auto _ : state) {
    DlCodeword cw = code.encode(messages);
    benchmark::DoNotOptimize(cw.segments);
  }
}
BENCHMARK(DlEncode)->Arg(2)->Arg(4)->Arg(8);

static void DlDecodeLocal(benchmark::State& state) {
  DoubleLevelCode code = production_code(4);
  auto messages = random_messages(code.params(), 43);
  DlCodeword cw = code.encode(messages);
  cw.erase_symbol(0, 1);
  cw.erase_symbol(0, 13);
  for (auto _ : state) {
    auto m = code.decode_local(cw, 0);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(DlDecodeLocal);

static void DlDecodeGlobal(benchmark::State& state) {
  DoubleLevelCode code = production_code(4);
  auto messages = random_messages(code.params(), 44);
  DlCodeword cw = code.encode(messages);
  for (size_t j = 0; j < 6; ++j) cw.erase_symbol(0, j);
  for (auto _ : state) {
    auto m = code.decode_global(cw, 0);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(DlDecodeGlobal);

static void TlEncode(benchmark::State& state) {
  TlParams params;
  params.field = gf256();
  for (size_t x = 0; x < 2; ++x) {
    TlGroupParams g;
    g.two_gamma = 1;
    for (size_t i = 0; i < 2; ++i) g.clouds.push_back({16, 12, 1});
    params.groups.push_back(std::move(g));
  }
  TripleLevelCode code = TripleLevelCode::build(params);
  std::mt19937_64 rng(45);
  TripleLevelCode::Messages messages(2);
  for (size_t x = 0; x < 2; ++x)
    for (size_t i = 0; i < 2; ++i) {
      std::vector<uint16_t> m(12);
      for (auto& s : m) s = uint16_t(rng() % 256);
      messages[x].push_back(std::move(m));
    }
  for (auto _ : state) {
    TlCodeword cw = code.encode(messages);
    benchmark::DoNotOptimize(cw.segments);
  }
}
BENCHMARK(TlEncode);

BENCHMARK_MAIN();
