#include "tiercode/triple_level.hpp"

#include <cassert>
#include <optional>

namespace tiercode {

size_t TlGroupParams::delta_group() const {
  size_t d = 0;
  for (const auto& c : clouds) d += c.delta;
  return d;
}

size_t TlParams::cloud_count() const {
  size_t p = 0;
  for (const auto& g : groups) p += g.p();
  return p;
}

size_t TlParams::gamma_total() const {
  size_t g = 0;
  for (const auto& grp : groups) g += grp.p_gamma();
  return g;
}

size_t TlParams::u(size_t x, size_t i) const {
  const auto& c = groups[x].clouds[i];
  return c.k + c.delta + groups[x].two_gamma;
}

size_t TlParams::v(size_t x, size_t i) const {
  const auto& c = groups[x].clouds[i];
  return c.r() - c.delta + groups[x].delta_group() - groups[x].p_gamma() + gamma_total();
}

size_t TlParams::d1(size_t x, size_t i) const {
  const auto& c = groups[x].clouds[i];
  return c.r() - c.delta - groups[x].two_gamma + 1;
}

size_t TlParams::d2(size_t x, size_t i) const {
  const auto& c = groups[x].clouds[i];
  return c.r() - c.delta + groups[x].delta_group() + 1;
}

size_t TlParams::d3(size_t x, size_t i) const { return v(x, i) + 1; }

DlParams TlParams::group_dl_params(size_t x) const {
  return DlParams{field, groups[x].clouds};
}

void TlParams::validate() const {
  if (!field) fail(Errc::invalid_params, "missing field");
  if (groups.size() < 2) fail(Errc::invalid_params, "at least two groups required");
  for (size_t x = 0; x < groups.size(); ++x) {
    const auto& g = groups[x];
    if (g.p() < 2)
      fail(Errc::invalid_params, "group " + std::to_string(x) + ": at least two clouds required");
    if (g.two_gamma < 1)
      fail(Errc::invalid_params, "group " + std::to_string(x) + ": 2*gamma must be at least 1");
    if (g.even_pair_layout() && g.p() % 2 != 0)
      fail(Errc::odd_group_half_gamma,
           "group " + std::to_string(x) + ": half-integral gamma needs an even cloud count");
    for (size_t i = 0; i < g.p(); ++i) {
      const auto& c = g.clouds[i];
      if (c.k == 0 || c.n <= c.k)
        fail(Errc::invalid_params, "cloud (" + std::to_string(x) + "," + std::to_string(i) +
                                       "): need n > k >= 1");
      if (c.delta < 1)
        fail(Errc::invalid_params, "cloud (" + std::to_string(x) + "," + std::to_string(i) +
                                       "): delta must be at least 1");
      if (c.r() <= c.delta + g.two_gamma)
        fail(Errc::gamma_too_large, "cloud (" + std::to_string(x) + "," + std::to_string(i) +
                                        "): need 2*gamma < r - delta");
    }
  }
  size_t gamma = gamma_total();
  for (size_t x = 0; x < groups.size(); ++x)
    for (size_t i = 0; i < groups[x].p(); ++i) {
      size_t need = groups[x].clouds[i].n + groups[x].delta_group() -
                    (groups[x].p_gamma() - groups[x].two_gamma) + gamma;
      if (field->order() < need)
        fail(Errc::field_too_small,
             "need q >= " + std::to_string(need) + ", have q = " + std::to_string(field->order()));
    }
}

size_t TlCodeword::erasure_count(size_t x, size_t i) const {
  size_t count = 0;
  for (uint8_t e : erased[x][i]) count += e;
  return count;
}

CloudPoints TripleLevelCode::default_points(const TlParams& params, size_t x, size_t i) {
  std::vector<uint16_t> seq = default_point_sequence(*params.field);
  size_t u = params.u(x, i);
  size_t v = params.v(x, i);
  if (u + v > seq.size()) fail(Errc::field_too_small, "not enough distinct evaluation points");
  CloudPoints p;
  p.a.assign(seq.begin(), seq.begin() + u);
  p.b.assign(seq.begin() + u, seq.begin() + u + v);
  return p;
}

TripleLevelCode TripleLevelCode::build(TlParams params) {
  params.validate();
  std::vector<std::vector<CloudPoints>> points(params.group_count());
  for (size_t x = 0; x < params.group_count(); ++x)
    for (size_t i = 0; i < params.groups[x].p(); ++i)
      points[x].push_back(default_points(params, x, i));
  return build(std::move(params), std::move(points));
}

TripleLevelCode TripleLevelCode::build(TlParams params,
                                       std::vector<std::vector<CloudPoints>> points) {
  params.validate();
  if (points.size() != params.group_count())
    fail(Errc::invalid_params, "one point set per cloud required");
  std::vector<std::vector<GfMatrix>> cauchy(params.group_count());
  for (size_t x = 0; x < params.group_count(); ++x) {
    if (points[x].size() != params.groups[x].p())
      fail(Errc::invalid_params, "one point set per cloud required");
    for (size_t i = 0; i < params.groups[x].p(); ++i) {
      if (points[x][i].a.size() != params.u(x, i) || points[x][i].b.size() != params.v(x, i))
        fail(Errc::invalid_params, "cloud (" + std::to_string(x) + "," + std::to_string(i) +
                                       "): point counts must be u and v");
      cauchy[x].push_back(make_cauchy(params.field, points[x][i].a, points[x][i].b).matrix);
    }
  }
  return from_cauchy(std::move(params), std::move(cauchy), std::move(points));
}

TripleLevelCode TripleLevelCode::from_cauchy(TlParams params,
                                             std::vector<std::vector<GfMatrix>> cauchy,
                                             std::vector<std::vector<CloudPoints>> points) {
  params.validate();
  if (cauchy.size() != params.group_count())
    fail(Errc::invalid_params, "one Cauchy matrix per cloud required");

  std::vector<std::vector<CloudBlocks>> blocks(params.group_count());
  for (size_t x = 0; x < params.group_count(); ++x) {
    const auto& g = params.groups[x];
    if (cauchy[x].size() != g.p()) fail(Errc::invalid_params, "one Cauchy matrix per cloud");
    for (size_t i = 0; i < g.p(); ++i) {
      const auto& c = g.clouds[i];
      const GfMatrix& t = cauchy[x][i];
      if (t.rows() != params.u(x, i) || t.cols() != params.v(x, i))
        fail(Errc::dimension_mismatch, "cloud (" + std::to_string(x) + "," + std::to_string(i) +
                                           "): T must be u x v");
      CloudBlocks b;
      b.a_self = t.sub(0, c.k, 0, c.r());
      b.u = t.sub(c.k, c.k + c.delta, 0, c.r());
      b.v = t.sub(c.k + c.delta, c.k + c.delta + g.two_gamma, 0, c.r());
      size_t off = c.r();
      for (size_t ip = 0; ip < g.p(); ++ip) {
        if (ip == i) continue;
        size_t w = g.clouds[ip].delta;
        b.b_cross.emplace(ip, t.sub(0, c.k, off, off + w));
        off += w;
      }
      for (size_t y = 0; y < params.group_count(); ++y) {
        if (y == x) continue;
        const auto& gy = params.groups[y];
        size_t block_count = gy.even_pair_layout() ? gy.p() / 2 : gy.p();
        size_t width = gy.even_pair_layout() ? gy.two_gamma : gy.two_gamma / 2;
        std::vector<GfMatrix> blks;
        for (size_t s = 0; s < block_count; ++s) {
          blks.push_back(t.sub(0, c.k, off, off + width));
          off += width;
        }
        b.e_cross.emplace(y, std::move(blks));
      }
      assert(off == t.cols());
      blocks[x].push_back(std::move(b));
    }
  }
  return TripleLevelCode(std::move(params), std::move(cauchy), std::move(blocks),
                         std::move(points));
}

TripleLevelCode TripleLevelCode::from_blocks(TlParams params,
                                             std::vector<std::vector<CloudBlocks>> blocks,
                                             std::vector<std::vector<CloudPoints>> points) {
  params.validate();
  if (blocks.size() != params.group_count()) fail(Errc::invalid_params, "one block set per cloud");
  for (size_t x = 0; x < params.group_count(); ++x) {
    const auto& g = params.groups[x];
    if (blocks[x].size() != g.p()) fail(Errc::invalid_params, "one block set per cloud");
    for (size_t i = 0; i < g.p(); ++i) {
      const auto& c = g.clouds[i];
      const auto& b = blocks[x][i];
      if (b.a_self.rows() != c.k || b.a_self.cols() != c.r())
        fail(Errc::dimension_mismatch, "A block shape");
      if (b.u.rows() != c.delta || b.u.cols() != c.r())
        fail(Errc::dimension_mismatch, "U block shape");
      if (b.v.rows() != g.two_gamma || b.v.cols() != c.r())
        fail(Errc::dimension_mismatch, "V block shape");
      for (size_t ip = 0; ip < g.p(); ++ip) {
        if (ip == i) continue;
        auto it = b.b_cross.find(ip);
        if (it == b.b_cross.end() || it->second.rows() != c.k ||
            it->second.cols() != g.clouds[ip].delta)
          fail(Errc::dimension_mismatch, "B block shape");
      }
      for (size_t y = 0; y < params.group_count(); ++y) {
        if (y == x) continue;
        const auto& gy = params.groups[y];
        size_t block_count = gy.even_pair_layout() ? gy.p() / 2 : gy.p();
        size_t width = gy.even_pair_layout() ? gy.two_gamma : gy.two_gamma / 2;
        auto it = b.e_cross.find(y);
        if (it == b.e_cross.end() || it->second.size() != block_count)
          fail(Errc::dimension_mismatch, "E block count");
        for (const auto& blk : it->second)
          if (blk.rows() != c.k || blk.cols() != width)
            fail(Errc::dimension_mismatch, "E block shape");
      }
    }
  }
  return TripleLevelCode(std::move(params), {}, std::move(blocks), std::move(points));
}

TripleLevelCode::TripleLevelCode(TlParams params, std::vector<std::vector<GfMatrix>> cauchy,
                                 std::vector<std::vector<CloudBlocks>> blocks,
                                 std::vector<std::vector<CloudPoints>> points)
    : params_(std::move(params)),
      cauchy_(std::move(cauchy)),
      blocks_(std::move(blocks)),
      points_(std::move(points)) {
  assemble();
}

const GfMatrix& TripleLevelCode::cloud_cauchy(size_t x, size_t i) const {
  if (cauchy_.empty()) fail(Errc::invalid_input, "code was not built from Cauchy matrices");
  return cauchy_[x][i];
}

void TripleLevelCode::assemble() {
  FieldRef field = params_.field;

  // each group's A/B/U blocks form a double-level code
  for (size_t x = 0; x < params_.group_count(); ++x) {
    std::vector<DoubleLevelCode::CloudBlocks> gb;
    for (size_t i = 0; i < params_.groups[x].p(); ++i) {
      DoubleLevelCode::CloudBlocks b;
      b.a_self = blocks_[x][i].a_self;
      b.u = blocks_[x][i].u;
      b.b_cross = blocks_[x][i].b_cross;
      gb.push_back(std::move(b));
    }
    group_codes_.push_back(
        DoubleLevelCode::from_blocks(params_.group_dl_params(x), std::move(gb)));
  }

  // cross-group generator blocks A_{x,y;i,j}
  for (size_t x = 0; x < params_.group_count(); ++x)
    for (size_t i = 0; i < params_.groups[x].p(); ++i)
      for (size_t y = 0; y < params_.group_count(); ++y) {
        if (y == x) continue;
        const auto& gy = params_.groups[y];
        const auto& eblocks = blocks_[x][i].e_cross.at(y);
        for (size_t j = 0; j < gy.p(); ++j) {
          GfMatrix coeff;
          if (gy.even_pair_layout()) {
            coeff = eblocks[j / 2];
          } else {
            // pair [E_j, E_{j+1}] with the last index wrapping to the first
            coeff = hstack({eblocks[j], eblocks[(j + 1) % gy.p()]});
          }
          a_cross_.emplace(std::make_pair(TlIndex{x, i}, TlIndex{y, j}),
                           coeff * blocks_[y][j].v);
        }
      }

  // local and full-width parity-check matrices
  h_local_.resize(params_.group_count());
  h_global_.resize(params_.group_count());
  for (size_t x = 0; x < params_.group_count(); ++x) {
    const auto& g = params_.groups[x];
    for (size_t i = 0; i < g.p(); ++i) {
      const auto& c = g.clouds[i];
      const auto& b = blocks_[x][i];
      GfMatrix eye = GfMatrix::identity(field, c.r());
      h_local_[x].push_back(vstack({b.a_self, eye, b.u, b.v}).transposed());

      std::vector<GfMatrix> top{b.a_self};
      for (size_t ip = 0; ip < g.p(); ++ip)
        if (ip != i) top.push_back(b.b_cross.at(ip));
      for (size_t y = 0; y < params_.group_count(); ++y)
        if (y != x)
          for (const auto& blk : b.e_cross.at(y)) top.push_back(blk);
      GfMatrix top_row = hstack(top);
      GfMatrix bottom = hstack({eye, GfMatrix(field, c.r(), top_row.cols() - c.r())});
      h_global_[x].push_back(vstack({top_row, bottom}).transposed());
      assert(h_global_[x].back().rows() == params_.v(x, i));
    }
  }

  // full generator
  size_t total = 0;
  size_t ktotal = 0;
  for (const auto& g : params_.groups)
    for (const auto& c : g.clouds) {
      total += c.n;
      ktotal += c.k;
    }
  generator_ = GfMatrix(field, ktotal, total);
  size_t row0 = 0;
  for (size_t x = 0; x < params_.group_count(); ++x)
    for (size_t i = 0; i < params_.groups[x].p(); ++i) {
      size_t col0 = 0;
      for (size_t y = 0; y < params_.group_count(); ++y)
        for (size_t j = 0; j < params_.groups[y].p(); ++j) {
          const auto& cy = params_.groups[y].clouds[j];
          const GfMatrix* par;
          if (x == y && i == j) {
            for (size_t t = 0; t < cy.k; ++t) generator_.set(row0 + t, col0 + t, 1);
            par = &blocks_[x][i].a_self;
          } else if (x == y) {
            par = &group_codes_[x].a_cross(i, j);
          } else {
            par = &a_cross_.at({TlIndex{x, i}, TlIndex{y, j}});
          }
          for (size_t r = 0; r < par->rows(); ++r)
            for (size_t s = 0; s < par->cols(); ++s)
              generator_.set(row0 + r, col0 + cy.k + s, (*par)(r, s));
          col0 += cy.n;
        }
      row0 += params_.groups[x].clouds[i].k;
    }
}

const GfMatrix& TripleLevelCode::a_cross(TlIndex from, TlIndex to) const {
  if (from.group == to.group) {
    if (from.cloud == to.cloud) return blocks_[from.group][from.cloud].a_self;
    return group_codes_[from.group].a_cross(from.cloud, to.cloud);
  }
  return a_cross_.at({from, to});
}

std::vector<std::vector<size_t>> TripleLevelCode::distance_matrix() const {
  std::vector<std::vector<size_t>> d(3);
  for (size_t x = 0; x < params_.group_count(); ++x)
    for (size_t i = 0; i < params_.groups[x].p(); ++i) {
      d[0].push_back(params_.d1(x, i));
      d[1].push_back(params_.d2(x, i));
      d[2].push_back(params_.d3(x, i));
    }
  return d;
}

std::vector<uint16_t> TripleLevelCode::y_from_messages(size_t x, size_t i,
                                                       const Messages& messages) const {
  const Field& f = *params_.field;
  std::vector<uint16_t> y(params_.groups[x].clouds[i].delta, 0);
  for (size_t ip = 0; ip < params_.groups[x].p(); ++ip) {
    if (ip == i) continue;
    y = add_vec(f, y, row_times(f, messages[x][ip], blocks_[x][ip].b_cross.at(i)));
  }
  return y;
}

std::vector<uint16_t> TripleLevelCode::z_pair_from_messages(size_t x, size_t i,
                                                            const Messages& messages) const {
  const Field& f = *params_.field;
  const auto& g = params_.groups[x];
  auto accumulate = [&](size_t block_index, size_t width) {
    std::vector<uint16_t> z(width, 0);
    for (size_t y = 0; y < params_.group_count(); ++y) {
      if (y == x) continue;
      for (size_t j = 0; j < params_.groups[y].p(); ++j)
        z = add_vec(f, z,
                    row_times(f, messages[y][j], blocks_[y][j].e_cross.at(x)[block_index]));
    }
    return z;
  };
  if (g.even_pair_layout()) return accumulate(i / 2, g.two_gamma);
  std::vector<uint16_t> z1 = accumulate(i, g.two_gamma / 2);
  std::vector<uint16_t> z2 = accumulate((i + 1) % g.p(), g.two_gamma / 2);
  z1.insert(z1.end(), z2.begin(), z2.end());
  return z1;
}

TlCodeword TripleLevelCode::encode(const Messages& messages) const {
  const Field& f = *params_.field;
  if (messages.size() != params_.group_count()) fail(Errc::length_mismatch, "one group per group");
  for (size_t x = 0; x < params_.group_count(); ++x) {
    if (messages[x].size() != params_.groups[x].p())
      fail(Errc::length_mismatch, "one message per cloud");
    for (size_t i = 0; i < params_.groups[x].p(); ++i) {
      if (messages[x][i].size() != params_.groups[x].clouds[i].k)
        fail(Errc::length_mismatch, "message (" + std::to_string(x) + "," + std::to_string(i) +
                                        ") must have length k");
      for (uint16_t s : messages[x][i])
        if (!f.contains(s)) fail(Errc::invalid_input, "message symbol outside field");
    }
  }

  TlCodeword cw;
  cw.segments.resize(params_.group_count());
  cw.erased.resize(params_.group_count());
  for (size_t x = 0; x < params_.group_count(); ++x)
    for (size_t i = 0; i < params_.groups[x].p(); ++i) {
      const auto& c = params_.groups[x].clouds[i];
      std::vector<uint16_t> parity = row_times(f, messages[x][i], blocks_[x][i].a_self);
      parity = add_vec(f, parity,
                       row_times(f, y_from_messages(x, i, messages), blocks_[x][i].u));
      parity = add_vec(f, parity,
                       row_times(f, z_pair_from_messages(x, i, messages), blocks_[x][i].v));
      std::vector<uint16_t> seg = messages[x][i];
      seg.insert(seg.end(), parity.begin(), parity.end());
      cw.segments[x].push_back(std::move(seg));
      cw.erased[x].emplace_back(c.n, 0);
    }

#ifndef NDEBUG
  // cross-check the cross-parity formula against m G
  std::vector<uint16_t> m_all;
  for (const auto& g : messages)
    for (const auto& m : g) m_all.insert(m_all.end(), m.begin(), m.end());
  std::vector<uint16_t> c_all = row_times(f, m_all, generator_);
  size_t off = 0;
  for (size_t x = 0; x < params_.group_count(); ++x)
    for (size_t i = 0; i < params_.groups[x].p(); ++i)
      for (size_t j = 0; j < params_.groups[x].clouds[i].n; ++j, ++off)
        assert(c_all[off] == cw.segments[x][i][j]);
#endif
  return cw;
}

std::vector<uint16_t> TripleLevelCode::local_filled(const TlCodeword& cw, size_t x, size_t i,
                                                    TlLocalTrace* trace) const {
  const auto& c = params_.groups[x].clouds[i];
  const auto& seg = cw.segments[x][i];
  const auto& mask = cw.erased[x][i];
  if (seg.size() != c.n || mask.size() != c.n)
    fail(Errc::length_mismatch, "segment length must be n");

  size_t erasures = cw.erasure_count(x, i);
  if (erasures + 1 > params_.d1(x, i))
    fail(Errc::too_many_erasures, "local budget is " + std::to_string(params_.d1(x, i) - 1) +
                                      ", got " + std::to_string(erasures));

  size_t appendix = c.delta + params_.groups[x].two_gamma;
  std::vector<uint16_t> word(seg.begin(), seg.end());
  word.resize(c.n + appendix, 0);
  std::vector<uint8_t> erased(mask.begin(), mask.end());
  erased.resize(c.n + appendix, 1);
  std::vector<uint16_t> zero(h_local_[x][i].rows(), 0);

  std::vector<uint16_t> filled;
  try {
    filled = solve_erasures(h_local_[x][i], word, erased, zero);
  } catch (const Error& err) {
    if (err.code() == Errc::unsolvable || err.code() == Errc::underdetermined)
      fail(Errc::inconsistent, std::string("local solve failed: ") + err.what());
    throw;
  }

  if (trace) {
    trace->erased_positions.clear();
    trace->filled.clear();
    for (size_t j = 0; j < c.n; ++j)
      if (mask[j]) {
        trace->erased_positions.push_back(j);
        trace->filled.push_back(filled[j]);
      }
    trace->cross_parity.assign(filled.begin() + c.n, filled.begin() + c.n + c.delta);
    trace->z_pair.assign(filled.begin() + c.n + c.delta, filled.end());
  }
  return filled;
}

std::vector<uint16_t> TripleLevelCode::decode_local(const TlCodeword& cw, size_t x, size_t i,
                                                    TlLocalTrace* trace) const {
  std::vector<uint16_t> filled = local_filled(cw, x, i, trace);
  return std::vector<uint16_t>(filled.begin(),
                               filled.begin() + params_.groups[x].clouds[i].k);
}

std::vector<uint16_t> TripleLevelCode::repair_local(const TlCodeword& cw, size_t x, size_t i,
                                                    TlLocalTrace* trace) const {
  std::vector<uint16_t> filled = local_filled(cw, x, i, trace);
  return std::vector<uint16_t>(filled.begin(),
                               filled.begin() + params_.groups[x].clouds[i].n);
}

std::pair<std::vector<uint16_t>, std::vector<uint16_t>> TripleLevelCode::recover_cross_parities(
    size_t x, size_t i, std::span<const uint16_t> segment) const {
  const auto& c = params_.groups[x].clouds[i];
  if (segment.size() != c.n) fail(Errc::length_mismatch, "segment length must be n");
  const Field& f = *params_.field;
  std::vector<uint16_t> rhs =
      add_vec(f, std::span<const uint16_t>(segment.begin() + c.k, segment.end()),
              row_times(f, segment.subspan(0, c.k), blocks_[x][i].a_self));
  GfMatrix stacked = vstack({blocks_[x][i].u, blocks_[x][i].v});
  std::vector<uint16_t> sol = solve_row_system(stacked, rhs);
  return {std::vector<uint16_t>(sol.begin(), sol.begin() + c.delta),
          std::vector<uint16_t>(sol.begin() + c.delta, sol.end())};
}

// Assemble the z coefficients of cloud (x,i) from its group mates' solved
// coefficients. In the even-pair layout the pair partner carries the same
// block; otherwise neighbours overlap by half.
std::vector<uint16_t> TripleLevelCode::target_z_pair(
    const std::vector<std::vector<uint16_t>>& pairs, size_t x, size_t i) const {
  const auto& g = params_.groups[x];
  if (g.even_pair_layout()) return pairs[i ^ 1];
  size_t half = g.two_gamma / 2;
  const auto& prev = pairs[(i + g.p() - 1) % g.p()];
  const auto& next = pairs[(i + 1) % g.p()];
  std::vector<uint16_t> z(prev.begin() + half, prev.end());  // z_{x,i}
  z.insert(z.end(), next.begin(), next.begin() + half);      // z_{x,i+1}
  return z;
}

std::vector<uint16_t> TripleLevelCode::middle_repaired(const TlCodeword& cw, size_t x, size_t i,
                                                       TlMiddleTrace* trace) const {
  const auto& g = params_.groups[x];
  const auto& c = g.clouds[i];
  const Field& f = *params_.field;

  size_t erasures = cw.erasure_count(x, i);
  if (erasures + 1 > params_.d2(x, i))
    fail(Errc::too_many_erasures, "middle budget is " + std::to_string(params_.d2(x, i) - 1) +
                                      ", got " + std::to_string(erasures));
  for (size_t ip = 0; ip < g.p(); ++ip)
    if (ip != i && !cw.intact(x, ip))
      fail(Errc::siblings_undecoded, "cloud (" + std::to_string(x) + "," + std::to_string(ip) +
                                         ") still has erasures");

  // solve each sibling's parity for (y, z) and reconstruct the target's z
  std::vector<std::vector<uint16_t>> zs(g.p());
  if (trace) trace->siblings.clear();
  for (size_t ip = 0; ip < g.p(); ++ip) {
    if (ip == i) continue;
    auto [y_ip, z_ip] = recover_cross_parities(x, ip, cw.segments[x][ip]);
    zs[ip] = z_ip;
    if (trace) trace->siblings.push_back({ip, y_ip, z_ip});
  }
  std::vector<uint16_t> z_target = target_z_pair(zs, x, i);

  // remove the global cross parities, leaving a group-level codeword
  DlCodeword group_cw;
  group_cw.segments.resize(g.p());
  group_cw.erased.resize(g.p());
  for (size_t ip = 0; ip < g.p(); ++ip) {
    const std::vector<uint16_t>& z = (ip == i) ? z_target : zs[ip];
    std::vector<uint16_t> corr = row_times(f, z, blocks_[x][ip].v);
    std::vector<uint16_t> seg = cw.segments[x][ip];
    size_t kk = g.clouds[ip].k;
    for (size_t j = 0; j < corr.size(); ++j) seg[kk + j] = f.add(seg[kk + j], corr[j]);
    group_cw.segments[ip] = std::move(seg);
    group_cw.erased[ip] = (ip == i) ? cw.erased[x][i] : std::vector<uint8_t>(g.clouds[ip].n, 0);
  }

  DlGlobalTrace group_trace;
  std::vector<uint16_t> repaired_tilde =
      group_codes_[x].repair_global(group_cw, i, trace ? &group_trace : nullptr);

  // undo the removal to obtain the actual segment
  std::vector<uint16_t> correction = row_times(f, z_target, blocks_[x][i].v);
  std::vector<uint16_t> segment = repaired_tilde;
  for (size_t j = 0; j < correction.size(); ++j)
    segment[c.k + j] = f.add(segment[c.k + j], correction[j]);

  if (trace) {
    trace->z_pair = z_target;
    trace->correction = correction;
    trace->group = group_trace;
    trace->erased_positions.clear();
    trace->filled.clear();
    for (size_t j = 0; j < c.n; ++j)
      if (cw.erased[x][i][j]) {
        trace->erased_positions.push_back(j);
        trace->filled.push_back(segment[j]);
      }
  }
  return segment;
}

std::vector<uint16_t> TripleLevelCode::decode_middle(const TlCodeword& cw, size_t x, size_t i,
                                                     TlMiddleTrace* trace) const {
  std::vector<uint16_t> segment = middle_repaired(cw, x, i, trace);
  return std::vector<uint16_t>(segment.begin(),
                               segment.begin() + params_.groups[x].clouds[i].k);
}

std::vector<uint16_t> TripleLevelCode::repair_middle(const TlCodeword& cw, size_t x, size_t i,
                                                     TlMiddleTrace* trace) const {
  return middle_repaired(cw, x, i, trace);
}

std::pair<std::vector<uint16_t>, std::vector<uint16_t>> TripleLevelCode::global_filled(
    const TlCodeword& cw, size_t x, size_t i, TlGlobalTrace* trace) const {
  const auto& g = params_.groups[x];
  const auto& c = g.clouds[i];
  const Field& f = *params_.field;

  size_t erasures = cw.erasure_count(x, i);
  if (erasures + 1 > params_.d3(x, i))
    fail(Errc::too_many_erasures, "global budget is " + std::to_string(params_.d3(x, i) - 1) +
                                      ", got " + std::to_string(erasures));
  for (size_t y = 0; y < params_.group_count(); ++y)
    for (size_t j = 0; j < params_.groups[y].p(); ++j)
      if (!(y == x && j == i) && !cw.intact(y, j))
        fail(Errc::others_undecoded, "cloud (" + std::to_string(y) + "," + std::to_string(j) +
                                         ") still has erasures");

  // messages of every other cloud
  Messages messages(params_.group_count());
  for (size_t y = 0; y < params_.group_count(); ++y) {
    messages[y].resize(params_.groups[y].p());
    for (size_t j = 0; j < params_.groups[y].p(); ++j) {
      if (y == x && j == i) {
        messages[y][j].assign(params_.groups[y].clouds[j].k, 0);  // unknown
        continue;
      }
      const auto& seg = cw.segments[y][j];
      messages[y][j].assign(seg.begin(), seg.begin() + params_.groups[y].clouds[j].k);
    }
  }

  // the target's own cross parities depend only on the other clouds
  std::vector<uint16_t> y_i = y_from_messages(x, i, messages);
  std::vector<uint16_t> z_i = z_pair_from_messages(x, i, messages);

  // syndrome: within-group blocks m B, then cross-group blocks m E
  std::vector<uint16_t> syndrome(c.r(), 0);
  std::vector<std::vector<uint16_t>> syn_blocks;
  for (size_t ip = 0; ip < g.p(); ++ip) {
    if (ip == i) continue;
    std::vector<uint16_t> y_ip = recover_cross_parities(x, ip, cw.segments[x][ip]).first;
    for (size_t iq = 0; iq < g.p(); ++iq) {
      if (iq == ip || iq == i) continue;
      y_ip = add_vec(f, y_ip, row_times(f, messages[x][iq], blocks_[x][iq].b_cross.at(ip)));
    }
    syn_blocks.push_back(y_ip);  // now equals m_{x,i} B_{x,x;i,ip}
  }
  for (size_t y = 0; y < params_.group_count(); ++y) {
    if (y == x) continue;
    const auto& gy = params_.groups[y];
    size_t block_count = gy.even_pair_layout() ? gy.p() / 2 : gy.p();
    for (size_t s = 0; s < block_count; ++s) {
      // the group's z coefficients carry the target's E contribution
      size_t carrier = gy.even_pair_layout() ? 2 * s : s;
      std::vector<uint16_t> z_block =
          recover_cross_parities(y, carrier, cw.segments[y][carrier]).second;
      if (!gy.even_pair_layout())
        z_block.resize(gy.two_gamma / 2);  // first half of [z_s, z_{s+1}]
      for (size_t yq = 0; yq < params_.group_count(); ++yq) {
        if (yq == y) continue;
        for (size_t jq = 0; jq < params_.groups[yq].p(); ++jq) {
          if (yq == x && jq == i) continue;
          z_block = add_vec(
              f, z_block, row_times(f, messages[yq][jq], blocks_[yq][jq].e_cross.at(y)[s]));
        }
      }
      syn_blocks.push_back(z_block);  // now equals m_{x,i} E_{x,y;i;s}
    }
  }
  for (const auto& blk : syn_blocks) syndrome.insert(syndrome.end(), blk.begin(), blk.end());

  // shift the received word by all known cross contributions
  std::vector<uint16_t> correction =
      add_vec(f, row_times(f, y_i, blocks_[x][i].u), row_times(f, z_i, blocks_[x][i].v));
  std::vector<uint16_t> shifted = cw.segments[x][i];
  for (size_t j = 0; j < c.r(); ++j) shifted[c.k + j] = f.add(shifted[c.k + j], correction[j]);

  std::vector<uint16_t> filled_shifted;
  try {
    filled_shifted = solve_erasures(h_global_[x][i], shifted, cw.erased[x][i], syndrome);
  } catch (const Error& err) {
    if (err.code() == Errc::unsolvable || err.code() == Errc::underdetermined)
      fail(Errc::inconsistent, std::string("global solve failed: ") + err.what());
    throw;
  }

  if (trace) {
    trace->cross_parity = y_i;
    trace->z_pair = z_i;
    trace->syndrome_blocks = syn_blocks;
    trace->erased_positions.clear();
    trace->shifted_filled.clear();
    trace->filled.clear();
    for (size_t j = 0; j < c.n; ++j)
      if (cw.erased[x][i][j]) {
        trace->erased_positions.push_back(j);
        trace->shifted_filled.push_back(filled_shifted[j]);
        uint16_t final_value =
            j < c.k ? filled_shifted[j] : f.add(filled_shifted[j], correction[j - c.k]);
        trace->filled.push_back(final_value);
      }
  }
  return {std::move(filled_shifted), std::move(correction)};
}

std::vector<uint16_t> TripleLevelCode::decode_global(const TlCodeword& cw, size_t x, size_t i,
                                                     TlGlobalTrace* trace) const {
  auto [filled_shifted, correction] = global_filled(cw, x, i, trace);
  return std::vector<uint16_t>(filled_shifted.begin(),
                               filled_shifted.begin() + params_.groups[x].clouds[i].k);
}

std::vector<uint16_t> TripleLevelCode::repair_global(const TlCodeword& cw, size_t x, size_t i,
                                                     TlGlobalTrace* trace) const {
  auto [filled_shifted, correction] = global_filled(cw, x, i, trace);
  const auto& c = params_.groups[x].clouds[i];
  std::vector<uint16_t> seg(filled_shifted.begin(), filled_shifted.begin() + c.n);
  for (size_t j = 0; j < c.r(); ++j)
    seg[c.k + j] = params_.field->add(seg[c.k + j], correction[j]);
  return seg;
}

}  // namespace tiercode
