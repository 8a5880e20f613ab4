#include "tiercode/double_level.hpp"

#include <cassert>
#include <set>

namespace tiercode {

size_t DlParams::delta_total() const {
  size_t d = 0;
  for (const auto& c : clouds) d += c.delta;
  return d;
}

void DlParams::validate() const {
  if (!field) fail(Errc::invalid_params, "missing field");
  if (clouds.empty()) fail(Errc::invalid_params, "at least one cloud required");
  size_t delta = delta_total();
  size_t max_n = 0;
  for (size_t x = 0; x < clouds.size(); ++x) {
    const auto& c = clouds[x];
    if (c.k == 0 || c.n <= c.k)
      fail(Errc::invalid_params, "cloud " + std::to_string(x) + ": need n > k >= 1");
    if (c.delta < 1 || c.delta > c.r())
      fail(Errc::invalid_params, "cloud " + std::to_string(x) + ": need 1 <= delta <= r");
    if (d1(x) < 2)
      fail(Errc::invalid_params, "cloud " + std::to_string(x) + ": local distance below 2");
    max_n = std::max(max_n, c.n);
  }
  if (field->order() < max_n + delta)
    fail(Errc::field_too_small, "need q >= " + std::to_string(max_n + delta) + ", have q = " +
                                    std::to_string(field->order()));
}

size_t DlCodeword::erasure_count(size_t cloud) const {
  size_t count = 0;
  for (uint8_t e : erased[cloud]) count += e;
  return count;
}

std::vector<uint16_t> default_point_sequence(const Field& f) {
  std::vector<uint16_t> seq;
  seq.reserve(f.order());
  for (uint32_t e = 1; e < f.order(); ++e) seq.push_back(f.beta_pow(e));  // beta^1 .. beta^(q-1)=1
  seq.push_back(0);
  return seq;
}

CloudPoints DoubleLevelCode::default_points(const DlParams& params, size_t x) {
  std::vector<uint16_t> seq = default_point_sequence(*params.field);
  size_t u = params.u(x);
  size_t v = params.v(x);
  if (u + v > seq.size()) fail(Errc::field_too_small, "not enough distinct evaluation points");
  CloudPoints p;
  p.a.assign(seq.begin(), seq.begin() + u);
  p.b.assign(seq.begin() + u, seq.begin() + u + v);
  return p;
}

DoubleLevelCode DoubleLevelCode::build(DlParams params) {
  params.validate();
  std::vector<CloudPoints> points;
  for (size_t x = 0; x < params.clouds.size(); ++x)
    points.push_back(default_points(params, x));
  return build(std::move(params), std::move(points));
}

DoubleLevelCode DoubleLevelCode::build(DlParams params, std::vector<CloudPoints> points) {
  params.validate();
  if (points.size() != params.clouds.size())
    fail(Errc::invalid_params, "one point set per cloud required");
  std::vector<GfMatrix> cauchy;
  for (size_t x = 0; x < params.clouds.size(); ++x) {
    if (points[x].a.size() != params.u(x) || points[x].b.size() != params.v(x))
      fail(Errc::invalid_params, "cloud " + std::to_string(x) + ": point counts must be u and v");
    cauchy.push_back(make_cauchy(params.field, points[x].a, points[x].b).matrix);
  }
  return from_cauchy(std::move(params), std::move(cauchy), std::move(points));
}

DoubleLevelCode DoubleLevelCode::from_cauchy(DlParams params, std::vector<GfMatrix> cauchy,
                                             std::vector<CloudPoints> points) {
  params.validate();
  if (cauchy.size() != params.clouds.size())
    fail(Errc::invalid_params, "one Cauchy matrix per cloud required");

  size_t delta = params.delta_total();
  std::vector<CloudBlocks> blocks;
  for (size_t x = 0; x < params.clouds.size(); ++x) {
    const auto& c = params.clouds[x];
    const GfMatrix& t = cauchy[x];
    if (t.rows() != params.u(x) || t.cols() != params.v(x))
      fail(Errc::dimension_mismatch, "cloud " + std::to_string(x) + ": T must be u x v");
    CloudBlocks b;
    b.a_self = t.sub(0, c.k, 0, c.r());
    b.u = t.sub(c.k, c.k + c.delta, 0, c.r());
    size_t off = c.r();
    for (size_t y = 0; y < params.clouds.size(); ++y) {
      if (y == x) continue;
      size_t dy = params.clouds[y].delta;
      b.b_cross.emplace(y, t.sub(0, c.k, off, off + dy));
      off += dy;
    }
    assert(off == c.r() + delta - c.delta);
    blocks.push_back(std::move(b));
  }
  return DoubleLevelCode(std::move(params), std::move(cauchy), std::move(blocks),
                         std::move(points));
}

DoubleLevelCode DoubleLevelCode::from_blocks(DlParams params, std::vector<CloudBlocks> blocks,
                                             std::vector<CloudPoints> points) {
  params.validate();
  if (blocks.size() != params.clouds.size())
    fail(Errc::invalid_params, "one block set per cloud required");
  for (size_t x = 0; x < params.clouds.size(); ++x) {
    const auto& c = params.clouds[x];
    const auto& b = blocks[x];
    if (b.a_self.rows() != c.k || b.a_self.cols() != c.r())
      fail(Errc::dimension_mismatch, "A block of cloud " + std::to_string(x));
    if (b.u.rows() != c.delta || b.u.cols() != c.r())
      fail(Errc::dimension_mismatch, "U block of cloud " + std::to_string(x));
    for (size_t y = 0; y < params.clouds.size(); ++y) {
      if (y == x) continue;
      auto it = b.b_cross.find(y);
      if (it == b.b_cross.end())
        fail(Errc::invalid_params, "missing cross block " + std::to_string(x) + "->" +
                                       std::to_string(y));
      if (it->second.rows() != c.k || it->second.cols() != params.clouds[y].delta)
        fail(Errc::dimension_mismatch, "cross block " + std::to_string(x) + "->" +
                                           std::to_string(y));
    }
  }
  return DoubleLevelCode(std::move(params), {}, std::move(blocks), std::move(points));
}

DoubleLevelCode::DoubleLevelCode(DlParams params, std::vector<GfMatrix> cauchy,
                                 std::vector<CloudBlocks> blocks, std::vector<CloudPoints> points)
    : params_(std::move(params)),
      cauchy_(std::move(cauchy)),
      blocks_(std::move(blocks)),
      points_(std::move(points)) {
  assemble();
}

const GfMatrix& DoubleLevelCode::cloud_cauchy(size_t x) const {
  if (cauchy_.empty()) fail(Errc::invalid_input, "code was not built from Cauchy matrices");
  return cauchy_[x];
}

void DoubleLevelCode::assemble() {
  size_t p = cloud_count();
  FieldRef field = params_.field;

  for (size_t x = 0; x < p; ++x)
    for (size_t y = 0; y < p; ++y) {
      if (x == y) continue;
      a_cross_.emplace(std::make_pair(x, y), blocks_[x].b_cross.at(y) * blocks_[y].u);
    }

  // H^L_x = [A_{x,x}; -I; U_x]^T and H^G_x = [A_{x,x} | B_{x,*}; -I | 0]^T
  for (size_t x = 0; x < p; ++x) {
    const auto& c = params_.clouds[x];
    GfMatrix eye = GfMatrix::identity(field, c.r());
    h_local_.push_back(vstack({blocks_[x].a_self, eye, blocks_[x].u}).transposed());

    std::vector<GfMatrix> top{blocks_[x].a_self};
    for (size_t y = 0; y < p; ++y)
      if (y != x) top.push_back(blocks_[x].b_cross.at(y));
    GfMatrix bottom = hstack(
        {eye, GfMatrix(field, c.r(), params_.delta_total() - c.delta)});
    h_global_.push_back(vstack({hstack(top), bottom}).transposed());
  }

  // generator per the systematic double-level block layout
  size_t total = 0;
  size_t ktotal = 0;
  for (const auto& c : params_.clouds) {
    total += c.n;
    ktotal += c.k;
  }
  generator_ = GfMatrix(field, ktotal, total);
  size_t row0 = 0;
  for (size_t x = 0; x < p; ++x) {
    size_t col0 = 0;
    for (size_t y = 0; y < p; ++y) {
      const auto& cy = params_.clouds[y];
      if (x == y)
        for (size_t i = 0; i < cy.k; ++i) generator_.set(row0 + i, col0 + i, 1);
      const GfMatrix& par = (x == y) ? blocks_[x].a_self : a_cross_.at({x, y});
      for (size_t i = 0; i < par.rows(); ++i)
        for (size_t j = 0; j < par.cols(); ++j)
          generator_.set(row0 + i, col0 + cy.k + j, par(i, j));
      col0 += cy.n;
    }
    row0 += params_.clouds[x].k;
  }
}

const GfMatrix& DoubleLevelCode::a_cross(size_t x, size_t y) const {
  return a_cross_.at({x, y});
}

std::vector<std::vector<size_t>> DoubleLevelCode::distance_matrix() const {
  std::vector<std::vector<size_t>> d(2, std::vector<size_t>(cloud_count()));
  for (size_t x = 0; x < cloud_count(); ++x) {
    d[0][x] = params_.d1(x);
    d[1][x] = params_.d2(x);
  }
  return d;
}

std::vector<uint16_t> DoubleLevelCode::cross_parity_from_messages(
    size_t x, const std::vector<std::vector<uint16_t>>& messages) const {
  const Field& f = *params_.field;
  std::vector<uint16_t> y_x(params_.clouds[x].delta, 0);
  for (size_t y = 0; y < cloud_count(); ++y) {
    if (y == x) continue;
    y_x = add_vec(f, y_x, row_times(f, messages[y], blocks_[y].b_cross.at(x)));
  }
  return y_x;
}

std::vector<uint16_t> DoubleLevelCode::parity_of(
    size_t x, const std::vector<std::vector<uint16_t>>& messages) const {
  const Field& f = *params_.field;
  std::vector<uint16_t> parity = row_times(f, messages[x], blocks_[x].a_self);
  return add_vec(f, parity, row_times(f, cross_parity_from_messages(x, messages), blocks_[x].u));
}

DlCodeword DoubleLevelCode::encode(const std::vector<std::vector<uint16_t>>& messages) const {
  if (messages.size() != cloud_count()) fail(Errc::length_mismatch, "one message per cloud");
  const Field& f = *params_.field;
  for (size_t x = 0; x < cloud_count(); ++x) {
    if (messages[x].size() != params_.clouds[x].k)
      fail(Errc::length_mismatch, "message " + std::to_string(x) + " must have length k");
    for (uint16_t s : messages[x])
      if (!f.contains(s)) fail(Errc::invalid_input, "message symbol outside field");
  }

  DlCodeword cw;
  for (size_t x = 0; x < cloud_count(); ++x) {
    std::vector<uint16_t> seg = messages[x];
    std::vector<uint16_t> parity = parity_of(x, messages);
    seg.insert(seg.end(), parity.begin(), parity.end());
    cw.segments.push_back(std::move(seg));
    cw.erased.emplace_back(params_.clouds[x].n, 0);
  }

#ifndef NDEBUG
  // cross-check the per-cloud formula against m G
  std::vector<uint16_t> m_all;
  for (const auto& m : messages) m_all.insert(m_all.end(), m.begin(), m.end());
  std::vector<uint16_t> c_all = row_times(f, m_all, generator_);
  size_t off = 0;
  for (size_t x = 0; x < cloud_count(); ++x)
    for (size_t j = 0; j < params_.clouds[x].n; ++j, ++off)
      assert(c_all[off] == cw.segments[x][j]);
#endif
  return cw;
}

std::vector<uint16_t> DoubleLevelCode::local_filled(const DlCodeword& cw, size_t x,
                                                    DlLocalTrace* trace) const {
  const auto& c = params_.clouds[x];
  const auto& seg = cw.segments[x];
  const auto& mask = cw.erased[x];
  if (seg.size() != c.n || mask.size() != c.n)
    fail(Errc::length_mismatch, "segment length must be n");

  size_t erasures = cw.erasure_count(x);
  if (erasures + 1 > params_.d1(x))
    fail(Errc::too_many_erasures, "local budget is " + std::to_string(params_.d1(x) - 1) +
                                      ", got " + std::to_string(erasures));

  // extended word [c_x, y_x] with the appendix treated as erased
  std::vector<uint16_t> word(seg.begin(), seg.end());
  word.resize(c.n + c.delta, 0);
  std::vector<uint8_t> erased(mask.begin(), mask.end());
  erased.resize(c.n + c.delta, 1);
  std::vector<uint16_t> zero(h_local_[x].rows(), 0);

  std::vector<uint16_t> filled;
  try {
    filled = solve_erasures(h_local_[x], word, erased, zero);
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
    trace->cross_parity.assign(filled.begin() + c.n, filled.end());
  }
  return filled;
}

std::vector<uint16_t> DoubleLevelCode::decode_local(const DlCodeword& cw, size_t x,
                                                    DlLocalTrace* trace) const {
  std::vector<uint16_t> filled = local_filled(cw, x, trace);
  return std::vector<uint16_t>(filled.begin(), filled.begin() + params_.clouds[x].k);
}

std::vector<uint16_t> DoubleLevelCode::repair_local(const DlCodeword& cw, size_t x,
                                                    DlLocalTrace* trace) const {
  std::vector<uint16_t> filled = local_filled(cw, x, trace);
  return std::vector<uint16_t>(filled.begin(), filled.begin() + params_.clouds[x].n);
}

std::vector<uint16_t> DoubleLevelCode::recover_cross_parity(
    size_t x, std::span<const uint16_t> segment) const {
  const auto& c = params_.clouds[x];
  if (segment.size() != c.n) fail(Errc::length_mismatch, "segment length must be n");
  const Field& f = *params_.field;
  std::vector<uint16_t> rhs = add_vec(
      f, std::span<const uint16_t>(segment.begin() + c.k, segment.end()),
      row_times(f, segment.subspan(0, c.k), blocks_[x].a_self));
  return solve_row_system(blocks_[x].u, rhs);
}

std::pair<std::vector<uint16_t>, std::vector<uint16_t>> DoubleLevelCode::global_filled(
    const DlCodeword& cw, size_t x, DlGlobalTrace* trace) const {
  const auto& c = params_.clouds[x];
  const Field& f = *params_.field;
  size_t erasures = cw.erasure_count(x);
  if (erasures + 1 > params_.d2(x))
    fail(Errc::too_many_erasures, "global budget is " + std::to_string(params_.d2(x) - 1) +
                                      ", got " + std::to_string(erasures));
  for (size_t y = 0; y < cloud_count(); ++y)
    if (y != x && !cw.intact(y))
      fail(Errc::siblings_undecoded, "cloud " + std::to_string(y) + " still has erasures");

  // y_x from the decoded siblings' messages
  std::vector<uint16_t> y_x(c.delta, 0);
  for (size_t y = 0; y < cloud_count(); ++y) {
    if (y == x) continue;
    std::span<const uint16_t> m_y(cw.segments[y].data(), params_.clouds[y].k);
    y_x = add_vec(f, y_x, row_times(f, m_y, blocks_[y].b_cross.at(x)));
  }

  // syndrome blocks m_x B_{x,y}, isolated from each sibling's parity
  std::vector<uint16_t> syndrome(c.r(), 0);
  std::vector<std::vector<uint16_t>> syn_blocks;
  for (size_t y = 0; y < cloud_count(); ++y) {
    if (y == x) continue;
    std::vector<uint16_t> y_y = recover_cross_parity(y, cw.segments[y]);
    for (size_t z = 0; z < cloud_count(); ++z) {
      if (z == y || z == x) continue;
      std::span<const uint16_t> m_z(cw.segments[z].data(), params_.clouds[z].k);
      y_y = add_vec(f, y_y, row_times(f, m_z, blocks_[z].b_cross.at(y)));
    }
    syn_blocks.push_back(y_y);  // now equals m_x B_{x,y}
    syndrome.insert(syndrome.end(), y_y.begin(), y_y.end());
  }

  // shift the received word by the known cross-parity contribution
  std::vector<uint16_t> shifted = cw.segments[x];
  std::vector<uint16_t> correction = row_times(f, y_x, blocks_[x].u);
  for (size_t j = 0; j < c.r(); ++j)
    shifted[c.k + j] = f.add(shifted[c.k + j], correction[j]);

  std::vector<uint16_t> filled_shifted;
  try {
    filled_shifted = solve_erasures(h_global_[x], shifted, cw.erased[x], syndrome);
  } catch (const Error& err) {
    if (err.code() == Errc::unsolvable || err.code() == Errc::underdetermined)
      fail(Errc::inconsistent, std::string("global solve failed: ") + err.what());
    throw;
  }

  if (trace) {
    trace->cross_parity = y_x;
    trace->syndrome_blocks = syn_blocks;
    trace->erased_positions.clear();
    trace->shifted_filled.clear();
    trace->filled.clear();
    for (size_t j = 0; j < c.n; ++j)
      if (cw.erased[x][j]) {
        trace->erased_positions.push_back(j);
        trace->shifted_filled.push_back(filled_shifted[j]);
        uint16_t final_value =
            j < c.k ? filled_shifted[j] : f.add(filled_shifted[j], correction[j - c.k]);
        trace->filled.push_back(final_value);
      }
  }
  return {std::move(filled_shifted), std::move(correction)};
}

std::vector<uint16_t> DoubleLevelCode::decode_global(const DlCodeword& cw, size_t x,
                                                     DlGlobalTrace* trace) const {
  auto [filled_shifted, correction] = global_filled(cw, x, trace);
  return std::vector<uint16_t>(filled_shifted.begin(),
                               filled_shifted.begin() + params_.clouds[x].k);
}

std::vector<uint16_t> DoubleLevelCode::repair_global(const DlCodeword& cw, size_t x,
                                                     DlGlobalTrace* trace) const {
  auto [filled_shifted, correction] = global_filled(cw, x, trace);
  const auto& c = params_.clouds[x];
  std::vector<uint16_t> seg(filled_shifted.begin(), filled_shifted.begin() + c.n);
  for (size_t j = 0; j < c.r(); ++j)
    seg[c.k + j] = params_.field->add(seg[c.k + j], correction[j]);
  return seg;
}

std::vector<uint16_t> repair_cloud(const DoubleLevelCode& code, const DlCodeword& cw, size_t x) {
  if (cw.intact(x)) return cw.segments[x];
  try {
    return code.repair_local(cw, x);
  } catch (const Error& err) {
    if (err.code() != Errc::too_many_erasures) throw;
  }
  // repair every sibling locally, then escalate
  DlCodeword repaired = cw;
  for (size_t y = 0; y < code.cloud_count(); ++y) {
    if (y == x || cw.intact(y)) continue;
    try {
      repaired.segments[y] = code.repair_local(cw, y);
      repaired.erased[y].assign(repaired.erased[y].size(), 0);
    } catch (const Error& err) {
      fail(Errc::target_undecodable, "sibling cloud " + std::to_string(y) +
                                         " is not locally repairable: " + err.what());
    }
  }
  try {
    return code.repair_global(repaired, x);
  } catch (const Error& err) {
    fail(Errc::target_undecodable, std::string("global repair failed: ") + err.what());
  }
}

}  // namespace tiercode
