#include "tiercode/dynamics.hpp"

#include <cassert>
#include <set>

namespace tiercode {

std::string ProtocolMessage::to_string(const Field& f) const {
  std::string out = from + " -> " + to + ": " + label + " = (";
  for (size_t i = 0; i < payload.size(); ++i) {
    if (i) out += ", ";
    out += f.to_beta_string(payload[i]);
  }
  return out + ")";
}

namespace {

std::string cloud_name(size_t x) { return "cloud " + std::to_string(x); }

// first `count` elements of the canonical sequence not already used
std::vector<uint16_t> fresh_points(const Field& f, const std::set<uint16_t>& used, size_t count) {
  std::vector<uint16_t> out;
  for (uint16_t v : default_point_sequence(f)) {
    if (out.size() == count) break;
    if (!used.contains(v)) out.push_back(v);
  }
  if (out.size() != count) fail(Errc::field_too_small, "not enough fresh evaluation points");
  return out;
}

}  // namespace

ScaleOutResult scale_out(const DoubleLevelCode& code, const DlCodeword& stored,
                         const ScaleOutSpec& spec) {
  const DlParams& old_params = code.params();
  const Field& f = *old_params.field;
  size_t p = code.cloud_count();

  if (code.points().empty())
    fail(Errc::invalid_input, "scale-out requires a code that carries its evaluation points");
  if (spec.message.size() != spec.cloud.k)
    fail(Errc::length_mismatch, "new cloud's message must have length k");

  DlParams params = old_params;
  params.clouds.push_back(spec.cloud);
  params.validate();  // field_too_small when delta' exceeds the field

  // extend each existing cloud by delta_new columns
  std::vector<CloudPoints> points = code.points();
  for (size_t x = 0; x < p; ++x) {
    std::set<uint16_t> used(points[x].a.begin(), points[x].a.end());
    used.insert(points[x].b.begin(), points[x].b.end());
    std::vector<uint16_t> ext;
    if (spec.extension_points) {
      if (spec.extension_points->size() != p)
        fail(Errc::invalid_params, "one extension point list per existing cloud");
      ext = (*spec.extension_points)[x];
      if (ext.size() != spec.cloud.delta)
        fail(Errc::point_collision, "need delta_new extension points per cloud");
      for (uint16_t v : ext)
        if (!used.insert(v).second)
          fail(Errc::point_collision, "extension point collides in cloud " + std::to_string(x));
    } else {
      ext = fresh_points(f, used, spec.cloud.delta);
    }
    points[x].b.insert(points[x].b.end(), ext.begin(), ext.end());
  }

  CloudPoints new_points =
      spec.points ? *spec.points : DoubleLevelCode::default_points(params, p);
  {
    std::set<uint16_t> seen;
    for (uint16_t v : new_points.a)
      if (!seen.insert(v).second) fail(Errc::point_collision, "new cloud points collide");
    for (uint16_t v : new_points.b)
      if (!seen.insert(v).second) fail(Errc::point_collision, "new cloud points collide");
  }
  points.push_back(new_points);

  DoubleLevelCode grown = DoubleLevelCode::build(params, points);

  // messages of the existing clouds, repairing erased segments if needed
  std::vector<std::vector<uint16_t>> messages;
  DlCodeword codeword = stored;
  for (size_t x = 0; x < p; ++x) {
    if (!stored.intact(x)) {
      codeword.segments[x] = repair_cloud(code, stored, x);
      codeword.erased[x].assign(old_params.clouds[x].n, 0);
    }
    messages.emplace_back(codeword.segments[x].begin(),
                          codeword.segments[x].begin() + old_params.clouds[x].k);
  }

  // the four-step exchange through the central cloud
  std::vector<ProtocolMessage> transcript;
  std::vector<std::vector<uint16_t>> forwarded(p);
  std::vector<uint16_t> y_new(spec.cloud.delta, 0);
  for (size_t x = 0; x < p; ++x) {
    forwarded[x] = row_times(f, spec.message, grown.blocks(p).b_cross.at(x));
    transcript.push_back({cloud_name(p), "central",
                          "m(" + std::to_string(p) + ")*B(" + std::to_string(p) + "," +
                              std::to_string(x) + ")",
                          forwarded[x]});
  }
  for (size_t x = 0; x < p; ++x) {
    std::vector<uint16_t> contrib = row_times(f, messages[x], grown.blocks(x).b_cross.at(p));
    y_new = add_vec(f, y_new, contrib);
    transcript.push_back({cloud_name(x), "central",
                          "m(" + std::to_string(x) + ")*B(" + std::to_string(x) + "," +
                              std::to_string(p) + ")",
                          contrib});
  }
  for (size_t x = 0; x < p; ++x)
    transcript.push_back({"central", cloud_name(x), "forwarded cross coefficients",
                          forwarded[x]});
  transcript.push_back({"central", cloud_name(p), "y(" + std::to_string(p) + ")", y_new});

  // update step: existing parities gain the new cloud's contribution
  for (size_t x = 0; x < p; ++x) {
    const auto& c = params.clouds[x];
    std::vector<uint16_t> extra = row_times(f, forwarded[x], grown.blocks(x).u);
    for (size_t j = 0; j < c.r(); ++j)
      codeword.segments[x][c.k + j] = f.add(codeword.segments[x][c.k + j], extra[j]);
  }
  std::vector<uint16_t> new_segment = spec.message;
  std::vector<uint16_t> new_parity =
      add_vec(f, row_times(f, spec.message, grown.blocks(p).a_self),
              row_times(f, y_new, grown.blocks(p).u));
  new_segment.insert(new_segment.end(), new_parity.begin(), new_parity.end());
  codeword.segments.push_back(std::move(new_segment));
  codeword.erased.emplace_back(spec.cloud.n, 0);

#ifndef NDEBUG
  // the incremental update must agree with a fresh encode
  messages.push_back(spec.message);
  DlCodeword check = grown.encode(messages);
  assert(check.segments == codeword.segments);
#endif

  return ScaleOutResult{std::move(grown), std::move(codeword), std::move(transcript)};
}

SplitResult split_cloud(const DoubleLevelCode& code, const DlCodeword& stored,
                        const SplitPlan& plan) {
  const DlParams& old_params = code.params();
  const Field& f = *old_params.field;
  size_t p = code.cloud_count();
  size_t x0 = plan.cloud;
  if (x0 >= p) fail(Errc::invalid_params, "no such cloud");

  const DlCloudParams& old_cloud = old_params.clouds[x0];
  const DlCloudParams& a = plan.part_a;
  const DlCloudParams& b = plan.part_b;
  if (a.k == 0 || b.k == 0 || a.r() == 0 || b.r() == 0 || a.delta == 0 || b.delta == 0)
    fail(Errc::dimension_mismatch, "split parts must be non-empty");
  if (a.k + b.k != old_cloud.k || a.r() + b.r() != old_cloud.r() ||
      a.delta + b.delta != old_cloud.delta)
    fail(Errc::dimension_mismatch, "split parts must partition k, r and delta");

  size_t ka = a.k, ra = a.r(), da = a.delta;
  size_t k1 = old_cloud.k, r1 = old_cloud.r(), d1 = old_cloud.delta;

  // new cloud order: the parts take the split cloud's position
  DlParams params;
  params.field = old_params.field;
  for (size_t x = 0; x < p; ++x) {
    if (x == x0) {
      params.clouds.push_back(a);
      params.clouds.push_back(b);
    } else {
      params.clouds.push_back(old_params.clouds[x]);
    }
  }
  params.validate();
  auto new_index = [&](size_t x) { return x < x0 ? x : x + 1; };
  size_t ia = x0, ib = x0 + 1;

  // slice the split cloud's blocks
  const auto& old_blocks = code.blocks(x0);
  const GfMatrix& a11 = old_blocks.a_self;
  const GfMatrix& u1 = old_blocks.u;

  DoubleLevelCode::CloudBlocks ba;
  ba.a_self = a11.slice1(1, ka, 1, ra);
  ba.u = u1.slice1(1, da, 1, ra);
  ba.b_cross.emplace(ib, a11.slice1(1, ka, ra + 1, ra + b.delta));

  DoubleLevelCode::CloudBlocks bb;
  bb.a_self = a11.slice1(ka + 1, k1, ra + 1, r1);
  bb.u = u1.slice1(da + 1, d1, ra + 1, r1);
  bb.b_cross.emplace(ia, a11.slice1(ka + 1, k1, 1, da));

  std::vector<DoubleLevelCode::CloudBlocks> blocks(params.clouds.size());
  for (size_t x = 0; x < p; ++x) {
    if (x == x0) continue;
    const auto& old_b = code.blocks(x);
    DoubleLevelCode::CloudBlocks nb;
    nb.a_self = old_b.a_self;
    nb.u = old_b.u;
    for (const auto& [y, mat] : old_b.b_cross) {
      if (y == x0) {
        nb.b_cross.emplace(ia, mat.slice1(1, old_params.clouds[x].k, 1, da));
        nb.b_cross.emplace(ib, mat.slice1(1, old_params.clouds[x].k, da + 1, d1));
      } else {
        nb.b_cross.emplace(new_index(y), mat);
      }
    }
    const GfMatrix& old_cross = code.blocks(x0).b_cross.at(x);
    ba.b_cross.emplace(new_index(x), old_cross.slice1(1, ka, 1, old_params.clouds[x].delta));
    bb.b_cross.emplace(new_index(x),
                       old_cross.slice1(ka + 1, k1, 1, old_params.clouds[x].delta));
    blocks[new_index(x)] = std::move(nb);
  }
  blocks[ia] = std::move(ba);
  blocks[ib] = std::move(bb);

  // the parts inherit the old cloud's evaluation points through the slices
  std::vector<CloudPoints> points;
  if (!code.points().empty()) {
    const CloudPoints& oldp = code.points()[x0];
    size_t boff = r1;  // cross-block offsets within the old b list
    std::map<size_t, std::vector<uint16_t>> cross_pts;
    for (size_t y = 0; y < p; ++y) {
      if (y == x0) continue;
      size_t w = old_params.clouds[y].delta;
      cross_pts[y] = std::vector<uint16_t>(oldp.b.begin() + boff, oldp.b.begin() + boff + w);
      boff += w;
    }
    CloudPoints pa, pb;
    pa.a.assign(oldp.a.begin(), oldp.a.begin() + ka);
    pa.a.insert(pa.a.end(), oldp.a.begin() + k1, oldp.a.begin() + k1 + da);
    pb.a.assign(oldp.a.begin() + ka, oldp.a.begin() + k1);
    pb.a.insert(pb.a.end(), oldp.a.begin() + k1 + da, oldp.a.begin() + k1 + d1);
    pa.b.assign(oldp.b.begin(), oldp.b.begin() + ra);
    pb.b.assign(oldp.b.begin() + ra, oldp.b.begin() + r1);
    // cross sections in ascending new-cloud order
    for (size_t y = 0; y < params.clouds.size(); ++y) {
      if (y == ia) {
        pb.b.insert(pb.b.end(), oldp.b.begin(), oldp.b.begin() + da);
      } else if (y == ib) {
        pa.b.insert(pa.b.end(), oldp.b.begin() + ra, oldp.b.begin() + ra + b.delta);
      } else {
        size_t old_y = y < x0 ? y : y - 1;
        if (old_y == x0) continue;
        pa.b.insert(pa.b.end(), cross_pts[old_y].begin(), cross_pts[old_y].end());
        pb.b.insert(pb.b.end(), cross_pts[old_y].begin(), cross_pts[old_y].end());
      }
    }
    for (size_t x = 0; x < p; ++x) {
      if (x == x0) {
        points.push_back(pa);
        points.push_back(pb);
      } else {
        points.push_back(code.points()[x]);
      }
    }
  }

  DoubleLevelCode split = DoubleLevelCode::from_blocks(params, std::move(blocks),
                                                       std::move(points));

  // rebuild the stored codeword: siblings byte-identical, the target re-encoded
  std::vector<uint16_t> seg;
  try {
    seg = repair_cloud(code, stored, x0);
  } catch (const Error& err) {
    fail(Errc::target_undecodable, std::string("split target: ") + err.what());
  }
  std::vector<uint16_t> m1(seg.begin(), seg.begin() + k1);
  std::vector<uint16_t> y1 = code.recover_cross_parity(x0, seg);

  std::vector<uint16_t> ma(m1.begin(), m1.begin() + ka);
  std::vector<uint16_t> mb(m1.begin() + ka, m1.end());
  std::vector<uint16_t> ya(y1.begin(), y1.begin() + da);
  std::vector<uint16_t> yb(y1.begin() + da, y1.end());

  // c_a = [m_a, m_a A_aa + (m_b B_{b,a} + y_a) U_a], likewise for c_b
  std::vector<uint16_t> seg_a = ma;
  {
    std::vector<uint16_t> coeff =
        add_vec(f, row_times(f, mb, split.blocks(ib).b_cross.at(ia)), ya);
    std::vector<uint16_t> parity = add_vec(f, row_times(f, ma, split.blocks(ia).a_self),
                                           row_times(f, coeff, split.blocks(ia).u));
    seg_a.insert(seg_a.end(), parity.begin(), parity.end());
  }
  std::vector<uint16_t> seg_b = mb;
  {
    std::vector<uint16_t> coeff =
        add_vec(f, row_times(f, ma, split.blocks(ia).b_cross.at(ib)), yb);
    std::vector<uint16_t> parity = add_vec(f, row_times(f, mb, split.blocks(ib).a_self),
                                           row_times(f, coeff, split.blocks(ib).u));
    seg_b.insert(seg_b.end(), parity.begin(), parity.end());
  }

  DlCodeword codeword;
  for (size_t x = 0; x < p; ++x) {
    if (x == x0) {
      codeword.segments.push_back(seg_a);
      codeword.erased.emplace_back(a.n, 0);
      codeword.segments.push_back(seg_b);
      codeword.erased.emplace_back(b.n, 0);
    } else {
      codeword.segments.push_back(stored.segments[x]);
      codeword.erased.push_back(stored.erased[x]);
    }
  }
  return SplitResult{std::move(split), std::move(codeword)};
}

}  // namespace tiercode
