#include "rhfill/filling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "rhfill/errors.hpp"
#include "rhfill/metric_lemmas.hpp"
#include "rhfill/parallel.hpp"
#include "rhfill/random.hpp"

namespace rhfill {

namespace {

Json vertex_json(const CuspedGraph& g, std::size_t v) {
  return Json{{"id", v}, {"depth", g.depth(v)}, {"coset", g.coset_label(v)}, {"word", g.word_label(v)}};
}

struct BfsScratch {
  std::vector<std::int32_t> dist;
  std::vector<std::uint32_t> visited;

  void run(const CuspedGraph& g, std::size_t source, std::int32_t limit) {
    if (dist.size() != g.size()) dist.assign(g.size(), -1);
    for (auto v : visited) dist[v] = -1;
    g.bfs_distances(source, limit, dist, visited);
  }
};

}  // namespace

VertexKey FillingGeometry::project(const VertexKey& v) const {
  switch (v.kind) {
    case VertexKind::group: return VertexKey::group_vertex(filling.project(v.base));
    case VertexKind::horoball: return VertexKey::horoball_vertex(filling.project(v.base), v.peripheral, v.level);
    case VertexKind::cone:
      return VertexKey::cone_vertex(
          filling.quotient->peripheral(static_cast<std::size_t>(v.peripheral)).coset_key(filling.project(v.base)),
          v.peripheral);
  }
  return {};
}

GraphPath FillingGeometry::project_path(const GraphPath& path) const {
  GraphPath out;
  out.vertices.reserve(path.vertices.size());
  for (auto v : path.vertices) {
    const auto t = vertex_map.at(v);
    if (t < 0) throw Error(ErrorCode::invalid_parameter, "vertex " + std::to_string(v) + " has no image in the window");
    out.vertices.push_back(static_cast<std::size_t>(t));
  }
  return out;
}

FillingGeometry build_quotient_cusped(const FillingData& filling, Int radius, Int target_radius,
                                      std::size_t cap) {
  if (radius < 0) throw Error(ErrorCode::invalid_parameter, "negative radius");
  FillingGeometry fg{filling, build_cusped_ball(filling.source, radius, -1, cap),
                     build_cusped_ball(filling.quotient, target_radius < 0 ? radius : target_radius, -1, cap),
                     {}};
  fg.vertex_map.resize(fg.source.size());
  for (std::size_t v = 0; v < fg.source.size(); ++v) {
    const auto t = fg.target.index_of(fg.project(fg.source.key(v)));
    fg.vertex_map[v] = t ? static_cast<std::int64_t>(*t) : -1;
  }
  return fg;
}

std::optional<std::size_t> least_preimage(const FillingGeometry& fg, std::size_t target_vertex) {
  std::optional<std::size_t> best;
  for (std::size_t v = 0; v < fg.source.size(); ++v)
    if (fg.vertex_map[v] == static_cast<std::int64_t>(target_vertex) &&
        (!best || fg.source.key(v) < fg.source.key(*best)))
      best = v;
  return best;
}

GraphPath lift_path(const FillingGeometry& fg, const GraphPath& target_path, std::size_t base_lift) {
  if (target_path.vertices.empty()) throw Error(ErrorCode::empty_path, "cannot lift an empty path");
  if (base_lift >= fg.source.size() ||
      fg.vertex_map[base_lift] != static_cast<std::int64_t>(target_path.vertices.front()))
    throw Error(ErrorCode::invalid_parameter, "base lift does not map to the start of the path");
  GraphPath out;
  out.vertices.push_back(base_lift);
  for (std::size_t i = 1; i < target_path.vertices.size(); ++i) {
    const auto want = static_cast<std::int64_t>(target_path.vertices[i]);
    const auto here = out.vertices.back();
    if (want == fg.vertex_map[here]) {
      // A repeated vertex lifts to a pause.
      out.vertices.push_back(here);
      continue;
    }
    std::optional<std::size_t> best;
    for (auto w : fg.source.adjacency(here))
      if (fg.vertex_map[w] == want && (!best || fg.source.key(w) < fg.source.key(*best))) best = w;
    if (!best)
      throw Error(ErrorCode::no_preimage_edge_in_window,
                  "step " + std::to_string(i) + " has no preimage edge at source vertex " + std::to_string(here));
    out.vertices.push_back(*best);
  }
  return out;
}

// ---------------------------------------------------------------------------

Json LocalIsometryReport::to_json() const {
  return Json{{"r", r},
              {"ball_vertices", ball_vertices},
              {"verdict", pass() ? "pass" : "fail"},
              {"checks", Json::array({isometry.to_json(), image_ball.to_json()})}};
}

Json LiftReport::to_json() const {
  return Json{{"walks", walks},
              {"geodesics", geodesics},
              {"verdict", pass() ? "pass" : "fail"},
              {"checks", Json::array({round_trip.to_json(), tight.to_json()})}};
}

LiftReport check_lifts(const FillingGeometry& fg, std::size_t paths, std::uint64_t seed) {
  if (fg.target.radius < 1) throw Error(ErrorCode::window_too_small, "lift checks need a target window of radius >= 1");
  LiftReport r;
  Rng rng(seed);
  const auto base = least_preimage(fg, 0);
  if (!base) throw Error(ErrorCode::no_preimage_edge_in_window, "the target centre has no preimage");
  auto trip = [&](const GraphPath& path, const char* kind) {
    const auto lift = lift_path(fg, path, *base);
    const bool ok = fg.project_path(lift).vertices == path.vertices;
    r.round_trip.record(ok ? 0.0 : -1.0, [&] {
      return Json{{"kind", kind}, {"length", path.length()}, {"end", vertex_json(fg.target, path.vertices.back())}};
    });
    return lift;
  };

  const auto walk_length = static_cast<std::size_t>(fg.target.radius);
  for (std::size_t i = 0; i < paths; ++i) {
    GraphPath walk{{0}};
    while (walk.length() < walk_length) {
      const auto& adj = fg.target.adjacency(walk.vertices.back());
      if (adj.empty()) break;
      walk.vertices.push_back(adj[rng.below(adj.size())]);
    }
    trip(walk, "walk");
    ++r.walks;
  }

  const auto from_id = fg.target.bfs(0);
  std::vector<std::int32_t> dist(fg.source.size(), -1);
  std::vector<std::uint32_t> visited;
  fg.source.bfs_distances(*base, -1, dist, visited);
  for (std::size_t i = 0; i < paths; ++i) {
    const auto t = rng.below(fg.target.size());
    const auto path = from_id.path_to(t);
    const auto lift = trip(path, "geodesic");
    ++r.geodesics;
    const auto end = lift.vertices.back();
    const auto d = dist[end];
    if (d < 0 || !fg.source.certified(*base, end, d)) continue;
    r.tight.record(static_cast<double>(d) - static_cast<double>(lift.length()), [&] {
      return Json{{"target", vertex_json(fg.target, t)}, {"lift_end", vertex_json(fg.source, end)},
                  {"length", lift.length()}, {"d_source", d}};
    });
  }
  return r;
}

LocalIsometryReport check_local_isometry(const FillingGeometry& fg, Int r) {
  if (r < 0) throw Error(ErrorCode::invalid_parameter, "negative radius");
  if (fg.source.radius < 2 * r || fg.target.radius < 2 * r)
    throw Error(ErrorCode::window_too_small, "local isometry at radius " + std::to_string(r) +
                                                 " needs windows of radius " + std::to_string(2 * r));
  LocalIsometryReport rep;
  rep.r = r;
  std::vector<std::uint32_t> ball;
  for (std::size_t v = 0; v < fg.source.size(); ++v)
    if (fg.source.center_distance[v] <= r) ball.push_back(static_cast<std::uint32_t>(v));
  rep.ball_vertices = ball.size();

  // Pairs in B(r) are at distance <= 2r and their geodesics stay in B(2r),
  // so searches limited to 2r inside the windows are exact on both sides.
  const auto limit = static_cast<std::int32_t>(2 * r);
  std::vector<PropertyCheck> parts(ball.size());
  std::vector<std::size_t> depth0_violations(ball.size(), 0);
  parallel_for(ball.size(), [&](std::size_t i) {
    thread_local BfsScratch src, dst;
    const auto u = ball[i];
    src.run(fg.source, u, limit);
    dst.run(fg.target, static_cast<std::size_t>(fg.vertex_map[u]), limit);
    for (std::size_t j = i + 1; j < ball.size(); ++j) {
      const auto v = ball[j];
      const auto d = src.dist[v];
      const auto tv = static_cast<std::size_t>(fg.vertex_map[v]);
      const auto e = dst.dist[tv] < 0 ? std::int32_t{limit + 1} : dst.dist[tv];
      if (e < d && fg.source.depth(u) == 0 && fg.source.depth(v) == 0) ++depth0_violations[i];
      parts[i].record(static_cast<double>(e) - d, [&] {
        return Json{{"u", vertex_json(fg.source, u)}, {"v", vertex_json(fg.source, v)}, {"d_source", d},
                    {"d_target", e}};
      });
    }
  });
  for (const auto& p : parts) rep.isometry.merge(p);
  std::size_t d0 = 0;
  for (auto c : depth0_violations) d0 += c;
  rep.isometry.details["depth0_violations"] = d0;

  // Image of the ball against the target ball.
  std::vector<char> hit(fg.target.size(), 0);
  for (auto v : ball) hit[static_cast<std::size_t>(fg.vertex_map[v])] = 1;
  for (std::size_t t = 0; t < fg.target.size(); ++t) {
    const bool in_ball = fg.target.center_distance[t] <= r;
    if (!in_ball && !hit[t]) continue;
    rep.image_ball.record(in_ball == static_cast<bool>(hit[t]) ? 0.0 : -1.0, [&] {
      return Json{{"target", vertex_json(fg.target, t)}, {"in_ball", in_ball}, {"in_image", static_cast<bool>(hit[t])}};
    });
  }
  return rep;
}

// ---------------------------------------------------------------------------

Json DescentReport::to_json() const {
  return Json{{"K", K},
              {"max_depth_used", max_depth_used},
              {"target_delta", target_delta},
              {"geodesics", geodesics},
              {"verdict", pass() ? "pass" : "fail"},
              {"checks", Json::array({lower.to_json(), upper.to_json()})}};
}

DescentReport check_descent_quasigeodesic(const FillingGeometry& fg, double K, Int max_depth_used,
                                          std::size_t samples, std::uint64_t seed,
                                          std::optional<double> delta) {
  if (K < 1) throw Error(ErrorCode::invalid_parameter, "K must be at least 1");
  if (fg.source.radius < 2 || fg.target.radius < 2)
    throw Error(ErrorCode::window_too_small, "descent check needs windows of radius >= 2");
  DescentReport rep;
  rep.K = K;
  rep.max_depth_used = max_depth_used;
  rep.target_delta = delta ? *delta : window_delta(fg.target, seed).value;
  const double slack = 2 * rep.target_delta;

  std::vector<std::uint32_t> shallow;
  for (std::size_t v = 0; v < fg.source.size(); ++v)
    if (fg.source.depth(v) <= max_depth_used) shallow.push_back(static_cast<std::uint32_t>(v));
  if (shallow.size() < 2) return rep;

  // Draw endpoint pairs first so the sample does not depend on scheduling.
  Rng rng(seed);
  std::vector<GraphPath> paths;
  const std::size_t attempts = samples * 20;
  for (std::size_t a = 0; a < attempts && paths.size() < samples; ++a) {
    const auto u = shallow[rng.below(shallow.size())];
    const auto v = shallow[rng.below(shallow.size())];
    if (u == v) continue;
    const auto bfs = fg.source.bfs(u);
    if (!fg.source.certified(u, v, bfs.distance[v])) continue;
    auto path = bfs.path_to(v);
    const bool stays = std::all_of(path.vertices.begin(), path.vertices.end(),
                                   [&](std::size_t w) { return fg.source.depth(w) <= max_depth_used; });
    if (stays) paths.push_back(std::move(path));
  }
  rep.geodesics = paths.size();

  std::vector<DescentReport> parts(paths.size());
  parallel_for(paths.size(), [&](std::size_t p) {
    thread_local BfsScratch dst;
    const auto image = fg.project_path(paths[p]);
    const auto n = image.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      dst.run(fg.target, image.vertices[i], -1);
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto e = dst.dist[image.vertices[j]];
        if (!fg.target.certified(image.vertices[i], image.vertices[j], e)) continue;
        const double steps = static_cast<double>(j - i);
        auto witness = [&] {
          return Json{{"path", p}, {"i", i}, {"j", j}, {"d_target", e},
                      {"from", vertex_json(fg.source, paths[p].vertices[i])},
                      {"to", vertex_json(fg.source, paths[p].vertices[j])}};
        };
        parts[p].lower.record(e - (steps / K - slack), witness);
        parts[p].upper.record(K * steps + slack - e, witness);
      }
    }
  });
  for (const auto& part : parts) {
    rep.lower.merge(part.lower);
    rep.upper.merge(part.upper);
  }
  return rep;
}

// ---------------------------------------------------------------------------

bool UniformDeltaTable::bounded() const {
  for (const auto& row : rows)
    if (row.n >= n0 && row.delta.value > unfilled.delta.value + slack) return false;
  return true;
}

Json UniformDeltaTable::to_json() const {
  auto row_json = [](const UniformDeltaRow& r) {
    return Json{{"n", r.n},
                {"vertices", r.vertices},
                {"delta4", r.delta.four_point.delta4},
                {"delta4_exact", r.delta.four_point.exact},
                {"delta_thin", r.delta.thin.delta_thin},
                {"delta", r.delta.value}};
  };
  Json rs = Json::array();
  for (const auto& r : rows) rs.push_back(row_json(r));
  return Json{{"radius", radius}, {"slack", slack}, {"n0", n0}, {"unfilled", row_json(unfilled)},
              {"rows", rs}, {"bounded", bounded()}};
}

UniformDeltaTable check_uniform_delta(std::shared_ptr<const RelHypPair> pair, const std::vector<Int>& ns,
                                      Int radius, double slack, Int n0, std::uint64_t seed) {
  UniformDeltaTable table;
  table.radius = radius;
  table.slack = slack;
  table.n0 = n0;
  {
    const auto w = build_cusped_ball(pair, radius);
    table.unfilled = {0, w.size(), window_delta(w, seed)};
  }
  for (auto n : ns) {
    const auto filling = make_power_filling(pair, std::vector<Int>(pair->peripheral_count(), n));
    const auto w = build_cusped_ball(filling.quotient, radius);
    table.rows.push_back({n, w.size(), window_delta(w, seed)});
  }
  return table;
}

// ---------------------------------------------------------------------------

Json InjectivityReport::to_json() const {
  return Json{{"radius", radius},
              {"verdict", pass() ? "pass" : "fail"},
              {"checks", Json::array({ball.to_json(), peripheral.to_json()})}};
}

InjectivityReport check_injectivity(const FillingData& filling, Int radius) {
  InjectivityReport rep;
  rep.radius = radius;
  const auto& src = filling.source->group();
  const auto& dst = filling.quotient_oracle();

  std::unordered_map<GroupElement, GroupElement, GroupElementHash> seen;
  for_each_in_ball(src, radius, [&](const GroupElement& g, Int, std::size_t, std::size_t, int) {
    auto img = filling.project(g);
    auto [it, fresh] = seen.emplace(img, g);
    rep.ball.record(fresh ? 0.0 : -1.0, [&] {
      return Json{{"x", src.format(it->second)}, {"y", src.format(g)}, {"image", dst.format(img)}};
    });
  });

  for (std::size_t p = 0; p < filling.source->peripheral_count(); ++p) {
    const auto f = filling.source->peripheral(p).factor();
    const auto& sf = src.factor(f);
    const auto& qf = dst.factor(f);
    // Same class in P/N_P must mean same image in G/N, and conversely.
    std::map<std::vector<Int>, GroupElement> by_class;
    std::unordered_map<GroupElement, std::vector<Int>, GroupElementHash> by_image;
    auto elements = sf.sphere_ball(radius);
    elements.insert(elements.begin(), std::vector<Int>(static_cast<std::size_t>(sf.dimension()), 0));
    for (const auto& c : elements) {
      const auto exps = sf.preimage(c);
      const auto cls = qf.reduce(exps);
      const auto img = filling.project(src.from_coords(f, c));
      auto [ci, cfresh] = by_class.emplace(cls, img);
      auto [ii, ifresh] = by_image.emplace(img, cls);
      const bool ok = ci->second == img && ii->second == cls;
      rep.peripheral.record(ok ? 0.0 : -1.0, [&] {
        return Json{{"peripheral", p}, {"element", src.format(src.from_coords(f, c))}, {"image", dst.format(img)}};
      });
    }
  }
  return rep;
}

std::optional<Int> minimal_failing_radius(const FillingData& filling, Int r_max) {
  if (r_max < 1) throw Error(ErrorCode::invalid_parameter, "r_max must be positive");
  const auto fg = build_quotient_cusped(filling, 2 * r_max);
  for (Int r = 1; r <= r_max; ++r)
    if (!check_local_isometry(fg, r).pass()) return r;
  return std::nullopt;
}

}  // namespace rhfill
