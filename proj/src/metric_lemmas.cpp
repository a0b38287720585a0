#include "rhfill/metric_lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rhfill/errors.hpp"
#include "rhfill/parallel.hpp"

namespace rhfill {

Json to_json(const HyperbolicityEstimate& e) {
  Json j;
  j["mode"] = std::string(to_string(e.mode));
  j["delta4"] = e.delta4;
  j["delta_thin"] = e.delta_thin;
  j["samples"] = e.samples;
  j["exact"] = e.exact;
  j["witness"] = e.witness;
  return j;
}

Json MetricLemmaReport::to_json() const {
  Json j;
  j["radius"] = radius;
  j["vertices"] = vertices;
  j["delta"] = delta;
  j["delta_detail"] = delta_detail;
  j["verdict"] = pass() ? "pass" : "fail";
  j["checks"] = Json::array({comparison.to_json(), horoball_entry.to_json(), quasidensity.to_json()});
  return j;
}

namespace {

constexpr double kUnbounded = 1e18;

struct Horoball {
  int peripheral = -1;
  std::vector<std::uint32_t> base;     // level-0 vertices
  std::vector<std::uint32_t> members;  // all vertices, base included
};

Json vertex_json(const CuspedGraph& g, std::size_t v) {
  return Json{{"id", v}, {"depth", g.depth(v)}, {"coset", g.coset_label(v)}, {"word", g.word_label(v)}};
}

void check_comparison(const RelHypPair& pair, const CuspedGraph& g, const DistanceMatrix& d,
                      const std::vector<std::uint32_t>& group_vertices, PropertyCheck& out) {
  const auto& G = pair.group();
  const std::size_t m = group_vertices.size();
  std::vector<PropertyCheck> parts(m);
  parallel_for(m, [&](std::size_t i) {
    const auto u = group_vertices[i];
    const auto u_inv = G.inverse(g.key(u).base);
    for (std::size_t j = i; j < m; ++j) {
      const auto v = group_vertices[j];
      const auto dx = d(u, v);
      if (!g.certified(u, v, dx)) continue;
      const auto dg = static_cast<double>(G.word_length(G.multiply(u_inv, g.key(v).base)));
      const double upper = dx * std::pow(std::sqrt(2.0), dx);
      const double margin = std::min(dg - dx, upper - dg);
      parts[i].record(margin, [&] {
        return Json{{"u", vertex_json(g, u)}, {"v", vertex_json(g, v)}, {"d_X", dx}, {"d_G", dg},
                    {"upper", upper}};
      });
    }
  });
  for (const auto& p : parts) out.merge(p);
}

void check_horoball_entry(const RelHypPair& pair, const CuspedGraph& g, const DistanceMatrix& d, Int C,
                          double delta, PropertyCheck& out) {
  const std::size_t n = g.size();
  std::map<std::pair<int, GroupElement>, std::size_t> ids;
  std::vector<Horoball> balls;
  auto ball_of = [&](int p, const GroupElement& base) -> Horoball& {
    auto key = std::make_pair(p, pair.peripheral(static_cast<std::size_t>(p)).coset_key(base));
    auto [it, inserted] = ids.emplace(std::move(key), balls.size());
    if (inserted) balls.emplace_back().peripheral = p;
    return balls[it->second];
  };
  for (std::size_t v = 0; v < n; ++v) {
    const auto& k = g.key(v);
    const auto id = static_cast<std::uint32_t>(v);
    if (k.kind == VertexKind::group) {
      for (std::size_t p = 0; p < pair.peripheral_count(); ++p) {
        auto& b = ball_of(static_cast<int>(p), k.base);
        b.base.push_back(id);
        b.members.push_back(id);
      }
    } else if (k.kind == VertexKind::horoball) {
      ball_of(k.peripheral, k.base).members.push_back(id);
    }
  }
  // Leaving a horoball means descending to its base and taking one Cayley
  // edge outside the peripheral, which exists unless P is everything.
  std::vector<char> has_outside(pair.peripheral_count(), 0);
  for (std::size_t p = 0; p < pair.peripheral_count(); ++p)
    for (std::size_t f = 0; f < pair.group().factor_count(); ++f)
      if (f != pair.peripheral(p).factor() && !pair.group().factors()[f].is_trivial()) has_outside[p] = 1;
  const double slack = 3.0 * static_cast<double>(C) + 7.0 * delta;

  std::vector<PropertyCheck> parts(balls.size());
  parallel_for(balls.size(), [&](std::size_t h) {
    const auto& ball = balls[h];
    thread_local std::vector<std::int32_t> level;
    thread_local std::vector<std::uint32_t> stamp;
    thread_local std::uint32_t epoch = 0;
    if (level.size() != n) {
      level.assign(n, -1);
      stamp.assign(n, 0);
      epoch = 0;
    }
    for (auto v : ball.members) level[v] = static_cast<std::int32_t>(g.depth(v));
    auto exit_distance = [&](std::size_t z) -> double {
      if (level[z] < 0) return 0;
      return has_outside[static_cast<std::size_t>(ball.peripheral)] ? level[z] + 1.0 : kUnbounded;
    };
    std::vector<std::uint32_t> near;
    for (std::size_t x = 0; x < n; ++x) {
      if (level[x] >= 0) {
        near.push_back(static_cast<std::uint32_t>(x));
        continue;
      }
      for (auto c : ball.base)
        if (d(x, c) <= C) {
          near.push_back(static_cast<std::uint32_t>(x));
          break;
        }
    }
    std::vector<std::uint32_t> layer, next;
    auto& part = parts[h];
    for (std::size_t i = 0; i < near.size(); ++i)
      for (std::size_t j = i; j < near.size(); ++j) {
        const auto x = near[i], y = near[j];
        const auto dxy = d(x, y);
        if (!g.certified(x, y, dxy)) continue;
        // Every vertex of every geodesic: walk back from y through
        // neighbours one step closer to x.
        if (++epoch == 0) {
          std::fill(stamp.begin(), stamp.end(), 0);
          epoch = 1;
        }
        layer.assign(1, y);
        stamp[y] = epoch;
        for (std::int32_t t = dxy; !layer.empty(); --t) {
          next.clear();
          for (auto z : layer) {
            const double value = std::min(d(x, z), d(y, z));
            const double margin = exit_distance(z) + slack - value;
            part.record(margin, [&] {
              return Json{{"x", vertex_json(g, x)}, {"y", vertex_json(g, y)}, {"z", vertex_json(g, z)},
                          {"d_z_xy", value}, {"d_z_outside", exit_distance(z)}};
            });
            if (t == 0) continue;
            for (auto w : g.adjacency(z))
              if (stamp[w] != epoch && d(x, w) == t - 1) {
                stamp[w] = epoch;
                next.push_back(w);
              }
          }
          std::swap(layer, next);
        }
      }
    for (auto v : ball.members) level[v] = -1;
  });
  for (const auto& p : parts) out.merge(p);
  out.details["horoballs"] = balls.size();
  out.details["C"] = C;
  out.details["bound_slack"] = slack;
}

void check_quasidensity(const RelHypPair& pair, const CuspedGraph& g, Int radius, Int element_radius,
                        double delta, PropertyCheck& out) {
  const std::size_t n = g.size();
  const auto& cd = g.center_distance;
  // Vertices on some geodesic from the centre to the outer sphere.
  std::vector<std::vector<std::uint32_t>> by_level(static_cast<std::size_t>(radius) + 1);
  for (std::size_t v = 0; v < n; ++v)
    if (cd[v] >= 0 && cd[v] <= radius) by_level[static_cast<std::size_t>(cd[v])].push_back(static_cast<std::uint32_t>(v));
  std::vector<char> on_ray(n, 0);
  for (auto v : by_level.back()) on_ray[v] = 1;
  for (Int t = radius - 1; t >= 0; --t)
    for (auto v : by_level[static_cast<std::size_t>(t)])
      for (auto w : g.adjacency(v))
        if (on_ray[w] && cd[w] == t + 1) {
          on_ray[v] = 1;
          break;
        }
  std::vector<std::int32_t> dist(n, -1);
  std::vector<std::uint32_t> layer, next;
  for (std::size_t v = 0; v < n; ++v)
    if (on_ray[v]) {
      dist[v] = 0;
      layer.push_back(static_cast<std::uint32_t>(v));
    }
  for (std::int32_t t = 0; !layer.empty(); ++t) {
    next.clear();
    for (auto u : layer)
      for (auto w : g.adjacency(u))
        if (dist[w] < 0) {
          dist[w] = t + 1;
          next.push_back(w);
        }
    std::swap(layer, next);
  }
  const double bound = 8.0 + 21.0 * delta;
  std::int32_t farthest = 0;
  for (std::size_t v = 0; v < n; ++v) {
    const auto& k = g.key(v);
    if (k.kind != VertexKind::group || pair.group().word_length(k.base) > element_radius) continue;
    farthest = std::max(farthest, dist[v]);
    out.record(bound - dist[v], [&] { return Json{{"gamma", vertex_json(g, v)}, {"distance", dist[v]}}; });
  }
  out.details["bound"] = bound;
  out.details["max_distance"] = farthest;
  out.details["sphere_vertices"] = by_level.back().size();
  out.details["element_radius"] = element_radius;
}

}  // namespace

MetricLemmaReport verify_metric_lemmas(const RelHypPair& pair, const CuspedGraph& window,
                                       const MetricLemmaOptions& options) {
  if (window.radius < kMinLemmaRadius)
    throw Error(ErrorCode::window_too_small,
                "metric lemma checks need radius >= " + std::to_string(kMinLemmaRadius));
  if (!window.has_keys()) throw Error(ErrorCode::invalid_parameter, "window has no vertex keys");
  if (options.entry_distance < 0 || options.quasidensity_radius < 0)
    throw Error(ErrorCode::invalid_parameter, "negative lemma parameter");
  if (options.quasidensity_radius > window.radius)
    throw Error(ErrorCode::window_too_small, "quasidensity radius exceeds window radius");

  MetricLemmaReport report;
  report.radius = window.radius;
  report.vertices = window.size();
  if (options.delta) {
    report.delta = *options.delta;
    report.delta_detail = Json{{"source", "given"}};
  } else {
    const auto wd = window_delta(window, options.seed);
    report.delta = wd.value;
    report.delta_detail = Json{{"source", "window"}, {"four_point", to_json(wd.four_point)}, {"thin", to_json(wd.thin)}};
  }

  const DistanceMatrix d(window);
  std::vector<std::uint32_t> group_vertices;
  for (std::size_t v = 0; v < window.size(); ++v)
    if (window.key(v).kind == VertexKind::group) group_vertices.push_back(static_cast<std::uint32_t>(v));

  check_comparison(pair, window, d, group_vertices, report.comparison);
  check_horoball_entry(pair, window, d, options.entry_distance, report.delta, report.horoball_entry);
  check_quasidensity(pair, window, window.radius, options.quasidensity_radius, report.delta, report.quasidensity);
  return report;
}

MetricLemmaReport verify_metric_lemmas(std::shared_ptr<const RelHypPair> pair, Int radius,
                                       const MetricLemmaOptions& options) {
  if (radius < kMinLemmaRadius)
    throw Error(ErrorCode::window_too_small,
                "metric lemma checks need radius >= " + std::to_string(kMinLemmaRadius));
  const auto window = build_cusped_ball(pair, radius);
  return verify_metric_lemmas(*pair, window, options);
}

}  // namespace rhfill
