#include "rhfill/hyperbolicity.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "rhfill/errors.hpp"
#include "rhfill/parallel.hpp"
#include "rhfill/random.hpp"

namespace rhfill {

std::string_view to_string(DeltaMode mode) {
  switch (mode) {
    case DeltaMode::four_point_exhaustive: return "four-point-exhaustive";
    case DeltaMode::four_point_sampled: return "four-point-sampled";
    case DeltaMode::thin_triangles: return "thin-triangles";
  }
  return "four-point-exhaustive";
}

DeltaMode delta_mode_from_string(std::string_view s) {
  if (s == "four-point-exhaustive" || s == "exhaustive") return DeltaMode::four_point_exhaustive;
  if (s == "four-point-sampled" || s == "sampled") return DeltaMode::four_point_sampled;
  if (s == "thin-triangles" || s == "thin") return DeltaMode::thin_triangles;
  throw Error(ErrorCode::invalid_parameter, "unknown delta mode '" + std::string(s) + "'");
}

DistanceMatrix::DistanceMatrix(const CuspedGraph& g, std::vector<std::size_t> selection)
    : selection_(std::move(selection)) {
  if (selection_.empty()) {
    selection_.resize(g.size());
    std::iota(selection_.begin(), selection_.end(), 0);
  }
  n_ = selection_.size();
  if (n_ > kExhaustiveVertexLimit)
    throw Error(ErrorCode::budget_exceeded, "distance matrix over " + std::to_string(n_) + " vertices");
  d_.assign(n_ * n_, 0);
  parallel_for(n_, [&](std::size_t i) {
    auto r = g.bfs(selection_[i]);
    for (std::size_t j = 0; j < n_; ++j) {
      const auto dist = r.distance[selection_[j]];
      if (dist < 0)
        throw Error(ErrorCode::disconnected_in_window, "graph is disconnected");
      d_[i * n_ + j] = static_cast<std::uint16_t>(dist);
    }
  });
}

namespace {

// Twice the four-point value of (x,y | v,w) for the pairing that puts
// {x,y} and {v,w} together.
inline std::int32_t twice_value(std::int32_t dxy, std::int32_t dvw, std::int32_t dxv, std::int32_t dyw,
                                std::int32_t dxw, std::int32_t dyv) {
  return dxy + dvw - std::max(dxv + dyw, dxw + dyv);
}

std::int32_t twice_delta_of(const DistanceMatrix& d, std::size_t x, std::size_t y, std::size_t v,
                            std::size_t w) {
  const std::int32_t s1 = d(x, y) + d(v, w), s2 = d(x, v) + d(y, w), s3 = d(x, w) + d(y, v);
  std::int32_t hi = std::max({s1, s2, s3});
  std::int32_t mid = s1 + s2 + s3 - hi - std::min({s1, s2, s3});
  return hi - mid;
}

}  // namespace

HyperbolicityEstimate four_point_exhaustive(const CuspedGraph& g, std::size_t budget) {
  HyperbolicityEstimate est;
  est.mode = DeltaMode::four_point_exhaustive;
  est.exact = true;
  if (g.size() < 4) return est;
  DistanceMatrix d(g);
  const std::size_t n = d.size();
  // Far-apart pairs: no neighbour of either end is farther from the other.
  struct Pair {
    std::uint32_t x, y;
    std::int32_t dist;
  };
  std::vector<Pair> pairs;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x + 1; y < n; ++y) {
      const auto dxy = d(x, y);
      bool far = true;
      for (auto z : g.adjacency(x))
        if (d(z, y) > dxy) {
          far = false;
          break;
        }
      if (far)
        for (auto z : g.adjacency(y))
          if (d(x, z) > dxy) {
            far = false;
            break;
          }
      if (far) pairs.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), dxy});
    }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist > b.dist; });
  std::int32_t best = 0;
  std::array<std::size_t, 4> wit{0, 0, 0, 0};
  std::size_t evaluations = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    // Any quadruple containing this pair as the smaller one is worth at most
    // its length.
    if (2 * p.dist <= best) break;
    evaluations += i;
    if (evaluations > budget)
      throw Error(ErrorCode::budget_exceeded, "four-point evaluation budget exhausted");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& q = pairs[j];
      const auto v = twice_value(p.dist, q.dist, d(p.x, q.x), d(p.y, q.y), d(p.x, q.y), d(p.y, q.x));
      if (v > best) {
        best = v;
        wit = {p.x, p.y, q.x, q.y};
      }
    }
  }
  est.delta4 = best / 2.0;
  est.samples = evaluations;
  if (best > 0) est.witness.assign(wit.begin(), wit.end());
  return est;
}

namespace {

std::vector<std::size_t> sample_vertices(const CuspedGraph& g, std::size_t count, Rng& rng) {
  std::vector<std::size_t> all(g.size());
  std::iota(all.begin(), all.end(), 0);
  if (count >= all.size()) return all;
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(all.size() - i)]);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

HyperbolicityEstimate four_point_sampled(const CuspedGraph& g, std::size_t quadruples, std::uint64_t seed) {
  HyperbolicityEstimate est;
  est.mode = DeltaMode::four_point_sampled;
  if (g.size() < 4) return est;
  Rng rng(seed);
  DistanceMatrix d(g, sample_vertices(g, 256, rng));
  const std::size_t n = d.size();
  std::int32_t best = 0;
  for (std::size_t s = 0; s < quadruples; ++s) {
    const std::size_t x = rng.below(n), y = rng.below(n), v = rng.below(n), w = rng.below(n);
    const auto t = twice_delta_of(d, x, y, v, w);
    if (t > best) {
      best = t;
      est.witness = {d.vertex(x), d.vertex(y), d.vertex(v), d.vertex(w)};
    }
  }
  est.delta4 = best / 2.0;
  est.samples = quadruples;
  return est;
}

HyperbolicityEstimate thin_triangles(const CuspedGraph& g, std::size_t triangles, std::uint64_t seed) {
  HyperbolicityEstimate est;
  est.mode = DeltaMode::thin_triangles;
  if (g.size() < 3) return est;
  Rng rng(seed);
  const auto pool = sample_vertices(g, 64, rng);
  std::vector<BfsResult> trees;
  trees.reserve(pool.size());
  for (auto v : pool) trees.push_back(g.bfs(v));
  std::vector<std::int32_t> dist(g.size());
  std::vector<std::uint32_t> layer, next;
  std::int32_t best = 0;
  for (std::size_t t = 0; t < triangles; ++t) {
    const std::size_t a = rng.below(pool.size()), b = rng.below(pool.size()), c = rng.below(pool.size());
    if (trees[a].distance[pool[b]] < 0 || trees[a].distance[pool[c]] < 0 || trees[b].distance[pool[c]] < 0)
      throw Error(ErrorCode::disconnected_in_window, "graph is disconnected");
    const std::array<GraphPath, 3> sides{trees[a].path_to(pool[b]), trees[b].path_to(pool[c]),
                                         trees[a].path_to(pool[c])};
    for (int s = 0; s < 3; ++s) {
      // Multi-source search from the other two sides.
      std::fill(dist.begin(), dist.end(), -1);
      layer.clear();
      for (int o = 0; o < 3; ++o) {
        if (o == s) continue;
        for (auto v : sides[static_cast<std::size_t>(o)].vertices)
          if (dist[v] < 0) {
            dist[v] = 0;
            layer.push_back(static_cast<std::uint32_t>(v));
          }
      }
      std::size_t pending = 0;
      for (auto v : sides[static_cast<std::size_t>(s)].vertices)
        if (dist[v] < 0) ++pending;
      for (std::int32_t d = 0; pending > 0 && !layer.empty(); ++d) {
        next.clear();
        for (auto u : layer)
          for (auto w : g.adjacency(u))
            if (dist[w] < 0) {
              dist[w] = d + 1;
              next.push_back(w);
            }
        std::swap(layer, next);
        pending = 0;
        for (auto v : sides[static_cast<std::size_t>(s)].vertices)
          if (dist[v] < 0) ++pending;
      }
      for (auto v : sides[static_cast<std::size_t>(s)].vertices)
        if (dist[v] > best) {
          best = dist[v];
          est.witness = {pool[a], pool[b], pool[c], v};
        }
    }
  }
  est.delta_thin = best;
  est.samples = triangles;
  return est;
}

HyperbolicityEstimate estimate_delta(const CuspedGraph& g, DeltaMode mode, std::size_t budget,
                                     std::uint64_t seed) {
  if (!g.is_connected()) throw Error(ErrorCode::disconnected_in_window, "graph is disconnected");
  switch (mode) {
    case DeltaMode::four_point_exhaustive: return four_point_exhaustive(g, budget);
    case DeltaMode::four_point_sampled: return four_point_sampled(g, budget, seed);
    case DeltaMode::thin_triangles: return thin_triangles(g, budget, seed);
  }
  return {};
}

WindowDelta window_delta(const CuspedGraph& g, std::uint64_t seed) {
  if (!g.is_connected()) throw Error(ErrorCode::disconnected_in_window, "graph is disconnected");
  WindowDelta w;
  w.four_point = g.size() <= kSmallWindow ? four_point_exhaustive(g)
                                          : four_point_sampled(g, kWindowQuadruples, seed);
  w.thin = thin_triangles(g, kWindowTriangles, seed);
  w.value = std::max(w.four_point.delta4, w.thin.delta_thin);
  return w;
}

double four_point_delta(const std::vector<std::int32_t>& d, std::size_t n) {
  std::int32_t best = 0;
  auto at = [&](std::size_t i, std::size_t j) { return d[i * n + j]; };
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x + 1; y < n; ++y)
      for (std::size_t v = y + 1; v < n; ++v)
        for (std::size_t w = v + 1; w < n; ++w) {
          const std::int32_t s1 = at(x, y) + at(v, w), s2 = at(x, v) + at(y, w), s3 = at(x, w) + at(y, v);
          const std::int32_t hi = std::max({s1, s2, s3});
          const std::int32_t mid = s1 + s2 + s3 - hi - std::min({s1, s2, s3});
          best = std::max(best, hi - mid);
        }
  return best / 2.0;
}

}  // namespace rhfill
