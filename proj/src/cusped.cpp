#include "rhfill/cusped.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "rhfill/errors.hpp"

namespace rhfill {

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::cayley: return "cayley";
    case EdgeKind::horizontal: return "horizontal";
    case EdgeKind::vertical: return "vertical";
    case EdgeKind::cone: return "cone";
  }
  return "cayley";
}

EdgeKind edge_kind_from_string(std::string_view s) {
  if (s == "cayley") return EdgeKind::cayley;
  if (s == "horizontal") return EdgeKind::horizontal;
  if (s == "vertical") return EdgeKind::vertical;
  if (s == "cone") return EdgeKind::cone;
  throw Error(ErrorCode::schema_error, "unknown edge kind '" + std::string(s) + "'");
}

std::size_t VertexKeyHash::operator()(const VertexKey& v) const noexcept {
  std::size_t h = v.base.hash();
  h ^= (static_cast<std::size_t>(v.level) * 0x9e3779b97f4a7c15ULL) +
       (static_cast<std::size_t>(v.peripheral + 2) << 20) + (static_cast<std::size_t>(v.kind) << 40);
  return h * 0xff51afd7ed558ccdULL;
}

// ---------------------------------------------------------------------------
// CuspedSpace

CuspedSpace::CuspedSpace(std::shared_ptr<const RelHypPair> pair, SpaceMode mode, Int max_depth,
                         Int cone_cap)
    : pair_(std::move(pair)), mode_(mode), max_depth_(max_depth), cone_cap_(cone_cap) {
  if (max_depth_ < 0) throw Error(ErrorCode::invalid_parameter, "negative horoball depth");
  if (max_depth_ > 62) throw Error(ErrorCode::invalid_parameter, "horoball depth above 62");
  if (cone_cap_ < 0) throw Error(ErrorCode::invalid_parameter, "negative cone cap");
}

const std::vector<GroupElement>& CuspedSpace::peripheral_ball(int p, Int radius) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto key = std::make_pair(p, radius);
  auto it = ball_cache_.find(key);
  if (it != ball_cache_.end()) return it->second;
  const auto f = pair_->peripheral(static_cast<std::size_t>(p)).factor();
  const auto& fac = group().factor(f);
  std::vector<GroupElement> out;
  for (const auto& c : fac.sphere_ball(radius)) out.push_back(group().from_coords(f, c));
  return ball_cache_.emplace(key, std::move(out)).first->second;
}

void CuspedSpace::neighbors(const VertexKey& v, std::vector<Neighbor>& out) const {
  out.clear();
  const auto& g = group();
  switch (v.kind) {
    case VertexKind::group:
      for (const auto& s : g.generators())
        out.push_back({VertexKey::group_vertex(g.multiply(v.base, s)), EdgeKind::cayley});
      if (mode_ == SpaceMode::cusped && max_depth_ >= 1)
        for (std::size_t p = 0; p < pair_->peripheral_count(); ++p)
          out.push_back({VertexKey::horoball_vertex(v.base, static_cast<int>(p), 1), EdgeKind::vertical});
      if (mode_ == SpaceMode::coned)
        for (std::size_t p = 0; p < pair_->peripheral_count(); ++p)
          out.push_back({VertexKey::cone_vertex(pair_->peripheral(p).coset_key(v.base), static_cast<int>(p)),
                         EdgeKind::cone});
      break;
    case VertexKind::horoball: {
      out.push_back({VertexKey::horoball_vertex(v.base, v.peripheral, v.level - 1), EdgeKind::vertical});
      if (v.level < max_depth_)
        out.push_back({VertexKey::horoball_vertex(v.base, v.peripheral, v.level + 1), EdgeKind::vertical});
      for (const auto& x : peripheral_ball(v.peripheral, Int{1} << v.level))
        out.push_back({VertexKey::horoball_vertex(g.multiply(v.base, x), v.peripheral, v.level),
                       EdgeKind::horizontal});
      break;
    }
    case VertexKind::cone: {
      out.push_back({VertexKey::group_vertex(v.base), EdgeKind::cone});
      for (const auto& x : peripheral_ball(v.peripheral, cone_cap_))
        out.push_back({VertexKey::group_vertex(g.multiply(v.base, x)), EdgeKind::cone});
      break;
    }
  }
}

VertexKey CuspedSpace::translate(const GroupElement& g, const VertexKey& v) const {
  VertexKey out = v;
  out.base = group().multiply(g, v.base);
  if (v.kind == VertexKind::cone)
    out.base = pair_->peripheral(static_cast<std::size_t>(v.peripheral)).coset_key(out.base);
  return out;
}

std::pair<GroupElement, VertexKey> CuspedSpace::root(const VertexKey& v) const {
  VertexKey r = v;
  r.base = GroupElement();
  return {v.base, std::move(r)};
}

std::string CuspedSpace::coset_label(const VertexKey& v) const {
  if (v.kind == VertexKind::group) return "-";
  const auto& per = pair_->peripheral(static_cast<std::size_t>(v.peripheral));
  return std::to_string(v.peripheral) + "@" + group().format(per.coset_key(v.base));
}

std::string CuspedSpace::word_label(const VertexKey& v) const {
  if (v.kind == VertexKind::cone) return "cone";
  return group().format(v.base);
}

// ---------------------------------------------------------------------------
// CuspedGraph

GraphPath BfsResult::path_to(std::size_t target) const {
  GraphPath p;
  if (distance.at(target) < 0) return p;
  for (std::int64_t v = static_cast<std::int64_t>(target); v >= 0; v = parent[static_cast<std::size_t>(v)])
    p.vertices.push_back(static_cast<std::size_t>(v));
  std::reverse(p.vertices.begin(), p.vertices.end());
  return p;
}

std::size_t CuspedGraph::add_vertex(Int depth, std::string coset, std::string word,
                                    std::optional<VertexKey> key) {
  const std::size_t id = depth_.size();
  depth_.push_back(depth);
  coset_.push_back(std::move(coset));
  word_.push_back(std::move(word));
  adj_.emplace_back();
  if (key) {
    if (keys_.size() != id)
      throw Error(ErrorCode::invalid_parameter, "mixing keyed and unkeyed vertices");
    index_.emplace(*key, id);
    keys_.push_back(std::move(*key));
  }
  return id;
}

void CuspedGraph::add_edge(std::size_t u, std::size_t v, EdgeKind kind) {
  if (u == v) return;  // self-loops are never kept
  if (u >= size() || v >= size()) throw Error(ErrorCode::invalid_parameter, "edge endpoint out of range");
  adj_[u].push_back(static_cast<std::uint32_t>(v));
  adj_[v].push_back(static_cast<std::uint32_t>(u));
  edges_.push_back({static_cast<std::uint32_t>(std::min(u, v)), static_cast<std::uint32_t>(std::max(u, v)), kind});
}

void CuspedGraph::finalize() {
  for (auto& a : adj_) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.u, a.v, a.kind) < std::tie(b.u, b.v, b.kind);
  });
  edges_.erase(std::unique(edges_.begin(), edges_.end(),
                           [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
               edges_.end());
}

std::optional<std::size_t> CuspedGraph::index_of(const VertexKey& k) const {
  auto it = index_.find(k);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BfsResult CuspedGraph::bfs(std::size_t source, std::int32_t limit) const {
  BfsResult r;
  r.distance.assign(size(), -1);
  r.parent.assign(size(), -1);
  std::vector<std::uint32_t> layer{static_cast<std::uint32_t>(source)}, next;
  r.distance[source] = 0;
  for (std::int32_t d = 0; !layer.empty() && (limit < 0 || d < limit); ++d) {
    next.clear();
    for (auto u : layer)
      for (auto w : adj_[u])
        if (r.distance[w] < 0) {
          r.distance[w] = d + 1;
          r.parent[w] = u;
          next.push_back(w);
        }
    std::sort(next.begin(), next.end());
    std::swap(layer, next);
  }
  return r;
}

void CuspedGraph::bfs_distances(std::size_t source, std::int32_t limit, std::vector<std::int32_t>& dist,
                                std::vector<std::uint32_t>& visited) const {
  visited.clear();
  visited.push_back(static_cast<std::uint32_t>(source));
  dist[source] = 0;
  for (std::size_t head = 0; head < visited.size(); ++head) {
    const auto u = visited[head];
    const auto du = dist[u];
    if (limit >= 0 && du >= limit) break;
    for (auto w : adj_[u])
      if (dist[w] < 0) {
        dist[w] = du + 1;
        visited.push_back(w);
      }
  }
}

GraphPath CuspedGraph::shortest_path(std::size_t u, std::size_t v) const {
  if (u >= size() || v >= size()) throw Error(ErrorCode::invalid_parameter, "vertex out of range");
  auto r = bfs(u);
  if (r.distance[v] < 0)
    throw Error(ErrorCode::disconnected_in_window,
                "no path from " + std::to_string(u) + " to " + std::to_string(v) + " inside the window");
  return r.path_to(v);
}

bool CuspedGraph::is_connected() const {
  if (size() == 0) return true;
  auto r = bfs(0);
  return std::none_of(r.distance.begin(), r.distance.end(), [](std::int32_t d) { return d < 0; });
}

bool CuspedGraph::certified(std::size_t u, std::size_t v, std::int32_t d) const {
  if (radius < 0 || center_distance.empty()) return false;
  return static_cast<Int>(center_distance[u]) + center_distance[v] + d <= 2 * radius;
}

void CuspedGraph::dump(std::ostream& out) const {
  out << "# rhfill graph vertices=" << size() << " edges=" << edges_.size() << " radius=" << radius
      << " max_depth=" << max_depth << "\n";
  for (std::size_t v = 0; v < size(); ++v)
    out << "V " << v << ' ' << depth_[v] << ' ' << coset_[v] << ' ' << word_[v] << '\n';
  for (const auto& e : edges_) out << "E " << e.u << ' ' << e.v << ' ' << to_string(e.kind) << '\n';
}

CuspedGraph CuspedGraph::load(std::istream& in) {
  CuspedGraph g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("radius=");
      if (pos != std::string::npos) g.radius = std::stoll(line.substr(pos + 7));
      pos = line.find("max_depth=");
      if (pos != std::string::npos) g.max_depth = std::stoll(line.substr(pos + 10));
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto bad = [&](const std::string& why) {
      throw Error(ErrorCode::schema_error, "graph line " + std::to_string(lineno) + ": " + why);
    };
    if (tag == "V") {
      std::size_t id;
      Int depth;
      std::string coset, word;
      if (!(ls >> id >> depth >> coset >> word)) bad("expected 'V <id> <depth> <cosetId|-> <word>'");
      if (id != g.size()) bad("vertex ids must be consecutive from 0");
      g.add_vertex(depth, coset, word);
    } else if (tag == "E") {
      std::size_t u, v;
      std::string kind;
      if (!(ls >> u >> v >> kind)) bad("expected 'E <id1> <id2> <kind>'");
      if (u >= g.size() || v >= g.size()) bad("edge references an unknown vertex");
      g.add_edge(u, v, edge_kind_from_string(kind));
    } else {
      bad("unknown record '" + tag + "'");
    }
  }
  g.finalize();
  return g;
}

// ---------------------------------------------------------------------------
// Windows

CuspedGraph build_window(const CuspedSpace& space, const VertexKey& center, Int radius,
                         std::size_t cap) {
  if (radius < 0) throw Error(ErrorCode::invalid_parameter, "negative radius");
  CuspedGraph g;
  g.radius = radius;
  g.max_depth = space.max_depth();
  std::vector<Neighbor> nbrs;
  auto add = [&](const VertexKey& k, std::int32_t d) {
    g.add_vertex(k.depth(), space.coset_label(k), space.word_label(k), k);
    g.center_distance.push_back(d);
    if (g.size() > cap)
      throw Error(ErrorCode::budget_exceeded, "window of radius " + std::to_string(radius) +
                                                  " exceeds " + std::to_string(cap) + " vertices");
  };
  add(center, 0);
  // One neighbour scan per vertex: new vertices are appended while inside
  // the radius, and each edge is recorded from its later endpoint.
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool interior = g.center_distance[i] < radius;
    space.neighbors(g.key(i), nbrs);
    for (const auto& n : nbrs) {
      auto j = g.index_of(n.key);
      if (!j && interior) {
        add(n.key, g.center_distance[i] + 1);
      } else if (j && *j < i) {
        g.add_edge(i, *j, n.kind);
      }
    }
  }
  g.finalize();
  return g;
}

CuspedGraph build_cayley_ball(std::shared_ptr<const RelHypPair> pair, Int radius, std::size_t cap) {
  CuspedSpace space(std::move(pair), SpaceMode::cayley, 0);
  return build_window(space, VertexKey::group_vertex({}), radius, cap);
}

CuspedGraph build_coned_off(std::shared_ptr<const RelHypPair> pair, Int radius, Int cone_cap,
                            std::size_t cap) {
  CuspedSpace space(std::move(pair), SpaceMode::coned, 0, cone_cap);
  return build_window(space, VertexKey::group_vertex({}), radius, cap);
}

CuspedGraph build_cusped_ball(std::shared_ptr<const RelHypPair> pair, Int radius, Int max_depth,
                              std::size_t cap) {
  CuspedSpace space(std::move(pair), SpaceMode::cusped, max_depth < 0 ? radius : max_depth);
  return build_window(space, VertexKey::group_vertex({}), radius, cap);
}

// ---------------------------------------------------------------------------
// DistanceOracle

DistanceOracle::DistanceOracle(std::shared_ptr<const CuspedSpace> space, std::size_t cap)
    : space_(std::move(space)), cap_(cap) {}

DistanceOracle::Table& DistanceOracle::table(const VertexKey& root, Int radius) {
  auto [it, fresh] = tables_.try_emplace(root);
  Table& t = it->second;
  if (fresh) {
    t.dist.emplace(root, 0);
    t.frontier.push_back(root);
  }
  std::vector<Neighbor> nbrs;
  while (t.radius < radius && !t.frontier.empty()) {
    std::vector<VertexKey> next;
    const auto d = static_cast<std::int32_t>(t.radius + 1);
    for (const auto& v : t.frontier) {
      space_->neighbors(v, nbrs);
      for (auto& n : nbrs)
        if (t.dist.emplace(n.key, d).second) next.push_back(std::move(n.key));
    }
    if (t.dist.size() > cap_)
      throw Error(ErrorCode::budget_exceeded, "distance table of radius " + std::to_string(t.radius + 1) +
                                                  " exceeds " + std::to_string(cap_) + " vertices");
    t.frontier = std::move(next);
    ++t.radius;
  }
  if (t.frontier.empty()) t.radius = std::max(t.radius, radius);
  return t;
}

std::optional<Int> DistanceOracle::distance(const VertexKey& x, const VertexKey& y, Int limit) {
  auto [g, r] = space_->root(x);
  const VertexKey target = space_->translate(space_->group().inverse(g), y);
  const Table& t = table(r, limit);
  auto it = t.dist.find(target);
  if (it == t.dist.end() || it->second > limit) return std::nullopt;
  return it->second;
}

const std::unordered_map<VertexKey, std::int32_t, VertexKeyHash>& DistanceOracle::ball(const VertexKey& root,
                                                                                        Int radius) {
  return table(root, radius).dist;
}

// ---------------------------------------------------------------------------
// Standalone horoballs

CuspedGraph integer_path_graph(Int half_width) {
  CuspedGraph g;
  for (Int i = -half_width; i <= half_width; ++i) g.add_vertex(0, "-", std::to_string(i));
  for (std::size_t i = 0; i + 1 < g.size(); ++i) g.add_edge(i, i + 1, EdgeKind::cayley);
  g.finalize();
  return g;
}

HoroballGraph::HoroballGraph(const CuspedGraph& base, Int max_depth)
    : n_(base.size()), max_depth_(max_depth) {
  if (n_ == 0) throw Error(ErrorCode::invalid_parameter, "empty base graph");
  if (max_depth < 0 || max_depth > 62) throw Error(ErrorCode::invalid_parameter, "horoball depth out of range");
  if (!base.is_connected()) throw Error(ErrorCode::disconnected_in_window, "horoball base graph is disconnected");
  base_dist_.assign(n_ * n_, -1);
  base_next_.assign(n_ * n_, -1);
  for (std::size_t j = 0; j < n_; ++j) {
    auto r = base.bfs(j);
    for (std::size_t i = 0; i < n_; ++i) {
      base_dist_[i * n_ + j] = r.distance[i];
      base_next_[i * n_ + j] = r.parent[i];  // one step from i toward j
    }
  }
  for (Int k = 0; k <= max_depth; ++k)
    for (std::size_t i = 0; i < n_; ++i)
      graph_.add_vertex(k, "H", base.word_label(i));
  for (Int k = 0; k <= max_depth; ++k) {
    const Int reach = Int{1} << k;
    for (std::size_t i = 0; i < n_; ++i) {
      if (k < max_depth) graph_.add_edge(vertex(i, k), vertex(i, k + 1), EdgeKind::vertical);
      for (std::size_t j = i + 1; j < n_; ++j)
        if (base_distance(i, j) <= reach) graph_.add_edge(vertex(i, k), vertex(j, k), EdgeKind::horizontal);
    }
  }
  graph_.max_depth = max_depth;
  graph_.finalize();
}

std::size_t HoroballGraph::vertex(std::size_t base_vertex, Int level) const {
  if (base_vertex >= n_ || level < 0 || level > max_depth_)
    throw Error(ErrorCode::invalid_parameter, "horoball vertex out of range");
  return static_cast<std::size_t>(level) * n_ + base_vertex;
}

GraphPath regular_geodesic(const HoroballGraph& h, std::size_t u, std::size_t v) {
  const std::size_t iu = h.base_of(u), iv = h.base_of(v);
  const Int ku = h.level_of(u), kv = h.level_of(v);
  const Int d = h.base_distance(iu, iv);
  GraphPath path;
  if (d == 0) {
    const Int step = kv >= ku ? 1 : -1;
    for (Int k = ku; k != kv + step; k += step) path.vertices.push_back(h.vertex(iu, k));
    return path;
  }
  // Lowest apex level minimising (k - ku) + (k - kv) + ceil(d / 2^k) with at
  // most 3 horizontal steps.  Allowing more steps never helps: trading 2h
  // steps for one more level on each side costs 2 and saves at least 2.
  Int best_k = -1, best_cost = 0;
  for (Int k = std::max(ku, kv);; ++k) {
    const Int reach = Int{1} << k;
    const Int hops = (d + reach - 1) / reach;
    const Int cost = (k - ku) + (k - kv) + hops;
    if (hops <= 3 && (best_k < 0 || cost < best_cost)) {
      best_k = k;
      best_cost = cost;
    }
    if (hops == 1) break;
  }
  if (best_k > h.max_depth())
    throw Error(ErrorCode::window_too_shallow, "regular geodesic needs apex level " + std::to_string(best_k) +
                                                   " above truncation " + std::to_string(h.max_depth()));
  for (Int k = ku; k <= best_k; ++k) path.vertices.push_back(h.vertex(iu, k));
  const Int reach = Int{1} << best_k;
  std::size_t at = iu;
  while (at != iv) {
    Int remaining = h.base_distance(at, iv);
    for (Int s = 0; s < std::min(reach, remaining); ++s)
      at = static_cast<std::size_t>(h.base_next_[at * h.n_ + iv]);
    path.vertices.push_back(h.vertex(at, best_k));
  }
  for (Int k = best_k - 1; k >= kv; --k) path.vertices.push_back(h.vertex(iv, k));
  return path;
}

}  // namespace rhfill
