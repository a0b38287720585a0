#pragma once

// Cayley graphs, coned-off graphs, combinatorial horoballs and cusped spaces.
//
// The infinite spaces are represented implicitly by CuspedSpace, which
// enumerates the neighbours of any vertex.  Finite windows (metric balls)
// are materialised as CuspedGraph.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rhfill/group.hpp"

namespace rhfill {

enum class VertexKind : std::uint8_t { group, horoball, cone };
enum class EdgeKind : std::uint8_t { cayley, horizontal, vertical, cone };

std::string_view to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(std::string_view s);

/// A vertex of a Cayley, coned-off or cusped space.  Horoball vertices are
/// (u, peripheral, level) with level >= 1; level 0 of each horoball is the
/// coset itself.  Cone vertices carry the coset key of their coset.
struct VertexKey {
  GroupElement base;
  int peripheral = -1;
  Int level = 0;
  VertexKind kind = VertexKind::group;

  static VertexKey group_vertex(GroupElement g) { return {std::move(g), -1, 0, VertexKind::group}; }
  static VertexKey horoball_vertex(GroupElement g, int p, Int level) {
    return level == 0 ? group_vertex(std::move(g)) : VertexKey{std::move(g), p, level, VertexKind::horoball};
  }
  static VertexKey cone_vertex(GroupElement key, int p) { return {std::move(key), p, 0, VertexKind::cone}; }

  Int depth() const noexcept { return kind == VertexKind::cone ? 1 : level; }

  friend bool operator==(const VertexKey&, const VertexKey&) = default;
  friend auto operator<=>(const VertexKey&, const VertexKey&) = default;
};

struct VertexKeyHash {
  std::size_t operator()(const VertexKey& v) const noexcept;
};

enum class SpaceMode { cayley, coned, cusped };

struct Neighbor {
  VertexKey key;
  EdgeKind kind;
};

/// The infinite Cayley, coned-off or cusped graph of a pair, given by its
/// neighbour function.  `max_depth` truncates horoballs (use a large value
/// for effectively untruncated spaces); `cone_cap` bounds the coset elements
/// joined to a cone vertex, measured in the peripheral word metric.
class CuspedSpace {
 public:
  CuspedSpace(std::shared_ptr<const RelHypPair> pair, SpaceMode mode, Int max_depth = 64,
              Int cone_cap = 64);

  const RelHypPair& pair() const noexcept { return *pair_; }
  const std::shared_ptr<const RelHypPair>& pair_ptr() const noexcept { return pair_; }
  const GroupOracle& group() const noexcept { return pair_->group(); }
  SpaceMode mode() const noexcept { return mode_; }
  Int max_depth() const noexcept { return max_depth_; }
  Int cone_cap() const noexcept { return cone_cap_; }

  /// Neighbours in a fixed deterministic order.
  void neighbors(const VertexKey& v, std::vector<Neighbor>& out) const;

  /// g * v.
  VertexKey translate(const GroupElement& g, const VertexKey& v) const;
  /// Splits v = g * root with root based at the identity.
  std::pair<GroupElement, VertexKey> root(const VertexKey& v) const;

  /// Peripheral elements x with 0 < |x|_P <= radius, shortest first.
  const std::vector<GroupElement>& peripheral_ball(int p, Int radius) const;

  std::string coset_label(const VertexKey& v) const;
  std::string word_label(const VertexKey& v) const;

 private:
  std::shared_ptr<const RelHypPair> pair_;
  SpaceMode mode_;
  Int max_depth_;
  Int cone_cap_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<int, Int>, std::vector<GroupElement>> ball_cache_;
};

struct GraphPath {
  std::vector<std::size_t> vertices;
  std::size_t length() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// Breadth-first distances with deterministic parents: the parent of a
/// vertex is its smallest-index neighbour one step closer to the source.
struct BfsResult {
  std::vector<std::int32_t> distance;  // -1 when not reached
  std::vector<std::int64_t> parent;    // -1 for the source and unreached
  GraphPath path_to(std::size_t target) const;
};

/// A finite graph whose vertices carry depth and labels.  Windows of
/// implicit spaces also keep the vertex keys and the distance of each vertex
/// from the window centre.
class CuspedGraph {
 public:
  std::size_t size() const noexcept { return depth_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::size_t add_vertex(Int depth, std::string coset, std::string word,
                         std::optional<VertexKey> key = std::nullopt);
  void add_edge(std::size_t u, std::size_t v, EdgeKind kind);
  /// Sorts adjacency lists; called once after construction.
  void finalize();

  Int depth(std::size_t v) const { return depth_.at(v); }
  const std::string& coset_label(std::size_t v) const { return coset_.at(v); }
  const std::string& word_label(std::size_t v) const { return word_.at(v); }
  bool has_keys() const noexcept { return !keys_.empty(); }
  const VertexKey& key(std::size_t v) const { return keys_.at(v); }
  std::optional<std::size_t> index_of(const VertexKey& k) const;

  const std::vector<std::uint32_t>& adjacency(std::size_t v) const { return adj_.at(v); }
  struct Edge {
    std::uint32_t u, v;
    EdgeKind kind;
  };
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  BfsResult bfs(std::size_t source, std::int32_t limit = -1) const;
  /// Distances only, into a caller-owned buffer that must hold -1 for every
  /// vertex on entry.  `visited` receives the reached vertices in BFS order
  /// so the caller can reset just those entries.
  void bfs_distances(std::size_t source, std::int32_t limit, std::vector<std::int32_t>& dist,
                     std::vector<std::uint32_t>& visited) const;
  /// Raises disconnected-in-window when no path exists.
  GraphPath shortest_path(std::size_t u, std::size_t v) const;
  bool is_connected() const;

  // Window metadata (absent for standalone graphs).
  Int radius = -1;
  Int max_depth = 0;
  std::vector<std::int32_t> center_distance;
  /// True when no geodesic between u and v can leave the window, so the
  /// window distance d is the distance in the full space.
  bool certified(std::size_t u, std::size_t v, std::int32_t d) const;

  void dump(std::ostream& out) const;
  static CuspedGraph load(std::istream& in);

 private:
  std::vector<Int> depth_;
  std::vector<std::string> coset_, word_;
  std::vector<VertexKey> keys_;
  std::unordered_map<VertexKey, std::size_t, VertexKeyHash> index_;
  std::vector<std::vector<std::uint32_t>> adj_;
  std::vector<Edge> edges_;
};

/// The metric ball of radius R about `center` in an implicit space.
CuspedGraph build_window(const CuspedSpace& space, const VertexKey& center, Int radius,
                         std::size_t cap = kDefaultElementCap);

CuspedGraph build_cayley_ball(std::shared_ptr<const RelHypPair> pair, Int radius,
                              std::size_t cap = kDefaultElementCap);
CuspedGraph build_coned_off(std::shared_ptr<const RelHypPair> pair, Int radius, Int cone_cap,
                            std::size_t cap = kDefaultElementCap);
/// d_X-ball of radius R about the identity, horoballs truncated at
/// max_depth (default R, which loses nothing inside the ball).
CuspedGraph build_cusped_ball(std::shared_ptr<const RelHypPair> pair, Int radius,
                              Int max_depth = -1, std::size_t cap = kDefaultElementCap);

/// Exact distances in an implicit space, by breadth-first search from the
/// finitely many vertex types based at the identity and translation.
class DistanceOracle {
 public:
  explicit DistanceOracle(std::shared_ptr<const CuspedSpace> space,
                          std::size_t cap = kDefaultElementCap);

  const CuspedSpace& space() const noexcept { return *space_; }
  /// d(x, y) if it is at most `limit`, otherwise nullopt.
  std::optional<Int> distance(const VertexKey& x, const VertexKey& y, Int limit);
  /// All vertices within `radius` of the identity-based root `root`, with
  /// distances.
  const std::unordered_map<VertexKey, std::int32_t, VertexKeyHash>& ball(const VertexKey& root,
                                                                          Int radius);

 private:
  struct Table {
    std::unordered_map<VertexKey, std::int32_t, VertexKeyHash> dist;
    std::vector<VertexKey> frontier;
    Int radius = 0;
  };
  Table& table(const VertexKey& root, Int radius);

  std::shared_ptr<const CuspedSpace> space_;
  std::size_t cap_;
  std::unordered_map<VertexKey, Table, VertexKeyHash> tables_;
};

/// Standalone combinatorial horoball H(Y) over a finite connected graph Y.
class HoroballGraph {
 public:
  HoroballGraph(const CuspedGraph& base, Int max_depth);

  const CuspedGraph& graph() const noexcept { return graph_; }
  std::size_t base_size() const noexcept { return n_; }
  Int max_depth() const noexcept { return max_depth_; }
  std::size_t vertex(std::size_t base_vertex, Int level) const;
  std::size_t base_of(std::size_t v) const { return v % n_; }
  Int level_of(std::size_t v) const { return static_cast<Int>(v / n_); }
  std::int32_t base_distance(std::size_t i, std::size_t j) const { return base_dist_[i * n_ + j]; }

 private:
  std::size_t n_;
  Int max_depth_;
  std::vector<std::int32_t> base_dist_;
  std::vector<std::int64_t> base_next_;  // next hop on a base geodesic, n x n
  CuspedGraph graph_;
  friend GraphPath regular_geodesic(const HoroballGraph&, std::size_t, std::size_t);
};

/// Minimal vertical / horizontal (at most 3 steps) / vertical path.
/// Raises window-too-shallow when the apex would exceed the truncation.
GraphPath regular_geodesic(const HoroballGraph& h, std::size_t u, std::size_t v);

/// Path graph on the integers in [-half_width, half_width] (vertex i is the
/// integer i - half_width).
CuspedGraph integer_path_graph(Int half_width);

}  // namespace rhfill
