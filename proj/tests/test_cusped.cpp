#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "rhfill/errors.hpp"
#include "rhfill/hyperbolicity.hpp"

using namespace rhfill;

namespace {

std::shared_ptr<const RelHypPair> f2_pair() {
  auto f2 = make_oracle({GroupKind::free, 2, 0, {}});
  return make_rel_hyp_pair(f2, std::vector<std::size_t>{0, 1});
}

// Distance from (0,0) to (m,0) in the combinatorial horoball over Z.
Int horoball_z(Int m) {
  m = std::llabs(m);
  if (m == 0) return 0;
  Int best = m;
  for (Int k = 1; (Int{1} << (k - 1)) < m; ++k) best = std::min(best, 2 * k + ((m + (Int{1} << k) - 1) >> k));
  return best;
}

// Independent oracles for a free product with factor peripherals: a
// geodesic crosses each syllable inside that factor's horoball (cusped) or
// through that coset's cone (coned-off).
Int cusped_free_product(const GroupOracle& g, const GroupElement& x) {
  Int total = 0;
  for (const auto& s : g.syllables(x)) total += horoball_z(g.coords(s)[0]);
  return total;
}

Int coned_free_product(const GroupOracle& g, const GroupElement& x) {
  Int total = 0;
  for (const auto& s : g.syllables(x)) total += std::min<Int>(std::llabs(g.coords(s)[0]), 2);
  return total;
}

std::size_t vertex_of(const CuspedGraph& g, const GroupOracle& o, const char* word) {
  auto i = g.index_of(VertexKey::group_vertex(o.parse(word)));
  REQUIRE(i.has_value());
  return *i;
}

}  // namespace

TEST_CASE("horoball oracle sanity") {
  CHECK(horoball_z(8) == 6);
  CHECK(horoball_z(3) == 3);
  CHECK(horoball_z(1) == 1);
}

TEST_CASE("Cayley balls") {
  auto z = make_oracle({GroupKind::free, 1, 0, {}});
  auto zp = make_rel_hyp_pair(z, std::vector<std::size_t>{0});
  auto path = build_cayley_ball(zp, 2);
  CHECK(path.size() == 5);
  CHECK(path.edge_count() == 4);

  auto pair = f2_pair();
  auto tree = build_cayley_ball(pair, 3);
  CHECK(tree.size() == 53);
  CHECK(tree.edge_count() == 52);
  CHECK(tree.is_connected());
  const auto& o = pair->group();
  auto aba = vertex_of(tree, o, "aba");
  CHECK(tree.shortest_path(0, aba).length() == 3);
  CHECK(tree.shortest_path(aba, aba).length() == 0);
  CHECK(tree.shortest_path(0, vertex_of(tree, o, "b")).length() == 1);
  for (std::size_t v = 0; v < tree.size(); ++v) CHECK(tree.depth(v) == 0);
}

TEST_CASE("coned-off distances") {
  auto pair = f2_pair();
  const auto& o = pair->group();
  auto coned = build_coned_off(pair, 2, 128);
  CHECK(coned.center_distance[vertex_of(coned, o, "a^100")] == 2);
  CHECK(coned.center_distance[0] == 0);
  auto big = build_coned_off(pair, 4, 4);
  for (const char* w : {"ab", "a^3b^-4", "ab^2a", "b^-1a^2"}) {
    auto v = vertex_of(big, o, w);
    CHECK(big.center_distance[v] == coned_free_product(o, o.parse(w)));
  }
  CHECK(big.center_distance[vertex_of(big, o, "ab")] >= 1);
  CHECK(big.center_distance[vertex_of(big, o, "ab")] <= 4);
}

TEST_CASE("standalone horoballs") {
  HoroballGraph h(integer_path_graph(16), 6);
  const std::size_t zero = 16;
  auto bfs = h.graph().bfs(h.vertex(zero, 0));
  CHECK(bfs.distance[h.vertex(zero + 8, 0)] == 6);
  CHECK(bfs.distance[h.vertex(zero + 3, 0)] == 3);
  CHECK(h.graph().shortest_path(h.vertex(zero, 0), h.vertex(zero + 8, 0)).length() == 6);

  auto g = regular_geodesic(h, h.vertex(zero, 0), h.vertex(zero + 8, 0));
  REQUIRE(g.length() == 6);
  // Shape 2 up, 2 across at level 2, 2 down.
  std::vector<Int> levels;
  for (auto v : g.vertices) levels.push_back(h.level_of(v));
  CHECK(levels == std::vector<Int>{0, 1, 2, 2, 2, 1, 0});
  CHECK(regular_geodesic(h, h.vertex(zero, 2), h.vertex(zero, 5)).length() == 3);
  CHECK(regular_geodesic(h, h.vertex(zero, 0), h.vertex(zero + 1, 0)).length() == 1);
  // Consecutive vertices of a regular path are adjacent.
  for (std::size_t i = 0; i + 1 < g.vertices.size(); ++i) {
    const auto& adj = h.graph().adjacency(g.vertices[i]);
    CHECK(std::binary_search(adj.begin(), adj.end(), static_cast<std::uint32_t>(g.vertices[i + 1])));
  }

  // Horoball over a single point is a vertical ray.
  CuspedGraph point;
  point.add_vertex(0, "-", "id");
  point.finalize();
  HoroballGraph ray(point, 5);
  CHECK(ray.graph().size() == 6);
  CHECK(ray.graph().edge_count() == 5);
  CHECK(ray.graph().bfs(0).distance[5] == 5);

  // Too shallow: the optimum apex for |u - v| = 32 is level 4.
  HoroballGraph shallow(integer_path_graph(16), 2);
  CHECK_THROWS_AS(regular_geodesic(shallow, shallow.vertex(0, 0), shallow.vertex(32, 0)), Error);
}

TEST_CASE("regular geodesics equal BFS distances on a wide window") {
  HoroballGraph h(integer_path_graph(64), 8);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < h.base_size(); i += 3) {
    auto bfs = h.graph().bfs(h.vertex(i, 0));
    for (std::size_t j = 0; j < h.base_size(); ++j) {
      CHECK(regular_geodesic(h, h.vertex(i, 0), h.vertex(j, 0)).length() ==
            static_cast<std::size_t>(bfs.distance[h.vertex(j, 0)]));
      ++checked;
    }
  }
  CHECK(checked > 5000);
}

TEST_CASE("horoball edge rules") {
  auto pair = f2_pair();
  auto x = build_cusped_ball(pair, 5);
  CuspedSpace space(pair, SpaceMode::cusped, 5);
  const auto& o = pair->group();
  for (const auto& e : x.edges()) {
    const auto& ku = x.key(e.u);
    const auto& kv = x.key(e.v);
    switch (e.kind) {
      case EdgeKind::vertical:
        CHECK(std::llabs(ku.level - kv.level) == 1);
        CHECK(ku.base == kv.base);
        break;
      case EdgeKind::horizontal: {
        CHECK(ku.level == kv.level);
        CHECK(ku.peripheral == kv.peripheral);
        const auto& per = pair->peripheral(static_cast<std::size_t>(ku.peripheral));
        const Int d = per.distance(ku.base, kv.base);
        CHECK(d > 0);
        CHECK(d <= (Int{1} << ku.level));
        break;
      }
      case EdgeKind::cayley:
        CHECK(ku.kind == VertexKind::group);
        CHECK(o.word_length(o.multiply(o.inverse(ku.base), kv.base)) == 1);
        break;
      case EdgeKind::cone: FAIL("cone edge in a cusped window"); break;
    }
  }
  // Depth equals distance to the Cayley graph.
  std::vector<std::int32_t> to_cayley(x.size(), -1);
  std::vector<std::size_t> layer;
  for (std::size_t v = 0; v < x.size(); ++v)
    if (x.depth(v) == 0) {
      to_cayley[v] = 0;
      layer.push_back(v);
    }
  for (std::int32_t d = 0; !layer.empty(); ++d) {
    std::vector<std::size_t> next;
    for (auto u : layer)
      for (auto w : x.adjacency(u))
        if (to_cayley[w] < 0) {
          to_cayley[w] = d + 1;
          next.push_back(w);
        }
    layer = std::move(next);
  }
  // Inside the window this holds whenever the vertical segment below v is
  // in the window; otherwise the window can only overestimate.
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x.index_of(VertexKey::group_vertex(x.key(v).base)))
      CHECK(to_cayley[v] == x.depth(v));
    else
      CHECK(to_cayley[v] >= x.depth(v));
  }
}

TEST_CASE("cusped distances match the free-product oracle") {
  auto pair = f2_pair();
  const auto& o = pair->group();
  auto x = build_cusped_ball(pair, 7);
  CHECK(x.center_distance[vertex_of(x, o, "a^8")] == 6);
  CHECK(x.center_distance[vertex_of(x, o, "a")] == 1);
  std::size_t checked = 0;
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x.depth(v) != 0) continue;
    CHECK(x.center_distance[v] == cusped_free_product(o, x.key(v).base));
    CHECK(x.center_distance[v] <= o.word_length(x.key(v).base));
    ++checked;
  }
  CHECK(checked == 4489);

  // Implicit-space oracle agrees and sees beyond the window.
  auto space = std::make_shared<const CuspedSpace>(pair, SpaceMode::cusped, 20);
  DistanceOracle oracle(space);
  auto id = VertexKey::group_vertex({});
  CHECK(oracle.distance(id, VertexKey::group_vertex(o.parse("a^8")), 10) == 6);
  CHECK(oracle.distance(VertexKey::group_vertex(o.parse("ba")), VertexKey::group_vertex(o.parse("ba^9")), 10) == 6);
  CHECK(oracle.distance(id, VertexKey::group_vertex(o.parse("a^32")), 10) == 10);
  CHECK(!oracle.distance(id, VertexKey::group_vertex(o.parse("a^64")), 10).has_value());
}

TEST_CASE("comparison of the three metrics on depth-0 pairs") {
  auto pair = f2_pair();
  const auto& o = pair->group();
  auto x = build_cusped_ball(pair, 6);
  auto coned = build_coned_off(pair, 6, 8);
  for (const auto& g : enumerate_ball(o, 4)) {
    auto vx = x.index_of(VertexKey::group_vertex(g));
    auto vc = coned.index_of(VertexKey::group_vertex(g));
    REQUIRE(vx);
    REQUIRE(vc);
    const Int dx = x.center_distance[*vx], dc = coned.center_distance[*vc];
    CHECK(dc <= dx);
    CHECK(dx <= o.word_length(g));
  }
}

TEST_CASE("certified distances are stable under enlarging the window") {
  auto pair = f2_pair();
  auto small = build_cusped_ball(pair, 4);
  auto large = build_cusped_ball(pair, 5);
  for (std::size_t u = 0; u < small.size(); u += 7) {
    auto bs = small.bfs(u);
    auto lu = *large.index_of(small.key(u));
    auto bl = large.bfs(lu);
    for (std::size_t v = 0; v < small.size(); ++v) {
      auto lv = *large.index_of(small.key(v));
      CHECK(bl.distance[lv] <= bs.distance[v]);
      if (small.certified(u, v, bs.distance[v])) CHECK(bl.distance[lv] == bs.distance[v]);
    }
  }
}

TEST_CASE("deep horoball vertices see horoball distances") {
  auto pair = f2_pair();
  auto x = build_cusped_ball(pair, 6);
  std::vector<std::size_t> deep;
  for (std::size_t v = 0; v < x.size(); ++v)
    if (x.key(v).kind == VertexKind::horoball && x.key(v).peripheral == 0 && x.depth(v) >= 2 &&
        pair->peripheral(0).contains(x.key(v).base))
      deep.push_back(v);
  REQUIRE(deep.size() > 10);
  std::size_t certified = 0;
  const auto& o = pair->group();
  for (auto u : deep) {
    auto b = x.bfs(u);
    for (auto v : deep) {
      if (!x.certified(u, v, b.distance[v])) continue;
      ++certified;
      const auto step = o.multiply(o.inverse(x.key(u).base), x.key(v).base);
      const Int m = step.is_identity() ? 0 : std::llabs(o.coords(o.syllables(step).front())[0]);
      const Int ku = x.depth(u), kv = x.depth(v);
      Int best = -1;
      for (Int k = std::max(ku, kv); k < 40; ++k) {
        const Int reach = Int{1} << k;
        const Int c = (k - ku) + (k - kv) + (m + reach - 1) / reach;
        if (best < 0 || c < best) best = c;
      }
      CHECK(b.distance[v] == best);
    }
  }
  CHECK(certified > 10);
}

TEST_CASE("graph dump round trip") {
  auto pair = f2_pair();
  auto x = build_cusped_ball(pair, 3);
  std::ostringstream out;
  x.dump(out);
  const auto text = out.str();
  CHECK(text.find("V 0 0 - id") != std::string::npos);
  CHECK(text.find(" vertical") != std::string::npos);
  std::istringstream in(text);
  auto back = CuspedGraph::load(in);
  CHECK(back.size() == x.size());
  CHECK(back.edge_count() == x.edge_count());
  CHECK(back.radius == 3);
  for (std::size_t v = 0; v < x.size(); ++v) {
    CHECK(back.depth(v) == x.depth(v));
    CHECK(back.word_label(v) == x.word_label(v));
  }
  std::istringstream bad("V 0 0 -\n");
  CHECK_THROWS_AS(CuspedGraph::load(bad), Error);
}

TEST_CASE("four-point delta") {
  // Trees are 0-hyperbolic.
  auto tree = build_cayley_ball(f2_pair(), 3);
  CHECK(four_point_exhaustive(tree).delta4 == 0);

  // C_8: exhaustive brute force over all quadruples gives 2.
  CuspedGraph c8;
  for (int i = 0; i < 8; ++i) c8.add_vertex(0, "-", std::to_string(i));
  for (int i = 0; i < 8; ++i) c8.add_edge(static_cast<std::size_t>(i), static_cast<std::size_t>((i + 1) % 8), EdgeKind::cayley);
  c8.finalize();
  CHECK(four_point_exhaustive(c8).delta4 == 2);
  DistanceMatrix m(c8);
  std::vector<std::int32_t> d(64);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) d[i * 8 + j] = m(i, j);
  CHECK(four_point_delta(d, 8) == 2);

  // Far-apart pruning agrees with brute force on small cusped windows.
  auto pair = f2_pair();
  for (Int r : {2, 3}) {
    auto x = build_cusped_ball(pair, r);
    DistanceMatrix dm(x);
    std::vector<std::int32_t> full(x.size() * x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) full[i * x.size() + j] = dm(i, j);
    CHECK(four_point_exhaustive(x).delta4 == four_point_delta(full, x.size()));
  }

  auto x4 = build_cusped_ball(pair, 4);
  auto exact = four_point_exhaustive(x4);
  CHECK(exact.delta4 == 1.5);
  auto sampled = four_point_sampled(x4, 20000, 5);
  CHECK(sampled.delta4 <= exact.delta4);
  auto more = four_point_sampled(x4, 40000, 5);
  CHECK(more.delta4 >= sampled.delta4);
  auto thin = thin_triangles(x4, 200, 5);
  CHECK(thin.delta_thin >= 0);
  CHECK(thin_triangles(tree, 200, 5).delta_thin == 0);
  CHECK(estimate_delta(x4, DeltaMode::four_point_sampled, 1000, 9).delta4 ==
        estimate_delta(x4, DeltaMode::four_point_sampled, 1000, 9).delta4);
  CHECK_THROWS_AS(four_point_exhaustive(x4, 1000), Error);
}
