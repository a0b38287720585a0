#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rhfill/errors.hpp"
#include "rhfill/family.hpp"

using namespace rhfill;

namespace {

const ParabolicType kLine(2, {1});

Representation schottky(double lambda = 3) {
  auto pair = free_pair_of_rank_two();
  Matrix a(2, 2), b(2, 2);
  a << 1, lambda, 0, 1;
  b << 1, 0, lambda, 1;
  return Representation(pair->group_ptr(), {a, b});
}

struct PingPong {
  std::shared_ptr<const RelHypPair> pair = free_pair_of_rank_two();
  AutomatonGraph g = ping_pong_automaton(pair);
  SetSystem sys = ping_pong_sets(0.7, 0.02);
  Representation rho{pair->group_ptr(), schottky().generators()};
  const GroupOracle& G() const { return pair->group(); }
};

GPath alternating(const GroupOracle& G, std::size_t len) {
  GPath p;
  for (std::size_t i = 0; i < len; ++i) {
    p.vertices.push_back(i % 2);
    p.labels.push_back(G.parse(i % 2 ? "b^2" : "a^2"));
  }
  return p;
}

}  // namespace

TEST_CASE("ping-pong automaton is structurally valid and round-trips through JSON") {
  PingPong pp;
  CHECK(validate_automaton(pp.g).pass());
  const auto j = pp.g.to_json();
  const auto back = AutomatonGraph::from_json(pp.pair, j);
  CHECK(back.to_json() == j);
  CHECK(back.label(0).is_parabolic());
  CHECK(back.label_elements(0, 3).size() == 6);
}

TEST_CASE("structural failures of the automaton") {
  auto pair = free_pair_of_rank_two();
  const auto& G = pair->group();
  SUBCASE("vertex without outgoing edge fails G3") {
    AutomatonGraph g(pair);
    g.add_vertex("x", {VertexLabel::Kind::singleton, G.parse("ab"), -1, {}});
    const auto r = validate_automaton(g);
    CHECK_FALSE(r.outgoing.pass());
    CHECK(r.outgoing.witnesses[0]["vertex"] == "x");
  }
  SUBCASE("peripheral without a parabolic vertex fails G4") {
    AutomatonGraph g(pair);
    g.add_vertex("v_a", {VertexLabel::Kind::coset, {}, 0, {{}}});
    g.add_edge(0, 0);
    const auto r = validate_automaton(g);
    CHECK(r.outgoing.pass());
    CHECK(r.parabolic.violations == 1);
  }
  SUBCASE("parabolic vertices of one peripheral must share out-neighbours") {
    AutomatonGraph g = ping_pong_automaton(pair);
    const auto w = g.add_vertex("w", {VertexLabel::Kind::coset, G.parse("b"), 0, {}});
    g.add_edge(w, w);
    CHECK_FALSE(validate_automaton(g).parabolic.pass());
    g.add_edge(w, 1);
    CHECK_FALSE(validate_automaton(g).parabolic.pass());
  }
  SUBCASE("malformed labels") {
    AutomatonGraph g(pair);
    CHECK_THROWS_AS(g.add_vertex("x", {VertexLabel::Kind::coset, {}, 5, {}}), Error);
    try {
      g.add_vertex("x", {VertexLabel::Kind::coset, {}, 0, {G.parse("b")}});
      FAIL("expected malformed-label");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::malformed_label);
    }
    const Json bad = Json::parse(R"({"vertices":[{"id":"v","label":{"kind":"orbit"}}],"edges":[]})");
    CHECK_THROWS_AS(AutomatonGraph::from_json(pair, bad), Error);
  }
}

TEST_CASE("ping-pong compatibility at depth 12") {
  PingPong pp;
  const auto r = check_compatibility(pp.rho, pp.g, pp.sys, 12);
  CHECK(r.verdict() == "pass");
  CHECK(r.inclusion.checked == 48);
  CHECK(r.inclusion.worst_margin > 0.2);
  CHECK(r.inclusion.worst_margin < 0.25);

  SUBCASE("shrinking epsilon keeps the verdict and does not reduce the margin") {
    auto smaller = pp.sys;
    smaller.epsilon = 0.005;
    const auto s = check_compatibility(pp.rho, pp.g, smaller, 12);
    CHECK(s.verdict() == "pass");
    CHECK(s.inclusion.worst_margin >= r.inclusion.worst_margin);
  }
  SUBCASE("identity representation fails with witnesses") {
    Representation id(pp.pair->group_ptr(), {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
    const auto f = check_compatibility(id, pp.g, pp.sys, 12);
    CHECK(f.verdict() == "fail");
    CHECK(f.inclusion.violations == 48);
    CHECK(f.inclusion.witnesses.size() == 8);
  }
  SUBCASE("budget") {
    CHECK_THROWS_AS(check_compatibility(pp.rho, pp.g, pp.sys, 12, 10), Error);
  }
  SUBCASE("filled representations pass once F absorbs the kernel") {
    // sigma_n(a^k) for k outside {0 mod n}: the coset labels of the filled
    // automaton are the finite group minus the identity.
    const auto fam = RepFamily::sanov_elliptic(3, {30, 60});
    for (const auto& m : fam.members()) {
      AutomatonGraph g(pp.pair);
      std::vector<GroupElement> fa{{}};
      for (Int k = m.n; k <= 12 + m.n; k += m.n) {
        fa.push_back(pp.G().power(pp.G().letter(0), k));
        fa.push_back(pp.G().power(pp.G().letter(0), -k));
      }
      g.add_vertex("v_a", {VertexLabel::Kind::coset, {}, 0, fa});
      g.add_vertex("v_b", {VertexLabel::Kind::coset, {}, 1, {{}}});
      g.add_edge(0, 1);
      g.add_edge(1, 0);
      CHECK(check_compatibility(m.rep, g, pp.sys, 12).verdict() == "pass");
    }
  }
}

TEST_CASE("set systems validate their exterior witness and round-trip") {
  PingPong pp;
  const auto j = pp.sys.to_json(pp.g);
  const auto back = SetSystem::from_json(pp.g, kLine, j);
  CHECK(back.to_json(pp.g) == j);
  auto bad = pp.sys;
  bad.sets[0].exterior_witness = Flag::line(0.1);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.sets[0].exterior_witness.reset();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("image balls bound the exact image interval") {
  // Frozen by hand: a = [[1,3],[0,1]] maps the interval |x| <= t around
  // span(e2) (x = cot angle) to [3 - t, 3 + t].
  Matrix a(2, 2);
  a << 1, 3, 0, 1;
  const FlagBall b{Flag::line(std::numbers::pi / 2), 0.25};
  const auto ib = image_ball(ProjectiveMatrix(a), b);
  CHECK(ib.center.angle() == doctest::Approx(std::atan2(1.0, 3.0)));
  const double t = std::tan(std::asin(0.25));
  const double far = std::abs(std::sin(std::atan2(1.0, 3.0 - t) - std::atan2(1.0, 3.0)));
  CHECK(ib.radius == doctest::Approx(1.1 * far).epsilon(1e-9));
}

TEST_CASE("G-path enumeration counts and order") {
  PingPong pp;
  std::size_t n1 = enumerate_gpaths(pp.g, 1, 5, [](const GPath&) { return true; });
  CHECK(n1 == 20);  // each vertex carries 2 * 5 labels
  std::size_t n2 = enumerate_gpaths(pp.g, 2, 5, [](const GPath&) { return true; });
  CHECK(n2 == 2 * 10 * 10);  // sum over edges v -> w of |T_v| |T_w|
  std::vector<std::string> first;
  bool truncated = false;
  enumerate_gpaths(pp.g, 2, 5, [&](const GPath& p) {
    first.push_back(pp.G().format(p.labels[0]) + "," + pp.G().format(p.labels[1]));
    truncated = p.truncated;
    return first.size() < 3;
  });
  CHECK(first == std::vector<std::string>{"a^-1,b^-1", "a^-1,b", "a^-1,b^-2"});
  CHECK(truncated);

  AutomatonGraph empty(pp.pair);
  CHECK(enumerate_gpaths(empty, 3, 5, [](const GPath&) { return true; }) == 0);

  // Finite peripherals are enumerated completely.
  auto z3 = make_rel_hyp_pair(make_oracle({GroupKind::free_product, 0, 0,
                                           {{GroupKind::finite_cyclic, 1, 3, {}}, {GroupKind::finite_cyclic, 1, 3, {}}}}),
                              std::vector<std::size_t>{0, 1});
  const auto g3 = ping_pong_automaton(z3);
  enumerate_gpaths(g3, 1, 5, [&](const GPath& p) {
    CHECK_FALSE(p.truncated);
    return true;
  });
}

TEST_CASE("nested diameters contract along ping-pong paths") {
  PingPong pp;
  const auto d = nested_diameters(pp.rho, alternating(pp.G(), 10), pp.sys);
  REQUIRE(d.diameters.size() == 10);
  for (std::size_t i = 1; i < d.diameters.size(); ++i) CHECK(d.diameters[i] < d.diameters[i - 1]);
  CHECK(d.rate < 0.9);
  CHECK(d.max_repetition == 1);

  Representation id(pp.pair->group_ptr(), {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  const auto flat = nested_diameters(id, alternating(pp.G(), 10), pp.sys);
  CHECK(flat.rate == doctest::Approx(1.0));
  CHECK_FALSE(flat.contracting);
  CHECK_THROWS_AS(nested_diameters(pp.rho, GPath{}, pp.sys), Error);

  // Property: random compatible paths nest and never repeat more than k times.
  for (const auto& p : sample_gpaths(pp.g, 10, 12, 30, 11)) {
    const auto n = nested_diameters(pp.rho, p, pp.sys);
    CHECK(n.monotone);
    CHECK(n.max_repetition <= pp.g.size());
  }
}

TEST_CASE("G-paths track geodesics in the cusped space") {
  PingPong pp;
  GPath straight;
  for (int i = 0; i < 3; ++i) {
    straight.vertices.push_back(0);
    straight.labels.push_back(pp.G().parse("a"));
  }
  const auto s = gpath_tracking_check(pp.pair, straight, 6);
  CHECK(s.tracking_distance == 0);
  CHECK(s.pass());

  GPath pingpong;
  for (const char* w : {"a^2", "b^2", "a^2", "b^2"}) {
    pingpong.vertices.push_back(pingpong.vertices.size() % 2);
    pingpong.labels.push_back(pp.G().parse(w));
  }
  // The final product has d_X = 8, so the window needs radius 8.
  CHECK_THROWS_AS(gpath_tracking_check(pp.pair, pingpong, 6), Error);
  const auto t = gpath_tracking_check(pp.pair, pingpong, 8);
  CHECK(t.tracking_distance <= 3);
  CHECK(t.pass());

  GPath deep;
  deep.vertices = {0};
  deep.labels = {pp.G().parse("a^16")};
  const auto h = gpath_tracking_check(pp.pair, deep, 8);
  CHECK(h.max_label_length == 8);
  CHECK(h.max_depth == 3);
  CHECK(h.pass());
}

TEST_CASE("representation families verify their kernels") {
  const auto fam = RepFamily::sanov_elliptic(3, {3, 10, 30});
  REQUIRE(fam.members().size() == 3);
  for (const auto& m : fam.members()) {
    CHECK(m.peripheral_order(0) == m.n);
    const Matrix a = m.rep.generators()[0];
    CHECK(a.trace() == doctest::Approx(2 * std::cos(std::numbers::pi / static_cast<double>(m.n))));
  }
  auto pair = free_pair_of_rank_two();
  RepFamily bad(pair, schottky());
  CHECK_THROWS_AS(bad.add_member(5, schottky(), {{pair->group().parse("a^5")}, {}}), Error);

  const auto j = fam.to_json();
  const auto back = RepFamily::from_json(fam.pair_ptr(), j);
  CHECK(back.to_json() == j);
  const Json malformed = Json::parse(R"({"base":{"a":[[1,3],[0,1]],"b":[[1,0],[3,1]]},
    "members":[{"n":5,"generators":{"a":[[1,3],[0,1]],"b":[[1,0],[3,1]]},"kernels":[["a^^5"]]}]})");
  try {
    RepFamily::from_json(pair, malformed);
    FAIL("expected schema-error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::schema_error);
    CHECK(std::string(e.what()).find("kernels") != std::string::npos);
  }
}

TEST_CASE("EDF holds where strict peripheral stability fails") {
  const auto fam = RepFamily::sanov_elliptic(3, {3, 10, 30, 40, 60});
  for (int p = 0; p < 2; ++p) {
    const auto r = edf_condition_check(fam, sanov_edf_query(p, 0.5, 0.25), 12);
    CHECK(r.separation.pass());
    CHECK(r.base_hypothesis.pass());
    CHECK(r.edf_holds());
    for (const auto& row : r.rows) {
      CHECK(row.edf_checked == static_cast<std::size_t>(row.n - 1));
      CHECK(row.stability == "fail");
      // The witness is the kernel element itself.
      const std::string w = row.stability_witness["element"];
      CHECK(w == std::string(p == 0 ? "a" : "b") + "^-" + std::to_string(row.n));
    }
  }
  // The tighter radii violate the base hypothesis: a^{+-1} K reaches |x| < cot(asin 0.3).
  const auto tight = edf_condition_check(fam, sanov_edf_query(0, 0.3, 0.3), 12);
  CHECK_FALSE(tight.base_hypothesis.pass());
  CHECK_FALSE(tight.edf_holds());
}

TEST_CASE("trivial filling: EDF, stability and the base hypothesis coincide") {
  auto pair = free_pair_of_rank_two();
  const auto fam = RepFamily::constant(pair, schottky(), {7});
  const auto r = edf_condition_check(fam, sanov_edf_query(0, 0.5, 0.25), 12);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].order == 0);
  CHECK(r.rows[0].edf == "inconclusive");  // infinite image: depth cutoff only
  CHECK(r.rows[0].stability == "pass");
  CHECK(r.rows[0].edf_margin == doctest::Approx(r.base_hypothesis.worst_margin));
  CHECK(r.rows[0].stability_margin == doctest::Approx(r.base_hypothesis.worst_margin));
}

TEST_CASE("Chabauty windows") {
  auto pair = free_pair_of_rank_two();
  const auto constant = RepFamily::constant(pair, schottky(), {5, 9});
  for (const auto& row : chabauty_check(constant, 10, 6).rows) CHECK(row.distance() == 0);

  const auto fam = RepFamily::sanov_elliptic(3, {10, 20, 30, 40, 60});
  const auto full = chabauty_check(fam, 10, 8);
  CHECK(full.decreasing());
  for (int p = 0; p < 2; ++p) {
    const auto per = chabauty_check(fam, 10, 8, p);
    CHECK(per.decreasing());
    for (std::size_t i = 0; i < per.rows.size(); ++i) {
      CHECK(per.rows[i].distance() >= per.rows[i].generator_deviation);
    }
  }

  // Monotone in the radius and, for a fixed partner set, in the depth.
  const auto small = chabauty_check(fam, 5, 4, -1, 6);
  const auto wide = chabauty_check(fam, 10, 4, -1, 6);
  const auto deep = chabauty_check(fam, 10, 6, -1, 6);
  for (std::size_t i = 0; i < small.rows.size(); ++i) {
    CHECK(small.rows[i].a_side <= wide.rows[i].a_side);
    CHECK(small.rows[i].b_side <= wide.rows[i].b_side);
    CHECK(wide.rows[i].a_side <= deep.rows[i].a_side);
    CHECK(wide.rows[i].b_side <= deep.rows[i].b_side);
  }
}

TEST_CASE("limit sets of the filled family approach the base limit set") {
  auto pair = free_pair_of_rank_two();
  const auto constant = RepFamily::constant(pair, schottky(), {4});
  const auto c = limit_set_convergence(constant, 6, kLine);
  CHECK(c.rows[0].hausdorff == 0);

  const auto fam = RepFamily::sanov_elliptic(3, {10, 20, 40});
  const auto t = limit_set_convergence(fam, 8, kLine);
  CHECK(t.decreasing());
  CHECK(t.rows.back().hausdorff < 0.05);

  // A base that is not divergent is refused.
  const auto flat = RepFamily::constant(
      pair, Representation(pair->group_ptr(), {Matrix::Identity(2, 2), Matrix::Identity(2, 2)}), {4});
  try {
    limit_set_convergence(flat, 4, kLine);
    FAIL("expected divergence-screening-failed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::divergence_screening_failed);
  }
}

TEST_CASE("sequences a bounded distance apart share a limit flag") {
  const auto rho = schottky();
  const auto& G = rho.group();
  auto seq = [&](const char* p, const char* r, const char* s) { return SequenceSpec{G.parse(p), G.parse(r), G.parse(s)}; };
  const auto r = fiber_consistency_check(rho,
                                         {{"same", seq("", "a", ""), seq("", "a", ""), true},
                                          {"a^n vs a^n b", seq("", "a", ""), seq("", "a", "b"), true},
                                          {"v_a vs v_b", seq("", "a", ""), seq("", "b", ""), false},
                                          {"hyperbolic", seq("", "ab", ""), seq("", "ab", "b"), true}},
                                         kLine);
  CHECK(r.pass());
  CHECK(r.rows[0].distance == 0);
  CHECK(r.rows[2].distance > 0.99);
}

TEST_CASE("representation matrices as decimal strings") {
  auto pair = free_pair_of_rank_two();
  const auto rep = representation_from_json(
      pair->group_ptr(), Json::parse(R"({"a":[["1","3"],["0","1"]],"b":[["1","0"],["3/1","1.0"]]})"));
  CHECK(rep.generators()[0](0, 1) == 3);
  CHECK(rep.generators()[1](1, 0) == 3);
  const auto third = representation_from_json(pair->group_ptr(),
                                              Json::parse(R"({"a":[["0.1","1/3"],["0","1"]],"b":[[1,0],[0,1]]})"));
  CHECK(third.generators()[0](0, 0) == 0.1);
  CHECK(third.generators()[0](0, 1) == 1.0 / 3.0);
  const auto j = representation_to_json(third);
  CHECK(j["a"][0][0] == "0.1");
  const auto back = representation_from_json(pair->group_ptr(), j);
  CHECK(back.generators()[0] == third.generators()[0]);
  CHECK_THROWS_AS(representation_from_json(pair->group_ptr(), Json::parse(R"({"a":[["x","0"],["0","1"]],"b":[[1,0],[0,1]]})")),
                  Error);
  CHECK_THROWS_AS(representation_from_json(pair->group_ptr(), Json::parse(R"({"a":[["1/0","0"],["0","1"]],"b":[[1,0],[0,1]]})")),
                  Error);
}
