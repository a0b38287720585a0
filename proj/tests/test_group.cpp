#include <random>
#include <set>

#include "doctest.h"
#include "rhfill/errors.hpp"
#include "rhfill/group.hpp"

using namespace rhfill;

namespace {

std::shared_ptr<const GroupOracle> free_group(int rank) {
  return make_oracle({GroupKind::free, rank, 0, {}});
}

std::shared_ptr<const GroupOracle> cyclic_product(Int m, Int n) {
  GroupDescriptor d{GroupKind::free_product, 0, 0, {}};
  d.factors.push_back({GroupKind::finite_cyclic, 0, m, {}});
  d.factors.push_back({GroupKind::finite_cyclic, 0, n, {}});
  return make_oracle(d);
}

GroupElement random_element(const GroupOracle& g, std::mt19937_64& rng, int len) {
  GroupElement x;
  const auto& gens = g.generators();
  for (int i = 0; i < len; ++i) x = g.multiply(x, gens[rng() % gens.size()]);
  return x;
}

}  // namespace

TEST_CASE("free group reduction and formatting") {
  auto f2 = free_group(2);
  CHECK(f2->multiply(f2->parse("a"), f2->parse("a^-1")).is_identity());
  CHECK(f2->parse("aA").is_identity());
  CHECK(f2->format(f2->parse("a b b a^-1 a")) == "ab^2");
  CHECK(f2->word_length(f2->parse("aba")) == 3);
  CHECK(f2->word_length(f2->parse("a^-3 b^2")) == 5);
  CHECK(f2->generators().size() == 4);
  CHECK(f2->format(f2->identity()) == "id");
  CHECK_THROWS_AS(f2->parse("c"), Error);
  CHECK_THROWS_AS(f2->parse("a^"), Error);
}

TEST_CASE("ball sizes match closed forms") {
  auto f2 = free_group(2);
  // Free group of rank 2: 1 + sum_{k=1}^r 4*3^(k-1).
  for (int r = 0; r <= 6; ++r) {
    Int expected = 1, sphere = 4;
    for (int k = 1; k <= r; ++k, sphere *= 3) expected += sphere;
    CHECK(static_cast<Int>(enumerate_ball(*f2, r).size()) == expected);
  }
  CHECK(enumerate_ball(*f2, 3).size() == 53);

  auto z = free_group(1);
  auto ball = enumerate_ball(*z, 3);
  REQUIRE(ball.size() == 7);
  std::set<std::string> words;
  for (const auto& g : ball) words.insert(z->format(g));
  CHECK(words == std::set<std::string>{"id", "a", "a^2", "a^3", "a^-1", "a^-2", "a^-3"});

  CHECK(enumerate_ball(*f2, 0).size() == 1);
  CHECK(enumerate_ball(*f2, 0).front().is_identity());

  // Z/5 * Z/7 at radius 2, counted by syllable patterns: 1 + 4 + 4 + 8.
  CHECK(enumerate_ball(*cyclic_product(5, 7), 2).size() == 17);
}

TEST_CASE("ball ordering, lengths and parents") {
  auto f2 = free_group(2);
  auto tree = enumerate_ball_tree(*f2, 4);
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const auto& e = tree[i];
    CHECK(f2->word_length(e.element) == e.length);
    if (tree[i - 1].length == e.length) CHECK(tree[i - 1].element < e.element);
    REQUIRE(e.parent >= 0);
    const auto& p = tree[static_cast<std::size_t>(e.parent)];
    CHECK(p.length + 1 == e.length);
    CHECK(f2->multiply(p.element, f2->generators()[static_cast<std::size_t>(e.generator)]) ==
          e.element);
  }
  CHECK_THROWS_AS(enumerate_ball(*f2, 8, 1000), Error);
  try {
    enumerate_ball(*f2, 8, 1000);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::budget_exceeded);
  }
}

TEST_CASE("finite cyclic and abelian arithmetic") {
  auto c5 = make_oracle({GroupKind::finite_cyclic, 0, 5, {}});
  CHECK(c5->power(c5->parse("a"), 5).is_identity());
  CHECK(c5->word_length(c5->parse("a^4")) == 1);
  CHECK(c5->word_length(c5->parse("a^3")) == 2);
  CHECK(enumerate_ball(*c5, 10).size() == 5);

  auto z2 = make_oracle({GroupKind::free_abelian, 2, 0, {}});
  CHECK(z2->multiply(z2->parse("ab"), z2->parse("ba")) == z2->parse("a^2 b^2"));
  CHECK(z2->word_length(z2->parse("a^3 b^-2")) == 5);
  CHECK(enumerate_ball(*z2, 2).size() == 13);

  CHECK_THROWS_AS(make_oracle({GroupKind::finite_cyclic, 0, 0, {}}), Error);
  CHECK_THROWS_AS(make_oracle({GroupKind::free, 0, 0, {}}), Error);
  CHECK_THROWS_AS(make_oracle({GroupKind::filled_quotient, 1, 0, {}}), Error);
}

TEST_CASE("abelian quotients") {
  auto z2 = AbelianFactor::free_abelian(2);
  auto q1 = z2.quotient({{1, 0}});
  CHECK(q1.describe() == "Z");
  CHECK(q1.order() == 0);
  auto q2 = z2.quotient({{2, 0}, {0, 2}});
  CHECK(q2.order() == 4);
  CHECK(q2.describe() == "Z/2 x Z/2");
  auto q3 = z2.quotient({{2, 4}, {6, 8}});  // index |det| = 8, invariants 2, 4
  CHECK(q3.order() == 8);
  CHECK(q3.describe() == "Z/2 x Z/4");
  auto q4 = z2.quotient({{3, 0}, {0, 5}});
  CHECK(q4.describe() == "Z/15");
  // Class membership agrees with the lattice: (2,4) and (6,8) are zero.
  CHECK(AbelianFactor::is_zero(q3.reduce(std::vector<Int>{2, 4})));
  CHECK(AbelianFactor::is_zero(q3.reduce(std::vector<Int>{4, 4})));  // (6,8)-(2,4)
  CHECK(!AbelianFactor::is_zero(q3.reduce(std::vector<Int>{1, 0})));
  // Preimages round-trip.
  for (Int x = -4; x <= 4; ++x)
    for (Int y = -4; y <= 4; ++y) {
      std::vector<Int> v{x, y};
      auto c = q3.reduce(v);
      CHECK(q3.reduce(q3.preimage(c)) == c);
    }
  // Word length on Z/2 x Z/2 with the standard generators.
  CHECK(q2.word_length(q2.reduce(std::vector<Int>{1, 1})) == 2);
  // Z^2 / (1,0): the second generator generates, the first is trivial.
  CHECK(q1.word_length(q1.reduce(std::vector<Int>{7, -3})) == 3);
}

TEST_CASE("group axioms on random triples") {
  std::mt19937_64 rng(7);
  std::vector<std::shared_ptr<const GroupOracle>> oracles{free_group(2), cyclic_product(5, 7),
                                                          make_oracle({GroupKind::free_abelian, 2, 0, {}})};
  GroupDescriptor mixed{GroupKind::free_product, 0, 0, {}};
  mixed.factors.push_back({GroupKind::free_abelian, 2, 0, {}});
  mixed.factors.push_back({GroupKind::finite_cyclic, 0, 3, {}});
  mixed.factors.push_back({GroupKind::free, 1, 0, {}});
  oracles.push_back(make_oracle(mixed));
  for (const auto& g : oracles) {
    for (int t = 0; t < 1000; ++t) {
      auto x = random_element(*g, rng, 6), y = random_element(*g, rng, 6), z = random_element(*g, rng, 6);
      CHECK(g->multiply(g->multiply(x, y), z) == g->multiply(x, g->multiply(y, z)));
      CHECK(g->multiply(x, g->inverse(x)).is_identity());
      CHECK(g->multiply(g->identity(), x) == x);
      CHECK(g->parse(g->format(x)) == x);
    }
  }
}

TEST_CASE("word length is 1-Lipschitz along generators") {
  auto g = cyclic_product(5, 7);
  for (const auto& x : enumerate_ball(*g, 4))
    for (const auto& s : g->generators())
      CHECK(g->word_length(g->multiply(x, s)) <= g->word_length(x) + 1);
}

TEST_CASE("peripherals and coset keys") {
  auto f2 = free_group(2);
  auto pair = make_rel_hyp_pair(f2, std::vector<std::vector<std::string>>{{"a"}, {"b"}});
  const auto& pa = pair->peripheral(0);
  CHECK(pa.contains(f2->parse("a^3")));
  CHECK(!pa.contains(f2->parse("ab")));
  CHECK(pa.coset_key(f2->parse("ba^2")) == pa.coset_key(f2->parse("ba^5")));
  CHECK(pa.coset_key(f2->parse("b")) != pa.coset_key(f2->parse("b^2")));
  CHECK(pa.distance(f2->parse("ba^2"), f2->parse("ba^-3")) == 5);
  CHECK(pa.name() == "<a>");

  // cosetKey agrees with membership of g^-1 h on sampled pairs.
  std::mt19937_64 rng(3);
  auto ball = enumerate_ball(*f2, 3);
  for (int t = 0; t < 2000; ++t) {
    const auto& g = ball[rng() % ball.size()];
    auto h = f2->multiply(g, f2->power(f2->parse("a"), static_cast<Int>(rng() % 5) - 2));
    if (t % 2) h = ball[rng() % ball.size()];
    const bool same = pa.contains(f2->multiply(f2->inverse(g), h));
    CHECK(same == (pa.coset_key(g) == pa.coset_key(h)));
  }

  CHECK_THROWS_AS(make_rel_hyp_pair(f2, std::vector<std::vector<std::string>>{{"ab"}}), Error);
  try {
    make_rel_hyp_pair(f2, std::vector<std::vector<std::string>>{{"ab"}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::incompatible_genset);
  }
  try {
    make_rel_hyp_pair(f2, std::vector<std::vector<std::string>>{{"a^2"}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_parameter);
  }
}

TEST_CASE("Dehn fillings of free products") {
  auto f2 = free_group(2);
  auto pair = make_rel_hyp_pair(f2, std::vector<std::size_t>{0, 1});

  auto fill = make_filling(pair, {{f2->parse("a^5")}, {f2->parse("b^7")}});
  CHECK(fill.quotient_oracle().describe() == "Z/5 * Z/7");
  CHECK(fill.quotient_oracle().kind() == GroupKind::filled_quotient);
  CHECK(fill.project(f2->parse("a^5")).is_identity());
  CHECK(fill.project(f2->parse("b^7")).is_identity());
  CHECK(fill.project(f2->parse("a^2 b^7 a^3")).is_identity());

  // Injective on the radius-2 ball (5 > 2*2).  At radius 3 a^3 and a^-2
  // already collide.
  std::set<GroupElement> images;
  auto ball = enumerate_ball(*f2, 2);
  for (const auto& g : ball) images.insert(fill.project(g));
  CHECK(images.size() == ball.size());
  CHECK(fill.project(f2->parse("a^3")) == fill.project(f2->parse("a^-2")));

  // Homomorphism and 1-Lipschitz on a ball.
  auto ball3 = enumerate_ball(*f2, 3);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    const auto& g = ball3[rng() % ball3.size()];
    const auto& h = ball3[rng() % ball3.size()];
    CHECK(fill.project(f2->multiply(g, h)) ==
          fill.quotient_oracle().multiply(fill.project(g), fill.project(h)));
  }
  for (const auto& g : ball3)
    CHECK(fill.quotient_oracle().word_length(fill.project(g)) <= f2->word_length(g));

  CHECK_THROWS_AS(make_filling(pair, {{f2->parse("ab")}}), Error);
  try {
    make_filling(pair, {{f2->parse("b")}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kernel_not_in_peripheral);
  }

  // Trivial filling is an isomorphism onto Z * Z.
  auto trivial = make_filling(pair, {{}, {}});
  CHECK(trivial.quotient_oracle().describe() == "Z * Z");
  for (const auto& g : ball3) CHECK(trivial.project(g).word() == g.word());
}

TEST_CASE("filling injectivity window for n > 2R") {
  auto f2 = free_group(2);
  auto pair = make_rel_hyp_pair(f2, std::vector<std::size_t>{0, 1});
  for (Int n : {5, 7, 9}) {
    auto fill = make_power_filling(pair, {n, n});
    const Int r = (n - 1) / 2;
    std::set<GroupElement> images;
    auto ball = enumerate_ball(*f2, r);
    for (const auto& g : ball) images.insert(fill.project(g));
    CHECK(images.size() == ball.size());
    // At radius ceil(n/2) the kernel relator a^n splits as a^k = a^{k-n}.
    auto bigger = enumerate_ball(*f2, r + 1);
    std::set<GroupElement> more;
    for (const auto& g : bigger) more.insert(fill.project(g));
    CHECK(more.size() < bigger.size());
  }
}

TEST_CASE("Z^2 peripheral fillings") {
  GroupDescriptor d{GroupKind::free_product, 0, 0, {}};
  d.factors.push_back({GroupKind::free_abelian, 2, 0, {}});
  d.factors.push_back({GroupKind::free, 1, 0, {}});
  auto g = make_oracle(d);
  CHECK(g->letter_names() == std::vector<std::string>{"a", "b", "c"});
  auto pair = make_rel_hyp_pair(g, std::vector<std::vector<std::string>>{{"a", "b"}, {"c"}});
  auto fill = make_filling(pair, {{g->parse("a^2"), g->parse("b^2")}, {}});
  CHECK(fill.quotient_oracle().describe() == "Z/2 x Z/2 * Z");
  CHECK(fill.quotient_oracle().factor(0).order() == 4);
  auto killed = make_filling(pair, {{g->parse("a")}, {}});
  CHECK(killed.quotient_oracle().factor(0).describe() == "Z");
  CHECK(killed.project(g->parse("a^3 b c")) == killed.quotient_oracle().parse("bc"));
}
