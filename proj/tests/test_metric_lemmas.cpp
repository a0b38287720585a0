#include "doctest.h"
#include "rhfill/errors.hpp"
#include "rhfill/metric_lemmas.hpp"

using namespace rhfill;

namespace {

std::shared_ptr<const RelHypPair> f2_pair() {
  return make_rel_hyp_pair(make_oracle({GroupKind::free, 2, 0, {}}), std::vector<std::size_t>{0, 1});
}

const MetricLemmaReport& f2_report() {
  static const MetricLemmaReport r = verify_metric_lemmas(f2_pair(), 6);
  return r;
}

}  // namespace

TEST_CASE("metric lemmas hold on the radius-6 window of F_2") {
  const auto& r = f2_report();
  CHECK(r.vertices == 4629);
  CHECK(r.delta >= 1.5);
  CHECK(r.delta <= 3);
  CHECK(r.comparison.pass());
  CHECK(r.horoball_entry.pass());
  CHECK(r.quasidensity.pass());
  CHECK(r.pass());
  // 1 + 4 + 12 + 36 + 108 + 324 elements of length at most 5.
  CHECK(r.quasidensity.checked == 485);
  CHECK(r.comparison.checked > 10000);
  CHECK(r.horoball_entry.checked > 100000);
}

TEST_CASE("degenerate pairs attain the comparison bounds with equality") {
  // u = v gives 0 <= 0 <= 0, and every Cayley edge between group vertices
  // gives d_X = d_G = 1.
  CHECK(f2_report().comparison.worst_margin == 0);
}

TEST_CASE("every short element lies on a geodesic to the sphere") {
  CHECK(f2_report().quasidensity.details["max_distance"] == 0);
}

TEST_CASE("checks report violations when the bound is made too small") {
  MetricLemmaOptions opts;
  opts.delta = -3.0;  // 8 + 21 delta < 0 and 3C + 7 delta < 0
  const auto r = verify_metric_lemmas(f2_pair(), 6, opts);
  CHECK(r.comparison.pass());
  CHECK_FALSE(r.horoball_entry.pass());
  CHECK_FALSE(r.quasidensity.pass());
  CHECK_FALSE(r.pass());
  CHECK(r.quasidensity.violations == 485);
  CHECK(r.horoball_entry.witnesses.size() == 8);
  CHECK(r.horoball_entry.witnesses[0].contains("z"));
}

TEST_CASE("Z * Z/3 with the Z factor peripheral satisfies the lemmas") {
  GroupDescriptor d{GroupKind::free_product, 0, 0,
                    {{GroupKind::free, 1, 0, {}}, {GroupKind::finite_cyclic, 1, 3, {}}}};
  auto pair = make_rel_hyp_pair(make_oracle(d), std::vector<std::size_t>{0});
  const auto r = verify_metric_lemmas(pair, 6);
  CHECK(r.pass());
}

TEST_CASE("small windows are rejected") {
  try {
    verify_metric_lemmas(f2_pair(), 5);
    FAIL("expected window-too-small");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::window_too_small);
  }
  MetricLemmaOptions opts;
  opts.quasidensity_radius = 7;
  CHECK_THROWS_AS(verify_metric_lemmas(f2_pair(), 6, opts), Error);
}
