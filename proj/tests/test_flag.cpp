#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rhfill/errors.hpp"
#include "rhfill/flag.hpp"
#include "rhfill/random.hpp"

using namespace rhfill;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

const ParabolicType kLine(2, {1});

Matrix e(int d, int i) { return Matrix::Identity(d, d).col(i); }

Flag random_line(Rng& rng) { return Flag::line(rng.uniform(0, std::numbers::pi)); }

}  // namespace

TEST_CASE("projective normalisation") {
  ProjectiveMatrix p(m2(-2, 0, 0, -4));
  CHECK(p.matrix().norm() == doctest::Approx(1));
  CHECK(p.matrix()(0, 0) > 0);
  CHECK_THROWS_AS(ProjectiveMatrix(m2(1, 2, 2, 4)), Error);
  CHECK_THROWS_AS(ProjectiveMatrix(Matrix::Zero(2, 3)), Error);
  const auto pw = ProjectiveMatrix(m2(1, 2, 0, 1)).power(-3);
  CHECK((pw.matrix() - ProjectiveMatrix(m2(1, -6, 0, 1)).matrix()).norm() < 1e-12);
}

TEST_CASE("parabolic types") {
  CHECK(ParabolicType(4, {1, 3}).symmetric());
  CHECK_FALSE(ParabolicType(4, {1, 2}).symmetric());
  CHECK(ParabolicType::full(3).indices() == std::vector<int>{1, 2});
  CHECK_THROWS_AS(ParabolicType(3, {}), Error);
  CHECK_THROWS_AS(ParabolicType(3, {3}), Error);
}

TEST_CASE("attracting flags") {
  const auto f = attracting_flag(ProjectiveMatrix(m2(3, 0, 0, 1.0 / 3)), kLine);
  CHECK(flag_distance(f, Flag::line(0)) < 1e-12);

  const double t = 0.3;
  try {
    attracting_flag(ProjectiveMatrix(m2(std::cos(t), -std::sin(t), std::sin(t), std::cos(t))), kLine);
    FAIL("expected gap-too-small");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::gap_too_small);
  }

  // [[1,s],[0,1]] has its top left singular vector at angle atan(2/s)/2.
  double previous = 1;
  for (int n : {5, 10, 50, 100}) {
    const auto a = attracting_flag(ProjectiveMatrix(m2(1, 2, 0, 1)).power(n), kLine);
    const double expected = 0.5 * std::atan(2.0 / (2 * n));
    CHECK(a.angle() == doctest::Approx(expected).epsilon(1e-9));
    CHECK(a.angle() < previous);
    previous = a.angle();
  }
  CHECK(previous < 1e-2);
}

TEST_CASE("attracting flags are projectively invariant and converge along powers") {
  Rng rng(5);
  for (int s = 0; s < 50; ++s) {
    // Distinct real eigenvalues 4, 2, 1 in a random basis.
    const Matrix c = Matrix::Identity(3, 3) + 0.3 * Matrix::Random(3, 3);
    const Matrix g = c * Eigen::Vector3d(4, 2, 1).asDiagonal() * c.inverse();
    const ProjectiveMatrix p(g);
    const auto type = ParabolicType::full(3);
    Flag f1 = attracting_flag(p, type);
    Flag f2 = attracting_flag(ProjectiveMatrix(-7.5 * g), type);
    CHECK(flag_distance(f1, f2) < 1e-9);
    double prev = 2;
    Flag last = attracting_flag(p.power(16), type);
    for (int n : {4, 8, 12}) {
      const double d = flag_distance(attracting_flag(p.power(n), type), last);
      CHECK(d <= prev + 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("transversality") {
  const auto t = is_transverse(Flag::line(0), Flag::line(std::numbers::pi / 2));
  CHECK(t.transverse);
  CHECK(t.margin == doctest::Approx(1));
  CHECK_FALSE(is_transverse(Flag::line(0.4), Flag::line(0.4)).transverse);

  const auto type = ParabolicType(3, {1, 2});
  Matrix xi(3, 2), eta(3, 2);
  xi << e(3, 0), e(3, 1);
  eta << e(3, 2), e(3, 1);
  CHECK(is_transverse(Flag(type, xi), Flag(type, eta)).transverse);
  CHECK_FALSE(is_transverse(Flag(type, xi), Flag(type, xi)).transverse);

  Rng rng(3);
  for (int s = 0; s < 50; ++s) {
    Flag a(type, Matrix::Random(3, 2)), b(type, Matrix::Random(3, 2));
    CHECK(is_transverse(a, b).margin == doctest::Approx(is_transverse(b, a).margin));
  }
  CHECK_THROWS_AS(is_transverse(Flag::line(0), Flag(type, xi)), Error);
}

TEST_CASE("flag distance") {
  CHECK(flag_distance(Flag::line(0.2), Flag::line(0.2)) < 1e-15);
  CHECK(flag_distance(Flag::line(0), Flag::line(std::numbers::pi / 2)) == doctest::Approx(1));
  for (double th : {0.1, 0.5, 1.0, 1.4})
    CHECK(flag_distance(Flag::line(0.3), Flag::line(0.3 + th)) == doctest::Approx(std::sin(th)));

  // Invariance under a simultaneous rotation.
  const auto type = ParabolicType::full(3);
  Eigen::HouseholderQR<Matrix> qr(Matrix::Random(3, 3));
  const Matrix q = qr.householderQ();
  Flag a(type, Matrix::Random(3, 2)), b(type, Matrix::Random(3, 2));
  const double d0 = flag_distance(a, b);
  const double d1 = flag_distance(Flag(type, q * a.basis(2)), Flag(type, q * b.basis(2)));
  CHECK(d0 == doctest::Approx(d1));
  // Triangle inequality on random triples.
  Rng rng(9);
  for (int s = 0; s < 100; ++s) {
    Flag x(type, Matrix::Random(3, 2)), y(type, Matrix::Random(3, 2)), z(type, Matrix::Random(3, 2));
    CHECK(flag_distance(x, z) <= flag_distance(x, y) + flag_distance(y, z) + 1e-12);
  }
}

TEST_CASE("nested subspaces") {
  const auto type = ParabolicType(3, {1, 2});
  Matrix line = e(3, 0) + e(3, 1);
  Matrix plane(3, 2);
  plane << e(3, 0), e(3, 1);
  const auto f = Flag::from_subspaces(type, {line, plane});
  CHECK((f.projector(2) - plane * plane.transpose()).norm() < 1e-12);
  Matrix off = e(3, 2);
  CHECK_THROWS_AS(Flag::from_subspaces(type, {off, plane}), Error);
}

TEST_CASE("divergence certificates") {
  std::vector<ProjectiveMatrix> hyp, rot, sanov;
  for (int n = 1; n <= 10; ++n) {
    hyp.push_back(ProjectiveMatrix(m2(2, 0, 0, 0.5)).power(n));
    rot.push_back(ProjectiveMatrix(m2(std::cos(0.3 * n), -std::sin(0.3 * n), std::sin(0.3 * n), std::cos(0.3 * n))));
    sanov.push_back(ProjectiveMatrix(m2(1, 2 * n, 0, 1)));
  }
  const auto h = q_divergence(hyp, kLine);
  CHECK(h.verdict == DivergenceVerdict::divergent);
  CHECK(flag_distance(h.limit.front(), Flag::line(0)) < 1e-12);

  CHECK(q_divergence(rot, kLine).verdict == DivergenceVerdict::bounded);

  const auto s = q_divergence(sanov, kLine);
  CHECK(s.verdict == DivergenceVerdict::divergent);
  CHECK(flag_distance(s.limit.front(), Flag::line(0)) < 0.06);
  CHECK(s.gaps.back()[0] / (4.0 * 100) == doctest::Approx(1).epsilon(0.02));
  CHECK(q_divergence({}, kLine).verdict == DivergenceVerdict::inconclusive);
}

TEST_CASE("divergent sequences contract transverse flags to the limit") {
  // g_n = diag(2^n, 2^-n) conjugated by a fixed matrix.
  Matrix c = m2(1, 0.7, -0.4, 1.3);
  std::vector<ProjectiveMatrix> seq;
  for (int n = 1; n <= 18; ++n)
    seq.push_back(ProjectiveMatrix(c * ProjectiveMatrix(m2(2, 0, 0, 0.5)).power(n).matrix() * c.inverse()));
  const auto cert = q_divergence(seq, kLine);
  REQUIRE(cert.verdict == DivergenceVerdict::divergent);
  const auto& plus = cert.limit.front();
  const auto& minus = cert.inverse_limit.front();
  Rng rng(17);
  int tested = 0;
  while (tested < 100) {
    const auto eta = random_line(rng);
    if (!is_transverse(eta, minus).transverse || is_transverse(eta, minus).margin < 1e-3) continue;
    ++tested;
    double prev = 2;
    for (std::size_t n : {5, 11, 17}) {
      const double d = flag_distance(eta.apply(seq[n]), plus);
      CHECK(d <= prev + 1e-12);
      prev = d;
    }
    CHECK(prev < 1e-6);
  }
}

TEST_CASE("limit sets") {
  auto z = make_oracle({GroupKind::free, 1, 0, {}});
  Representation hyp(z, {m2(2, 0, 0, 0.5)});
  const auto cloud = q_limit_set(hyp, 5, kLine);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud[0].angle() == doctest::Approx(0));
  CHECK(cloud[1].angle() == doctest::Approx(std::numbers::pi / 2));
  CHECK(q_limit_set(hyp, 0, kLine).empty());

  // Parabolic Schottky group: the cloud avoids the ping-pong gap
  // 1/2 < |x| < 2 between the two attracting intervals.
  auto f2 = make_oracle({GroupKind::free, 2, 0, {}});
  Representation schottky(f2, {m2(1, 3, 0, 1), m2(1, 0, 3, 1)});
  const auto big = q_limit_set(schottky, 8, kLine);
  CHECK(big.size() > 1000);
  for (const auto& f : big) {
    const double x = std::abs(1.0 / std::tan(f.angle()));
    CHECK((x >= 2 || x <= 0.5));
  }
  // Stabilisation: clouds at growing depth move less and less.
  const auto c4 = q_limit_set(schottky, 4, kLine), c6 = q_limit_set(schottky, 6, kLine);
  const double d46 = hausdorff_distance(c4, c6), d68 = hausdorff_distance(c6, big);
  CHECK(d68 < d46);
}

TEST_CASE("hausdorff distance") {
  std::vector<Flag> a{Flag::line(0), Flag::line(1)}, b{Flag::line(0.1), Flag::line(3.1)};
  CHECK(hausdorff_distance(a, a) == 0);
  // 3.1 is within pi - 3.1 of 0 on the circle of lines.
  CHECK(directed_hausdorff(b, a) == doctest::Approx(std::sin(0.1)));
  CHECK(directed_hausdorff(a, b) == doctest::Approx(std::sin(0.9)));
  CHECK(hausdorff_distance({}, {}) == 0);
  CHECK(std::isinf(hausdorff_distance(a, {})));
}
