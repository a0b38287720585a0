#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rhfill/egf.hpp"

namespace rhfill {

/// One finite index of a representation family: sigma_n with its declared
/// peripheral kernels.
struct FamilyMember {
  Int n = 0;
  Representation rep;
  std::vector<std::vector<GroupElement>> kernels;  // per peripheral
  FillingData filling;

  /// Order of sigma_n(P) computed from the kernel (0 when infinite).
  Int peripheral_order(std::size_t p) const;
};

/// The base representation (index infinity) and finitely many members.
/// Declared kernels are verified at construction: sigma_n(k) must be the
/// identity in PGL(d) to 1e-10, otherwise invalid-parameter is raised.
class RepFamily {
 public:
  static constexpr double kKernelTolerance = 1e-10;

  RepFamily(std::shared_ptr<const RelHypPair> pair, Representation base);

  void add_member(Int n, Representation rep, std::vector<std::vector<GroupElement>> kernels);

  const RelHypPair& pair() const noexcept { return *pair_; }
  const std::shared_ptr<const RelHypPair>& pair_ptr() const noexcept { return pair_; }
  const Representation& base() const noexcept { return base_; }
  const std::vector<FamilyMember>& members() const noexcept { return members_; }

  /// Parabolic Schottky pair a = [[1, l], [0, 1]], b = [[1, 0], [l, 1]] on
  /// (F_2, {<a>, <b>}) with the elliptic fillings a_n = a [[1, 0], [-e, 1]],
  /// b_n = [[1, -e], [0, 1]] b, e = (2 / l)(1 - cos(pi / n)), so that both
  /// have trace 2 cos(pi / n) and kernels {a^n}, {b^n}.
  static RepFamily sanov_elliptic(double lambda, const std::vector<Int>& ns);
  /// Every member equals the base, with trivial kernels.
  static RepFamily constant(std::shared_ptr<const RelHypPair> pair, Representation base, const std::vector<Int>& ns);

  Json to_json() const;
  /// {"builtin": "sanov-elliptic", "lambda", "indices"} or explicit
  /// {"base": {letter: matrix}, "members": [{"n", "generators", "kernels"}]}.
  static RepFamily from_json(std::shared_ptr<const RelHypPair> pair, const Json& j);

 private:
  std::shared_ptr<const RelHypPair> pair_;
  Representation base_;
  std::vector<FamilyMember> members_;
};

/// (F_2, {<a>, <b>}).
std::shared_ptr<const RelHypPair> free_pair_of_rank_two();

/// A representation from matrices keyed by letter name.
Representation representation_from_json(std::shared_ptr<const GroupOracle> group, const Json& j);
Json representation_to_json(const Representation& rep);

struct EdfQuery {
  std::string name;
  int peripheral = 0;
  BallSet U;
  std::vector<GroupElement> F;
  BallSet K;
};

struct EdfRow {
  Int n = 0;
  Int order = 0;                  // of sigma_n(P), 0 when infinite
  std::string edf = "pass";       // pass / fail / inconclusive
  double edf_margin = 0;
  std::size_t edf_checked = 0;
  std::string stability = "pass";
  double stability_margin = 0;
  std::size_t stability_checked = 0;
  Json stability_witness;         // first failing element, if any
  Json edf_witness;
};

struct EdfReport {
  std::string query;
  Int depth = 0;
  PropertyCheck separation{"K-separated-from-U"};
  PropertyCheck base_hypothesis{"base-peripheral-hypothesis"};
  std::vector<EdfRow> rows;

  /// Preconditions hold and every finite index satisfies the EDF condition.
  bool edf_holds() const;
  /// Some finite index violates strict peripheral stability.
  bool stability_fails_somewhere() const;
  Json to_json() const;
};

/// For each member: every element of the finite group sigma_n(P) outside
/// sigma_n(F) must map K into U (EDF), and, more strictly, every x in P - F
/// with |x|_P <= max(depth, order) must do so (peripheral stability).
/// Infinite images fall back to the depth cutoff and report inconclusive.
EdfReport edf_condition_check(const RepFamily& family, const EdfQuery& query, Int depth);

/// Default queries for the built-in family: U and K balls of the given
/// radii about the fixed points of the chosen and of the other peripheral,
/// F = {id}.
EdfQuery sanov_edf_query(int peripheral, double u_radius, double k_radius);

struct ChabautyRow {
  Int n = 0;
  double a_side = 0;  // sup over rho-points in the ball of the distance to sigma_n points
  double b_side = 0;  // sup over sigma_n-points in the ball of the distance to rho points
  std::size_t base_points = 0, member_points = 0;
  double generator_deviation = 0;  // max over generators of d(sigma_n(s), rho(s))
  double distance() const { return std::max(a_side, b_side); }
};

struct ChabautyTable {
  double ball_radius = 0;
  Int depth = 0;
  Int partner_depth = 0;
  int peripheral = -1;  // -1 for the full group
  std::vector<ChabautyRow> rows;
  bool decreasing() const;
  Json to_json() const;
};

/// Matrices are scaled to |det| = 1 and compared in PSL: d(M, N) =
/// min(|M - N|_F, |M + N|_F); the ball is |M|_F <= ball_radius.  Query
/// points are images of words of length <= depth lying in the ball;
/// partners are images of all words of length <= partner_depth (default
/// depth), so both sides grow monotonically with the radius and, for a
/// fixed partner depth, with the depth.  peripheral >= 0 restricts words to
/// that peripheral.
ChabautyTable chabauty_check(const RepFamily& family, double ball_radius, Int depth, int peripheral = -1,
                             Int partner_depth = -1);

/// Projective distance used by chabauty_check.
double psl_distance(const Matrix& x, const Matrix& y);
/// Scales to |det| = 1.
Matrix unimodular(const Matrix& m);

struct LimitSetRow {
  Int n = 0;
  bool screened = true;
  std::string note;
  std::size_t points = 0;
  double hausdorff = 0;
};

struct LimitSetTable {
  Int depth = 0;
  std::size_t base_points = 0;
  std::vector<LimitSetRow> rows;
  /// Strictly decreasing over screened rows.
  bool decreasing() const;
  Json to_json() const;
};

/// Screening: powers w^1..w^5 of two fixed words (the product of one
/// generator per factor, and the same with the last one inverted) must be
/// Q-divergent.  A base failure raises divergence-screening-failed; a member
/// failure excludes that index.
LimitSetTable limit_set_convergence(const RepFamily& family, Int depth, const ParabolicType& type,
                                    std::size_t cap = kDefaultElementCap);

/// gamma_k = prefix * repeat^k * suffix.
struct SequenceSpec {
  GroupElement prefix, repeat, suffix;
};

struct FiberPair {
  std::string label;
  SequenceSpec first, second;
  bool expect_same = true;
};

struct FiberRow {
  std::string label;
  bool expect_same = true;
  double distance = 0;        // between the two limit flag estimates
  double error_estimate = 0;  // drift of each estimate between k/2 and k
  Int exponent = 0;
  bool pass = false;
};

struct FiberReport {
  double same_tolerance = 1e-3;
  double distinct_threshold = 0.1;
  std::vector<FiberRow> rows;
  bool pass() const;
  Json to_json() const;
};

/// Limit flags are attracting flags at the largest power of two k <=
/// max_exponent for which the product stays numerically invertible.
FiberReport fiber_consistency_check(const Representation& rep, const std::vector<FiberPair>& pairs,
                                    const ParabolicType& type, Int max_exponent = Int{1} << 16);

}  // namespace rhfill
