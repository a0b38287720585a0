#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rhfill/cusped.hpp"
#include "rhfill/flag.hpp"
#include "rhfill/report.hpp"

namespace rhfill {

/// Label set T_v of an automaton vertex: a singleton {alpha} or a coset
/// gP minus a finite set F_v.
struct VertexLabel {
  enum class Kind { singleton, coset };
  Kind kind = Kind::singleton;
  GroupElement element;  // alpha, or the coset representative g
  int peripheral = -1;
  std::vector<GroupElement> excluded;

  bool is_parabolic() const noexcept { return kind == Kind::coset; }
};

/// A finite directed graph with label sets, over a relatively hyperbolic
/// pair.
class AutomatonGraph {
 public:
  explicit AutomatonGraph(std::shared_ptr<const RelHypPair> pair) : pair_(std::move(pair)) {}

  const RelHypPair& pair() const noexcept { return *pair_; }
  const std::shared_ptr<const RelHypPair>& pair_ptr() const noexcept { return pair_; }

  /// Raises malformed-label for a coset label whose peripheral does not
  /// exist or whose excluded elements lie outside the coset, and
  /// invalid-parameter for a duplicate name.
  std::size_t add_vertex(std::string name, VertexLabel label);
  void add_edge(std::size_t from, std::size_t to);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t v) const { return names_.at(v); }
  std::size_t index_of(const std::string& name) const;
  const VertexLabel& label(std::size_t v) const { return labels_.at(v); }
  const std::vector<std::size_t>& out(std::size_t v) const { return out_.at(v); }

  /// Elements of T_v; coset labels list g x for |x|_P <= cutoff in the
  /// peripheral's canonical ball order, minus F_v.
  std::vector<GroupElement> label_elements(std::size_t v, Int cutoff) const;
  /// Whether label_elements(v, cutoff) is all of T_v.
  bool label_complete(std::size_t v, Int cutoff) const;

  Json to_json() const;
  /// Raises schema-error or malformed-label.
  static AutomatonGraph from_json(std::shared_ptr<const RelHypPair> pair, const Json& j);

 private:
  std::shared_ptr<const RelHypPair> pair_;
  std::vector<std::string> names_;
  std::vector<VertexLabel> labels_;
  std::vector<std::vector<std::size_t>> out_;
};

struct AutomatonReport {
  PropertyCheck outgoing{"G3-outgoing-edge"};
  PropertyCheck parabolic{"G4-parabolic-vertex"};
  bool pass() const { return outgoing.pass() && parabolic.pass(); }
  Json to_json() const;
};

/// Structural checks: every vertex has an outgoing edge; for every
/// peripheral there is a parabolic vertex at the identity coset, and all
/// parabolic vertices of that peripheral have the same out-neighbours.
AutomatonReport validate_automaton(const AutomatonGraph& g);

/// The two-vertex ping-pong automaton for a free product of two cyclic
/// peripherals: T_{v_a} = <a> - {id}, T_{v_b} = <b> - {id}, v_a <-> v_b.
AutomatonGraph ping_pong_automaton(std::shared_ptr<const RelHypPair> pair);

/// {"angle": t} for lines in RP^1, otherwise {"basis": [columns]}.
Json flag_to_json(const Flag& f);
/// Raises schema-error.
Flag flag_from_json(const ParabolicType& type, const Json& j);

struct FlagBall {
  Flag center;
  double radius;
};

/// Open set in G/Q as a finite union of balls.
struct BallSet {
  std::vector<FlagBall> balls;
  std::optional<Flag> exterior_witness;

  bool contains(const Flag& f) const;
  /// Deterministic sample of points (boundary-heavy) of the inflated set.
  std::vector<Flag> sample(double inflate, std::size_t count, std::uint64_t seed) const;
};

/// One open set per automaton vertex plus the inflation margin.
struct SetSystem {
  double epsilon = 0.02;
  std::vector<BallSet> sets;  // indexed like the automaton's vertices

  /// Raises invalid-parameter when an exterior witness is missing or is not
  /// transverse to some centre with margin above that ball's radius.
  void validate() const;
  Json to_json(const AutomatonGraph& g) const;
  static SetSystem from_json(const AutomatonGraph& g, const ParabolicType& type, const Json& j);
};

/// Balls of radius r around the fixed points span(e1) and span(e2) for the
/// ping-pong automaton, with e2 and e1 as exterior witnesses.
SetSystem ping_pong_sets(double radius, double epsilon);

/// Bound for g . B(c, rho): centre g c, radius 1.1 x max over 64 sampled
/// boundary points of d(g s, g c).
FlagBall image_ball(const ProjectiveMatrix& g, const FlagBall& b);

/// Outcome of asking whether g . (inflated source) lies in the target set.
struct Containment {
  enum class Verdict { inside, inconclusive, outside };
  Verdict verdict = Verdict::inside;
  double margin = 0;  // least (target radius - d(centres) - image radius)
};

Containment image_contained(const ProjectiveMatrix& g, const BallSet& source, double inflate, const BallSet& target);

struct CompatibilityReport {
  Int depth = 0;
  double epsilon = 0;
  std::size_t edges = 0;
  PropertyCheck inclusion{"compatible-system"};
  std::size_t inconclusive = 0;
  std::string verdict() const;
  Json to_json() const;
};

/// For each edge v -> w and each alpha in T_v (coset labels to peripheral
/// length depth): rho(alpha) . N(U_w, eps) inside U_v.
CompatibilityReport check_compatibility(const Representation& rep, const AutomatonGraph& g, const SetSystem& sys,
                                        Int depth, std::size_t budget = 10'000'000);

struct GPath {
  std::vector<std::size_t> vertices;
  std::vector<GroupElement> labels;
  bool truncated = false;        // some coset label enumeration was cut off
  bool limiting_parabolic = false;

  std::size_t size() const noexcept { return vertices.size(); }
  /// g_1, ..., g_N with g_n = alpha_1 ... alpha_n.
  std::vector<GroupElement> partial_products(const GroupOracle& group) const;
  Json to_json(const AutomatonGraph& g) const;
};

/// Depth-first enumeration of G-paths with exactly max_len pairs, in vertex
/// order, then label order, then edge order.  The visitor returns false to
/// stop.  Returns the number of paths visited.
std::size_t enumerate_gpaths(const AutomatonGraph& g, std::size_t max_len, Int label_cutoff,
                             const std::function<bool(const GPath&)>& visit);

/// Seeded random walks: uniform start vertex, uniform label, uniform edge.
std::vector<GPath> sample_gpaths(const AutomatonGraph& g, std::size_t length, Int label_cutoff, std::size_t count,
                                 std::uint64_t seed);

struct NestedDiameters {
  std::vector<double> diameters;  // of g_n . U_{v_{n+1}}, n = 0..N-1
  double rate = 1;                // exp of the least-squares slope of log diameters
  bool monotone = true;
  bool contracting = false;       // rate < 1 - 1e-9
  std::size_t max_repetition = 0; // largest multiplicity among g_1..g_N
  Json to_json() const;
};

/// Raises empty-path for an empty path.
NestedDiameters nested_diameters(const Representation& rep, const GPath& path, const SetSystem& sys,
                                 std::size_t samples = 128, std::uint64_t seed = 1);

struct TrackingReport {
  Int radius = 0;
  double tracking_distance = 0;  // Hausdorff distance, in d_X
  Int max_label_length = 0;      // C = max l_X(alpha_i)
  Int max_depth = 0;             // along the geodesic id -> g_N
  double depth_bound = 0;        // C + 3 x tracking distance
  bool pass() const { return max_depth <= depth_bound; }
  Json to_json() const;
};

/// Compares {id, g_1, ..., g_N} with the depth-0 vertices of a geodesic
/// from id to g_N in the radius-R cusped window.  Raises window-too-small
/// when a partial product or a compared distance is not certified.
TrackingReport gpath_tracking_check(std::shared_ptr<const RelHypPair> pair, const GPath& path, Int radius);

}  // namespace rhfill
