#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rhfill/cusped.hpp"
#include "rhfill/hyperbolicity.hpp"
#include "rhfill/report.hpp"

namespace rhfill {

/// Cusped windows of a pair and of a Dehn filling of it, both centred at the
/// identity, with the graph map pi_X between them.  The target is built
/// directly over the quotient group.
struct FillingGeometry {
  FillingData filling;
  CuspedGraph source;
  CuspedGraph target;
  std::vector<std::int64_t> vertex_map;  // -1 when the image lies outside the target window

  VertexKey project(const VertexKey& v) const;
  /// Image of a source path; raises invalid-parameter when a vertex has no
  /// image in the target window.
  GraphPath project_path(const GraphPath& path) const;
};

/// Source window of radius R and target window of radius target_radius
/// (default R, which already contains the image since pi_X is 1-Lipschitz).
/// Edges whose endpoints are identified disappear rather than become loops.
FillingGeometry build_quotient_cusped(const FillingData& filling, Int radius, Int target_radius = -1,
                                      std::size_t cap = kDefaultElementCap);

/// Edge-by-edge lift starting at base_lift.  Among several preimage edges the
/// endpoint with the least vertex key wins.  Raises no-preimage-edge-in-window
/// when the source window is too small for the lift.
GraphPath lift_path(const FillingGeometry& fg, const GraphPath& target_path, std::size_t base_lift);

/// Source vertex with the least key among the preimages of a target vertex.
std::optional<std::size_t> least_preimage(const FillingGeometry& fg, std::size_t target_vertex);

struct LiftReport {
  std::size_t walks = 0, geodesics = 0;
  PropertyCheck round_trip{"lift-round-trip"};
  PropertyCheck tight{"lifted-geodesic-tight"};
  bool pass() const { return round_trip.pass() && tight.pass(); }
  Json to_json() const;
};

/// Lifts `paths` seeded random walks from the identity (length = target
/// radius) and as many target geodesics from the identity.  Every lift must
/// project back exactly; lifted geodesics must be geodesics of the source,
/// compared on certified pairs.
LiftReport check_lifts(const FillingGeometry& fg, std::size_t paths, std::uint64_t seed = 1);

struct LocalIsometryReport {
  Int r = 0;
  std::size_t ball_vertices = 0;
  PropertyCheck isometry{"local-isometry"};
  PropertyCheck image_ball{"image-is-ball"};
  bool pass() const { return isometry.pass() && image_ball.pass(); }
  Json to_json() const;
};

/// Compares every pairwise distance inside the radius-r ball about the
/// identity with the distance between the images, and checks that the image
/// is the radius-r ball of the target.  By equivariance the identity stands
/// for every depth-0 centre.  Needs both windows of radius >= 2r
/// (window-too-small otherwise).
LocalIsometryReport check_local_isometry(const FillingGeometry& fg, Int r);

struct DescentReport {
  double K = 1;
  Int max_depth_used = 0;
  double target_delta = 0;
  std::size_t geodesics = 0;
  PropertyCheck lower{"quasi-geodesic-lower"};
  PropertyCheck upper{"quasi-geodesic-upper"};
  bool pass() const { return lower.pass() && upper.pass(); }
  Json to_json() const;
};

/// Projects seeded source geodesics that stay at depth <= max_depth_used and
/// checks (j - i)/K - 2 delta <= d(pi c_i, pi c_j) <= K (j - i) + 2 delta on
/// every certified sub-pair, with delta the target window delta unless
/// given.  Needs windows of radius >= 2 (window-too-small otherwise).
DescentReport check_descent_quasigeodesic(const FillingGeometry& fg, double K, Int max_depth_used,
                                          std::size_t samples = 200, std::uint64_t seed = 1,
                                          std::optional<double> delta = std::nullopt);

struct UniformDeltaRow {
  Int n = 0;  // 0 for the unfilled space
  std::size_t vertices = 0;
  WindowDelta delta;
};

struct UniformDeltaTable {
  Int radius = 0;
  double slack = 2;
  Int n0 = 0;
  UniformDeltaRow unfilled;
  std::vector<UniformDeltaRow> rows;
  /// sup over rows with n >= n0 of delta(n) <= delta(unfilled) + slack.
  bool bounded() const;
  Json to_json() const;
};

/// Window delta of the power fillings x_p^n for each n, plus the unfilled
/// space.
UniformDeltaTable check_uniform_delta(std::shared_ptr<const RelHypPair> pair, const std::vector<Int>& ns,
                                      Int radius, double slack = 2, Int n0 = 0, std::uint64_t seed = 1);

struct InjectivityReport {
  Int radius = 0;
  PropertyCheck ball{"ball-injective"};
  PropertyCheck peripheral{"peripheral-injective"};
  bool pass() const { return ball.pass() && peripheral.pass(); }
  Json to_json() const;
};

/// The projection is injective on the word ball of the given radius, and for
/// each peripheral P the induced map P/N_P -> G/N is injective on the
/// elements of P of length at most the radius.
InjectivityReport check_injectivity(const FillingData& filling, Int radius);

/// Least r in [1, r_max] at which check_local_isometry fails, if any.
std::optional<Int> minimal_failing_radius(const FillingData& filling, Int r_max);

}  // namespace rhfill
