#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "rhfill/cusped.hpp"
#include "rhfill/hyperbolicity.hpp"
#include "rhfill/report.hpp"

namespace rhfill {

struct MetricLemmaOptions {
  /// Endpoints of the horoball-entry check lie within this distance of the
  /// horoball.
  Int entry_distance = 2;
  /// Group elements of word length at most this are tested for quasidensity.
  Int quasidensity_radius = 5;
  /// Overrides the measured window delta when set.
  std::optional<double> delta;
  std::uint64_t seed = 1;
};

inline constexpr Int kMinLemmaRadius = 6;

struct MetricLemmaReport {
  Int radius = 0;
  std::size_t vertices = 0;
  double delta = 0;
  Json delta_detail;
  PropertyCheck comparison{"comparison"};
  PropertyCheck horoball_entry{"horoball-entry"};
  PropertyCheck quasidensity{"quasidensity"};

  bool pass() const { return comparison.pass() && horoball_entry.pass() && quasidensity.pass(); }
  Json to_json() const;
};

/// Checks, on the radius-R cusped window centred at the identity:
///  comparison      d_X(u,v) <= d_G(u,v) <= d_X(u,v) * sqrt(2)^d_X(u,v)
///                  for certified pairs of group vertices;
///  horoball-entry  d(z,{x,y}) <= d(z, X - H) + 3C + 7 delta for every z on
///                  any geodesic between certified x, y within C of H;
///  quasidensity    each short group element is within 8 + 21 delta of a
///                  geodesic from the identity to the radius-R sphere.
/// Raises window-too-small when R < 6.
MetricLemmaReport verify_metric_lemmas(std::shared_ptr<const RelHypPair> pair, Int radius,
                                       const MetricLemmaOptions& options = {});

/// Same checks on an already built window.
MetricLemmaReport verify_metric_lemmas(const RelHypPair& pair, const CuspedGraph& window,
                                       const MetricLemmaOptions& options = {});

Json to_json(const HyperbolicityEstimate& e);

}  // namespace rhfill
