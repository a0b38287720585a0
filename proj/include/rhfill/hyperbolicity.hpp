#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "rhfill/cusped.hpp"

namespace rhfill {

/// Pairwise distances among selected vertices of a graph (all vertices by
/// default), from one breadth-first search per selected vertex.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(const CuspedGraph& g, std::vector<std::size_t> selection = {});

  std::size_t size() const noexcept { return n_; }
  std::size_t vertex(std::size_t i) const { return selection_[i]; }
  std::int32_t operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<std::size_t> selection_;
  std::vector<std::uint16_t> d_;
};

enum class DeltaMode { four_point_exhaustive, four_point_sampled, thin_triangles };

std::string_view to_string(DeltaMode mode);
DeltaMode delta_mode_from_string(std::string_view s);

/// Window estimates are lower bounds for the delta of the infinite space.
/// The four-point value is max over quadruples of (S1 - S2) / 2 where
/// S1 >= S2 >= S3 are the three pair sums.
struct HyperbolicityEstimate {
  double delta4 = 0;
  double delta_thin = 0;
  std::size_t samples = 0;
  DeltaMode mode = DeltaMode::four_point_exhaustive;
  bool exact = false;
  std::vector<std::size_t> witness;  // vertex ids realising the estimate
};

inline constexpr std::size_t kExhaustiveVertexLimit = 12000;

/// Exact four-point delta, pruned to far-apart pairs.  `budget` caps the
/// number of pair-of-pairs evaluations (budget-exceeded beyond).
HyperbolicityEstimate four_point_exhaustive(const CuspedGraph& g, std::size_t budget = 4'000'000'000ULL);
HyperbolicityEstimate four_point_sampled(const CuspedGraph& g, std::size_t quadruples, std::uint64_t seed);
HyperbolicityEstimate thin_triangles(const CuspedGraph& g, std::size_t triangles, std::uint64_t seed);

/// Dispatches on mode; `budget` is the evaluation cap, quadruple count or
/// triangle count respectively.
HyperbolicityEstimate estimate_delta(const CuspedGraph& g, DeltaMode mode, std::size_t budget,
                                     std::uint64_t seed = 1);

/// The delta used by the lemma checks: the larger of the four-point and
/// thin-triangle estimates (exhaustive four-point on small windows).
struct WindowDelta {
  HyperbolicityEstimate four_point;
  HyperbolicityEstimate thin;
  double value = 0;
};

inline constexpr std::size_t kSmallWindow = 500;
inline constexpr std::size_t kWindowQuadruples = 200000;
inline constexpr std::size_t kWindowTriangles = 1000;

WindowDelta window_delta(const CuspedGraph& g, std::uint64_t seed = 1);

/// Four-point delta of the points of an explicit distance matrix (row-major,
/// n x n).  Used for subsets with exact distances taken from elsewhere.
double four_point_delta(const std::vector<std::int32_t>& d, std::size_t n);

}  // namespace rhfill
