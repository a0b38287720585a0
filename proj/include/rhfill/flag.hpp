#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rhfill/group.hpp"

namespace rhfill {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical tolerances for the flag machinery, in one place.
struct FlagTolerances {
  double gap = 1 + 1e-6;            // singular value ratio needed for a flag
  double invertible = 1e-12;        // sigma_min / sigma_max
  double nesting = 1e-9;
  double transverse = 1e-9;
  double dedupe = 1e-6;             // flag distance under which points merge
  std::size_t tail_window = 5;      // divergence verdicts look at this tail
  double divergence_gap = 100;      // final tail gap needed for "divergent"
};

inline constexpr FlagTolerances kFlagTol{};

/// An element of PGL(d, R): unit Frobenius norm, first nonzero entry positive.
class ProjectiveMatrix {
 public:
  explicit ProjectiveMatrix(Matrix m);
  static ProjectiveMatrix identity(int d) { return ProjectiveMatrix(Matrix::Identity(d, d)); }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  ProjectiveMatrix operator*(const ProjectiveMatrix& o) const { return ProjectiveMatrix(m_ * o.m_); }
  ProjectiveMatrix inverse() const;
  ProjectiveMatrix power(Int n) const;
  /// Singular values in decreasing order.
  Vector singular_values() const;

 private:
  Matrix m_;
};

/// Nonempty subset of {1, ..., d-1}, kept sorted.
class ParabolicType {
 public:
  ParabolicType(int d, std::vector<int> indices);
  /// {1, d-1}: the type of the projective line in rank one and of
  /// line/hyperplane flags in general.
  static ParabolicType projective(int d);
  static ParabolicType full(int d);

  int dim() const noexcept { return d_; }
  const std::vector<int>& indices() const noexcept { return indices_; }
  bool symmetric() const;
  std::string describe() const;

  friend bool operator==(const ParabolicType&, const ParabolicType&) = default;

 private:
  int d_;
  std::vector<int> indices_;
};

/// A partial flag stored as an orthonormal d x k basis (k the largest
/// index) whose first i columns span V_i.
class Flag {
 public:
  /// Orthonormalises the columns in order, so nesting is automatic.  Raises
  /// invalid-parameter when the needed leading columns are dependent.
  Flag(ParabolicType type, const Matrix& columns);
  /// One subspace per index, each given by spanning columns.  Raises
  /// invalid-parameter when they are not nested to tolerance.
  static Flag from_subspaces(ParabolicType type, const std::vector<Matrix>& spaces);
  /// Line in RP^1 at angle theta from e1.
  static Flag line(double theta);

  const ParabolicType& type() const noexcept { return type_; }
  int dim() const noexcept { return type_.dim(); }
  /// Orthonormal basis of V_i.
  Matrix basis(int i) const { return basis_.leftCols(i); }
  Matrix projector(int i) const;
  /// g . flag: apply g to the basis and re-orthonormalise.
  Flag apply(const ProjectiveMatrix& g) const;
  /// Angle in [0, pi) of a line in RP^1.
  double angle() const;

 private:
  ParabolicType type_;
  Matrix basis_;
};

/// sigma_i / sigma_{i+1} for i = 1..d-1 (infinity when sigma_{i+1} = 0).
std::vector<double> singular_gaps(const ProjectiveMatrix& g);

/// Span of the leading left singular vectors.  Raises gap-too-small when a
/// type-relevant gap is at most the tolerance.
Flag attracting_flag(const ProjectiveMatrix& g, const ParabolicType& type);

struct Transversality {
  bool transverse = false;
  double margin = 0;  // least singular value of [basis V_i | basis W_{d-i}]
};

/// Raises type-mismatch when the types differ.
Transversality is_transverse(const Flag& xi, const Flag& eta);

/// Max over indices of the spectral norm of the projector difference.
double flag_distance(const Flag& xi, const Flag& eta);

enum class DivergenceVerdict { divergent, bounded, inconclusive };
std::string_view to_string(DivergenceVerdict v);

struct DivergenceCertificate {
  DivergenceVerdict verdict = DivergenceVerdict::inconclusive;
  std::vector<std::vector<double>> gaps;  // per element, type-relevant gaps
  std::vector<Flag> limit;                // attracting flag of the last element
  std::vector<Flag> inverse_limit;        // of its inverse (symmetric types)
};

DivergenceCertificate q_divergence(const std::vector<ProjectiveMatrix>& seq, const ParabolicType& type);

/// A representation of a free product: one matrix per generator letter
/// (original generators, in the oracle's letter order).
class Representation {
 public:
  Representation(std::shared_ptr<const GroupOracle> group, std::vector<Matrix> generators);

  const GroupOracle& group() const noexcept { return *group_; }
  int dim() const noexcept { return static_cast<int>(generators_.front().rows()); }
  const std::vector<Matrix>& generators() const noexcept { return generators_; }
  /// Raw matrix product (no projective normalisation).
  Matrix image(const GroupElement& g) const;
  /// Images of the symmetric generating set, aligned with group().generators().
  std::vector<Matrix> generator_images() const;

 private:
  std::shared_ptr<const GroupOracle> group_;
  std::vector<Matrix> generators_;
};

/// Attracting flags of every element of the word ball of the given depth
/// whose relevant gaps pass the tolerance, deduplicated at the tolerance.
/// Points are returned in a canonical order (by angle when d = 2).
std::vector<Flag> q_limit_set(const Representation& rep, Int depth, const ParabolicType& type,
                              std::size_t cap = kDefaultElementCap);

/// The same for several representations of one group in a single pass over
/// the ball.
std::vector<std::vector<Flag>> q_limit_sets(const std::vector<const Representation*>& reps, Int depth,
                                            const ParabolicType& type, std::size_t cap = kDefaultElementCap);

/// Symmetric Hausdorff distance in flag_distance (0 for two empty clouds,
/// infinity when exactly one is empty).
double hausdorff_distance(const std::vector<Flag>& a, const std::vector<Flag>& b);
/// sup over a of the distance to b.
double directed_hausdorff(const std::vector<Flag>& a, const std::vector<Flag>& b);

}  // namespace rhfill
