#pragma once

// Exact arithmetic for free products of finitely generated abelian groups.
//
// Every supported family (free groups, free abelian groups, finite cyclic
// groups, free products of those, and Dehn-filling quotients of free
// products along factors) is realised as a free product A_1 * ... * A_m of
// abelian factors A_i = Z^{r_i} / L_i.  Elements are stored as alternating
// normal forms: a sequence of syllables (factor index, canonical
// coordinates) with consecutive syllables in distinct factors and no trivial
// syllable.  Canonical coordinates come from a diagonal (Smith-style) form of
// the relation lattice, so equality of elements is equality of encodings.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rhfill {

using Int = std::int64_t;

inline constexpr std::size_t kDefaultElementCap = 2'000'000;

/// Canonical normal form of a group element.  The encoding is private to the
/// oracle that produced it: a flat sequence of syllables
/// `[factor, c_1, ..., c_k]` where `k` is the number of canonical coordinates
/// of that factor.
class GroupElement {
 public:
  using Storage = std::vector<std::int32_t>;

  GroupElement() = default;
  explicit GroupElement(Storage word) : word_(std::move(word)) {}

  const Storage& word() const noexcept { return word_; }
  bool is_identity() const noexcept { return word_.empty(); }
  std::size_t hash() const noexcept;

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
  friend auto operator<=>(const GroupElement&, const GroupElement&) = default;

 private:
  Storage word_;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const noexcept {
    return g.hash();
  }
};

/// Z^rank modulo a relation lattice, with canonical coordinates.
class AbelianFactor {
 public:
  AbelianFactor(int rank, std::vector<std::vector<Int>> relations);

  static AbelianFactor free_abelian(int rank);
  static AbelianFactor cyclic(Int order);

  int rank() const noexcept { return rank_; }
  /// Number of canonical coordinates (nontrivial diagonal entries).
  int dimension() const noexcept { return static_cast<int>(moduli_.size()); }
  /// Modulus per canonical coordinate; 0 means the coordinate is free.
  const std::vector<Int>& moduli() const noexcept { return moduli_; }
  const std::vector<std::vector<Int>>& relations() const noexcept {
    return relations_;
  }
  /// Order of the group, or 0 when infinite.
  Int order() const noexcept { return order_; }
  bool is_trivial() const noexcept { return moduli_.empty(); }
  bool is_standard_free() const noexcept { return relations_.empty(); }

  /// Canonical coordinates of the class of an exponent vector over the
  /// original generators.
  std::vector<Int> reduce(std::span<const Int> exponents) const;
  /// Some exponent vector whose class has the given canonical coordinates.
  std::vector<Int> preimage(std::span<const Int> coords) const;
  std::vector<Int> add(std::span<const Int> x, std::span<const Int> y) const;
  std::vector<Int> negate(std::span<const Int> x) const;
  static bool is_zero(std::span<const Int> x);

  /// Canonical images of the original generators (some may be trivial).
  const std::vector<std::vector<Int>>& generator_images() const noexcept {
    return generator_images_;
  }
  /// Word length with respect to the images of the original generators.
  Int word_length(std::span<const Int> coords) const;
  /// All elements of word length in [1, radius], ordered by (length, coords).
  std::vector<std::vector<Int>> sphere_ball(Int radius) const;

  /// Z^rank / (L + <kernel>).
  AbelianFactor quotient(const std::vector<std::vector<Int>>& kernel) const;

  /// Invariant factor decomposition, e.g. "Z^2", "Z/2 x Z/2", "1".
  std::string describe() const;

 private:
  Int table_index(std::span<const Int> coords) const;
  void build_distance_table();

  int rank_;
  std::vector<std::vector<Int>> relations_;
  std::vector<std::vector<Int>> transform_;  // rows of U kept, dimension x rank
  std::vector<std::vector<Int>> inverse_;    // U^{-1}, rank x rank
  std::vector<int> kept_;                    // diagonal positions kept
  std::vector<Int> moduli_;
  Int order_ = 0;
  std::vector<std::vector<Int>> generator_images_;
  std::vector<std::int32_t> distance_table_;  // finite groups only
};

enum class GroupKind { free, free_abelian, finite_cyclic, free_product, filled_quotient };

std::string_view to_string(GroupKind kind);

/// Descriptor for make_oracle.  `factors` is used by free products only.
struct GroupDescriptor {
  GroupKind kind = GroupKind::free;
  int rank = 0;
  Int order = 0;
  std::vector<GroupDescriptor> factors;
};

struct Syllable {
  std::size_t factor;
  std::span<const std::int32_t> coords;
};

class GroupOracle {
 public:
  GroupOracle(GroupKind kind, std::vector<AbelianFactor> factors,
              std::vector<std::string> letter_names = {});

  GroupKind kind() const noexcept { return kind_; }
  std::size_t factor_count() const noexcept { return factors_.size(); }
  const AbelianFactor& factor(std::size_t f) const { return factors_.at(f); }
  const std::vector<AbelianFactor>& factors() const noexcept { return factors_; }

  GroupElement identity() const { return {}; }
  GroupElement multiply(const GroupElement& x, const GroupElement& y) const;
  GroupElement inverse(const GroupElement& x) const;
  GroupElement power(const GroupElement& x, Int n) const;

  /// Symmetric generating set: images of the original generators and their
  /// inverses, trivial images dropped, duplicates removed.
  const std::vector<GroupElement>& generators() const noexcept {
    return generators_;
  }
  Int word_length(const GroupElement& g) const;

  /// Single-syllable element from exponents over the original generators of
  /// factor `f`.
  GroupElement factor_element(std::size_t f, std::span<const Int> exponents) const;
  /// Element of factor `f` from canonical coordinates.
  GroupElement from_coords(std::size_t f, std::span<const Int> coords) const;

  std::size_t letter_count() const noexcept { return letter_names_.size(); }
  const std::string& letter_name(std::size_t i) const { return letter_names_.at(i); }
  const std::vector<std::string>& letter_names() const noexcept { return letter_names_; }
  std::size_t letter_factor(std::size_t i) const { return letter_factor_.at(i); }
  int letter_coordinate(std::size_t i) const { return letter_coordinate_.at(i); }
  GroupElement letter(std::size_t i) const;
  /// Index of the first letter of factor f.
  std::size_t factor_first_letter(std::size_t f) const { return factor_first_letter_.at(f); }

  std::vector<Syllable> syllables(const GroupElement& g) const;
  std::vector<Int> coords(const Syllable& s) const;
  /// Exponents over the original generators of the syllable's factor.
  std::vector<Int> exponents(const Syllable& s) const;
  std::size_t syllable_count(const GroupElement& g) const;

  /// Parses words such as "a^2 b^-1 a", "aB", "id".  Uppercase letters are
  /// inverses.
  GroupElement parse(std::string_view word) const;
  std::string format(const GroupElement& g) const;

  /// "Z * Z", "Z/5 * Z/7", ...
  std::string describe() const;

 private:
  std::vector<std::size_t> starts(const GroupElement::Storage& w) const;
  void append_syllable(GroupElement::Storage& out, std::size_t f,
                       std::span<const Int> coords) const;

  GroupKind kind_;
  std::vector<AbelianFactor> factors_;
  std::vector<std::string> letter_names_;
  std::vector<std::size_t> letter_factor_;
  std::vector<int> letter_coordinate_;
  std::vector<std::size_t> factor_first_letter_;
  std::vector<GroupElement> generators_;
};

/// Unsupported kinds and invalid parameters raise rhfill::Error.
std::shared_ptr<const GroupOracle> make_oracle(const GroupDescriptor& spec);

/// Entry of an enumerated ball, in (length, canonical form) order.  `parent`
/// indexes the entry this one was first reached from (-1 for the identity)
/// and `generator` the generator used.
struct BallEntry {
  GroupElement element;
  Int length = 0;
  std::int64_t parent = -1;
  int generator = -1;
};

std::vector<BallEntry> enumerate_ball_tree(const GroupOracle& oracle, Int radius,
                                           std::size_t cap = kDefaultElementCap);
std::vector<GroupElement> enumerate_ball(const GroupOracle& oracle, Int radius,
                                         std::size_t cap = kDefaultElementCap);

/// Streams the ball sphere by sphere without retaining it.  The visitor gets
/// the element, its length, its index within its sphere, the index of its
/// BFS parent within the previous sphere, and the generator used.  Only three
/// spheres are alive at a time.
using BallVisitor = std::function<void(const GroupElement& element, Int length,
                                       std::size_t index, std::size_t parent,
                                       int generator)>;
std::size_t for_each_in_ball(const GroupOracle& oracle, Int radius,
                             const BallVisitor& visit,
                             std::size_t cap = kDefaultElementCap);

class PeripheralSubgroup {
 public:
  PeripheralSubgroup(int id, std::size_t factor,
                     std::shared_ptr<const GroupOracle> group);

  int id() const noexcept { return id_; }
  std::size_t factor() const noexcept { return factor_; }
  const GroupOracle& group() const noexcept { return *group_; }

  bool contains(const GroupElement& g) const;
  /// Canonical representative of gP: g with its trailing P-syllable removed.
  GroupElement coset_key(const GroupElement& g) const;
  /// The trailing P-syllable of g (identity when there is none).
  GroupElement tail(const GroupElement& g) const;
  /// Word distance inside the coset; u and v must share a coset.
  Int distance(const GroupElement& u, const GroupElement& v) const;
  std::string name() const;

 private:
  int id_;
  std::size_t factor_;
  std::shared_ptr<const GroupOracle> group_;
};

class RelHypPair {
 public:
  RelHypPair(std::shared_ptr<const GroupOracle> group,
             std::vector<std::size_t> peripheral_factors);

  const GroupOracle& group() const noexcept { return *group_; }
  const std::shared_ptr<const GroupOracle>& group_ptr() const noexcept { return group_; }
  const std::vector<PeripheralSubgroup>& peripherals() const noexcept {
    return peripherals_;
  }
  const PeripheralSubgroup& peripheral(std::size_t p) const { return peripherals_.at(p); }
  std::size_t peripheral_count() const noexcept { return peripherals_.size(); }
  /// Peripheral index whose factor is f, or -1.
  int peripheral_of_factor(std::size_t f) const;

 private:
  std::shared_ptr<const GroupOracle> group_;
  std::vector<PeripheralSubgroup> peripherals_;
};

/// Peripherals are given by generating words.  Each must generate a full
/// free factor and contain the generators of that factor; otherwise
/// incompatible-genset (generating set meets P in a non-generating set) or
/// invalid-parameter (P is a proper subgroup of a factor) is raised.
std::shared_ptr<const RelHypPair> make_rel_hyp_pair(
    std::shared_ptr<const GroupOracle> group,
    const std::vector<std::vector<std::string>>& peripheral_words);

/// Peripherals are the given factors.
std::shared_ptr<const RelHypPair> make_rel_hyp_pair(
    std::shared_ptr<const GroupOracle> group, std::vector<std::size_t> factors);

/// A Dehn filling pi: G -> G/N along kernels N_i of the peripherals.
struct FillingData {
  std::shared_ptr<const RelHypPair> source;
  std::shared_ptr<const RelHypPair> quotient;
  std::vector<std::vector<GroupElement>> kernels;  // per peripheral

  const GroupOracle& quotient_oracle() const { return quotient->group(); }
  GroupElement project(const GroupElement& g) const;
};

/// `kernels[p]` lists generators of N_p as elements of the source group.
FillingData make_filling(std::shared_ptr<const RelHypPair> pair,
                         const std::vector<std::vector<GroupElement>>& kernels);

/// Kernels {x_p^{n_p}} where x_p is the first generator of peripheral p.
FillingData make_power_filling(std::shared_ptr<const RelHypPair> pair,
                               const std::vector<Int>& exponents);

}  // namespace rhfill
