#include "rhfill/group.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "rhfill/errors.hpp"

namespace rhfill {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

Int floor_mod(Int a, Int m) {
  Int r = a % m;
  return r < 0 ? r + m : r;
}

std::int32_t narrow(Int v) {
  if (v > std::numeric_limits<std::int32_t>::max() ||
      v < std::numeric_limits<std::int32_t>::min())
    throw Error(ErrorCode::budget_exceeded, "coordinate exceeds 32-bit storage");
  return static_cast<std::int32_t>(v);
}

struct VecHash {
  std::size_t operator()(const std::vector<Int>& v) const noexcept {
    std::uint64_t h = 0;
    for (Int x : v) h = mix(h, static_cast<std::uint64_t>(x));
    return h;
  }
};

Int l1(std::span<const Int> x) {
  Int s = 0;
  for (Int v : x) s += std::llabs(v);
  return s;
}

}  // namespace

std::size_t GroupElement::hash() const noexcept {
  std::uint64_t h = word_.size();
  for (auto v : word_) h = mix(h, static_cast<std::uint32_t>(v));
  return h;
}

// ---------------------------------------------------------------------------
// AbelianFactor

AbelianFactor::AbelianFactor(int rank, std::vector<std::vector<Int>> relations)
    : rank_(rank), relations_(std::move(relations)) {
  if (rank < 0) throw Error(ErrorCode::invalid_parameter, "negative rank");
  for (const auto& r : relations_)
    if (static_cast<int>(r.size()) != rank)
      throw Error(ErrorCode::invalid_parameter, "relation length differs from rank");
  relations_.erase(std::remove_if(relations_.begin(), relations_.end(),
                                  [](const auto& r) { return is_zero(r); }),
                   relations_.end());

  // A = transpose of the relation matrix (rank x m).  Row operations on A
  // are mirrored into U and U^{-1}; column operations only change the
  // lattice basis and are not tracked.
  const int m = static_cast<int>(relations_.size());
  std::vector<std::vector<Int>> a(rank, std::vector<Int>(m));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < rank; ++i) a[i][j] = relations_[j][i];
  std::vector<std::vector<Int>> u(rank, std::vector<Int>(rank, 0));
  std::vector<std::vector<Int>> uinv = u;
  for (int i = 0; i < rank; ++i) u[i][i] = uinv[i][i] = 1;

  auto swap_rows = [&](int i, int t) {
    if (i == t) return;
    std::swap(a[i], a[t]);
    std::swap(u[i], u[t]);
    for (int r = 0; r < rank; ++r) std::swap(uinv[r][i], uinv[r][t]);
  };
  auto sub_row = [&](int i, int t, Int q) {  // row_i -= q row_t
    if (q == 0) return;
    for (int c = 0; c < m; ++c) a[i][c] -= q * a[t][c];
    for (int c = 0; c < rank; ++c) u[i][c] -= q * u[t][c];
    for (int r = 0; r < rank; ++r) uinv[r][t] += q * uinv[r][i];
  };
  auto negate_row = [&](int t) {
    for (auto& v : a[t]) v = -v;
    for (auto& v : u[t]) v = -v;
    for (int r = 0; r < rank; ++r) uinv[r][t] = -uinv[r][t];
  };

  std::vector<Int> diag(rank, 0);
  int t = 0;
  for (; t < std::min(rank, m); ++t) {
    for (;;) {
      int pi = -1, pj = -1;
      Int best = 0;
      for (int i = t; i < rank; ++i)
        for (int j = t; j < m; ++j)
          if (a[i][j] != 0 && (best == 0 || std::llabs(a[i][j]) < best)) {
            best = std::llabs(a[i][j]);
            pi = i;
            pj = j;
          }
      if (pi < 0) break;
      swap_rows(pi, t);
      if (pj != t)
        for (int i = 0; i < rank; ++i) std::swap(a[i][pj], a[i][t]);
      bool clean = true;
      for (int i = t + 1; i < rank; ++i) {
        sub_row(i, t, a[i][t] / a[t][t]);
        if (a[i][t] != 0) clean = false;
      }
      for (int j = t + 1; j < m; ++j) {
        Int q = a[t][j] / a[t][t];
        if (q != 0)
          for (int i = 0; i < rank; ++i) a[i][j] -= q * a[i][t];
        if (a[t][j] != 0) clean = false;
      }
      if (clean) break;
    }
    if (a[t][t] == 0) break;
    if (a[t][t] < 0) negate_row(t);
    diag[t] = a[t][t];
  }

  order_ = 1;
  for (int i = 0; i < rank; ++i) {
    if (diag[i] == 1) continue;
    kept_.push_back(i);
    moduli_.push_back(diag[i]);
    transform_.push_back(u[i]);
    if (diag[i] == 0) order_ = 0;
    else if (order_ != 0) order_ *= diag[i];
  }
  inverse_ = std::move(uinv);

  for (int g = 0; g < rank; ++g) {
    std::vector<Int> e(rank, 0);
    e[g] = 1;
    generator_images_.push_back(reduce(e));
  }
  if (order_ > 0) build_distance_table();
}

AbelianFactor AbelianFactor::free_abelian(int rank) {
  if (rank < 1) throw Error(ErrorCode::invalid_parameter, "rank must be at least 1");
  return AbelianFactor(rank, {});
}

AbelianFactor AbelianFactor::cyclic(Int order) {
  if (order < 1) throw Error(ErrorCode::invalid_parameter, "order must be at least 1");
  return AbelianFactor(1, {{order}});
}

bool AbelianFactor::is_zero(std::span<const Int> x) {
  return std::all_of(x.begin(), x.end(), [](Int v) { return v == 0; });
}

std::vector<Int> AbelianFactor::reduce(std::span<const Int> exponents) const {
  if (static_cast<int>(exponents.size()) != rank_)
    throw Error(ErrorCode::invalid_parameter, "exponent vector length differs from rank");
  std::vector<Int> y(moduli_.size(), 0);
  for (std::size_t k = 0; k < moduli_.size(); ++k) {
    Int s = 0;
    for (int j = 0; j < rank_; ++j) s += transform_[k][j] * exponents[j];
    y[k] = moduli_[k] > 0 ? floor_mod(s, moduli_[k]) : s;
  }
  return y;
}

std::vector<Int> AbelianFactor::preimage(std::span<const Int> coords) const {
  std::vector<Int> x(rank_, 0);
  for (std::size_t k = 0; k < kept_.size(); ++k)
    for (int r = 0; r < rank_; ++r) x[r] += inverse_[r][kept_[k]] * coords[k];
  return x;
}

std::vector<Int> AbelianFactor::add(std::span<const Int> x, std::span<const Int> y) const {
  std::vector<Int> z(moduli_.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = x[k] + y[k];
    if (moduli_[k] > 0) z[k] = floor_mod(z[k], moduli_[k]);
  }
  return z;
}

std::vector<Int> AbelianFactor::negate(std::span<const Int> x) const {
  std::vector<Int> z(moduli_.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    z[k] = moduli_[k] > 0 ? floor_mod(-x[k], moduli_[k]) : -x[k];
  return z;
}

Int AbelianFactor::table_index(std::span<const Int> coords) const {
  Int idx = 0;
  for (std::size_t k = 0; k < moduli_.size(); ++k) idx = idx * moduli_[k] + coords[k];
  return idx;
}

void AbelianFactor::build_distance_table() {
  constexpr Int kTableCap = Int{1} << 22;
  if (order_ > kTableCap) return;  // falls back to on-demand search
  distance_table_.assign(static_cast<std::size_t>(order_), -1);
  std::vector<std::vector<Int>> frontier{std::vector<Int>(moduli_.size(), 0)};
  distance_table_[0] = 0;
  std::vector<std::vector<Int>> steps;
  for (const auto& g : generator_images_) {
    if (is_zero(g)) continue;
    steps.push_back(g);
    steps.push_back(negate(g));
  }
  for (std::int32_t d = 1; !frontier.empty(); ++d) {
    std::vector<std::vector<Int>> next;
    for (const auto& x : frontier)
      for (const auto& s : steps) {
        auto y = add(x, s);
        auto& slot = distance_table_[static_cast<std::size_t>(table_index(y))];
        if (slot < 0) {
          slot = d;
          next.push_back(std::move(y));
        }
      }
    frontier = std::move(next);
  }
}

Int AbelianFactor::word_length(std::span<const Int> coords) const {
  if (is_zero(coords)) return 0;
  if (relations_.empty()) return l1(coords);
  if (!distance_table_.empty())
    return distance_table_[static_cast<std::size_t>(table_index(coords))];
  // Bounded breadth-first search; the preimage gives a word, so its L1
  // norm bounds the length.
  const Int bound = l1(preimage(coords));
  std::vector<Int> target(coords.begin(), coords.end());
  std::unordered_set<std::vector<Int>, VecHash> seen;
  std::vector<std::vector<Int>> frontier{std::vector<Int>(moduli_.size(), 0)};
  seen.insert(frontier.front());
  for (Int d = 1; d < bound; ++d) {
    std::vector<std::vector<Int>> next;
    for (const auto& x : frontier)
      for (const auto& g : generator_images_) {
        if (is_zero(g)) continue;
        for (auto y : {add(x, g), add(x, negate(g))}) {
          if (y == target) return d;
          if (seen.insert(y).second) next.push_back(std::move(y));
        }
      }
    if (seen.size() > kDefaultElementCap)
      throw Error(ErrorCode::budget_exceeded, "abelian word length search");
    frontier = std::move(next);
  }
  return bound;
}

std::vector<std::vector<Int>> AbelianFactor::sphere_ball(Int radius) const {
  std::vector<std::vector<Int>> out;
  if (radius <= 0 || is_trivial()) return out;
  if (relations_.empty() && rank_ == 1) {
    for (Int r = 1; r <= radius; ++r) {
      out.push_back({-r});
      out.push_back({r});
    }
    return out;
  }
  std::unordered_set<std::vector<Int>, VecHash> seen;
  std::vector<std::vector<Int>> frontier{std::vector<Int>(moduli_.size(), 0)};
  seen.insert(frontier.front());
  std::vector<std::vector<Int>> steps;
  for (const auto& g : generator_images_) {
    if (is_zero(g)) continue;
    steps.push_back(g);
    steps.push_back(negate(g));
  }
  for (Int d = 1; d <= radius && !frontier.empty(); ++d) {
    std::vector<std::vector<Int>> next;
    for (const auto& x : frontier)
      for (const auto& s : steps) {
        auto y = add(x, s);
        if (seen.insert(y).second) next.push_back(std::move(y));
      }
    if (seen.size() > kDefaultElementCap)
      throw Error(ErrorCode::budget_exceeded, "peripheral ball of radius " + std::to_string(radius));
    std::sort(next.begin(), next.end());
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

AbelianFactor AbelianFactor::quotient(const std::vector<std::vector<Int>>& kernel) const {
  auto rel = relations_;
  rel.insert(rel.end(), kernel.begin(), kernel.end());
  return AbelianFactor(rank_, std::move(rel));
}

std::string AbelianFactor::describe() const {
  // Invariant factors from the diagonal: replace pairs by (gcd, lcm) until
  // each divides the next.
  std::vector<Int> finite;
  int free_rank = 0;
  for (Int d : moduli_) {
    if (d == 0) ++free_rank;
    else finite.push_back(d);
  }
  for (std::size_t i = 0; i < finite.size(); ++i)
    for (std::size_t j = i + 1; j < finite.size(); ++j) {
      Int g = std::gcd(finite[i], finite[j]);
      Int l = finite[i] / g * finite[j];
      finite[i] = g;
      finite[j] = l;
    }
  std::vector<std::string> parts;
  for (Int d : finite)
    if (d != 1) parts.push_back("Z/" + std::to_string(d));
  if (free_rank == 1) parts.push_back("Z");
  if (free_rank > 1) parts.push_back("Z^" + std::to_string(free_rank));
  if (parts.empty()) return "1";
  std::string s = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) s += " x " + parts[i];
  return s;
}

// ---------------------------------------------------------------------------

std::string_view to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::free: return "free";
    case GroupKind::free_abelian: return "free-abelian";
    case GroupKind::finite_cyclic: return "finite-cyclic";
    case GroupKind::free_product: return "free-product";
    case GroupKind::filled_quotient: return "filled-quotient";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// GroupOracle

GroupOracle::GroupOracle(GroupKind kind, std::vector<AbelianFactor> factors,
                         std::vector<std::string> letter_names)
    : kind_(kind), factors_(std::move(factors)) {
  std::size_t total = 0;
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    factor_first_letter_.push_back(total);
    for (int c = 0; c < factors_[f].rank(); ++c) {
      letter_factor_.push_back(f);
      letter_coordinate_.push_back(c);
    }
    total += static_cast<std::size_t>(factors_[f].rank());
  }
  if (letter_names.empty()) {
    if (total > 26)
      throw Error(ErrorCode::invalid_parameter, "more than 26 generators");
    for (std::size_t i = 0; i < total; ++i)
      letter_names.emplace_back(1, static_cast<char>('a' + i));
  }
  if (letter_names.size() != total)
    throw Error(ErrorCode::invalid_parameter, "letter name count differs from generator count");
  letter_names_ = std::move(letter_names);

  std::unordered_set<GroupElement, GroupElementHash> seen;
  for (std::size_t i = 0; i < total; ++i) {
    GroupElement g = letter(i);
    if (g.is_identity()) continue;
    for (auto& h : {g, inverse(g)})
      if (seen.insert(h).second) generators_.push_back(h);
  }
}

GroupElement GroupOracle::letter(std::size_t i) const {
  const std::size_t f = letter_factor_.at(i);
  std::vector<Int> e(static_cast<std::size_t>(factors_[f].rank()), 0);
  e[static_cast<std::size_t>(letter_coordinate_[i])] = 1;
  return factor_element(f, e);
}

std::vector<std::size_t> GroupOracle::starts(const GroupElement::Storage& w) const {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < w.size();) {
    s.push_back(i);
    i += 1 + static_cast<std::size_t>(factors_[static_cast<std::size_t>(w[i])].dimension());
  }
  return s;
}

void GroupOracle::append_syllable(GroupElement::Storage& out, std::size_t f,
                                  std::span<const Int> coords) const {
  out.push_back(static_cast<std::int32_t>(f));
  for (Int c : coords) out.push_back(narrow(c));
}

std::vector<Syllable> GroupOracle::syllables(const GroupElement& g) const {
  const auto& w = g.word();
  std::vector<Syllable> out;
  for (std::size_t i : starts(w)) {
    const auto f = static_cast<std::size_t>(w[i]);
    out.push_back({f, std::span<const std::int32_t>(w.data() + i + 1,
                                                    static_cast<std::size_t>(factors_[f].dimension()))});
  }
  return out;
}

std::size_t GroupOracle::syllable_count(const GroupElement& g) const {
  return starts(g.word()).size();
}

std::vector<Int> GroupOracle::coords(const Syllable& s) const {
  return std::vector<Int>(s.coords.begin(), s.coords.end());
}

std::vector<Int> GroupOracle::exponents(const Syllable& s) const {
  return factors_[s.factor].preimage(coords(s));
}

GroupElement GroupOracle::from_coords(std::size_t f, std::span<const Int> coords) const {
  if (AbelianFactor::is_zero(coords)) return {};
  GroupElement::Storage w;
  append_syllable(w, f, coords);
  return GroupElement(std::move(w));
}

GroupElement GroupOracle::factor_element(std::size_t f, std::span<const Int> exponents) const {
  if (f >= factors_.size()) throw Error(ErrorCode::invalid_parameter, "factor index out of range");
  return from_coords(f, factors_[f].reduce(exponents));
}

GroupElement GroupOracle::multiply(const GroupElement& x, const GroupElement& y) const {
  if (x.is_identity()) return y;
  if (y.is_identity()) return x;
  const auto& xw = x.word();
  const auto& yw = y.word();
  const auto xs = starts(xw);
  const auto ys = starts(yw);
  std::size_t i = xs.size();  // syllables of x kept: [0, i)
  std::size_t j = 0;          // syllables of y kept: [j, ys.size())
  std::vector<Int> merged;
  std::size_t merged_factor = 0;
  bool has_merged = false;
  while (i > 0 && j < ys.size() && xw[xs[i - 1]] == yw[ys[j]]) {
    const auto f = static_cast<std::size_t>(xw[xs[i - 1]]);
    const auto dim = static_cast<std::size_t>(factors_[f].dimension());
    std::vector<Int> a(xw.begin() + static_cast<std::ptrdiff_t>(xs[i - 1] + 1),
                       xw.begin() + static_cast<std::ptrdiff_t>(xs[i - 1] + 1 + dim));
    std::vector<Int> b(yw.begin() + static_cast<std::ptrdiff_t>(ys[j] + 1),
                       yw.begin() + static_cast<std::ptrdiff_t>(ys[j] + 1 + dim));
    auto s = factors_[f].add(a, b);
    --i;
    ++j;
    if (!AbelianFactor::is_zero(s)) {
      merged = std::move(s);
      merged_factor = f;
      has_merged = true;
      break;
    }
  }
  GroupElement::Storage out;
  const std::size_t xend = i < xs.size() ? xs[i] : xw.size();
  const std::size_t ybegin = j < ys.size() ? ys[j] : yw.size();
  out.reserve(xend + (yw.size() - ybegin) + merged.size() + 1);
  out.insert(out.end(), xw.begin(), xw.begin() + static_cast<std::ptrdiff_t>(xend));
  if (has_merged) append_syllable(out, merged_factor, merged);
  out.insert(out.end(), yw.begin() + static_cast<std::ptrdiff_t>(ybegin), yw.end());
  return GroupElement(std::move(out));
}

GroupElement GroupOracle::inverse(const GroupElement& x) const {
  const auto& w = x.word();
  const auto s = starts(w);
  GroupElement::Storage out;
  out.reserve(w.size());
  for (std::size_t k = s.size(); k-- > 0;) {
    const auto f = static_cast<std::size_t>(w[s[k]]);
    const auto dim = static_cast<std::size_t>(factors_[f].dimension());
    std::vector<Int> c(w.begin() + static_cast<std::ptrdiff_t>(s[k] + 1),
                       w.begin() + static_cast<std::ptrdiff_t>(s[k] + 1 + dim));
    append_syllable(out, f, factors_[f].negate(c));
  }
  return GroupElement(std::move(out));
}

GroupElement GroupOracle::power(const GroupElement& x, Int n) const {
  GroupElement base = n < 0 ? inverse(x) : x;
  std::uint64_t e = n < 0 ? static_cast<std::uint64_t>(-(n + 1)) + 1 : static_cast<std::uint64_t>(n);
  GroupElement result;
  while (e > 0) {
    if (e & 1) result = multiply(result, base);
    e >>= 1;
    if (e > 0) base = multiply(base, base);
  }
  return result;
}

Int GroupOracle::word_length(const GroupElement& g) const {
  Int total = 0;
  for (const auto& s : syllables(g)) total += factors_[s.factor].word_length(coords(s));
  return total;
}

GroupElement GroupOracle::parse(std::string_view word) const {
  auto trimmed = word;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
    trimmed.remove_prefix(1);
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
    trimmed.remove_suffix(1);
  if (trimmed.empty() || trimmed == "id" || trimmed == "1" || trimmed == "e")
    return {};
  GroupElement result;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::invalid_parameter,
                "cannot parse word '" + std::string(word) + "': " + why);
  };
  while (i < trimmed.size()) {
    const char c = trimmed[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '.') {
      ++i;
      continue;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("unexpected '") + c + "'");
    const bool inverse_letter = std::isupper(static_cast<unsigned char>(c)) != 0;
    const std::string name(1, static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    auto it = std::find(letter_names_.begin(), letter_names_.end(), name);
    if (it == letter_names_.end()) fail("unknown generator '" + name + "'");
    ++i;
    Int exponent = 1;
    if (i < trimmed.size() && trimmed[i] == '^') {
      ++i;
      std::size_t j = i;
      if (j < trimmed.size() && (trimmed[j] == '-' || trimmed[j] == '+')) ++j;
      if (j < trimmed.size() && trimmed[j] == '(') fail("parenthesised exponents unsupported");
      std::size_t k = j;
      while (k < trimmed.size() && std::isdigit(static_cast<unsigned char>(trimmed[k]))) ++k;
      if (k == j) fail("missing exponent");
      exponent = std::stoll(std::string(trimmed.substr(i, k - i)));
      i = k;
    }
    if (inverse_letter) exponent = -exponent;
    const auto idx = static_cast<std::size_t>(it - letter_names_.begin());
    const std::size_t f = letter_factor_[idx];
    std::vector<Int> e(static_cast<std::size_t>(factors_[f].rank()), 0);
    e[static_cast<std::size_t>(letter_coordinate_[idx])] = exponent;
    result = multiply(result, factor_element(f, e));
  }
  return result;
}

std::string GroupOracle::format(const GroupElement& g) const {
  if (g.is_identity()) return "id";
  std::string out;
  for (const auto& s : syllables(g)) {
    const auto e = exponents(s);
    for (std::size_t c = 0; c < e.size(); ++c) {
      if (e[c] == 0) continue;
      out += letter_names_[factor_first_letter_[s.factor] + c];
      if (e[c] != 1) out += "^" + std::to_string(e[c]);
    }
  }
  return out;
}

std::string GroupOracle::describe() const {
  if (factors_.empty()) return "1";
  std::string s;
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    if (f) s += " * ";
    s += factors_[f].describe();
  }
  return s;
}

std::shared_ptr<const GroupOracle> make_oracle(const GroupDescriptor& spec) {
  auto check_rank = [](int r) {
    if (r < 1) throw Error(ErrorCode::invalid_parameter, "rank must be at least 1");
  };
  std::vector<AbelianFactor> factors;
  auto add_simple = [&](const GroupDescriptor& d) {
    switch (d.kind) {
      case GroupKind::free:
        check_rank(d.rank);
        for (int i = 0; i < d.rank; ++i) factors.push_back(AbelianFactor::free_abelian(1));
        break;
      case GroupKind::free_abelian:
        check_rank(d.rank);
        factors.push_back(AbelianFactor::free_abelian(d.rank));
        break;
      case GroupKind::finite_cyclic:
        if (d.order < 1) throw Error(ErrorCode::invalid_parameter, "order must be at least 1");
        factors.push_back(AbelianFactor::cyclic(d.order));
        break;
      default:
        throw Error(ErrorCode::unsupported_kind,
                    "factor kind '" + std::string(to_string(d.kind)) + "'");
    }
  };
  switch (spec.kind) {
    case GroupKind::free:
    case GroupKind::free_abelian:
    case GroupKind::finite_cyclic:
      add_simple(spec);
      break;
    case GroupKind::free_product:
      if (spec.factors.empty())
        throw Error(ErrorCode::invalid_parameter, "free product needs at least one factor");
      for (const auto& f : spec.factors) add_simple(f);
      break;
    default:
      throw Error(ErrorCode::unsupported_kind,
                  "kind '" + std::string(to_string(spec.kind)) + "' cannot be built directly");
  }
  return std::make_shared<const GroupOracle>(spec.kind, std::move(factors));
}

// ---------------------------------------------------------------------------
// Balls

namespace {

// Elements of one sphere plus an index set for membership tests.
class Sphere {
 public:
  Sphere() : index_(16, Hash{&elements_}, Eq{&elements_}) {}

  // Inserts g if absent.  Returns true on insertion.
  bool insert(GroupElement g) {
    elements_.push_back(std::move(g));
    if (index_.insert(elements_.size() - 1).second) return true;
    elements_.pop_back();
    return false;
  }
  bool contains(const GroupElement& g) {
    elements_.push_back(g);
    const bool found = index_.count(elements_.size() - 1) > 0;
    elements_.pop_back();
    return found;
  }
  std::vector<GroupElement>& elements() { return elements_; }
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < elements_.size(); ++i) index_.insert(i);
  }
  std::size_t size() const { return elements_.size(); }

 private:
  struct Hash {
    const std::vector<GroupElement>* v;
    std::size_t operator()(std::size_t i) const noexcept { return (*v)[i].hash(); }
  };
  struct Eq {
    const std::vector<GroupElement>* v;
    bool operator()(std::size_t i, std::size_t j) const noexcept { return (*v)[i] == (*v)[j]; }
  };
  std::vector<GroupElement> elements_;
  std::unordered_set<std::size_t, Hash, Eq> index_;
};

}  // namespace

std::size_t for_each_in_ball(const GroupOracle& oracle, Int radius, const BallVisitor& visit,
                             std::size_t cap) {
  if (radius < 0) throw Error(ErrorCode::invalid_parameter, "negative radius");
  const auto& gens = oracle.generators();
  auto previous = std::make_unique<Sphere>();
  auto current = std::make_unique<Sphere>();
  current->insert(oracle.identity());
  std::size_t total = 1;
  visit(oracle.identity(), 0, 0, 0, -1);
  for (Int len = 1; len <= radius; ++len) {
    auto next = std::make_unique<Sphere>();
    std::vector<std::pair<std::size_t, int>> origin;
    const auto& cur = current->elements();
    for (std::size_t i = 0; i < cur.size(); ++i)
      for (std::size_t s = 0; s < gens.size(); ++s) {
        GroupElement h = oracle.multiply(cur[i], gens[s]);
        if (previous->contains(h) || current->contains(h)) continue;
        if (next->insert(std::move(h))) {
          origin.emplace_back(i, static_cast<int>(s));
          if (total + next->size() > cap)
            throw Error(ErrorCode::budget_exceeded,
                        "ball of radius " + std::to_string(radius) + " exceeds " +
                            std::to_string(cap) + " elements");
        }
      }
    if (next->size() == 0) break;
    // Sort the new sphere canonically, carrying the BFS origin along.
    auto& elems = next->elements();
    std::vector<std::size_t> perm(elems.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return elems[a] < elems[b]; });
    std::vector<GroupElement> sorted;
    std::vector<std::pair<std::size_t, int>> sorted_origin;
    sorted.reserve(elems.size());
    sorted_origin.reserve(elems.size());
    for (std::size_t k : perm) {
      sorted.push_back(std::move(elems[k]));
      sorted_origin.push_back(origin[k]);
    }
    elems = std::move(sorted);
    next->reindex();
    for (std::size_t k = 0; k < elems.size(); ++k)
      visit(elems[k], len, k, sorted_origin[k].first, sorted_origin[k].second);
    total += elems.size();
    previous = std::move(current);
    current = std::move(next);
  }
  return total;
}

std::vector<BallEntry> enumerate_ball_tree(const GroupOracle& oracle, Int radius,
                                           std::size_t cap) {
  std::vector<BallEntry> out;
  std::size_t prev_offset = 0, cur_offset = 0;
  Int cur_len = 0;
  for_each_in_ball(
      oracle, radius,
      [&](const GroupElement& g, Int len, std::size_t index, std::size_t parent, int gen) {
        if (len != cur_len) {
          prev_offset = cur_offset;
          cur_offset = out.size();
          cur_len = len;
        }
        (void)index;
        BallEntry e;
        e.element = g;
        e.length = len;
        e.parent = len == 0 ? -1 : static_cast<std::int64_t>(prev_offset + parent);
        e.generator = gen;
        out.push_back(std::move(e));
      },
      cap);
  return out;
}

std::vector<GroupElement> enumerate_ball(const GroupOracle& oracle, Int radius,
                                         std::size_t cap) {
  std::vector<GroupElement> out;
  for_each_in_ball(
      oracle, radius,
      [&](const GroupElement& g, Int, std::size_t, std::size_t, int) { out.push_back(g); },
      cap);
  return out;
}

// ---------------------------------------------------------------------------
// Peripheral structures

PeripheralSubgroup::PeripheralSubgroup(int id, std::size_t factor,
                                       std::shared_ptr<const GroupOracle> group)
    : id_(id), factor_(factor), group_(std::move(group)) {
  if (factor_ >= group_->factor_count())
    throw Error(ErrorCode::invalid_parameter, "peripheral factor out of range");
}

bool PeripheralSubgroup::contains(const GroupElement& g) const {
  if (g.is_identity()) return true;
  const auto s = group_->syllables(g);
  return s.size() == 1 && s.front().factor == factor_;
}

GroupElement PeripheralSubgroup::coset_key(const GroupElement& g) const {
  const auto s = group_->syllables(g);
  if (s.empty() || s.back().factor != factor_) return g;
  const auto& w = g.word();
  const auto cut = w.size() - s.back().coords.size() - 1;
  return GroupElement(GroupElement::Storage(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(cut)));
}

GroupElement PeripheralSubgroup::tail(const GroupElement& g) const {
  const auto s = group_->syllables(g);
  if (s.empty() || s.back().factor != factor_) return {};
  return group_->from_coords(factor_, group_->coords(s.back()));
}

Int PeripheralSubgroup::distance(const GroupElement& u, const GroupElement& v) const {
  const GroupElement x = group_->multiply(group_->inverse(u), v);
  if (!contains(x))
    throw Error(ErrorCode::invalid_parameter, "elements lie in different cosets of " + name());
  return group_->word_length(x);
}

std::string PeripheralSubgroup::name() const {
  const auto first = group_->factor_first_letter(factor_);
  std::string s = "<";
  for (int c = 0; c < group_->factor(factor_).rank(); ++c) {
    if (c) s += ",";
    s += group_->letter_name(first + static_cast<std::size_t>(c));
  }
  return s + ">";
}

RelHypPair::RelHypPair(std::shared_ptr<const GroupOracle> group,
                       std::vector<std::size_t> peripheral_factors)
    : group_(std::move(group)) {
  std::vector<bool> used(group_->factor_count(), false);
  for (std::size_t p = 0; p < peripheral_factors.size(); ++p) {
    const auto f = peripheral_factors[p];
    if (f >= used.size()) throw Error(ErrorCode::invalid_parameter, "peripheral factor out of range");
    if (used[f]) throw Error(ErrorCode::invalid_parameter, "two peripherals on one factor");
    used[f] = true;
    peripherals_.emplace_back(static_cast<int>(p), f, group_);
  }
}

int RelHypPair::peripheral_of_factor(std::size_t f) const {
  for (const auto& p : peripherals_)
    if (p.factor() == f) return p.id();
  return -1;
}

std::shared_ptr<const RelHypPair> make_rel_hyp_pair(
    std::shared_ptr<const GroupOracle> group,
    const std::vector<std::vector<std::string>>& peripheral_words) {
  std::vector<std::size_t> factors;
  for (const auto& words : peripheral_words) {
    if (words.empty()) throw Error(ErrorCode::invalid_parameter, "peripheral with no generators");
    std::optional<std::size_t> factor;
    std::vector<std::vector<Int>> exps;
    for (const auto& w : words) {
      const GroupElement g = group->parse(w);
      const auto s = group->syllables(g);
      if (s.empty()) continue;
      if (s.size() != 1)
        throw Error(ErrorCode::incompatible_genset,
                    "peripheral generator '" + w + "' is not a word in a single factor generator set");
      if (factor && *factor != s.front().factor)
        throw Error(ErrorCode::invalid_parameter,
                    "peripheral generators '" + words.front() + "' and '" + w + "' lie in different factors");
      factor = s.front().factor;
      exps.push_back(group->exponents(s.front()));
    }
    if (!factor) throw Error(ErrorCode::invalid_parameter, "peripheral generated by the identity");
    if (!group->factor(*factor).quotient(exps).is_trivial())
      throw Error(ErrorCode::invalid_parameter,
                  "peripheral generated by '" + words.front() + "' is a proper subgroup of a free factor");
    factors.push_back(*factor);
  }
  return std::make_shared<const RelHypPair>(std::move(group), std::move(factors));
}

std::shared_ptr<const RelHypPair> make_rel_hyp_pair(std::shared_ptr<const GroupOracle> group,
                                                    std::vector<std::size_t> factors) {
  return std::make_shared<const RelHypPair>(std::move(group), std::move(factors));
}

// ---------------------------------------------------------------------------
// Fillings

GroupElement FillingData::project(const GroupElement& g) const {
  const auto& src = source->group();
  const auto& dst = quotient->group();
  GroupElement out;
  for (const auto& s : src.syllables(g))
    out = dst.multiply(out, dst.factor_element(s.factor, src.exponents(s)));
  return out;
}

FillingData make_filling(std::shared_ptr<const RelHypPair> pair,
                         const std::vector<std::vector<GroupElement>>& kernels) {
  const auto& g = pair->group();
  if (kernels.size() > pair->peripheral_count())
    throw Error(ErrorCode::invalid_parameter, "more kernel lists than peripherals");
  std::vector<AbelianFactor> factors = g.factors();
  std::vector<std::vector<GroupElement>> ks(pair->peripheral_count());
  for (std::size_t p = 0; p < kernels.size(); ++p) {
    const auto& per = pair->peripheral(p);
    std::vector<std::vector<Int>> exps;
    for (const auto& k : kernels[p]) {
      if (!per.contains(k))
        throw Error(ErrorCode::kernel_not_in_peripheral,
                    "'" + g.format(k) + "' is not in peripheral " + per.name());
      if (k.is_identity()) continue;
      exps.push_back(g.exponents(g.syllables(k).front()));
      ks[p].push_back(k);
    }
    factors[per.factor()] = g.factor(per.factor()).quotient(exps);
  }
  auto quotient_group = std::make_shared<const GroupOracle>(
      GroupKind::filled_quotient, std::move(factors), g.letter_names());
  std::vector<std::size_t> pf;
  for (const auto& p : pair->peripherals()) pf.push_back(p.factor());
  FillingData fd;
  fd.source = std::move(pair);
  fd.quotient = std::make_shared<const RelHypPair>(std::move(quotient_group), std::move(pf));
  fd.kernels = std::move(ks);
  return fd;
}

FillingData make_power_filling(std::shared_ptr<const RelHypPair> pair,
                               const std::vector<Int>& exponents) {
  const auto& g = pair->group();
  std::vector<std::vector<GroupElement>> kernels;
  for (std::size_t p = 0; p < exponents.size() && p < pair->peripheral_count(); ++p) {
    const auto f = pair->peripheral(p).factor();
    kernels.push_back({g.power(g.letter(g.factor_first_letter(f)), exponents[p])});
  }
  return make_filling(std::move(pair), kernels);
}

}  // namespace rhfill
