#include "rhfill/flag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rhfill/errors.hpp"

namespace rhfill {

namespace {

Matrix orthonormal_columns(const Matrix& columns, int needed) {
  // Modified Gram-Schmidt keeps the column order, hence the nesting.
  const auto d = columns.rows();
  Matrix q(d, needed);
  for (int j = 0; j < needed; ++j) {
    Vector v = columns.col(j);
    const double scale = std::max(columns.col(j).norm(), 1e-300);
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
    const double n = v.norm();
    if (n <= 1e-12 * scale) throw Error(ErrorCode::invalid_parameter, "flag columns are linearly dependent");
    q.col(j) = v / n;
  }
  return q;
}

Matrix matrix_power(const Matrix& m, Int n) {
  Matrix base = n < 0 ? Matrix(m.inverse()) : m;
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  for (Int e = n < 0 ? -n : n; e > 0; e >>= 1) {
    if (e & 1) out = out * base;
    if (e > 1) base = base * base;
  }
  return out;
}

Matrix normalised(const Matrix& m) {
  Matrix out = m / m.norm();
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double v = out.data()[k];
    if (v == 0) continue;
    if (v < 0) out = -out;
    break;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ProjectiveMatrix::ProjectiveMatrix(Matrix m) {
  if (m.rows() != m.cols() || m.rows() < 2) throw Error(ErrorCode::invalid_parameter, "need a square matrix of size >= 2");
  if (!m.allFinite()) throw Error(ErrorCode::invalid_parameter, "matrix has non-finite entries");
  const double norm = m.norm();
  if (norm == 0) throw Error(ErrorCode::invalid_parameter, "zero matrix");
  // Row-major first nonzero entry, matching how matrices are written.
  m_ = m.transpose();
  m_ = normalised(m_).transpose();
  Eigen::JacobiSVD<Matrix> svd(m_);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= kFlagTol.invertible * s(0)) throw Error(ErrorCode::invalid_parameter, "matrix is not invertible");
}

ProjectiveMatrix ProjectiveMatrix::inverse() const { return ProjectiveMatrix(m_.inverse()); }

ProjectiveMatrix ProjectiveMatrix::power(Int n) const {
  // Normalise along the way so large powers do not overflow.
  Matrix base = n < 0 ? Matrix(m_.inverse()) : m_;
  Matrix out = Matrix::Identity(m_.rows(), m_.cols());
  for (Int e = n < 0 ? -n : n; e > 0; e >>= 1) {
    if (e & 1) out = (out * base).eval() / (out * base).norm();
    if (e > 1) base = (base * base).eval() / (base * base).norm();
  }
  return ProjectiveMatrix(out);
}

Vector ProjectiveMatrix::singular_values() const { return Eigen::JacobiSVD<Matrix>(m_).singularValues(); }

// ---------------------------------------------------------------------------

ParabolicType::ParabolicType(int d, std::vector<int> indices) : d_(d), indices_(std::move(indices)) {
  if (d < 2) throw Error(ErrorCode::invalid_parameter, "dimension must be at least 2");
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  if (indices_.empty()) throw Error(ErrorCode::invalid_parameter, "parabolic type needs at least one index");
  if (indices_.front() < 1 || indices_.back() > d - 1)
    throw Error(ErrorCode::invalid_parameter, "type indices must lie in 1..d-1");
}

ParabolicType ParabolicType::projective(int d) { return ParabolicType(d, {1, d - 1}); }

ParabolicType ParabolicType::full(int d) {
  std::vector<int> all(static_cast<std::size_t>(d - 1));
  for (int i = 1; i < d; ++i) all[static_cast<std::size_t>(i - 1)] = i;
  return ParabolicType(d, std::move(all));
}

bool ParabolicType::symmetric() const {
  return std::all_of(indices_.begin(), indices_.end(),
                     [&](int i) { return std::binary_search(indices_.begin(), indices_.end(), d_ - i); });
}

std::string ParabolicType::describe() const {
  std::ostringstream os;
  os << "d=" << d_ << " {";
  for (std::size_t k = 0; k < indices_.size(); ++k) os << (k ? "," : "") << indices_[k];
  os << "}";
  return os.str();
}

// ---------------------------------------------------------------------------

Flag::Flag(ParabolicType type, const Matrix& columns) : type_(std::move(type)) {
  const int k = type_.indices().back();
  if (columns.rows() != type_.dim() || columns.cols() < k)
    throw Error(ErrorCode::invalid_parameter, "flag basis has the wrong shape");
  basis_ = orthonormal_columns(columns, k);
}

Flag Flag::from_subspaces(ParabolicType type, const std::vector<Matrix>& spaces) {
  const auto& idx = type.indices();
  if (spaces.size() != idx.size()) throw Error(ErrorCode::invalid_parameter, "one subspace per type index");
  const int d = type.dim();
  std::vector<Matrix> bases;
  for (std::size_t s = 0; s < spaces.size(); ++s) {
    if (spaces[s].rows() != d || spaces[s].cols() < idx[s])
      throw Error(ErrorCode::invalid_parameter, "subspace has the wrong shape");
    Eigen::JacobiSVD<Matrix> svd(spaces[s], Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv(idx[s] - 1) <= 1e-12 * sv(0) || (sv.size() > idx[s] && sv(idx[s]) > 1e-12 * sv(0)))
      throw Error(ErrorCode::invalid_parameter, "subspace does not have dimension " + std::to_string(idx[s]));
    bases.push_back(svd.matrixU().leftCols(idx[s]));
  }
  // Nesting: V_i must be fixed by the projector onto V_j.
  for (std::size_t s = 0; s + 1 < bases.size(); ++s) {
    const Matrix& next = bases[s + 1];
    const double leak = (bases[s] - next * (next.transpose() * bases[s])).norm();
    if (leak > kFlagTol.nesting) throw Error(ErrorCode::invalid_parameter, "subspaces are not nested");
  }
  // Extend the smallest basis step by step through the larger ones.
  Matrix cols(d, idx.back());
  int filled = 0;
  for (const auto& b : bases) {
    for (int j = 0; j < b.cols() && filled < b.cols(); ++j) {
      Vector v = b.col(j);
      for (int k = 0; k < filled; ++k) v -= cols.col(k).dot(v) * cols.col(k);
      if (v.norm() > 1e-6) cols.col(filled++) = v.normalized();
    }
  }
  return Flag(std::move(type), cols);
}

Flag Flag::line(double theta) {
  Matrix c(2, 1);
  c << std::cos(theta), std::sin(theta);
  return Flag(ParabolicType(2, {1}), c);
}

Matrix Flag::projector(int i) const {
  const Matrix b = basis(i);
  return b * b.transpose();
}

Flag Flag::apply(const ProjectiveMatrix& g) const {
  if (g.dim() != dim()) throw Error(ErrorCode::type_mismatch, "matrix and flag dimensions differ");
  return Flag(type_, g.matrix() * basis_);
}

double Flag::angle() const {
  if (dim() != 2) throw Error(ErrorCode::type_mismatch, "angle is defined for lines in RP^1");
  double t = std::atan2(basis_(1, 0), basis_(0, 0));
  if (t < 0) t += std::numbers::pi;
  if (t >= std::numbers::pi) t -= std::numbers::pi;
  return t;
}

// ---------------------------------------------------------------------------

std::vector<double> singular_gaps(const ProjectiveMatrix& g) {
  const auto s = g.singular_values();
  std::vector<double> out;
  for (Eigen::Index i = 0; i + 1 < s.size(); ++i)
    out.push_back(s(i + 1) > 0 ? s(i) / s(i + 1) : std::numeric_limits<double>::infinity());
  return out;
}

Flag attracting_flag(const ProjectiveMatrix& g, const ParabolicType& type) {
  if (g.dim() != type.dim()) throw Error(ErrorCode::type_mismatch, "matrix and type dimensions differ");
  Eigen::JacobiSVD<Matrix> svd(g.matrix(), Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  for (int i : type.indices()) {
    const double gap = s(i) > 0 ? s(i - 1) / s(i) : std::numeric_limits<double>::infinity();
    if (!(gap > kFlagTol.gap))
      throw Error(ErrorCode::gap_too_small, "singular value gap " + std::to_string(i) + " is " + std::to_string(gap));
  }
  return Flag(type, svd.matrixU().leftCols(type.indices().back()));
}

Transversality is_transverse(const Flag& xi, const Flag& eta) {
  if (!(xi.type() == eta.type())) throw Error(ErrorCode::type_mismatch, "flags have different types");
  const int d = xi.dim();
  Transversality t;
  t.margin = std::numeric_limits<double>::infinity();
  for (int i : xi.type().indices()) {
    const int j = d - i;
    // W_{d-i} is only defined when d-i is part of the type.
    if (!std::binary_search(eta.type().indices().begin(), eta.type().indices().end(), j)) continue;
    Matrix stacked(d, d);
    stacked << xi.basis(i), eta.basis(j);
    const auto s = Eigen::JacobiSVD<Matrix>(stacked).singularValues();
    t.margin = std::min(t.margin, s(d - 1));
  }
  if (!std::isfinite(t.margin))
    throw Error(ErrorCode::type_mismatch, "type has no complementary index pairs");
  t.transverse = t.margin > kFlagTol.transverse;
  return t;
}

double flag_distance(const Flag& xi, const Flag& eta) {
  if (!(xi.type() == eta.type())) throw Error(ErrorCode::type_mismatch, "flags have different types");
  double best = 0;
  for (int i : xi.type().indices()) {
    const Matrix diff = xi.projector(i) - eta.projector(i);
    // Symmetric, so the spectral norm is the largest absolute eigenvalue.
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
    best = std::max(best, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return std::min(best, 1.0);
}

// ---------------------------------------------------------------------------

std::string_view to_string(DivergenceVerdict v) {
  switch (v) {
    case DivergenceVerdict::divergent: return "divergent";
    case DivergenceVerdict::bounded: return "bounded";
    case DivergenceVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

DivergenceCertificate q_divergence(const std::vector<ProjectiveMatrix>& seq, const ParabolicType& type) {
  DivergenceCertificate cert;
  if (seq.empty()) return cert;
  for (const auto& g : seq) {
    const auto all = singular_gaps(g);
    std::vector<double> rel;
    for (int i : type.indices()) rel.push_back(all[static_cast<std::size_t>(i - 1)]);
    cert.gaps.push_back(std::move(rel));
  }
  const std::size_t n = seq.size();
  const std::size_t w = std::min(kFlagTol.tail_window, n);
  const std::size_t tail = n - w;
  auto min_gap = [&](std::size_t k) { return *std::min_element(cert.gaps[k].begin(), cert.gaps[k].end()); };
  auto max_gap = [&](std::size_t k) { return *std::max_element(cert.gaps[k].begin(), cert.gaps[k].end()); };

  bool increasing = w >= 2;
  for (std::size_t k = tail + 1; k < n; ++k)
    for (std::size_t i = 0; i < cert.gaps[k].size(); ++i)
      if (!(cert.gaps[k][i] > cert.gaps[k - 1][i])) increasing = false;
  if (increasing && min_gap(n - 1) > kFlagTol.divergence_gap) {
    cert.verdict = DivergenceVerdict::divergent;
    cert.limit.push_back(attracting_flag(seq.back(), type));
    if (type.symmetric()) cert.inverse_limit.push_back(attracting_flag(seq.back().inverse(), type));
    return cert;
  }
  // Bounded: the tail never exceeds what the sequence reached before it
  // (or everything stays at the trivial gap).
  double head_max = 1;
  for (std::size_t k = 0; k < tail; ++k) head_max = std::max(head_max, max_gap(k));
  double tail_max = 1;
  for (std::size_t k = tail; k < n; ++k) tail_max = std::max(tail_max, max_gap(k));
  if (tail_max <= head_max * (1 + 1e-9) || tail_max <= kFlagTol.gap) cert.verdict = DivergenceVerdict::bounded;
  return cert;
}

// ---------------------------------------------------------------------------

Representation::Representation(std::shared_ptr<const GroupOracle> group, std::vector<Matrix> generators)
    : group_(std::move(group)), generators_(std::move(generators)) {
  if (generators_.size() != group_->letter_count())
    throw Error(ErrorCode::invalid_parameter, "need one matrix per generator (" +
                                                  std::to_string(group_->letter_count()) + ")");
  const auto d = generators_.front().rows();
  for (const auto& m : generators_) {
    if (m.rows() != d || m.cols() != d) throw Error(ErrorCode::invalid_parameter, "generator matrices differ in size");
    ProjectiveMatrix check(m);  // invertibility
  }
  // Matrices of one abelian factor must commute.
  for (std::size_t i = 0; i < generators_.size(); ++i)
    for (std::size_t j = i + 1; j < generators_.size(); ++j)
      if (group_->letter_factor(i) == group_->letter_factor(j)) {
        const Matrix c = generators_[i] * generators_[j] - generators_[j] * generators_[i];
        if (c.norm() > 1e-9 * generators_[i].norm() * generators_[j].norm())
          throw Error(ErrorCode::invalid_parameter, "generators of one abelian factor do not commute");
      }
}

Matrix Representation::image(const GroupElement& g) const {
  Matrix out = Matrix::Identity(dim(), dim());
  for (const auto& s : group_->syllables(g)) {
    const auto exps = group_->exponents(s);
    const auto first = group_->factor_first_letter(s.factor);
    for (std::size_t j = 0; j < exps.size(); ++j)
      if (exps[j] != 0) out = out * matrix_power(generators_[first + j], exps[j]);
  }
  return out;
}

std::vector<Matrix> Representation::generator_images() const {
  std::vector<Matrix> out;
  for (const auto& g : group_->generators()) out.push_back(image(g));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Sort key bounded by flag distance: |P(0,0) - P'(0,0)| <= ||P - P'||.
double sort_key(const Flag& f) { return f.projector(f.type().indices().front())(0, 0); }

void canonicalise(std::vector<Flag>& cloud) {
  if (cloud.empty()) return;
  if (cloud.front().dim() == 2) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < cloud.size(); ++i) order.emplace_back(cloud[i].angle(), i);
    std::sort(order.begin(), order.end());
    std::vector<Flag> out;
    double last = -1;
    for (const auto& [a, i] : order) {
      if (!out.empty() && std::sin(a - last) <= kFlagTol.dedupe) continue;
      out.push_back(cloud[i]);
      last = a;
    }
    // Wrap-around: the last point may coincide with the first.
    if (out.size() > 1 && std::abs(std::sin(out.back().angle() - out.front().angle())) <= kFlagTol.dedupe) out.pop_back();
    cloud = std::move(out);
    return;
  }
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < cloud.size(); ++i) order.emplace_back(sort_key(cloud[i]), i);
  std::sort(order.begin(), order.end());
  std::vector<Flag> out;
  std::vector<double> keys;
  for (const auto& [k, i] : order) {
    bool dup = false;
    for (std::size_t j = out.size(); j-- > 0 && keys[j] >= k - kFlagTol.dedupe;)
      if (flag_distance(out[j], cloud[i]) <= kFlagTol.dedupe) {
        dup = true;
        break;
      }
    if (!dup) {
      out.push_back(cloud[i]);
      keys.push_back(k);
    }
  }
  cloud = std::move(out);
}

}  // namespace

std::vector<std::vector<Flag>> q_limit_sets(const std::vector<const Representation*>& reps, Int depth,
                                            const ParabolicType& type, std::size_t cap) {
  std::vector<std::vector<Flag>> clouds(reps.size());
  if (reps.empty()) return clouds;
  for (const auto* rep : reps) {
    if (rep->dim() != type.dim()) throw Error(ErrorCode::type_mismatch, "representation and type dimensions differ");
    if (&rep->group() != &reps.front()->group() && rep->group().describe() != reps.front()->group().describe())
      throw Error(ErrorCode::type_mismatch, "representations of different groups");
  }
  if (depth < 1) return clouds;
  std::vector<std::vector<Matrix>> gens;
  for (const auto* rep : reps) gens.push_back(rep->generator_images());
  const int d = type.dim();
  std::vector<std::vector<Matrix>> previous(reps.size()), current(reps.size());
  for_each_in_ball(
      reps.front()->group(), depth,
      [&](const GroupElement&, Int len, std::size_t index, std::size_t parent, int gen) {
        for (std::size_t r = 0; r < reps.size(); ++r) {
          if (len == 0) {
            current[r].assign(1, Matrix::Identity(d, d));
            continue;
          }
          if (index == 0) {
            previous[r] = std::move(current[r]);
            current[r].clear();
          }
          Matrix m = previous[r][parent] * gens[r][static_cast<std::size_t>(gen)];
          m /= m.norm();
          Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
          current[r].push_back(std::move(m));
          const auto& s = svd.singularValues();
          bool passes = true;
          for (int i : type.indices())
            if (!(s(i) == 0 || s(i - 1) / s(i) > kFlagTol.gap)) passes = false;
          if (passes) clouds[r].emplace_back(type, svd.matrixU().leftCols(type.indices().back()));
        }
      },
      cap);
  for (auto& c : clouds) canonicalise(c);
  return clouds;
}

std::vector<Flag> q_limit_set(const Representation& rep, Int depth, const ParabolicType& type, std::size_t cap) {
  return std::move(q_limit_sets({&rep}, depth, type, cap).front());
}

double directed_hausdorff(const std::vector<Flag>& a, const std::vector<Flag>& b) {
  if (a.empty()) return 0;
  if (b.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0;
  if (a.front().dim() == 2) {
    std::vector<double> angles;
    for (const auto& f : b) angles.push_back(f.angle());
    std::sort(angles.begin(), angles.end());
    for (const auto& f : a) {
      const double t = f.angle();
      auto it = std::lower_bound(angles.begin(), angles.end(), t);
      // Neighbours on the circle of lines (period pi).
      const double hi = it == angles.end() ? angles.front() + std::numbers::pi : *it;
      const double lo = it == angles.begin() ? angles.back() - std::numbers::pi : *(it - 1);
      const double gap = std::min(hi - t, t - lo);
      worst = std::max(worst, std::sin(std::min(gap, std::numbers::pi / 2)));
    }
    return worst;
  }
  for (const auto& f : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : b) best = std::min(best, flag_distance(f, g));
    worst = std::max(worst, best);
  }
  return worst;
}

double hausdorff_distance(const std::vector<Flag>& a, const std::vector<Flag>& b) {
  if (a.empty() && b.empty()) return 0;
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace rhfill
