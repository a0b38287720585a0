#include "rhfill/family.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "rhfill/errors.hpp"
#include "rhfill/parallel.hpp"

namespace rhfill {

namespace {

const Json& require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::schema_error, where + "." + key + " is missing");
  return j.at(key);
}

GroupElement parse_word(const GroupOracle& grp, const Json& j, const std::string& where) {
  if (!j.is_string()) throw Error(ErrorCode::schema_error, where + " must be a word string");
  try {
    return grp.parse(j.get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::schema_error, where + ": " + e.what());
  }
}

// Decimal strings ("-1.5", "2e-3") or ratios ("1/3").  from_chars rounds the
// exact decimal value once, so strings round-trip bit for bit.
double decimal_from_string(const std::string& s, const std::string& where) {
  auto parse = [&](std::string_view t) {
    double v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size() || t.empty())
      throw Error(ErrorCode::schema_error, where + ": '" + s + "' is not a decimal number");
    return v;
  };
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse(s);
  const double den = parse(std::string_view(s).substr(slash + 1));
  if (den == 0) throw Error(ErrorCode::schema_error, where + ": zero denominator in '" + s + "'");
  return parse(std::string_view(s).substr(0, slash)) / den;
}

std::string decimal_to_string(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::schema_error, where + " must be a square matrix");
  const auto d = static_cast<Eigen::Index>(j.size());
  Matrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw Error(ErrorCode::schema_error, where + " must be a square matrix");
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto& x = row[static_cast<std::size_t>(c)];
      const std::string at = where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
      if (x.is_number()) m(r, c) = x.get<double>();
      else if (x.is_string()) m(r, c) = decimal_from_string(x.get<std::string>(), at);
      else throw Error(ErrorCode::schema_error, at + " must be a decimal string or a number");
    }
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(decimal_to_string(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

Json margin_json(double m) { return std::isfinite(m) ? Json(m) : Json(nullptr); }

}  // namespace

Matrix unimodular(const Matrix& m) {
  const double det = std::abs(m.determinant());
  if (!(det > 0)) throw Error(ErrorCode::invalid_parameter, "singular matrix");
  return m / std::pow(det, 1.0 / static_cast<double>(m.rows()));
}

double psl_distance(const Matrix& x, const Matrix& y) { return std::min((x - y).norm(), (x + y).norm()); }

std::shared_ptr<const RelHypPair> free_pair_of_rank_two() {
  return make_rel_hyp_pair(make_oracle({GroupKind::free, 2, 0, {}}), std::vector<std::size_t>{0, 1});
}

Representation representation_from_json(std::shared_ptr<const GroupOracle> group, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::schema_error, "a representation maps letter names to matrices");
  std::vector<Matrix> gens;
  for (const auto& name : group->letter_names()) gens.push_back(matrix_from_json(require(j, name, "representation"), "representation." + name));
  for (std::size_t i = 1; i < gens.size(); ++i)
    if (gens[i].rows() != gens[0].rows()) throw Error(ErrorCode::schema_error, "representation matrices differ in size");
  return Representation(std::move(group), std::move(gens));
}

Json representation_to_json(const Representation& rep) {
  Json j = Json::object();
  for (std::size_t i = 0; i < rep.generators().size(); ++i) j[rep.group().letter_name(i)] = matrix_to_json(rep.generators()[i]);
  return j;
}

// ---------------------------------------------------------------------------

Int FamilyMember::peripheral_order(std::size_t p) const {
  const auto f = filling.source->peripheral(p).factor();
  return filling.quotient_oracle().factor(f).order();
}

RepFamily::RepFamily(std::shared_ptr<const RelHypPair> pair, Representation base)
    : pair_(std::move(pair)), base_(std::move(base)) {}

void RepFamily::add_member(Int n, Representation rep, std::vector<std::vector<GroupElement>> kernels) {
  const auto& grp = pair_->group();
  if (rep.dim() != base_.dim()) throw Error(ErrorCode::invalid_parameter, "member dimension differs from the base");
  kernels.resize(pair_->peripheral_count());
  for (const auto& ks : kernels)
    for (const auto& k : ks) {
      const Matrix m = unimodular(rep.image(k));
      const double err = psl_distance(m, Matrix::Identity(m.rows(), m.cols()));
      if (!(err <= kKernelTolerance))
        throw Error(ErrorCode::invalid_parameter, "declared kernel element " + grp.format(k) + " of index " +
                                                      std::to_string(n) + " is not the identity (deviation " +
                                                      std::to_string(err) + ")");
    }
  auto filling = make_filling(pair_, kernels);
  members_.push_back(FamilyMember{n, std::move(rep), std::move(kernels), std::move(filling)});
}

RepFamily RepFamily::sanov_elliptic(double lambda, const std::vector<Int>& ns) {
  if (!(lambda >= 2)) throw Error(ErrorCode::invalid_parameter, "the Schottky parameter must be at least 2");
  auto pair = free_pair_of_rank_two();
  const auto& grp = pair->group();
  Matrix a(2, 2), b(2, 2);
  a << 1, lambda, 0, 1;
  b << 1, 0, lambda, 1;
  RepFamily fam(pair, Representation(pair->group_ptr(), {a, b}));
  for (Int n : ns) {
    if (n < 2) throw Error(ErrorCode::invalid_parameter, "filling indices must be at least 2");
    const double e = (2 / lambda) * (1 - std::cos(std::numbers::pi / static_cast<double>(n)));
    Matrix l(2, 2), u(2, 2);
    l << 1, 0, -e, 1;
    u << 1, -e, 0, 1;
    fam.add_member(n, Representation(pair->group_ptr(), {a * l, u * b}),
                   {{grp.power(grp.letter(0), n)}, {grp.power(grp.letter(1), n)}});
  }
  return fam;
}

RepFamily RepFamily::constant(std::shared_ptr<const RelHypPair> pair, Representation base, const std::vector<Int>& ns) {
  RepFamily fam(pair, base);
  for (Int n : ns) fam.add_member(n, base, {});
  return fam;
}

Json RepFamily::to_json() const {
  const auto& grp = pair_->group();
  Json ms = Json::array();
  for (const auto& m : members_) {
    Json ks = Json::array();
    for (const auto& per : m.kernels) {
      Json k = Json::array();
      for (const auto& x : per) k.push_back(grp.format(x));
      ks.push_back(k);
    }
    ms.push_back(Json{{"n", m.n}, {"generators", representation_to_json(m.rep)}, {"kernels", ks}});
  }
  return Json{{"base", representation_to_json(base_)}, {"members", ms}};
}

RepFamily RepFamily::from_json(std::shared_ptr<const RelHypPair> pair, const Json& j) {
  if (j.is_object() && j.contains("builtin")) {
    if (j["builtin"] != "sanov-elliptic")
      throw Error(ErrorCode::schema_error, "family.builtin must be 'sanov-elliptic'");
    const double lambda = j.value("lambda", 3.0);
    const auto& idx = require(j, "indices", "family");
    if (!idx.is_array()) throw Error(ErrorCode::schema_error, "family.indices must be an array of integers");
    std::vector<Int> ns;
    for (const auto& x : idx) {
      if (!x.is_number_integer()) throw Error(ErrorCode::schema_error, "family.indices must be an array of integers");
      ns.push_back(x.get<Int>());
    }
    return sanov_elliptic(lambda, ns);
  }
  const auto& grp = pair->group();
  RepFamily fam(pair, representation_from_json(pair->group_ptr(), require(j, "base", "family")));
  if (j.contains("members")) {
    for (std::size_t i = 0; i < j["members"].size(); ++i) {
      const auto& m = j["members"][i];
      const std::string where = "family.members[" + std::to_string(i) + "]";
      const auto& n = require(m, "n", where);
      if (!n.is_number_integer()) throw Error(ErrorCode::schema_error, where + ".n must be an integer");
      std::vector<std::vector<GroupElement>> ks;
      if (m.contains("kernels")) {
        for (std::size_t p = 0; p < m["kernels"].size(); ++p) {
          ks.emplace_back();
          for (const auto& w : m["kernels"][p])
            ks.back().push_back(parse_word(grp, w, where + ".kernels[" + std::to_string(p) + "]"));
        }
      }
      try {
        fam.add_member(n.get<Int>(), representation_from_json(pair->group_ptr(), require(m, "generators", where)), ks);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kernel_not_in_peripheral)
          throw Error(ErrorCode::schema_error, where + ".kernels: " + e.what());
        throw;
      }
    }
  }
  return fam;
}

// ---------------------------------------------------------------------------
// EDF versus peripheral stability

EdfQuery sanov_edf_query(int peripheral, double u_radius, double k_radius) {
  const double half_pi = std::numbers::pi / 2;
  const double fixed = peripheral == 0 ? 0 : half_pi, other = peripheral == 0 ? half_pi : 0;
  EdfQuery q;
  q.name = std::string(peripheral == 0 ? "a" : "b") + "-cusp";
  q.peripheral = peripheral;
  q.U.balls.push_back({Flag::line(fixed), u_radius});
  q.K.balls.push_back({Flag::line(other), k_radius});
  q.F.push_back(GroupElement{});
  return q;
}

bool EdfReport::edf_holds() const {
  if (!separation.pass() || !base_hypothesis.pass()) return false;
  for (const auto& r : rows)
    if (r.edf != "pass") return false;
  return true;
}

bool EdfReport::stability_fails_somewhere() const {
  for (const auto& r : rows)
    if (r.stability == "fail") return true;
  return false;
}

Json EdfReport::to_json() const {
  Json rs = Json::array();
  for (const auto& r : rows)
    rs.push_back(Json{{"n", r.n},
                      {"order", r.order},
                      {"edf", r.edf},
                      {"edf_margin", margin_json(r.edf_margin)},
                      {"edf_checked", r.edf_checked},
                      {"edf_witness", r.edf_witness},
                      {"peripheral_stability", r.stability},
                      {"stability_margin", margin_json(r.stability_margin)},
                      {"stability_checked", r.stability_checked},
                      {"stability_witness", r.stability_witness}});
  return Json{{"query", query},
              {"depth", depth},
              {"verdict", edf_holds() ? "pass" : "fail"},
              {"checks", Json::array({separation.to_json(), base_hypothesis.to_json()})},
              {"rows", rs}};
}

namespace {

struct ElementVerdict {
  std::string verdict = "pass";
  double margin = std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  Json witness;
};

ElementVerdict test_elements(const Representation& rep, const std::vector<GroupElement>& xs, const EdfQuery& q) {
  std::vector<Containment> res(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { res[i] = image_contained(ProjectiveMatrix(rep.image(xs[i])), q.K, 0, q.U); });
  ElementVerdict v;
  v.checked = xs.size();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    v.margin = std::min(v.margin, res[i].margin);
    if (res[i].verdict == Containment::Verdict::inside) continue;
    const bool out = res[i].verdict == Containment::Verdict::outside;
    if (out && v.verdict != "fail") {
      v.verdict = "fail";
      v.witness = Json{{"element", rep.group().format(xs[i])}, {"margin", res[i].margin}};
    } else if (!out && v.verdict == "pass") {
      v.verdict = "inconclusive";
      v.witness = Json{{"element", rep.group().format(xs[i])}, {"margin", res[i].margin}};
    }
  }
  return v;
}

// P - F within the peripheral word ball.
std::vector<GroupElement> peripheral_ball_minus(const GroupOracle& grp, std::size_t f, Int radius,
                                                const std::vector<GroupElement>& F) {
  std::vector<GroupElement> out;
  auto keep = [&](GroupElement x) {
    if (std::find(F.begin(), F.end(), x) == F.end()) out.push_back(std::move(x));
  };
  keep(grp.identity());
  for (const auto& c : grp.factor(f).sphere_ball(radius)) keep(grp.from_coords(f, c));
  return out;
}

}  // namespace

EdfReport edf_condition_check(const RepFamily& family, const EdfQuery& query, Int depth) {
  const auto& pair = family.pair();
  const auto& grp = pair.group();
  if (query.peripheral < 0 || static_cast<std::size_t>(query.peripheral) >= pair.peripheral_count())
    throw Error(ErrorCode::invalid_parameter, "EDF query references a missing peripheral");
  const auto& per = pair.peripheral(query.peripheral);
  for (const auto& x : query.F)
    if (!per.contains(x)) throw Error(ErrorCode::invalid_parameter, "F must lie in the peripheral");
  if (query.U.balls.empty() || query.K.balls.empty())
    throw Error(ErrorCode::invalid_parameter, "EDF queries need nonempty U and K");
  const auto f = per.factor();

  EdfReport r;
  r.query = query.name;
  r.depth = depth;
  for (const auto& k : query.K.balls)
    for (const auto& u : query.U.balls)
      r.separation.record(flag_distance(k.center, u.center) - k.radius - u.radius, [&] {
        return Json{{"K_center", flag_to_json(k.center)}, {"U_center", flag_to_json(u.center)}};
      });

  const auto base_elems = peripheral_ball_minus(grp, f, depth, query.F);
  {
    const auto v = test_elements(family.base(), base_elems, query);
    r.base_hypothesis.checked = v.checked;
    r.base_hypothesis.worst_margin = v.margin;
    if (v.verdict != "pass") {
      r.base_hypothesis.violations = 1;
      r.base_hypothesis.witnesses.push_back(v.witness);
    }
  }

  for (const auto& m : family.members()) {
    EdfRow row;
    row.n = m.n;
    row.order = m.peripheral_order(static_cast<std::size_t>(query.peripheral));
    const auto& fq = m.filling.quotient_oracle().factor(f);

    // sigma_n(P) - sigma_n(F), one preimage per element of the finite image.
    std::vector<GroupElement> edf_elems;
    if (row.order > 0) {
      std::vector<GroupElement> fimg;
      for (const auto& x : query.F) fimg.push_back(m.filling.project(x));
      std::vector<Int> coords(fq.moduli().size(), 0);
      for (Int i = 0; i < row.order; ++i) {
        const auto x = grp.factor_element(f, fq.preimage(coords));
        if (std::find(fimg.begin(), fimg.end(), m.filling.project(x)) == fimg.end()) edf_elems.push_back(x);
        for (std::size_t k = 0; k < coords.size(); ++k) {
          if (++coords[k] < fq.moduli()[k]) break;
          coords[k] = 0;
        }
      }
    } else {
      edf_elems = base_elems;
    }
    const auto e = test_elements(m.rep, edf_elems, query);
    row.edf = e.verdict == "pass" && row.order == 0 ? "inconclusive" : e.verdict;
    row.edf_margin = e.margin;
    row.edf_checked = e.checked;
    row.edf_witness = e.witness;

    const auto s = test_elements(m.rep, peripheral_ball_minus(grp, f, std::max(depth, row.order), query.F), query);
    row.stability = s.verdict;
    row.stability_margin = s.margin;
    row.stability_checked = s.checked;
    row.stability_witness = s.witness;
    r.rows.push_back(std::move(row));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Chabauty windows

bool ChabautyTable::decreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].distance() < rows[i - 1].distance())) return false;
  return !rows.empty();
}

Json ChabautyTable::to_json() const {
  Json rs = Json::array();
  for (const auto& r : rows)
    rs.push_back(Json{{"n", r.n},
                      {"a_side", r.a_side},
                      {"b_side", r.b_side},
                      {"distance", r.distance()},
                      {"base_points", r.base_points},
                      {"member_points", r.member_points},
                      {"generator_deviation", r.generator_deviation}});
  return Json{{"ball_radius", ball_radius},
              {"depth", depth},
              {"partner_depth", partner_depth},
              {"restriction", peripheral < 0 ? Json("full group") : Json(peripheral)},
              {"decreasing", decreasing()},
              {"rows", rs}};
}

namespace {

struct MatrixCloud {
  std::vector<Matrix> mats;      // unimodular images
  std::vector<double> norms;
  std::vector<std::size_t> order;  // indices sorted by norm

  explicit MatrixCloud(std::vector<Matrix> m) : mats(std::move(m)) {
    for (const auto& x : mats) norms.push_back(x.norm());
    order.resize(mats.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return norms[a] < norms[b]; });
  }

  // Exact nearest distance; | |x| - |y| | <= d(x, y) prunes the scan.
  double nearest(const Matrix& x, double bound) const {
    const double nx = x.norm();
    auto it = std::lower_bound(order.begin(), order.end(), nx, [&](std::size_t i, double v) { return norms[i] < v; });
    double best = bound;
    for (auto up = it; up != order.end() && norms[*up] - nx <= best; ++up) best = std::min(best, psl_distance(x, mats[*up]));
    for (auto dn = it; dn != order.begin();) {
      --dn;
      if (nx - norms[*dn] > best) break;
      best = std::min(best, psl_distance(x, mats[*dn]));
    }
    return best;
  }
};

}  // namespace

ChabautyTable chabauty_check(const RepFamily& family, double ball_radius, Int depth, int peripheral, Int partner_depth) {
  if (depth < 1) throw Error(ErrorCode::invalid_parameter, "word depth must be at least 1");
  if (partner_depth < 0) partner_depth = depth;
  if (partner_depth < depth) throw Error(ErrorCode::invalid_parameter, "partner depth must be at least the word depth");
  const auto& pair = family.pair();
  const auto& grp = pair.group();
  if (peripheral >= static_cast<int>(pair.peripheral_count()))
    throw Error(ErrorCode::invalid_parameter, "Chabauty restriction references a missing peripheral");

  // Elements ordered by length, so the query set is a prefix.
  std::vector<GroupElement> elems;
  std::size_t query_count = 0;
  if (peripheral < 0) {
    for (const auto& e : enumerate_ball_tree(grp, partner_depth)) {
      if (e.length <= depth) ++query_count;
      elems.push_back(e.element);
    }
  } else {
    const auto f = pair.peripheral(peripheral).factor();
    elems.push_back(grp.identity());
    for (const auto& c : grp.factor(f).sphere_ball(partner_depth)) {
      elems.push_back(grp.from_coords(f, c));
    }
    query_count = 1 + grp.factor(f).sphere_ball(depth).size();
  }

  auto images = [&](const Representation& rep) {
    std::vector<Matrix> out(elems.size());
    parallel_for(elems.size(), [&](std::size_t i) { out[i] = unimodular(rep.image(elems[i])); });
    return MatrixCloud(std::move(out));
  };
  const MatrixCloud base = images(family.base());

  ChabautyTable t;
  t.ball_radius = ball_radius;
  t.depth = depth;
  t.partner_depth = partner_depth;
  t.peripheral = peripheral;
  for (const auto& m : family.members()) {
    const MatrixCloud mem = images(m.rep);
    ChabautyRow row;
    row.n = m.n;
    for (std::size_t i = 0; i < query_count; ++i) {
      const double same = psl_distance(base.mats[i], mem.mats[i]);
      if (base.norms[i] <= ball_radius) {
        ++row.base_points;
        row.a_side = std::max(row.a_side, mem.nearest(base.mats[i], same));
      }
      if (mem.norms[i] <= ball_radius) {
        ++row.member_points;
        row.b_side = std::max(row.b_side, base.nearest(mem.mats[i], same));
      }
    }
    for (std::size_t l = 0; l < m.rep.generators().size(); ++l)
      row.generator_deviation = std::max(row.generator_deviation, psl_distance(unimodular(m.rep.generators()[l]),
                                                                               unimodular(family.base().generators()[l])));
    t.rows.push_back(row);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Limit sets

bool LimitSetTable::decreasing() const {
  const LimitSetRow* prev = nullptr;
  for (const auto& r : rows) {
    if (!r.screened) continue;
    if (prev && !(r.hausdorff < prev->hausdorff)) return false;
    prev = &r;
  }
  return prev != nullptr;
}

Json LimitSetTable::to_json() const {
  Json rs = Json::array();
  for (const auto& r : rows) {
    Json j{{"n", r.n}, {"screened", r.screened}, {"points", r.points},
           {"d_hausdorff", r.screened ? Json(r.hausdorff) : Json(nullptr)}};
    if (!r.note.empty()) j["note"] = r.note;
    rs.push_back(j);
  }
  return Json{{"depth", depth}, {"base_points", base_points}, {"decreasing", decreasing()}, {"rows", rs}};
}

namespace {

std::vector<GroupElement> screening_words(const GroupOracle& grp) {
  GroupElement w1 = grp.identity(), w2 = grp.identity();
  for (std::size_t f = 0; f < grp.factor_count(); ++f) {
    const auto x = grp.letter(grp.factor_first_letter(f));
    w1 = grp.multiply(w1, x);
    w2 = grp.multiply(w2, f + 1 == grp.factor_count() && f > 0 ? grp.inverse(x) : x);
  }
  return {w1, w2};
}

std::string screen(const Representation& rep, const std::vector<GroupElement>& words, const ParabolicType& type) {
  constexpr int kPowers = 5;
  for (const auto& w : words) {
    try {
      const ProjectiveMatrix m(rep.image(w));
      std::vector<ProjectiveMatrix> seq{m};
      for (int k = 2; k <= kPowers; ++k) seq.push_back(seq.back() * m);
      const auto c = q_divergence(seq, type);
      if (c.verdict != DivergenceVerdict::divergent)
        return "powers of " + rep.group().format(w) + " are " + std::string(to_string(c.verdict));
    } catch (const Error& e) {
      return "powers of " + rep.group().format(w) + ": " + e.what();
    }
  }
  return {};
}

}  // namespace

LimitSetTable limit_set_convergence(const RepFamily& family, Int depth, const ParabolicType& type, std::size_t cap) {
  const auto& grp = family.pair().group();
  const auto words = screening_words(grp);
  if (auto why = screen(family.base(), words, type); !why.empty())
    throw Error(ErrorCode::divergence_screening_failed, "base representation: " + why);
  LimitSetTable t;
  t.depth = depth;
  std::vector<const Representation*> reps{&family.base()};
  std::vector<std::size_t> slot;
  for (const auto& m : family.members()) {
    LimitSetRow row;
    row.n = m.n;
    row.note = screen(m.rep, words, type);
    row.screened = row.note.empty();
    if (row.screened) {
      slot.push_back(reps.size());
      reps.push_back(&m.rep);
    } else {
      slot.push_back(0);
      row.note = std::string(to_string(ErrorCode::divergence_screening_failed)) + ": " + row.note;
    }
    t.rows.push_back(row);
  }
  const auto clouds = q_limit_sets(reps, depth, type, cap);
  t.base_points = clouds[0].size();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (!t.rows[i].screened) continue;
    const auto& c = clouds[slot[i]];
    t.rows[i].points = c.size();
    t.rows[i].hausdorff = hausdorff_distance(c, clouds[0]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Fiber consistency

bool FiberReport::pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

Json FiberReport::to_json() const {
  Json rs = Json::array();
  for (const auto& r : rows)
    rs.push_back(Json{{"label", r.label},
                      {"expect_same", r.expect_same},
                      {"distance", r.distance},
                      {"error_estimate", r.error_estimate},
                      {"exponent", r.exponent},
                      {"verdict", r.pass ? "pass" : "fail"}});
  return Json{{"verdict", pass() ? "pass" : "fail"},
              {"same_tolerance", same_tolerance},
              {"distinct_threshold", distinct_threshold},
              {"rows", rs}};
}

namespace {

struct LimitEstimate {
  std::optional<Flag> flag;
  double drift = 0;
  Int exponent = 0;
};

LimitEstimate estimate_limit(const Representation& rep, const SequenceSpec& s, const ParabolicType& type, Int max_exp) {
  LimitEstimate out;
  const Matrix pre = rep.image(s.prefix), suf = rep.image(s.suffix);
  ProjectiveMatrix r(rep.image(s.repeat));
  ProjectiveMatrix pw = r;
  for (Int k = 1; k <= max_exp; k *= 2) {
    try {
      if (k > 1) pw = pw * pw;
      const Flag f = attracting_flag(ProjectiveMatrix(pre * pw.matrix() * suf), type);
      if (out.flag) out.drift = flag_distance(f, *out.flag);
      out.flag = f;
      out.exponent = k;
    } catch (const Error&) {
      break;
    }
  }
  return out;
}

}  // namespace

FiberReport fiber_consistency_check(const Representation& rep, const std::vector<FiberPair>& pairs,
                                    const ParabolicType& type, Int max_exponent) {
  FiberReport rep_out;
  for (const auto& p : pairs) {
    FiberRow row;
    row.label = p.label;
    row.expect_same = p.expect_same;
    const auto x = estimate_limit(rep, p.first, type, max_exponent);
    const auto y = estimate_limit(rep, p.second, type, max_exponent);
    if (x.flag && y.flag) {
      row.distance = flag_distance(*x.flag, *y.flag);
      row.error_estimate = std::max(x.drift, y.drift);
      row.exponent = std::min(x.exponent, y.exponent);
      row.pass = p.expect_same ? row.distance < rep_out.same_tolerance : row.distance > rep_out.distinct_threshold;
    } else {
      row.distance = std::numeric_limits<double>::quiet_NaN();
    }
    rep_out.rows.push_back(row);
  }
  return rep_out;
}

}  // namespace rhfill
