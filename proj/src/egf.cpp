#include "rhfill/egf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>

#include "rhfill/errors.hpp"
#include "rhfill/parallel.hpp"
#include "rhfill/random.hpp"

namespace rhfill {

namespace {

bool is_line_type(const ParabolicType& t) { return t.dim() == 2; }

double line_distance(double s, double t) { return std::abs(std::sin(s - t)); }

double dist(const Flag& x, const Flag& y) {
  if (is_line_type(x.type())) return line_distance(x.angle(), y.angle());
  return flag_distance(x, y);
}

// Orthogonal Cayley transform of t K for skew K.
Matrix cayley(const Matrix& k, double t) {
  const Matrix id = Matrix::Identity(k.rows(), k.cols());
  return (id - 0.5 * t * k).inverse() * (id + 0.5 * t * k);
}

Matrix random_skew(int d, Rng& rng) {
  Matrix k(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) k(i, j) = rng.normal();
  return k - k.transpose();
}

// A flag at distance `target` from c along the rotation curve of K (the
// furthest point reached when the curve never gets that far).
Flag perturb_to(const Flag& c, const Matrix& k, double target) {
  auto at = [&](double t) { return c.apply(ProjectiveMatrix(cayley(k, t))); };
  double hi = 1e-3;
  while (hi < 1e3 && flag_distance(at(hi), c) < target) hi *= 2;
  if (hi >= 1e3) return at(hi);
  double lo = 0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (flag_distance(at(mid), c) < target ? lo : hi) = mid;
  }
  return at(hi);
}

double half_width(double radius) { return radius >= 1 ? std::numbers::pi / 2 : std::asin(radius); }

// count points of the closed ball, both boundary points included for lines.
std::vector<Flag> ball_points(const FlagBall& b, std::size_t count, bool boundary_only, Rng& rng) {
  std::vector<Flag> out;
  if (count == 0) return out;
  if (is_line_type(b.center.type())) {
    const double th = b.center.angle(), w = half_width(b.radius);
    if (count == 1) return {b.center};
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(Flag::line(th - w + 2 * w * static_cast<double>(i) / static_cast<double>(count - 1)));
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = boundary_only || i % 2 == 0 ? 1.0 : rng.uniform();
    out.push_back(perturb_to(b.center, random_skew(b.center.dim(), rng), frac * b.radius));
  }
  return out;
}

constexpr std::size_t kBoundarySamples = 64;
constexpr double kSafety = 1.1;

}  // namespace

// ---------------------------------------------------------------------------
// Automata

std::size_t AutomatonGraph::add_vertex(std::string name, VertexLabel label) {
  for (const auto& n : names_)
    if (n == name) throw Error(ErrorCode::invalid_parameter, "duplicate automaton vertex '" + name + "'");
  if (label.is_parabolic()) {
    if (label.peripheral < 0 || static_cast<std::size_t>(label.peripheral) >= pair_->peripheral_count())
      throw Error(ErrorCode::malformed_label,
                  "vertex '" + name + "' references peripheral " + std::to_string(label.peripheral));
    const auto& p = pair_->peripheral(label.peripheral);
    const auto key = p.coset_key(label.element);
    for (const auto& e : label.excluded)
      if (p.coset_key(e) != key)
        throw Error(ErrorCode::malformed_label, "vertex '" + name + "': excluded element " +
                                                    pair_->group().format(e) + " is not in the coset");
    std::sort(label.excluded.begin(), label.excluded.end());
    label.excluded.erase(std::unique(label.excluded.begin(), label.excluded.end()), label.excluded.end());
  } else {
    label.peripheral = -1;
    label.excluded.clear();
  }
  names_.push_back(std::move(name));
  labels_.push_back(std::move(label));
  out_.emplace_back();
  return names_.size() - 1;
}

void AutomatonGraph::add_edge(std::size_t from, std::size_t to) {
  if (from >= size() || to >= size()) throw Error(ErrorCode::invalid_parameter, "edge endpoint out of range");
  auto& o = out_[from];
  if (std::find(o.begin(), o.end(), to) == o.end()) o.push_back(to);
}

std::size_t AutomatonGraph::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw Error(ErrorCode::schema_error, "unknown automaton vertex '" + name + "'");
}

std::vector<GroupElement> AutomatonGraph::label_elements(std::size_t v, Int cutoff) const {
  const auto& l = label(v);
  if (!l.is_parabolic()) return {l.element};
  const auto& grp = pair_->group();
  const auto f = pair_->peripheral(l.peripheral).factor();
  std::vector<GroupElement> out;
  auto push = [&](const GroupElement& x) {
    GroupElement y = grp.multiply(l.element, x);
    if (!std::binary_search(l.excluded.begin(), l.excluded.end(), y)) out.push_back(std::move(y));
  };
  push(grp.identity());
  for (const auto& c : grp.factor(f).sphere_ball(cutoff)) push(grp.from_coords(f, c));
  return out;
}

bool AutomatonGraph::label_complete(std::size_t v, Int cutoff) const {
  const auto& l = label(v);
  if (!l.is_parabolic()) return true;
  const auto& fac = pair_->group().factor(pair_->peripheral(l.peripheral).factor());
  return fac.order() > 0 && fac.sphere_ball(cutoff).size() + 1 >= static_cast<std::size_t>(fac.order());
}

Json AutomatonGraph::to_json() const {
  const auto& grp = pair_->group();
  Json vs = Json::array(), es = Json::array();
  for (std::size_t v = 0; v < size(); ++v) {
    const auto& l = labels_[v];
    Json lj;
    if (l.is_parabolic()) {
      Json ex = Json::array();
      for (const auto& e : l.excluded) ex.push_back(grp.format(e));
      lj = Json{{"kind", "coset"}, {"g", grp.format(l.element)}, {"peripheral", l.peripheral}, {"excluded", ex}};
    } else {
      lj = Json{{"kind", "singleton"}, {"word", grp.format(l.element)}};
    }
    vs.push_back(Json{{"id", names_[v]}, {"label", lj}});
    for (auto w : out_[v]) es.push_back(Json::array({names_[v], names_[w]}));
  }
  return Json{{"vertices", vs}, {"edges", es}};
}

namespace {

std::string id_string(const Json& j, const std::string& field) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw Error(ErrorCode::schema_error, field + " must be a string or an integer");
}

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

}  // namespace

AutomatonGraph AutomatonGraph::from_json(std::shared_ptr<const RelHypPair> pair, const Json& j) {
  AutomatonGraph g(pair);
  const auto& grp = pair->group();
  const auto& vs = require(j, "vertices", "automaton");
  if (!vs.is_array()) throw Error(ErrorCode::schema_error, "automaton.vertices must be an array");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string where = "automaton.vertices[" + std::to_string(i) + "]";
    const auto name = id_string(require(vs[i], "id", where), where + ".id");
    const auto& lj = require(vs[i], "label", where);
    const auto kind = require(lj, "kind", where + ".label");
    VertexLabel l;
    if (kind == "singleton") {
      l.element = parse_word(grp, require(lj, "word", where + ".label"), where + ".label.word");
    } else if (kind == "coset") {
      l.kind = VertexLabel::Kind::coset;
      l.element = parse_word(grp, require(lj, "g", where + ".label"), where + ".label.g");
      const auto& p = require(lj, "peripheral", where + ".label");
      if (!p.is_number_integer()) throw Error(ErrorCode::malformed_label, where + ".label.peripheral must be an integer");
      l.peripheral = p.get<int>();
      if (lj.contains("excluded")) {
        if (!lj["excluded"].is_array()) throw Error(ErrorCode::schema_error, where + ".label.excluded must be an array");
        for (const auto& e : lj["excluded"]) l.excluded.push_back(parse_word(grp, e, where + ".label.excluded"));
      }
    } else {
      throw Error(ErrorCode::malformed_label, where + ".label.kind must be 'singleton' or 'coset'");
    }
    g.add_vertex(name, std::move(l));
  }
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw Error(ErrorCode::schema_error, "automaton.edges must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorCode::schema_error, "automaton edges are [from, to] pairs");
      g.add_edge(g.index_of(id_string(e[0], "edge endpoint")), g.index_of(id_string(e[1], "edge endpoint")));
    }
  }
  return g;
}

Json AutomatonReport::to_json() const {
  return Json{{"verdict", pass() ? "pass" : "fail"}, {"checks", Json::array({outgoing.to_json(), parabolic.to_json()})}};
}

AutomatonReport validate_automaton(const AutomatonGraph& g) {
  AutomatonReport r;
  for (std::size_t v = 0; v < g.size(); ++v)
    r.outgoing.record(static_cast<double>(g.out(v).size()) - 1, [&] { return Json{{"vertex", g.name(v)}}; });

  const auto& pair = g.pair();
  for (std::size_t p = 0; p < pair.peripheral_count(); ++p) {
    const auto& per = pair.peripheral(p);
    std::vector<std::size_t> members;
    std::optional<std::size_t> base;
    for (std::size_t v = 0; v < g.size(); ++v) {
      const auto& l = g.label(v);
      if (!l.is_parabolic() || l.peripheral != static_cast<int>(p)) continue;
      members.push_back(v);
      if (!base && per.coset_key(l.element).is_identity()) base = v;
    }
    r.parabolic.record(base ? 0.0 : -1.0, [&] {
      if (base) return Json{{"peripheral", per.name()}, {"vertex", g.name(*base)}};
      return Json{{"peripheral", per.name()}, {"problem", "no parabolic vertex at the identity coset"}};
    });
    if (members.empty()) continue;
    const std::size_t ref = base ? *base : members.front();
    std::set<std::size_t> ref_out(g.out(ref).begin(), g.out(ref).end());
    for (auto w : members) {
      if (w == ref) continue;
      std::set<std::size_t> wo(g.out(w).begin(), g.out(w).end());
      r.parabolic.record(wo == ref_out ? 0.0 : -1.0, [&] {
        return Json{{"peripheral", per.name()}, {"vertex", g.name(w)}, {"reference", g.name(ref)},
                    {"problem", "out-neighbours differ"}};
      });
    }
  }
  return r;
}

AutomatonGraph ping_pong_automaton(std::shared_ptr<const RelHypPair> pair) {
  if (pair->peripheral_count() != 2)
    throw Error(ErrorCode::invalid_parameter, "the ping-pong automaton needs exactly two peripherals");
  AutomatonGraph g(pair);
  const auto id = pair->group().identity();
  for (int p = 0; p < 2; ++p) {
    VertexLabel l{VertexLabel::Kind::coset, id, p, {id}};
    g.add_vertex(p == 0 ? "v_a" : "v_b", l);
  }
  g.add_edge(0, 1);
  g.add_edge(1, 0);
  return g;
}

// ---------------------------------------------------------------------------
// Flags and ball sets

Json flag_to_json(const Flag& f) {
  if (is_line_type(f.type())) return Json{{"angle", f.angle()}};
  const int k = f.type().indices().back();
  const Matrix b = f.basis(k);
  Json cols = Json::array();
  for (int c = 0; c < k; ++c) {
    Json col = Json::array();
    for (int r = 0; r < b.rows(); ++r) col.push_back(b(r, c));
    cols.push_back(col);
  }
  return Json{{"basis", cols}};
}

Flag flag_from_json(const ParabolicType& type, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::schema_error, "a flag must be an object");
  try {
    if (j.contains("angle")) {
      if (type.dim() != 2) throw Error(ErrorCode::schema_error, "'angle' flags need dimension 2");
      return Flag::line(j["angle"].get<double>());
    }
    Json cols;
    if (j.contains("vector")) cols = Json::array({j["vector"]});
    else if (j.contains("basis")) cols = j["basis"];
    else throw Error(ErrorCode::schema_error, "a flag needs 'angle', 'vector' or 'basis'");
    Matrix m(type.dim(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].size() != static_cast<std::size_t>(type.dim()))
        throw Error(ErrorCode::schema_error, "flag basis columns must have length " + std::to_string(type.dim()));
      for (int r = 0; r < type.dim(); ++r) m(r, static_cast<Eigen::Index>(c)) = cols[c][r].get<double>();
    }
    return Flag(type, m);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_error, std::string("bad flag: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::schema_error) throw;
    throw Error(ErrorCode::schema_error, std::string("bad flag: ") + e.what());
  }
}

bool BallSet::contains(const Flag& f) const {
  for (const auto& b : balls)
    if (dist(f, b.center) < b.radius) return true;
  return false;
}

std::vector<Flag> BallSet::sample(double inflate, std::size_t count, std::uint64_t seed) const {
  std::vector<Flag> out;
  if (balls.empty()) return out;
  Rng rng(seed);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const std::size_t n = count / balls.size() + (i < count % balls.size() ? 1 : 0);
    auto pts = ball_points({balls[i].center, balls[i].radius + inflate}, n, false, rng);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

void SetSystem::validate() const {
  if (!(epsilon > 0)) throw Error(ErrorCode::invalid_parameter, "the inflation margin must be positive");
  for (std::size_t v = 0; v < sets.size(); ++v) {
    const auto& s = sets[v];
    if (s.balls.empty()) throw Error(ErrorCode::invalid_parameter, "set " + std::to_string(v) + " has no balls");
    if (!s.exterior_witness)
      throw Error(ErrorCode::invalid_parameter, "set " + std::to_string(v) + " has no exterior witness");
    for (const auto& b : s.balls) {
      if (!(b.radius > 0)) throw Error(ErrorCode::invalid_parameter, "ball radii must be positive");
      const auto t = is_transverse(*s.exterior_witness, b.center);
      if (!(t.margin > b.radius))
        throw Error(ErrorCode::invalid_parameter, "exterior witness of set " + std::to_string(v) +
                                                      " is not transverse to a centre beyond its radius");
    }
  }
}

Json SetSystem::to_json(const AutomatonGraph& g) const {
  Json js = Json::object();
  for (std::size_t v = 0; v < sets.size(); ++v) {
    Json balls = Json::array();
    for (const auto& b : sets[v].balls) balls.push_back(Json{{"center", flag_to_json(b.center)}, {"radius", b.radius}});
    Json s{{"balls", balls}};
    if (sets[v].exterior_witness) s["witness"] = flag_to_json(*sets[v].exterior_witness);
    js[v < g.size() ? g.name(v) : std::to_string(v)] = s;
  }
  return Json{{"epsilon", epsilon}, {"sets", js}};
}

SetSystem SetSystem::from_json(const AutomatonGraph& g, const ParabolicType& type, const Json& j) {
  SetSystem sys;
  sys.epsilon = require(j, "epsilon", "set system").get<double>();
  const auto& sj = require(j, "sets", "set system");
  sys.sets.resize(g.size());
  std::vector<bool> seen(g.size(), false);
  for (auto it = sj.begin(); it != sj.end(); ++it) {
    const auto v = g.index_of(it.key());
    seen[v] = true;
    const std::string where = "set system.sets." + it.key();
    for (const auto& b : require(it.value(), "balls", where)) {
      const auto& r = require(b, "radius", where + ".balls[]");
      if (!r.is_number()) throw Error(ErrorCode::schema_error, where + ".balls[].radius must be a number");
      sys.sets[v].balls.push_back({flag_from_json(type, require(b, "center", where + ".balls[]")), r.get<double>()});
    }
    if (it.value().contains("witness")) sys.sets[v].exterior_witness = flag_from_json(type, it.value()["witness"]);
  }
  for (std::size_t v = 0; v < g.size(); ++v)
    if (!seen[v]) throw Error(ErrorCode::schema_error, "set system has no set for vertex '" + g.name(v) + "'");
  sys.validate();
  return sys;
}

SetSystem ping_pong_sets(double radius, double epsilon) {
  const double half_pi = std::numbers::pi / 2;
  SetSystem s;
  s.epsilon = epsilon;
  s.sets.push_back({{{Flag::line(0), radius}}, Flag::line(half_pi)});
  s.sets.push_back({{{Flag::line(half_pi), radius}}, Flag::line(0)});
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Image containment

FlagBall image_ball(const ProjectiveMatrix& g, const FlagBall& b) {
  Rng rng(1);
  const Flag c = b.center.apply(g);
  double rho = 0;
  for (const auto& s : ball_points(b, kBoundarySamples, true, rng)) rho = std::max(rho, dist(s.apply(g), c));
  return {c, kSafety * rho};
}

Containment image_contained(const ProjectiveMatrix& g, const BallSet& source, double inflate, const BallSet& target) {
  Containment out;
  out.margin = std::numeric_limits<double>::infinity();
  bool outside = false;
  for (const auto& b : source.balls) {
    const FlagBall inflated{b.center, b.radius + inflate};
    const FlagBall ib = image_ball(g, inflated);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& t : target.balls) best = std::max(best, t.radius - dist(ib.center, t.center) - ib.radius);
    out.margin = std::min(out.margin, best);
    if (best > 0) continue;
    Rng rng(1);
    for (const auto& s : ball_points(inflated, kBoundarySamples, false, rng))
      if (!target.contains(s.apply(g))) {
        outside = true;
        break;
      }
  }
  if (outside) out.verdict = Containment::Verdict::outside;
  else if (!(out.margin > 0)) out.verdict = Containment::Verdict::inconclusive;
  return out;
}

std::string CompatibilityReport::verdict() const {
  if (!inclusion.pass()) return "fail";
  return inconclusive > 0 ? "inconclusive" : "pass";
}

Json CompatibilityReport::to_json() const {
  return Json{{"verdict", verdict()}, {"depth", depth},           {"epsilon", epsilon},
              {"edges", edges},       {"inconclusive", inconclusive}, {"checks", Json::array({inclusion.to_json()})}};
}

CompatibilityReport check_compatibility(const Representation& rep, const AutomatonGraph& g, const SetSystem& sys,
                                        Int depth, std::size_t budget) {
  if (sys.sets.size() != g.size())
    throw Error(ErrorCode::invalid_parameter, "the set system must have one set per automaton vertex");
  sys.validate();
  const auto& grp = g.pair().group();
  struct Item {
    std::size_t v, w;
    GroupElement alpha;
  };
  std::vector<Item> items;
  CompatibilityReport r;
  r.depth = depth;
  r.epsilon = sys.epsilon;
  for (std::size_t v = 0; v < g.size(); ++v) {
    const auto labels = g.label_elements(v, depth);
    for (auto w : g.out(v)) {
      ++r.edges;
      for (const auto& a : labels) items.push_back({v, w, a});
      if (items.size() > budget)
        throw Error(ErrorCode::budget_exceeded, "compatibility check exceeds " + std::to_string(budget) + " label pairs");
    }
  }
  std::vector<Containment> res(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const auto& it = items[i];
    res[i] = image_contained(ProjectiveMatrix(rep.image(it.alpha)), sys.sets[it.w], sys.epsilon, sys.sets[it.v]);
  });
  Json inconclusive = Json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    auto describe = [&] {
      return Json{{"from", g.name(it.v)}, {"to", g.name(it.w)}, {"alpha", grp.format(it.alpha)}, {"margin", res[i].margin}};
    };
    switch (res[i].verdict) {
      case Containment::Verdict::inside:
        r.inclusion.record(res[i].margin, describe);
        break;
      case Containment::Verdict::inconclusive:
        ++r.inconclusive;
        if (inconclusive.size() < 8) inconclusive.push_back(describe());
        r.inclusion.record(0.0, describe);
        break;
      case Containment::Verdict::outside:
        r.inclusion.record(std::min(res[i].margin, -1e-300), describe);
        break;
    }
  }
  r.inclusion.details["inconclusive"] = inconclusive;
  return r;
}

// ---------------------------------------------------------------------------
// G-paths

std::vector<GroupElement> GPath::partial_products(const GroupOracle& group) const {
  std::vector<GroupElement> out;
  GroupElement g = group.identity();
  for (const auto& a : labels) {
    g = group.multiply(g, a);
    out.push_back(g);
  }
  return out;
}

Json GPath::to_json(const AutomatonGraph& g) const {
  Json steps = Json::array();
  for (std::size_t i = 0; i < size(); ++i)
    steps.push_back(Json{{"vertex", g.name(vertices[i])}, {"label", g.pair().group().format(labels[i])}});
  return Json{{"steps", steps}, {"truncated", truncated}, {"limiting_parabolic", limiting_parabolic}};
}

std::size_t enumerate_gpaths(const AutomatonGraph& g, std::size_t max_len, Int label_cutoff,
                             const std::function<bool(const GPath&)>& visit) {
  if (max_len < 1) throw Error(ErrorCode::invalid_parameter, "G-paths need length at least 1");
  std::vector<std::vector<GroupElement>> labels(g.size());
  std::vector<bool> complete(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    labels[v] = g.label_elements(v, label_cutoff);
    complete[v] = g.label_complete(v, label_cutoff);
  }
  GPath path;
  std::size_t count = 0, cut = 0;
  bool stop = false;
  std::function<void(std::size_t)> extend = [&](std::size_t v) {
    if (!complete[v]) ++cut;
    for (const auto& a : labels[v]) {
      if (stop) break;
      path.vertices.push_back(v);
      path.labels.push_back(a);
      if (path.size() == max_len) {
        path.truncated = cut > 0;
        ++count;
        if (!visit(path)) stop = true;
      } else {
        for (auto w : g.out(v)) {
          if (stop) break;
          extend(w);
        }
      }
      path.vertices.pop_back();
      path.labels.pop_back();
    }
    if (!complete[v]) --cut;
  };
  for (std::size_t v = 0; v < g.size() && !stop; ++v) extend(v);
  return count;
}

std::vector<GPath> sample_gpaths(const AutomatonGraph& g, std::size_t length, Int label_cutoff, std::size_t count,
                                 std::uint64_t seed) {
  if (length < 1) throw Error(ErrorCode::invalid_parameter, "G-paths need length at least 1");
  std::vector<GPath> out;
  if (g.size() == 0) return out;
  std::vector<std::vector<GroupElement>> labels(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) labels[v] = g.label_elements(v, label_cutoff);
  Rng rng(seed);
  while (out.size() < count) {
    GPath p;
    std::size_t v = rng.below(g.size());
    bool ok = true;
    for (std::size_t i = 0; i < length; ++i) {
      if (labels[v].empty()) {
        ok = false;
        break;
      }
      p.vertices.push_back(v);
      p.labels.push_back(labels[v][rng.below(labels[v].size())]);
      p.truncated = p.truncated || !g.label_complete(v, label_cutoff);
      if (i + 1 < length) {
        if (g.out(v).empty()) {
          ok = false;
          break;
        }
        v = g.out(v)[rng.below(g.out(v).size())];
      }
    }
    if (!ok) throw Error(ErrorCode::invalid_parameter, "random walk reached a dead end or an empty label set");
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nested diameters

Json NestedDiameters::to_json() const {
  return Json{{"verdict", contracting && monotone ? "pass" : "fail"},
              {"diameters", diameters},
              {"rate", rate},
              {"monotone", monotone},
              {"contracting", contracting},
              {"max_repetition", max_repetition}};
}

NestedDiameters nested_diameters(const Representation& rep, const GPath& path, const SetSystem& sys,
                                 std::size_t samples, std::uint64_t seed) {
  if (path.size() == 0) throw Error(ErrorCode::empty_path, "nested diameters need a nonempty G-path");
  for (auto v : path.vertices)
    if (v >= sys.sets.size()) throw Error(ErrorCode::invalid_parameter, "G-path vertex has no set");
  const std::size_t n = path.size();
  std::map<std::size_t, std::vector<Flag>> pts;
  for (auto v : path.vertices)
    if (!pts.count(v)) pts[v] = sys.sets[v].sample(0, samples, seed);

  std::vector<double> logd(n);
  const bool lines = rep.dim() == 2;
  Matrix m = Matrix::Identity(rep.dim(), rep.dim());
  double logdet = 0;  // log |det m|, m kept at unit Frobenius norm
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = pts[path.vertices[k]];
    double best = -std::numeric_limits<double>::infinity();
    if (lines) {
      // |det[m x, m y]| / (|m x| |m y|) = |det m| |sin(x - y)| / (|m x| |m y|)
      // has no cancellation even when the images nearly coincide.
      std::vector<double> th(p.size()), ln(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        th[i] = p[i].angle();
        Vector x(2);
        x << std::cos(th[i]), std::sin(th[i]);
        ln[i] = std::log((m * x).norm());
      }
      for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
          const double s = std::abs(std::sin(th[i] - th[j]));
          if (s > 0) best = std::max(best, logdet + std::log(s) - ln[i] - ln[j]);
        }
    } else {
      const ProjectiveMatrix g(m);
      std::vector<Flag> img;
      for (const auto& f : p) img.push_back(f.apply(g));
      double d = 0;
      for (std::size_t i = 0; i < img.size(); ++i)
        for (std::size_t j = i + 1; j < img.size(); ++j) d = std::max(d, flag_distance(img[i], img[j]));
      best = std::log(std::max(d, 1e-300));
    }
    logd[k] = best;
    const Matrix a = rep.image(path.labels[k]);
    const Matrix ma = m * a;
    const double s = ma.norm();
    logdet += std::log(std::abs(a.determinant())) - rep.dim() * std::log(s);
    m = ma / s;
  }

  NestedDiameters out;
  for (double l : logd) out.diameters.push_back(std::exp(l));
  for (std::size_t k = 0; k + 1 < n; ++k)
    if (logd[k + 1] > logd[k] + 1e-9) out.monotone = false;
  if (n >= 2) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) {
      mx += static_cast<double>(k);
      my += logd[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < n; ++k) {
      sxy += (static_cast<double>(k) - mx) * (logd[k] - my);
      sxx += (static_cast<double>(k) - mx) * (static_cast<double>(k) - mx);
    }
    out.rate = std::exp(sxy / sxx);
  }
  out.contracting = out.rate < 1 - 1e-9;
  std::unordered_map<GroupElement, std::size_t, GroupElementHash> seen;
  for (const auto& g : path.partial_products(rep.group()))
    out.max_repetition = std::max(out.max_repetition, ++seen[g]);
  return out;
}

// ---------------------------------------------------------------------------
// Tracking

Json TrackingReport::to_json() const {
  return Json{{"verdict", pass() ? "pass" : "fail"},
              {"radius", radius},
              {"tracking_distance", tracking_distance},
              {"max_label_length", max_label_length},
              {"max_depth", max_depth},
              {"depth_bound", depth_bound}};
}

TrackingReport gpath_tracking_check(std::shared_ptr<const RelHypPair> pair, const GPath& path, Int radius) {
  if (path.size() == 0) throw Error(ErrorCode::empty_path, "tracking needs a nonempty G-path");
  const auto& grp = pair->group();
  const CuspedGraph w = build_cusped_ball(pair, radius);
  auto vertex = [&](const GroupElement& g) {
    auto i = w.index_of(VertexKey::group_vertex(g));
    if (!i) throw Error(ErrorCode::window_too_small, grp.format(g) + " is outside the radius-" + std::to_string(radius) + " window");
    return *i;
  };
  const std::size_t id = vertex(grp.identity());
  std::vector<std::size_t> products{id};
  for (const auto& g : path.partial_products(grp)) products.push_back(vertex(g));

  TrackingReport r;
  r.radius = radius;
  for (const auto& a : path.labels) r.max_label_length = std::max<Int>(r.max_label_length, w.center_distance[vertex(a)]);

  const auto from_id = w.bfs(id);
  const std::size_t last = products.back();
  if (!w.certified(id, last, from_id.distance[last]))
    throw Error(ErrorCode::window_too_small, "the geodesic to the final product is not certified");
  const auto geo = from_id.path_to(last);
  std::vector<std::size_t> cay;
  for (auto v : geo.vertices) {
    r.max_depth = std::max(r.max_depth, w.depth(v));
    if (w.depth(v) == 0) cay.push_back(v);
  }

  // Distances from every product and every geodesic point of depth 0.
  std::vector<std::size_t> sources = products;
  sources.insert(sources.end(), cay.begin(), cay.end());
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  std::map<std::size_t, std::vector<std::int32_t>> dist;
  for (auto s : sources) dist[s] = w.bfs(s).distance;
  auto d = [&](std::size_t u, std::size_t v) {
    const auto x = dist.at(u)[v];
    if (x < 0 || !w.certified(u, v, x))
      throw Error(ErrorCode::window_too_small, "a tracking distance is not certified in the window");
    return static_cast<double>(x);
  };
  auto directed = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double worst = 0;
    for (auto u : a) {
      // The nearest partner is certified whenever any partner is close
      // enough to matter; uncertified far pairs are skipped.
      double best = std::numeric_limits<double>::infinity();
      for (auto v : b) {
        const auto x = dist.at(u)[v];
        if (x >= 0 && x < best) best = x;
      }
      for (auto v : b)
        if (dist.at(u)[v] == best) {
          best = d(u, v);
          break;
        }
      worst = std::max(worst, best);
    }
    return worst;
  };
  r.tracking_distance = std::max(directed(products, cay), directed(cay, products));
  r.depth_bound = static_cast<double>(r.max_label_length) + 3 * r.tracking_distance;
  return r;
}

}  // namespace rhfill
