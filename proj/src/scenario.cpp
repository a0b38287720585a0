#include "rhfill/scenario.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rhfill/errors.hpp"
#include "rhfill/filling.hpp"
#include "rhfill/hyperbolicity.hpp"
#include "rhfill/metric_lemmas.hpp"

namespace rhfill {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::schema_error, what); }

const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) schema(where + "." + key + " is missing");
  return j.at(key);
}

Int get_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) schema(where + " must be an integer");
  return j.get<Int>();
}

double get_double(const Json& j, const std::string& where) {
  if (!j.is_number()) schema(where + " must be a number");
  return j.get<double>();
}

std::string kind_name(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Descriptors

std::shared_ptr<const GroupOracle> group_from_json(const Json& j, const std::string& where) {
  std::function<GroupDescriptor(const Json&, const std::string&)> parse = [&](const Json& d, const std::string& w) {
    if (!d.is_object()) schema(w + " must be an object");
    const auto& k = field(d, "kind", w);
    if (!k.is_string()) schema(w + ".kind must be a string");
    const auto kind = kind_name(k.get<std::string>());
    GroupDescriptor out;
    if (kind == "free" || kind == "free-abelian") {
      out.kind = kind == "free" ? GroupKind::free : GroupKind::free_abelian;
      out.rank = static_cast<int>(get_int(field(d, "rank", w), w + ".rank"));
    } else if (kind == "finite-cyclic") {
      out.kind = GroupKind::finite_cyclic;
      out.rank = 1;
      out.order = get_int(field(d, "order", w), w + ".order");
    } else if (kind == "free-product") {
      out.kind = GroupKind::free_product;
      const auto& fs = field(d, "factors", w);
      if (!fs.is_array()) schema(w + ".factors must be an array");
      for (std::size_t i = 0; i < fs.size(); ++i) out.factors.push_back(parse(fs[i], w + ".factors[" + std::to_string(i) + "]"));
    } else {
      schema(w + ".kind '" + k.get<std::string>() + "' is not a supported group kind");
    }
    return out;
  };
  const auto desc = parse(j, where);
  try {
    return make_oracle(desc);
  } catch (const Error& e) {
    schema(where + ": " + e.what());
  }
}

std::shared_ptr<const RelHypPair> pair_from_json(const Json& j, const std::string& where) {
  auto group = group_from_json(field(j, "group", where), where + ".group");
  if (!j.contains("peripherals")) {
    std::vector<std::size_t> all(group->factor_count());
    for (std::size_t f = 0; f < all.size(); ++f) all[f] = f;
    return make_rel_hyp_pair(group, all);
  }
  const auto& ps = j["peripherals"];
  if (!ps.is_array()) schema(where + ".peripherals must be an array of word lists");
  std::vector<std::vector<std::string>> words;
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const std::string w = where + ".peripherals[" + std::to_string(p) + "]";
    words.emplace_back();
    const auto& list = ps[p].is_array() ? ps[p] : Json::array({ps[p]});
    for (const auto& x : list) {
      if (!x.is_string()) schema(w + " must hold generator words");
      words.back().push_back(x.get<std::string>());
    }
  }
  try {
    return make_rel_hyp_pair(group, words);
  } catch (const Error& e) {
    schema(where + ".peripherals: " + e.what());
  }
}

std::vector<std::vector<GroupElement>> kernels_from_json(const RelHypPair& pair, const Json& j,
                                                         const std::string& where) {
  const auto& grp = pair.group();
  std::vector<std::vector<GroupElement>> out(pair.peripheral_count());
  auto parse_list = [&](std::size_t p, const Json& list, const std::string& w) {
    if (p >= pair.peripheral_count()) schema(w + " names peripheral " + std::to_string(p) + ", which does not exist");
    if (!list.is_array()) schema(w + " must be an array");
    const auto f = pair.peripheral(p).factor();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& x = list[i];
      const std::string wi = w + "[" + std::to_string(i) + "]";
      GroupElement g;
      if (x.is_string()) {
        try {
          g = grp.parse(x.get<std::string>());
        } catch (const Error& e) {
          schema(wi + ": " + e.what());
        }
        if (!pair.peripheral(p).contains(g)) schema(wi + ": '" + x.get<std::string>() + "' is not in peripheral " + pair.peripheral(p).name());
      } else if (x.is_array()) {
        std::vector<Int> e;
        for (const auto& c : x) e.push_back(get_int(c, wi));
        if (static_cast<int>(e.size()) != grp.factor(f).rank()) schema(wi + " must have one exponent per factor generator");
        g = grp.factor_element(f, e);
      } else if (x.is_number_integer()) {
        g = grp.power(grp.letter(grp.factor_first_letter(f)), x.get<Int>());
      } else {
        schema(wi + " must be a word, an exponent vector or an integer");
      }
      out[p].push_back(std::move(g));
    }
  };
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::size_t p = 0;
      try {
        std::size_t used = 0;
        p = std::stoul(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        schema(where + " key '" + it.key() + "' must be a peripheral index");
      }
      parse_list(p, it.value(), where + "." + it.key());
    }
  } else if (j.is_array()) {
    for (std::size_t p = 0; p < j.size(); ++p) parse_list(p, j[p], where + "[" + std::to_string(p) + "]");
  } else {
    schema(where + " must be an object or an array");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Task table

namespace {

struct Params {
  const Json& j;
  std::string where;

  bool has(const std::string& k) const { return j.contains(k) && !j[k].is_null(); }
  Int integer(const std::string& k, Int dflt) const { return has(k) ? get_int(j[k], where + "." + k) : dflt; }
  double number(const std::string& k, double dflt) const { return has(k) ? get_double(j[k], where + "." + k) : dflt; }
  bool boolean(const std::string& k, bool dflt) const {
    if (!has(k)) return dflt;
    if (!j[k].is_boolean()) schema(where + "." + k + " must be a boolean");
    return j[k].get<bool>();
  }
  std::string string(const std::string& k, const std::string& dflt) const {
    if (!has(k)) return dflt;
    if (!j[k].is_string()) schema(where + "." + k + " must be a string");
    return j[k].get<std::string>();
  }
  std::vector<Int> integers(const std::string& k) const {
    if (!has(k) || !j[k].is_array()) schema(where + "." + k + " must be an array of integers");
    std::vector<Int> out;
    for (const auto& x : j[k]) out.push_back(get_int(x, where + "." + k));
    return out;
  }
  const Json& raw(const std::string& k) const { return field(j, k, where); }
};

struct Table {
  std::vector<std::string> columns;
  Json rows = Json::array();
  Json to_json() const { return Json{{"columns", columns}, {"rows", rows}}; }
};

struct TaskResult {
  std::string verdict = "pass";
  Json result;
  std::optional<Table> table;
};

using Runner = std::function<TaskResult(const ScenarioContext&, const Params&, std::uint64_t seed)>;

struct TaskKind {
  std::set<std::string> params;
  bool needs_pair = false;
  bool needs_family = false;
  Runner run;
};

std::string verdict_of(bool pass) { return pass ? "pass" : "fail"; }

std::shared_ptr<const GroupOracle> group_of(const ScenarioContext& ctx) { return ctx.pair()->group_ptr(); }

Representation representation_param(const ScenarioContext& ctx, const Params& p) {
  if (!p.has("representation") || (p.j["representation"].is_string() && p.j["representation"] == "base"))
    return ctx.family().base();
  if (p.j["representation"].is_object()) return representation_from_json(group_of(ctx), p.j["representation"]);
  schema(p.where + ".representation must be \"base\" or a matrix object");
}

AutomatonGraph automaton_param(const ScenarioContext& ctx, const Params& p) {
  if (!p.has("automaton") || (p.j["automaton"].is_string() && p.j["automaton"] == "ping-pong"))
    return ping_pong_automaton(ctx.pair());
  if (p.j["automaton"].is_object()) return AutomatonGraph::from_json(ctx.pair(), p.j["automaton"]);
  schema(p.where + ".automaton must be \"ping-pong\" or an automaton object");
}

SetSystem sets_param(const AutomatonGraph& g, int dim, const Params& p) {
  if (!p.has("sets") || (p.j["sets"].is_string() && p.j["sets"] == "ping-pong")) {
    if (g.size() != 2) schema(p.where + ".sets: the ping-pong set system needs a two-vertex automaton");
    return ping_pong_sets(p.number("set_radius", 0.7), p.number("epsilon", 0.02));
  }
  if (p.j["sets"].is_object()) return SetSystem::from_json(g, ParabolicType::projective(dim), p.j["sets"]);
  schema(p.where + ".sets must be \"ping-pong\" or a set-system object");
}

FillingData filling_param(const ScenarioContext& ctx, const Params& p) {
  return make_filling(ctx.pair(), kernels_from_json(*ctx.pair(), p.raw("kernels"), p.where + ".kernels"));
}

Json margin(double m) { return std::isfinite(m) ? Json(m) : Json(nullptr); }

const std::map<std::string, TaskKind>& kinds() {
  static const std::map<std::string, TaskKind> table = [] {
    std::map<std::string, TaskKind> k;

    k["cusped"] = {{"radius", "mode", "dump", "max_depth", "cone_cap"}, true, false,
                   [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                     const auto mode = p.string("mode", "cusped");
                     const Int radius = p.integer("radius", 6);
                     const auto cap = ctx.scenario().budgets.elements;
                     CuspedGraph g;
                     if (mode == "cusped") g = build_cusped_ball(ctx.pair(), radius, p.integer("max_depth", -1), cap);
                     else if (mode == "coned") g = build_coned_off(ctx.pair(), radius, p.integer("cone_cap", 64), cap);
                     else if (mode == "cayley") g = build_cayley_ball(ctx.pair(), radius, cap);
                     else schema(p.where + ".mode must be cusped, coned or cayley");
                     TaskResult r;
                     r.result = Json{{"mode", mode}, {"radius", radius}, {"vertices", g.size()},
                                     {"edges", g.edge_count()}, {"max_depth", g.max_depth}};
                     if (p.has("dump") && !ctx.output_dir.empty()) {
                       const auto path = ctx.output_dir / p.string("dump", "");
                       std::ofstream out(path);
                       if (!out) throw Error(ErrorCode::invalid_parameter, "cannot write " + path.string());
                       g.dump(out);
                       r.result["dump"] = p.string("dump", "");
                     }
                     return r;
                   }};

    k["delta"] = {{"radius", "mode", "samples", "graph"}, false, false,
                  [](const ScenarioContext& ctx, const Params& p, std::uint64_t seed) {
                    CuspedGraph g;
                    if (p.has("graph")) {
                      std::ifstream in(p.string("graph", ""));
                      if (!in) throw Error(ErrorCode::invalid_parameter, "cannot read graph " + p.string("graph", ""));
                      g = CuspedGraph::load(in);
                    } else {
                      g = build_cusped_ball(ctx.pair(), p.integer("radius", 4), -1, ctx.scenario().budgets.elements);
                    }
                    const auto mode = p.string("mode", "window");
                    TaskResult r;
                    double delta = 0;
                    if (mode == "window") {
                      const auto w = window_delta(g, seed);
                      delta = w.value;
                      r.result = Json{{"vertices", g.size()}, {"delta", w.value},
                                      {"four_point", to_json(w.four_point)}, {"thin", to_json(w.thin)}};
                    } else {
                      DeltaMode m;
                      std::size_t budget = 0;
                      if (mode == "exhaustive") {
                        m = DeltaMode::four_point_exhaustive;
                        budget = static_cast<std::size_t>(p.integer("samples", 4'000'000'000LL));
                      } else if (mode == "sampled") {
                        m = DeltaMode::four_point_sampled;
                        budget = static_cast<std::size_t>(p.integer("samples", 200000));
                      } else if (mode == "thin") {
                        m = DeltaMode::thin_triangles;
                        budget = static_cast<std::size_t>(p.integer("samples", 1000));
                      } else {
                        schema(p.where + ".mode must be window, exhaustive, sampled or thin");
                      }
                      const auto e = estimate_delta(g, m, budget, seed);
                      delta = m == DeltaMode::thin_triangles ? e.delta_thin : e.delta4;
                      r.result = Json{{"vertices", g.size()}, {"delta", delta}, {"estimate", to_json(e)}};
                    }
                    r.table = Table{{"radius", "delta"}};
                    r.table->rows.push_back(Json::array({g.radius, delta}));
                    return r;
                  }};

    k["metric-lemmas"] = {{"radius", "entry_distance", "quasidensity_radius", "delta"}, true, false,
                          [](const ScenarioContext& ctx, const Params& p, std::uint64_t seed) {
                            MetricLemmaOptions o;
                            o.entry_distance = p.integer("entry_distance", 2);
                            o.quasidensity_radius = p.integer("quasidensity_radius", 5);
                            if (p.has("delta")) o.delta = p.number("delta", 0);
                            o.seed = seed;
                            const auto rep = verify_metric_lemmas(ctx.pair(), p.integer("radius", 6), o);
                            return TaskResult{verdict_of(rep.pass()), rep.to_json(), std::nullopt};
                          }};

    k["local-isometry"] = {{"kernels", "r", "radius", "scan"}, true, false,
                           [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                             const auto filling = filling_param(ctx, p);
                             const Int r = p.integer("r", 5);
                             const auto fg = build_quotient_cusped(filling, p.integer("radius", 2 * r), -1,
                                                                   ctx.scenario().budgets.elements);
                             const auto rep = check_local_isometry(fg, r);
                             TaskResult t{verdict_of(rep.pass()), rep.to_json(), std::nullopt};
                             if (p.has("scan")) {
                               const auto m = minimal_failing_radius(filling, p.integer("scan", r));
                               t.result["minimal_failing_radius"] = m ? Json(*m) : Json(nullptr);
                             }
                             return t;
                           }};

    k["descent"] = {{"kernels", "K", "max_depth", "radius", "samples"}, true, false,
                    [](const ScenarioContext& ctx, const Params& p, std::uint64_t seed) {
                      const auto fg = build_quotient_cusped(filling_param(ctx, p), p.integer("radius", 6), -1,
                                                            ctx.scenario().budgets.elements);
                      const auto rep = check_descent_quasigeodesic(fg, p.number("K", 2), p.integer("max_depth", 3),
                                                                   static_cast<std::size_t>(p.integer("samples", 200)), seed);
                      return TaskResult{verdict_of(rep.pass()), rep.to_json(), std::nullopt};
                    }};

    k["uniform-delta"] = {{"ns", "radius", "slack", "n0"}, true, false,
                          [](const ScenarioContext& ctx, const Params& p, std::uint64_t seed) {
                            const auto t = check_uniform_delta(ctx.pair(), p.integers("ns"), p.integer("radius", 6),
                                                               p.number("slack", 2), p.integer("n0", 0), seed);
                            TaskResult r{verdict_of(t.bounded()), t.to_json(), Table{{"n", "delta"}}};
                            r.table->rows.push_back(Json::array({"inf", t.unfilled.delta.value}));
                            for (const auto& row : t.rows) r.table->rows.push_back(Json::array({row.n, row.delta.value}));
                            return r;
                          }};

    k["injectivity"] = {{"kernels", "radius"}, true, false,
                        [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                          const auto rep = check_injectivity(filling_param(ctx, p), p.integer("radius", 2));
                          return TaskResult{verdict_of(rep.pass()), rep.to_json(), std::nullopt};
                        }};

    k["lift"] = {{"kernels", "radius", "target_radius", "paths"}, true, false,
                 [](const ScenarioContext& ctx, const Params& p, std::uint64_t seed) {
                   const auto fg = build_quotient_cusped(filling_param(ctx, p), p.integer("radius", 8),
                                                         p.integer("target_radius", 4), ctx.scenario().budgets.elements);
                   const auto rep = check_lifts(fg, static_cast<std::size_t>(p.integer("paths", 1000)), seed);
                   return TaskResult{verdict_of(rep.pass()), rep.to_json(), std::nullopt};
                 }};

    k["automaton"] = {{"automaton", "sets", "set_radius", "epsilon", "depth", "representation"}, true, true,
                      [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                        const auto rep = representation_param(ctx, p);
                        const auto g = automaton_param(ctx, p);
                        const auto sys = sets_param(g, rep.dim(), p);
                        const auto structural = validate_automaton(g);
                        const auto compat = check_compatibility(rep, g, sys, p.integer("depth", 12),
                                                                ctx.scenario().budgets.edges);
                        std::string v = compat.verdict();
                        if (!structural.pass()) v = "fail";
                        return TaskResult{v,
                                          Json{{"automaton", g.to_json()},
                                               {"sets", sys.to_json(g)},
                                               {"structure", structural.to_json()},
                                               {"compatibility", compat.to_json()}},
                                          std::nullopt};
                      }};

    k["nested-diameters"] = {{"automaton", "sets", "set_radius", "epsilon", "representation", "paths", "length", "cutoff",
                              "max_rate"},
                             true, true,
                             [](const ScenarioContext& ctx, const Params& p, std::uint64_t seed) {
                               const auto rep = representation_param(ctx, p);
                               const auto g = automaton_param(ctx, p);
                               const auto sys = sets_param(g, rep.dim(), p);
                               const double max_rate = p.number("max_rate", 0.9);
                               const auto paths = sample_gpaths(g, static_cast<std::size_t>(p.integer("length", 10)),
                                                                p.integer("cutoff", 12),
                                                                static_cast<std::size_t>(p.integer("paths", 50)), seed);
                               TaskResult r;
                               r.table = Table{{"path", "rate", "monotone", "max_repetition"}};
                               Json list = Json::array();
                               bool ok = true;
                               double worst = 0;
                               std::size_t rep_max = 0;
                               for (std::size_t i = 0; i < paths.size(); ++i) {
                                 const auto d = nested_diameters(rep, paths[i], sys, 128, seed);
                                 ok = ok && d.monotone && d.rate < max_rate && d.max_repetition <= g.size();
                                 worst = std::max(worst, d.rate);
                                 rep_max = std::max(rep_max, d.max_repetition);
                                 Json item = d.to_json();
                                 item["path"] = paths[i].to_json(g);
                                 list.push_back(item);
                                 r.table->rows.push_back(Json::array({i, d.rate, d.monotone, d.max_repetition}));
                               }
                               r.verdict = verdict_of(ok);
                               r.result = Json{{"max_rate", max_rate}, {"worst_rate", worst},
                                               {"max_repetition", rep_max}, {"vertex_count", g.size()}, {"paths", list}};
                               return r;
                             }};

    k["tracking"] = {{"automaton", "steps", "radius"}, true, false,
                     [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                       const auto g = automaton_param(ctx, p);
                       const auto& steps = p.raw("steps");
                       if (!steps.is_array() || steps.empty()) schema(p.where + ".steps must be a nonempty array");
                       GPath path;
                       for (const auto& s : steps) {
                         if (!s.is_array() || s.size() != 2 || !s[0].is_string() || !s[1].is_string())
                           schema(p.where + ".steps entries are [vertex, word] pairs");
                         path.vertices.push_back(g.index_of(s[0].get<std::string>()));
                         try {
                           path.labels.push_back(ctx.pair()->group().parse(s[1].get<std::string>()));
                         } catch (const Error& e) {
                           schema(p.where + ".steps: " + e.what());
                         }
                       }
                       const auto rep = gpath_tracking_check(ctx.pair(), path, p.integer("radius", 8));
                       Json res = rep.to_json();
                       res["path"] = path.to_json(g);
                       return TaskResult{verdict_of(rep.pass()), res, std::nullopt};
                     }};

    k["edf"] = {{"queries", "depth", "require_stability_failure"}, false, true,
                [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                  const auto& fam = ctx.family();
                  std::vector<EdfQuery> queries;
                  if (p.has("queries")) {
                    if (!p.j["queries"].is_array()) schema(p.where + ".queries must be an array");
                    for (std::size_t i = 0; i < p.j["queries"].size(); ++i) {
                      const auto& q = p.j["queries"][i];
                      const Params qp{q, p.where + ".queries[" + std::to_string(i) + "]"};
                      const int per = static_cast<int>(qp.integer("peripheral", 0));
                      auto query = sanov_edf_query(per, qp.number("u_radius", 0.5), qp.number("k_radius", 0.25));
                      if (qp.has("name")) query.name = qp.string("name", "");
                      queries.push_back(std::move(query));
                    }
                  } else {
                    for (std::size_t per = 0; per < fam.pair().peripheral_count(); ++per)
                      queries.push_back(sanov_edf_query(static_cast<int>(per), 0.5, 0.25));
                  }
                  const bool need_fail = p.boolean("require_stability_failure", true);
                  TaskResult r;
                  r.table = Table{{"query", "n", "order", "edf", "edf_margin", "stability", "stability_margin"}};
                  Json reports = Json::array();
                  bool ok = true;
                  bool inconclusive = false;
                  for (const auto& q : queries) {
                    const auto rep = edf_condition_check(fam, q, p.integer("depth", 12));
                    reports.push_back(rep.to_json());
                    for (const auto& row : rep.rows) {
                      inconclusive = inconclusive || row.edf == "inconclusive";
                      r.table->rows.push_back(Json::array({q.name, row.n, row.order, row.edf, margin(row.edf_margin),
                                                           row.stability, margin(row.stability_margin)}));
                      if (need_fail && row.stability != "fail") ok = false;
                      // Peripheral stability implies EDF.
                      if (row.stability == "pass" && row.edf == "fail") ok = false;
                    }
                    bool edf_ok = rep.separation.pass() && rep.base_hypothesis.pass();
                    for (const auto& row : rep.rows) edf_ok = edf_ok && row.edf != "fail";
                    ok = ok && edf_ok;
                  }
                  r.verdict = !ok ? "fail" : inconclusive ? "inconclusive" : "pass";
                  r.result = Json{{"require_stability_failure", need_fail}, {"queries", reports}};
                  return r;
                }};

    k["chabauty"] = {{"radius", "depth", "partner_depth", "restrictions"}, false, true,
                     [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                       const auto& fam = ctx.family();
                       std::vector<int> restrictions{-1};
                       if (p.has("restrictions")) {
                         restrictions.clear();
                         for (const auto& x : p.j["restrictions"]) {
                           if (x.is_string() && x == "full") restrictions.push_back(-1);
                           else restrictions.push_back(static_cast<int>(get_int(x, p.where + ".restrictions")));
                         }
                       } else {
                         for (std::size_t per = 0; per < fam.pair().peripheral_count(); ++per)
                           restrictions.push_back(static_cast<int>(per));
                       }
                       TaskResult r;
                       r.table = Table{{"restriction", "n", "a_side", "b_side", "distance"}};
                       Json tables = Json::array();
                       bool ok = true;
                       for (int res : restrictions) {
                         const auto t = chabauty_check(fam, p.number("radius", 10), p.integer("depth", 8), res,
                                                       p.integer("partner_depth", -1));
                         ok = ok && t.decreasing();
                         tables.push_back(t.to_json());
                         for (const auto& row : t.rows)
                           r.table->rows.push_back(Json::array({res < 0 ? Json("full") : Json(res), row.n, row.a_side,
                                                                row.b_side, row.distance()}));
                       }
                       r.verdict = verdict_of(ok);
                       r.result = Json{{"tables", tables}};
                       return r;
                     }};

    k["limitset"] = {{"depth", "max_final", "type"}, false, true,
                     [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                       const auto& fam = ctx.family();
                       const int d = fam.base().dim();
                       auto type = ParabolicType::projective(d);
                       if (p.has("type")) {
                         std::vector<int> idx;
                         for (auto x : p.integers("type")) idx.push_back(static_cast<int>(x));
                         type = ParabolicType(d, idx);
                       }
                       const Int depth = p.integer("depth", 12);
                       const double max_final = p.number("max_final", 0.05);
                       const auto t = limit_set_convergence(fam, depth, type, ctx.scenario().budgets.elements);
                       TaskResult r;
                       r.table = Table{{"n", "d_hausdorff", "depth"}};
                       double last = std::numeric_limits<double>::infinity();
                       for (const auto& row : t.rows) {
                         r.table->rows.push_back(Json::array({row.n, row.screened ? Json(row.hausdorff) : Json(nullptr), depth}));
                         if (row.screened) last = row.hausdorff;
                       }
                       r.verdict = verdict_of(t.decreasing() && last < max_final);
                       r.result = t.to_json();
                       r.result["max_final"] = max_final;
                       return r;
                     }};

    k["fiber"] = {{"pairs", "representation", "max_exponent"}, false, true,
                  [](const ScenarioContext& ctx, const Params& p, std::uint64_t) {
                    const auto rep = representation_param(ctx, p);
                    const auto& grp = rep.group();
                    const auto& list = p.raw("pairs");
                    if (!list.is_array()) schema(p.where + ".pairs must be an array");
                    auto word = [&](const Json& s, const char* key, const std::string& w) {
                      if (!s.contains(key)) return grp.identity();
                      if (!s[key].is_string()) schema(w + "." + key + " must be a word");
                      try {
                        return grp.parse(s[key].get<std::string>());
                      } catch (const Error& e) {
                        schema(w + "." + key + ": " + e.what());
                      }
                    };
                    auto seq = [&](const Json& s, const std::string& w) {
                      if (!s.is_object() || !s.contains("repeat")) schema(w + ".repeat is missing");
                      return SequenceSpec{word(s, "prefix", w), word(s, "repeat", w), word(s, "suffix", w)};
                    };
                    std::vector<FiberPair> pairs;
                    for (std::size_t i = 0; i < list.size(); ++i) {
                      const std::string w = p.where + ".pairs[" + std::to_string(i) + "]";
                      const Params q{list[i], w};
                      pairs.push_back({q.string("label", "pair " + std::to_string(i)), seq(q.raw("first"), w + ".first"),
                                       seq(q.raw("second"), w + ".second"), q.boolean("expect_same", true)});
                    }
                    const auto f = fiber_consistency_check(rep, pairs, ParabolicType::projective(rep.dim()),
                                                           p.integer("max_exponent", Int{1} << 16));
                    return TaskResult{verdict_of(f.pass()), f.to_json(), std::nullopt};
                  }};
    return k;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& task_kinds() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : kinds()) out.push_back(k);
    return out;
  }();
  return names;
}

// ---------------------------------------------------------------------------
// Scenarios

Scenario Scenario::from_json(const Json& j) {
  if (!j.is_object()) schema("a scenario must be a JSON object");
  static const std::set<std::string> top{"name", "seed", "pair", "family", "budgets", "output", "tasks"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!top.count(it.key())) schema("unknown scenario field '" + it.key() + "'");
  Scenario s;
  if (j.contains("name")) {
    if (!j["name"].is_string()) schema("name must be a string");
    s.name = j["name"].get<std::string>();
  }
  if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(get_int(j["seed"], "seed"));
  if (j.contains("pair")) s.pair_spec = j["pair"];
  if (j.contains("family")) s.family_spec = j["family"];
  if (j.contains("budgets")) {
    const auto& b = j["budgets"];
    if (!b.is_object()) schema("budgets must be an object");
    for (auto it = b.begin(); it != b.end(); ++it) {
      if (it.key() == "elements") s.budgets.elements = static_cast<std::size_t>(get_int(it.value(), "budgets.elements"));
      else if (it.key() == "edges") s.budgets.edges = static_cast<std::size_t>(get_int(it.value(), "budgets.edges"));
      else if (it.key() == "seconds") s.budgets.seconds = get_double(it.value(), "budgets.seconds");
      else schema("unknown budget '" + it.key() + "'");
    }
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    if (!o.is_object() || !o.contains("dir") || !o["dir"].is_string()) schema("output.dir must be a string");
    s.output_dir = o["dir"].get<std::string>();
  }

  // Resolve the pair once so kernel words can be checked at load time.
  std::shared_ptr<const RelHypPair> pair;
  if (!s.pair_spec.is_null()) pair = pair_from_json(s.pair_spec, "pair");
  std::optional<RepFamily> family;
  if (!s.family_spec.is_null()) {
    try {
      family.emplace(RepFamily::from_json(pair ? pair : free_pair_of_rank_two(), s.family_spec));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::schema_error) throw;
      schema(std::string("family: ") + e.what());
    }
  }
  if (!pair && family) pair = family->pair_ptr();

  std::set<std::string> names;
  const Json tasks = j.value("tasks", Json::array());
  if (!tasks.is_array()) schema("tasks must be an array");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string where = "tasks[" + std::to_string(i) + "]";
    const auto& t = tasks[i];
    if (!t.is_object()) schema(where + " must be an object");
    for (auto it = t.begin(); it != t.end(); ++it)
      if (it.key() != "name" && it.key() != "kind" && it.key() != "params" && it.key() != "assert" && it.key() != "seed")
        schema("unknown field " + where + "." + it.key());
    const auto& kind = field(t, "kind", where);
    if (!kind.is_string() || !kinds().count(kind.get<std::string>()))
      schema(where + ".kind '" + (kind.is_string() ? kind.get<std::string>() : kind.dump()) + "' is not a task kind");
    const auto& def = kinds().at(kind.get<std::string>());
    Json task = t;
    if (!task.contains("name")) task["name"] = kind.get<std::string>() + "-" + std::to_string(i);
    if (!task["name"].is_string()) schema(where + ".name must be a string");
    const auto name = task["name"].get<std::string>();
    if (name.empty() || name.find_first_of("/\\") != std::string::npos) schema(where + ".name is not a valid file stem");
    if (!names.insert(name).second) schema(where + ".name '" + name + "' is used twice");
    if (!task.contains("params")) task["params"] = Json::object();
    if (!task["params"].is_object()) schema(where + ".params must be an object");
    for (auto it = task["params"].begin(); it != task["params"].end(); ++it)
      if (!def.params.count(it.key())) schema("unknown parameter " + where + ".params." + it.key());
    if (task.contains("assert") && !task["assert"].is_boolean()) schema(where + ".assert must be a boolean");
    if (def.needs_family && !family) schema(where + " (" + kind.get<std::string>() + ") needs a family");
    const bool uses_pair = def.needs_pair && !(kind == "delta" && task["params"].contains("graph"));
    if (uses_pair && !pair) schema(where + " (" + kind.get<std::string>() + ") needs a pair");
    if (task["params"].contains("kernels")) kernels_from_json(*pair, task["params"]["kernels"], where + ".params.kernels");
    task["task_index"] = i;
    s.tasks.push_back(std::move(task));
  }
  return s;
}

ScenarioContext::ScenarioContext(const Scenario& s) : s_(s) {
  if (!s.pair_spec.is_null()) pair_ = pair_from_json(s.pair_spec, "pair");
  if (!s.family_spec.is_null()) family_.emplace(RepFamily::from_json(pair_ ? pair_ : free_pair_of_rank_two(), s.family_spec));
  if (!pair_ && family_) pair_ = family_->pair_ptr();
}

std::shared_ptr<const RelHypPair> ScenarioContext::pair() const {
  if (!pair_) schema("this task needs a pair");
  return pair_;
}

const RepFamily& ScenarioContext::family() const {
  if (!family_) schema("this task needs a representation family");
  return *family_;
}

Json run_task(const ScenarioContext& ctx, const Json& task) {
  const auto kind = task.at("kind").get<std::string>();
  const auto it = kinds().find(kind);
  if (it == kinds().end()) schema("unknown task kind '" + kind + "'");
  const std::string where = task.contains("task_index") ? "tasks[" + task["task_index"].dump() + "].params" : "params";
  const Json params = task.value("params", Json::object());
  const Params p{params, where};
  const auto seed = task.contains("seed") ? static_cast<std::uint64_t>(get_int(task["seed"], "seed")) : ctx.scenario().seed;
  const bool asserted = task.value("assert", true);
  Json report{{"task", task.value("name", kind)}, {"kind", kind}, {"asserted", asserted}, {"seed", seed}, {"params", params}};
  try {
    auto r = it->second.run(ctx, p, seed);
    report["verdict"] = r.verdict;
    report["result"] = std::move(r.result);
    if (r.table) report["table"] = r.table->to_json();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::schema_error || e.code() == ErrorCode::budget_exceeded) throw;
    report["verdict"] = "error";
    report["error"] = Json{{"code", to_string(e.code())}, {"message", e.what()}};
  }
  return report;
}

ScenarioResult run_scenario(const Scenario& s, const fs::path& output_dir) {
  ScenarioContext ctx(s);
  ctx.output_dir = output_dir;
  ScenarioResult res;
  const auto start = std::chrono::steady_clock::now();
  Json tasks = Json::array();
  bool ok = true, errored = false;
  for (const auto& t : s.tasks) {
    Json rep = run_task(ctx, t);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > s.budgets.seconds)
      throw Error(ErrorCode::budget_exceeded, "scenario exceeded its time budget of " + std::to_string(s.budgets.seconds) +
                                                  " s during task '" + rep["task"].get<std::string>() + "'");
    const bool asserted = rep["asserted"].get<bool>();
    const auto verdict = rep["verdict"].get<std::string>();
    if (verdict == "error") errored = true;
    if (asserted && verdict != "pass") ok = false;
    tasks.push_back(Json{{"task", rep["task"]}, {"kind", rep["kind"]}, {"asserted", asserted}, {"verdict", verdict}});
    res.reports.emplace_back(rep["task"].get<std::string>(), std::move(rep));
  }
  res.exit_status = ok && !errored ? 0 : 1;
  res.summary = Json{{"scenario", s.name},
                     {"seed", s.seed},
                     {"verdict", ok && !errored ? "pass" : "fail"},
                     {"status", errored ? "task-failed" : ok ? "ok" : "property-fail"},
                     {"tasks", tasks}};
  return res;
}

std::string dump_report(const Json& j) { return j.dump(2) + "\n"; }

ScenarioResult run_scenario_file(const fs::path& path, std::optional<fs::path> out) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_parameter, "cannot read scenario " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    schema(path.string() + ": " + e.what());
  }
  const auto s = Scenario::from_json(j);
  const fs::path dir = out ? *out : (s.output_dir.is_absolute() ? s.output_dir : path.parent_path() / s.output_dir);
  fs::create_directories(dir);
  auto res = run_scenario(s, dir);
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream o(p, std::ios::binary);
    if (!o) throw Error(ErrorCode::invalid_parameter, "cannot write " + p.string());
    o << text;
  };
  for (const auto& [name, rep] : res.reports) {
    write(dir / (name + ".json"), dump_report(rep));
    if (rep.contains("table")) write(dir / (name + ".csv"), emit_plot_data(rep));
  }
  write(dir / "summary.json", dump_report(res.summary));
  return res;
}

std::string emit_plot_data(const Json& report) {
  if (!report.is_object() || !report.contains("table") || !report["table"].is_object())
    throw Error(ErrorCode::no_tabular_data, "the report has no table");
  const auto& t = report["table"];
  auto cell = [](const Json& v) -> std::string {
    if (v.is_null()) return "";
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    }
    return v.dump();
  };
  std::ostringstream out;
  const auto& cols = t.at("columns");
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cell(cols[i]);
  out << "\n";
  for (const auto& row : t.at("rows")) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell(row[i]);
    out << "\n";
  }
  return out.str();
}

}  // namespace rhfill
