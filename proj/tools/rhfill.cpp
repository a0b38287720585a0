// rhfill: command-line front end.  Every verb builds a one-task scenario and
// runs it through the same engine as `rhfill run`.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rhfill/errors.hpp"
#include "rhfill/scenario.hpp"

namespace fs = std::filesystem;
using rhfill::Error;
using rhfill::ErrorCode;
using rhfill::Json;

namespace {

const Json kDefaultPair = Json::parse(R"({"group":{"kind":"free","rank":2},"peripherals":[["a"],["b"]]})");
const Json kDefaultFamily = Json::parse(R"({"builtin":"sanov-elliptic","lambda":3,"indices":[10,20,30,40,60]})");

// Inline JSON, or @path / a path to a JSON file.
Json load_json(const std::string& text, const std::string& what) {
  std::string body = text;
  std::string path = !text.empty() && text[0] == '@' ? text.substr(1) : text;
  const auto first = text.find_first_not_of(" \t\n");
  const bool inline_json = first != std::string::npos && (text[first] == '{' || text[first] == '[' || text[first] == '"');
  if (!inline_json) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_parameter, "cannot read " + what + " file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    body = ss.str();
  }
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_error, what + ": " + e.what());
  }
}

struct Common {
  std::string pair, family, out, csv;
  std::uint64_t seed = 1;
  std::size_t elements = 0;
  double seconds = 0;
};

void add_common(CLI::App* sub, Common& c, bool pair, bool family) {
  if (pair) sub->add_option("--pair", c.pair, "pair JSON (file, @file or inline); default (F_2, {<a>, <b>})");
  if (family) sub->add_option("--family", c.family, "family JSON; default the built-in elliptic family");
  sub->add_option("--out", c.out, "write the JSON report here instead of stdout");
  sub->add_option("--csv", c.csv, "write the report table as CSV");
  sub->add_option("--seed", c.seed, "seed");
  sub->add_option("--max-elements", c.elements, "element budget");
  sub->add_option("--max-seconds", c.seconds, "time budget");
}

Json scenario_json(const Common& c, const Json& tasks, bool family) {
  Json s{{"name", "cli"}, {"seed", c.seed}, {"tasks", tasks}};
  s["pair"] = c.pair.empty() ? kDefaultPair : load_json(c.pair, "pair");
  if (family) s["family"] = c.family.empty() ? kDefaultFamily : load_json(c.family, "family");
  Json budgets = Json::object();
  if (c.elements) budgets["elements"] = c.elements;
  if (c.seconds > 0) budgets["seconds"] = c.seconds;
  if (!budgets.empty()) s["budgets"] = budgets;
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::invalid_parameter, "cannot write " + path);
  out << text;
}

int emit(const Common& c, const rhfill::ScenarioResult& r) {
  Json out;
  if (r.reports.size() == 1) {
    out = r.reports.front().second;
  } else {
    out = Json{{"summary", r.summary}, {"reports", Json::object()}};
    for (const auto& [name, rep] : r.reports) out["reports"][name] = rep;
  }
  write_text(c.out, rhfill::dump_report(out));
  if (!c.csv.empty()) {
    std::string csv;
    for (const auto& [name, rep] : r.reports)
      if (rep.contains("table")) csv += rhfill::emit_plot_data(rep);
    if (csv.empty()) throw Error(ErrorCode::no_tabular_data, "this report has no table");
    write_text(c.csv, csv);
  }
  for (const auto& [name, rep] : r.reports)
    if (rep["verdict"] != "pass") std::cerr << name << ": " << rep["verdict"].get<std::string>() << "\n";
  return r.exit_status;
}

int run_tasks(const Common& c, const Json& tasks, bool family, const fs::path& dir = {}) {
  const auto s = rhfill::Scenario::from_json(scenario_json(c, tasks, family));
  return emit(c, rhfill::run_scenario(s, dir));
}

Json task(const std::string& name, const std::string& kind, Json params) {
  return Json{{"name", name}, {"kind", kind}, {"params", std::move(params)}};
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relatively hyperbolic Dehn filling experiments"};
  app.require_subcommand(1, 1);
  std::function<int()> action;

  // cusped
  Common cc;
  long long c_radius = 6;
  std::string c_mode = "cusped", c_dump;
  auto* cusped = app.add_subcommand("cusped", "build a cusped (or Cayley / coned-off) window");
  add_common(cusped, cc, true, false);
  cusped->add_option("--radius", c_radius, "window radius");
  cusped->add_option("--mode", c_mode, "cusped, coned or cayley");
  cusped->add_option("--dump", c_dump, "graph dump path");
  cusped->callback([&] {
    action = [&] {
      Json p{{"radius", c_radius}, {"mode", c_mode}};
      if (!c_dump.empty()) p["dump"] = fs::absolute(c_dump).string();
      return run_tasks(cc, Json::array({task("cusped", "cusped", p)}), false, fs::current_path());
    };
  });

  // delta
  Common dc;
  long long d_radius = 4, d_samples = 0;
  std::string d_mode = "window", d_graph;
  auto* delta = app.add_subcommand("delta", "estimate the hyperbolicity constant of a window");
  add_common(delta, dc, true, false);
  delta->add_option("--graph", d_graph, "graph dump to load instead of building a window");
  delta->add_option("--radius", d_radius, "window radius when no graph is given");
  delta->add_option("--mode", d_mode, "window, exhaustive, sampled or thin");
  delta->add_option("--samples", d_samples, "quadruples, triangles or evaluation budget");
  delta->callback([&] {
    action = [&] {
      Json p{{"radius", d_radius}, {"mode", d_mode}};
      if (!d_graph.empty()) p["graph"] = d_graph;
      if (d_samples > 0) p["samples"] = d_samples;
      return run_tasks(dc, Json::array({task("delta", "delta", p)}), false);
    };
  });

  // fill
  Common fc;
  std::string f_kernels, f_checks = "local-isometry,descent,injectivity", f_ns = "3,11,21,51";
  long long f_radius = 6, f_r = 0;
  auto* fill = app.add_subcommand("fill", "check a Dehn filling");
  add_common(fill, fc, true, false);
  fill->add_option("--kernels", f_kernels, "kernels JSON, e.g. {\"0\":[\"a^50\"],\"1\":[\"b^50\"]}")->required();
  fill->add_option("--radius", f_radius, "window radius");
  fill->add_option("--r", f_r, "local isometry radius (default radius / 2)");
  fill->add_option("--checks", f_checks, "local-isometry, descent, uniform-delta, injectivity, lift");
  fill->add_option("--ns", f_ns, "filling exponents for uniform-delta");
  fill->callback([&] {
    action = [&] {
      const Json kernels = load_json(f_kernels, "kernels");
      Json tasks = Json::array();
      for (const auto& check : split(f_checks)) {
        if (check == "local-isometry") {
          const long long r = f_r > 0 ? f_r : f_radius / 2;
          tasks.push_back(task(check, check, {{"kernels", kernels}, {"r", r}, {"radius", std::max(f_radius, 2 * r)}}));
        } else if (check == "descent") {
          tasks.push_back(task(check, check, {{"kernels", kernels}, {"radius", f_radius}}));
        } else if (check == "injectivity") {
          tasks.push_back(task(check, check, {{"kernels", kernels}, {"radius", std::min<long long>(f_radius, 5)}}));
        } else if (check == "lift") {
          tasks.push_back(task(check, check, {{"kernels", kernels}, {"radius", f_radius}}));
        } else if (check == "uniform-delta") {
          Json ns = Json::array();
          for (const auto& n : split(f_ns)) ns.push_back(std::stoll(n));
          tasks.push_back(task(check, check, {{"ns", ns}, {"radius", f_radius}}));
        } else {
          throw Error(ErrorCode::schema_error, "--checks: unknown check '" + check + "'");
        }
      }
      return run_tasks(fc, tasks, false);
    };
  });

  // lift
  Common lc;
  std::string l_kernels;
  long long l_radius = 8, l_target = 4, l_paths = 1000;
  auto* lift = app.add_subcommand("lift", "lift target paths through a filling");
  add_common(lift, lc, true, false);
  lift->add_option("--kernels", l_kernels, "kernels JSON")->required();
  lift->add_option("--radius", l_radius, "source window radius");
  lift->add_option("--target-radius", l_target, "target window radius");
  lift->add_option("--paths", l_paths, "random walks and geodesics to lift");
  lift->callback([&] {
    action = [&] {
      Json p{{"kernels", load_json(l_kernels, "kernels")}, {"radius", l_radius}, {"target_radius", l_target},
             {"paths", l_paths}};
      return run_tasks(lc, Json::array({task("lift", "lift", p)}), false);
    };
  });

  // automaton
  Common ac;
  std::string a_automaton, a_sets;
  long long a_depth = 12, a_paths = 0, a_length = 10;
  double a_epsilon = 0.02, a_radius = 0.7;
  auto* automaton = app.add_subcommand("automaton", "check a ping-pong automaton and set system");
  add_common(automaton, ac, true, true);
  automaton->add_option("--automaton", a_automaton, "automaton JSON (default ping-pong)");
  automaton->add_option("--sets", a_sets, "set system JSON (default ping-pong balls)");
  automaton->add_option("--depth", a_depth, "label enumeration depth");
  automaton->add_option("--epsilon", a_epsilon, "inflation of source sets");
  automaton->add_option("--set-radius", a_radius, "radius of the default balls");
  automaton->add_option("--paths", a_paths, "also measure nested diameters on this many G-paths");
  automaton->add_option("--length", a_length, "G-path length for --paths");
  automaton->callback([&] {
    action = [&] {
      Json p{{"depth", a_depth}, {"epsilon", a_epsilon}, {"set_radius", a_radius}};
      if (!a_automaton.empty()) p["automaton"] = load_json(a_automaton, "automaton");
      if (!a_sets.empty()) p["sets"] = load_json(a_sets, "sets");
      Json tasks = Json::array({task("automaton", "automaton", p)});
      if (a_paths > 0) {
        Json q = p;
        q.erase("depth");
        q["paths"] = a_paths;
        q["length"] = a_length;
        tasks.push_back(task("nested-diameters", "nested-diameters", q));
      }
      return run_tasks(ac, tasks, true);
    };
  });

  // edf
  Common ec;
  long long e_depth = 12;
  double e_u = 0.5, e_k = 0.25;
  bool e_require = true;
  auto* edf = app.add_subcommand("edf", "EDF condition and peripheral stability along a family");
  add_common(edf, ec, false, true);
  edf->add_option("--depth", e_depth, "peripheral word cutoff");
  edf->add_option("--u-radius", e_u, "radius of U about the peripheral fixed point");
  edf->add_option("--k-radius", e_k, "radius of K about the other fixed point");
  edf->add_option("--require-stability-failure", e_require, "demand that stability fails at every index");
  edf->callback([&] {
    action = [&] {
      Json queries = Json::array();
      for (int per = 0; per < 2; ++per) queries.push_back({{"peripheral", per}, {"u_radius", e_u}, {"k_radius", e_k}});
      Json p{{"depth", e_depth}, {"queries", queries}, {"require_stability_failure", e_require}};
      return run_tasks(ec, Json::array({task("edf", "edf", p)}), true);
    };
  });

  // chabauty
  Common hc;
  long long h_depth = 8, h_partner = -1;
  double h_radius = 10;
  auto* chabauty = app.add_subcommand("chabauty", "windowed Chabauty distances along a family");
  add_common(chabauty, hc, false, true);
  chabauty->add_option("--radius", h_radius, "matrix norm ball radius");
  chabauty->add_option("--depth", h_depth, "word depth");
  chabauty->add_option("--partner-depth", h_partner, "word depth of partner points");
  chabauty->callback([&] {
    action = [&] {
      Json p{{"radius", h_radius}, {"depth", h_depth}, {"partner_depth", h_partner}};
      return run_tasks(hc, Json::array({task("chabauty", "chabauty", p)}), true);
    };
  });

  // limitset
  Common mc;
  long long m_depth = 12;
  double m_max = 0.05;
  auto* limitset = app.add_subcommand("limitset", "Hausdorff distance of limit sets along a family");
  add_common(limitset, mc, false, true);
  limitset->add_option("--depth", m_depth, "word depth");
  limitset->add_option("--max-final", m_max, "bound for the last distance");
  limitset->callback([&] {
    action = [&] {
      Json p{{"depth", m_depth}, {"max_final", m_max}};
      return run_tasks(mc, Json::array({task("limitset", "limitset", p)}), true);
    };
  });

  // run
  std::string r_path, r_out;
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", r_path, "scenario JSON")->required();
  run->add_option("--out", r_out, "output directory (default from the scenario)");
  run->callback([&] {
    action = [&] {
      std::optional<fs::path> out;
      if (!r_out.empty()) out = r_out;
      const auto res = rhfill::run_scenario_file(r_path, out);
      std::cout << rhfill::dump_report(res.summary);
      return res.exit_status;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "rhfill: " << e.what() << "\n";
    return rhfill::exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rhfill: " << e.what() << "\n";
    return 1;
  }
}
