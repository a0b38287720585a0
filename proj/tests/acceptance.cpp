// Acceptance run: one line per criterion.  Exit status is 0 when every
// criterion passes, except those listed with --expect-fail, which must fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "rhfill/errors.hpp"
#include "rhfill/filling.hpp"
#include "rhfill/metric_lemmas.hpp"
#include "rhfill/scenario.hpp"

using namespace rhfill;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  // Extra analysis printed after the timed part.
  std::function<std::string()> diagnose;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::shared_ptr<const RelHypPair> f2() { return free_pair_of_rank_two(); }

Outcome horoball_oracle() {
  HoroballGraph h(integer_path_graph(64), 8);
  std::size_t pairs = 0, bad = 0;
  for (std::size_t i = 0; i < h.base_size(); ++i) {
    const auto bfs = h.graph().bfs(h.vertex(i, 0));
    for (std::size_t j = 0; j < h.base_size(); ++j, ++pairs)
      if (regular_geodesic(h, h.vertex(i, 0), h.vertex(j, 0)).length() !=
          static_cast<std::size_t>(bfs.distance[h.vertex(j, 0)]))
        ++bad;
  }
  return {bad == 0, std::to_string(pairs) + " pairs, " + std::to_string(bad) + " mismatches"};
}

const MetricLemmaReport& lemmas() {
  static const MetricLemmaReport r = verify_metric_lemmas(f2(), 6);
  return r;
}

Outcome check_line(const PropertyCheck& c) {
  return {c.pass(), std::to_string(c.checked) + " checked, " + std::to_string(c.violations) +
                        " violations, delta " + fmt("%.2f", lemmas().delta)};
}

Outcome local_isometry() {
  auto pair = f2();
  auto run = [pair](Int n) { return check_local_isometry(build_quotient_cusped(make_power_filling(pair, {n, n}), 10), 5); };
  const auto big = run(50);
  const auto small = run(3);
  const std::size_t big_bad = big.isometry.violations + big.image_ball.violations;
  const std::size_t small_bad = small.isometry.violations + small.image_ball.violations;
  Outcome o{big_bad == 0 && small_bad >= 1,
            "n=50: " + std::to_string(big_bad) + " violations; n=3: " + std::to_string(small_bad) + " witnesses"};
  if (big_bad) {
    // The failure is geometric, not numerical: report where isometry starts.
    o.diagnose = [run] {
      for (Int n = 51; n <= 70; ++n)
        if (run(n).pass()) return "isometry first holds at n = " + std::to_string(n);
      return std::string("isometry fails for every n <= 70");
    };
  }
  return o;
}

Outcome lifts() {
  const auto fg = build_quotient_cusped(make_power_filling(f2(), {50, 50}), 8, 4);
  const auto r = check_lifts(fg, 1000, 1);
  return {r.pass(), std::to_string(r.walks) + " walks, " + std::to_string(r.geodesics) + " geodesics, " +
                        std::to_string(r.round_trip.violations + r.tight.violations) + " violations"};
}

Outcome injectivity() {
  bool ok = true;
  std::string detail;
  for (Int n : {11, 21, 51}) {
    const Int radius = std::min<Int>((n - 1) / 2, 5);
    const auto r = check_injectivity(make_power_filling(f2(), {n, n}), radius);
    ok = ok && r.pass();
    detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + (r.pass() ? " ok" : " FAIL");
  }
  return {ok, detail};
}

const RepFamily& family() {
  static const RepFamily f = RepFamily::sanov_elliptic(3, {10, 20, 30, 40, 60});
  return f;
}

Outcome compatibility() {
  const auto& fam = family();
  const auto g = ping_pong_automaton(fam.pair_ptr());
  const auto r = check_compatibility(fam.base(), g, ping_pong_sets(0.7, 0.02), 12);
  return {r.verdict() == "pass" && r.inclusion.worst_margin > 0,
          std::to_string(r.inclusion.checked) + " inclusions, min margin " + fmt("%.4f", r.inclusion.worst_margin)};
}

Outcome contraction() {
  const auto& fam = family();
  const auto g = ping_pong_automaton(fam.pair_ptr());
  const auto sys = ping_pong_sets(0.7, 0.02);
  const auto paths = sample_gpaths(g, 10, 12, 50, 1);
  double worst = 0;
  std::size_t rep = 0;
  bool monotone = true;
  for (const auto& p : paths) {
    const auto d = nested_diameters(fam.base(), p, sys);
    worst = std::max(worst, d.rate);
    rep = std::max(rep, d.max_repetition);
    monotone = monotone && d.monotone;
  }
  return {paths.size() == 50 && worst < 0.9 && monotone && rep <= 2,
          std::to_string(paths.size()) + " paths, worst rate " + fmt("%.4f", worst) + ", repetition " +
              std::to_string(rep) + (monotone ? ", monotone" : ", NOT monotone")};
}

Outcome edf() {
  const auto fam = RepFamily::sanov_elliptic(3, {30, 40, 60});
  bool holds = true;
  std::set<Int> unstable;
  for (int p : {0, 1}) {
    const auto r = edf_condition_check(fam, sanov_edf_query(p, 0.5, 0.25), 12);
    holds = holds && r.edf_holds();
    for (const auto& row : r.rows)
      if (row.stability == "fail") unstable.insert(row.n);
  }
  return {holds && unstable.size() == 3,
          std::string("EDF ") + (holds ? "holds" : "fails") + "; stability fails at " + std::to_string(unstable.size()) +
              " of 3 indices"};
}

Outcome limit_sets() {
  const auto t = limit_set_convergence(family(), 12, ParabolicType::projective(2));
  std::string detail;
  for (const auto& row : t.rows) detail += (detail.empty() ? "" : " ") + fmt("%.4f", row.hausdorff);
  const double last = t.rows.empty() ? 1 : t.rows.back().hausdorff;
  return {t.decreasing() && t.rows.size() == 5 && t.rows.back().screened && last < 0.05, "d_H = " + detail};
}

Outcome chabauty() {
  bool ok = true;
  std::string detail;
  for (int p : {-1, 0, 1}) {
    const auto t = chabauty_check(family(), 10, 8, p);
    ok = ok && t.decreasing();
    detail += (detail.empty() ? "" : "; ") + std::string(p < 0 ? "full" : p == 0 ? "<a>" : "<b>") +
              (t.decreasing() ? " decreasing" : " NOT decreasing") + " to " + fmt("%.4f", t.rows.back().distance());
  }
  return {ok, detail};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path scenario = fs::path(RHFILL_SOURCE_DIR) / "scenarios" / "sanov-filling.json";
  const fs::path base = fs::temp_directory_path() / "rhfill-acceptance";
  fs::remove_all(base);
  const auto a = run_scenario_file(scenario, base / "a");
  const auto b = run_scenario_file(scenario, base / "b");
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(base / "a")) {
    ++files;
    if (read_all(e.path()) != read_all(base / "b" / e.path().filename())) ++differ;
  }
  std::size_t b_files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(base / "b")) ++b_files;
  fs::remove_all(base);
  return {differ == 0 && files == b_files && files > 0 && a.exit_status == 0 && b.exit_status == 0,
          std::to_string(files) + " files compared, " + std::to_string(differ) + " differ, scenario exit " +
              std::to_string(a.exit_status)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail, only;
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto list = [&](std::set<int>& into) {
      if (i + 1 >= argc) throw std::invalid_argument(arg + " needs a list");
      std::stringstream ss(argv[++i]);
      for (std::string x; std::getline(ss, x, ',');) into.insert(std::stoi(x));
    };
    if (arg == "--expect-fail") list(expect_fail);
    else if (arg == "--only") list(only);
    else if (arg == "--report" && i + 1 < argc) report_path = argv[++i];
    else {
      std::cerr << "usage: acceptance [--only 1,2] [--expect-fail 5] [--report file]\n";
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* title;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "horoball oracle equivalence", 10, horoball_oracle},
      {2, "metric comparison lemma", 30, [] { return check_line(lemmas().comparison); }},
      {3, "horoball-entry bound", 60, [] { return check_line(lemmas().horoball_entry); }},
      {4, "quasidensity", 60, [] { return check_line(lemmas().quasidensity); }},
      {5, "filling local isometry", 60, local_isometry},
      {6, "lift round trip and tightness", 30, lifts},
      {7, "filling injectivity window", 10, injectivity},
      {8, "ping-pong compatibility", 30, compatibility},
      {9, "contraction along G-paths", 60, contraction},
      {10, "EDF versus peripheral stability", 60, edf},
      {11, "limit-set Hausdorff convergence", 300, limit_sets},
      {12, "Chabauty convergence proxy", 300, chabauty},
      {13, "determinism of the bundled scenario", 900, determinism},
  };

  std::ofstream report;
  if (!report_path.empty()) report.open(report_path);
  auto line = [&](const std::string& text) {
    std::cout << text << std::endl;
    if (report) report << text << std::endl;
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    line("criterion " + std::to_string(c.id) + " [" + (pass ? "PASS" : "FAIL") + "] " + c.title + ": " + o.detail +
         " (" + fmt("%.1f", secs) + " s, limit " + fmt("%.0f", c.limit_seconds) + " s" + (in_time ? "" : ", over time") +
         ")" + (!pass && expect_fail.count(c.id) ? " [known failure]" : ""));
    if (o.diagnose) line("  criterion " + std::to_string(c.id) + " analysis: " + o.diagnose());
    if (pass == static_cast<bool>(expect_fail.count(c.id))) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
