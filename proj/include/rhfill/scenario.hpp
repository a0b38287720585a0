#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rhfill/family.hpp"

namespace rhfill {

/// {"kind": "free" | "free-abelian" | "finite-cyclic" | "free-product", "rank",
/// "order", "factors"}.  Raises schema-error naming the offending field.
std::shared_ptr<const GroupOracle> group_from_json(const Json& j, const std::string& where = "group");

/// {"group": descriptor, "peripherals": [[words], ...]}; without
/// "peripherals" every factor is peripheral.
std::shared_ptr<const RelHypPair> pair_from_json(const Json& j, const std::string& where = "pair");

/// {"0": ["a^50"], "1": [[50]]} or [["a^50"], ["b^50"]]: per peripheral,
/// words or exponent vectors in the factor's generators.
std::vector<std::vector<GroupElement>> kernels_from_json(const RelHypPair& pair, const Json& j,
                                                         const std::string& where = "kernels");

/// Scenario limits.  Exceeding one raises budget-exceeded.
struct Budgets {
  std::size_t elements = kDefaultElementCap;  // ball and window sizes
  std::size_t edges = 10'000'000;             // automaton edge/label pairs
  double seconds = 1800;                      // checked after every task
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  Json pair_spec;    // null when absent
  Json family_spec;  // null when absent
  Budgets budgets;
  std::filesystem::path output_dir = "out";
  std::vector<Json> tasks;  // {"name", "kind", "params", "assert"}

  /// Validates every task kind, parameter name, kernel word and reference;
  /// raises schema-error naming the field.
  static Scenario from_json(const Json& j);
};

/// Task kinds understood by run_task.
const std::vector<std::string>& task_kinds();

/// Shared state of a run: the pair and family are built once.
class ScenarioContext {
 public:
  explicit ScenarioContext(const Scenario& s);

  const Scenario& scenario() const noexcept { return s_; }
  std::shared_ptr<const RelHypPair> pair() const;
  const RepFamily& family() const;
  /// Directory for auxiliary outputs such as graph dumps (may be empty).
  std::filesystem::path output_dir;

 private:
  const Scenario& s_;
  std::shared_ptr<const RelHypPair> pair_;
  std::optional<RepFamily> family_;
};

/// Report of one task: {"task", "kind", "asserted", "verdict", "result",
/// optional "table": {"columns", "rows"}}.  Verdicts are "pass", "fail" or
/// "inconclusive"; only asserted tasks affect the exit status.
Json run_task(const ScenarioContext& ctx, const Json& task);

struct ScenarioResult {
  Json summary;
  std::vector<std::pair<std::string, Json>> reports;  // task name, report
  int exit_status = 0;  // 0 all asserted verdicts pass, 1 otherwise
};

/// Runs the tasks in order without touching the file system (except for
/// explicitly requested dumps).
ScenarioResult run_scenario(const Scenario& s, const std::filesystem::path& output_dir = {});

/// Loads the scenario, runs it, and writes <out>/<task>.json, <out>/<task>.csv
/// for tabular reports, and <out>/summary.json.  `out` defaults to the
/// scenario's output directory, relative to the scenario file.
ScenarioResult run_scenario_file(const std::filesystem::path& path,
                                 std::optional<std::filesystem::path> out = std::nullopt);

/// CSV of the report's "table" section with a header row; raises
/// no-tabular-data when there is none.
std::string emit_plot_data(const Json& report);

/// Canonical serialisation used for every written report.
std::string dump_report(const Json& j);

}  // namespace rhfill
