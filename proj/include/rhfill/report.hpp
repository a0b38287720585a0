#pragma once

#include <cstddef>
#include <limits>
#include <string>

#include <json.hpp>

namespace rhfill {

using Json = nlohmann::ordered_json;

/// Outcome of checking one inequality over many instances.  The margin of an
/// instance is bound minus measured value; negative margins are violations.
struct PropertyCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  Json worst;  // instance attaining worst_margin
  Json witnesses = Json::array();
  Json details = Json::object();
  std::size_t witness_limit = 8;

  explicit PropertyCheck(std::string n = {}) : name(std::move(n)) {}

  bool pass() const noexcept { return violations == 0; }

  /// Records one instance; `describe` is only invoked when the instance is
  /// kept as a witness or as the worst case.
  template <class Describe>
  void record(double margin, Describe&& describe) {
    ++checked;
    const bool violated = margin < 0;
    const bool worse = margin < worst_margin;
    if (!violated && !worse) return;
    Json item = describe();
    if (worse) {
      worst_margin = margin;
      worst = item;
    }
    if (violated) {
      ++violations;
      if (witnesses.size() < witness_limit) witnesses.push_back(std::move(item));
    }
  }

  /// Folds another check of the same property into this one.
  void merge(const PropertyCheck& other);

  Json to_json() const;
};

}  // namespace rhfill
