#include "rhfill/report.hpp"

#include <cmath>

namespace rhfill {

void PropertyCheck::merge(const PropertyCheck& other) {
  checked += other.checked;
  violations += other.violations;
  if (other.worst_margin < worst_margin) {
    worst_margin = other.worst_margin;
    worst = other.worst;
  }
  for (const auto& w : other.witnesses)
    if (witnesses.size() < witness_limit) witnesses.push_back(w);
}

Json PropertyCheck::to_json() const {
  Json j;
  j["name"] = name;
  j["verdict"] = pass() ? "pass" : "fail";
  j["checked"] = checked;
  j["violations"] = violations;
  if (std::isfinite(worst_margin)) {
    j["worst_margin"] = worst_margin;
    j["worst"] = worst;
  } else {
    j["worst_margin"] = nullptr;
  }
  j["witnesses"] = witnesses;
  if (!details.empty()) j["details"] = details;
  return j;
}

}  // namespace rhfill
