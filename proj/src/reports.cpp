#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "hbbm/analysis.hpp"
#include "hbbm/io.hpp"

namespace hbbm {

using nlohmann::ordered_json;

void write_report_json(std::ostream& out, const EstimateReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["estimate"] = r.estimate;
  j["stderr"] = r.std_error;
  j["scales"] = {r.scale_min, r.scale_max};
  j["points_per_scale"] = r.points_per_scale;
  j["replicates"] = r.replicates;
  j["target"] = r.target ? ordered_json(*r.target) : ordered_json(nullptr);
  j["provenance"] = r.provenance;
  j["r_squared"] = r.r_squared;
  j["notes"] = r.notes;
  out << j.dump(2) << '\n';
}

void write_report_json(std::ostream& out, const ValidationReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["lhs"] = r.lhs;
  j["lhs_se"] = r.lhs_se;
  j["rhs"] = r.rhs;
  j["rhs_se"] = r.rhs_se;
  j["z"] = r.z;
  j["lhs_samples"] = r.lhs_samples;
  j["rhs_samples"] = r.rhs_samples;
  ordered_json extras = ordered_json::object();
  for (const auto& [key, value] : r.extras) extras[key] = value;
  j["extras"] = extras;
  j["notes"] = r.notes;
  out << j.dump(2) << '\n';
}

void write_points_csv(std::ostream& out, const EstimateReport& report) {
  out << "delta,value\n";
  for (const auto& p : report.points) {
    write_double(out, p.delta);
    out << ',';
    write_double(out, p.value);
    out << '\n';
  }
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t replicate) noexcept {
  return splitmix64(splitmix64(base) ^ (replicate * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
}

std::string_view to_string(BoxMode mode) noexcept {
  return mode == BoxMode::support ? "support" : "all-points";
}

BoxMode parse_box_mode(std::string_view text) {
  if (text == "support") return BoxMode::support;
  if (text == "all-points") return BoxMode::all_points;
  throw ConfigError("mode", "expected 'support' or 'all-points', got '" + std::string(text) + "'");
}

std::string_view to_string(TestFunction f) noexcept {
  switch (f) {
    case TestFunction::one:
      return "one";
    case TestFunction::interval:
      return "interval";
    case TestFunction::envelope:
      return "envelope";
  }
  return "one";
}

TestFunction parse_test_function(std::string_view text) {
  if (text == "one") return TestFunction::one;
  if (text == "interval") return TestFunction::interval;
  if (text == "envelope") return TestFunction::envelope;
  throw ConfigError("f", "expected 'one', 'interval' or 'envelope', got '" + std::string(text) + "'");
}

}  // namespace hbbm
