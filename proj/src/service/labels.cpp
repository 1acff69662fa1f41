#include "privi/service/labels.hpp"

#include <algorithm>
#include <fstream>

#include "privi/common/error.hpp"
#include "privi/common/io.hpp"
#include "privi/service/workspace.hpp"

namespace privi::service {

using nlohmann::json;

nlohmann::ordered_json LabelRecord::to_json() const {
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (const auto& [k, v] : criteria) c[k] = v;
  return {{"keyframe_ref", keyframe_ref},
          {"verdict", relevant ? "relevant" : "irrelevant"},
          {"annotator", annotator},
          {"timestamp", timestamp},
          {"criteria", c}};
}

LabelRecord LabelRecord::from_json(const json& j, const std::vector<std::string>& allowed_criteria) {
  if (!j.is_object()) throw SchemaError("label must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "keyframe_ref" && key != "verdict" && key != "annotator" && key != "timestamp" && key != "criteria")
      throw SchemaError("unknown label field '" + key + "'");
  const auto text = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw SchemaError(std::string("label is missing '") + key + "'");
      return {};
    }
    if (!j[key].is_string() || j[key].get<std::string>().empty())
      throw SchemaError(std::string("label field '") + key + "' must be a non-empty string");
    return j[key].get<std::string>();
  };
  LabelRecord r;
  r.keyframe_ref = text("keyframe_ref", true);
  const std::string verdict = text("verdict", true);
  if (verdict != "relevant" && verdict != "irrelevant")
    throw SchemaError("verdict must be 'relevant' or 'irrelevant', got '" + verdict + "'");
  r.relevant = verdict == "relevant";
  r.annotator = text("annotator", true);
  r.timestamp = text("timestamp", false);
  if (r.timestamp.empty()) r.timestamp = utc_timestamp();
  if (j.contains("criteria")) {
    const auto& c = j["criteria"];
    if (!c.is_object()) throw SchemaError("criteria must be an object of booleans");
    for (const auto& [k, v] : c.items()) {
      if (!v.is_boolean()) throw SchemaError("criterion '" + k + "' must be a boolean");
      if (!allowed_criteria.empty() &&
          std::find(allowed_criteria.begin(), allowed_criteria.end(), k) == allowed_criteria.end())
        throw SchemaError("unknown criterion '" + k + "'");
      r.criteria[k] = v.get<bool>();
    }
  }
  return r;
}

LabelLog::LabelLog(std::filesystem::path path) : path_(std::move(path)) {}

void LabelLog::append(const LabelRecord& record) {
  std::lock_guard lock(mu_);
  append_line_durable(path_, record.to_json().dump());
}

std::vector<LabelRecord> LabelLog::records() const {
  std::lock_guard lock(mu_);
  std::vector<LabelRecord> out;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(LabelRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ContractError("corrupt label log line in '" + path_.string() + "': " + e.what());
    }
  }
  return out;
}

std::map<std::pair<std::string, std::string>, LabelRecord> LabelLog::current() const {
  std::map<std::pair<std::string, std::string>, LabelRecord> out;
  for (auto& r : records()) out[{r.keyframe_ref, r.annotator}] = r;
  return out;
}

std::map<std::string, bool> LabelLog::verdicts() const {
  std::map<std::string, bool> out;
  for (const auto& r : records()) out[r.keyframe_ref] = r.relevant;
  return out;
}

std::set<std::string> LabelLog::labelled_keyframes() const {
  std::set<std::string> out;
  for (const auto& r : records()) out.insert(r.keyframe_ref);
  return out;
}

}  // namespace privi::service
