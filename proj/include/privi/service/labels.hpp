#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace privi::service {

struct LabelRecord {
  std::string keyframe_ref;  // snippet id of the labelled keyframe
  bool relevant = false;
  std::string annotator;
  std::string timestamp;
  std::map<std::string, bool> criteria;

  nlohmann::ordered_json to_json() const;
  // Throws SchemaError on a malformed payload. When `allowed_criteria` is
  // non-empty, criteria outside it are rejected. A missing timestamp is
  // filled with the current UTC time.
  static LabelRecord from_json(const nlohmann::json& j, const std::vector<std::string>& allowed_criteria = {});
};

// Append-only JSONL log. Each append is fsynced before returning; the latest
// record per (keyframe, annotator) wins.
class LabelLog {
 public:
  explicit LabelLog(std::filesystem::path path);

  void append(const LabelRecord& record);
  std::vector<LabelRecord> records() const;
  std::map<std::pair<std::string, std::string>, LabelRecord> current() const;
  // Keyframe -> verdict, taking the most recently appended current label.
  std::map<std::string, bool> verdicts() const;
  std::set<std::string> labelled_keyframes() const;
  std::size_t size() const { return records().size(); }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
};

}  // namespace privi::service
