#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace privi::service {

// What a stage run consumed and produced, keyed by artifact name.
struct RunRecord {
  std::string stage;
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // name -> sha256
  std::map<std::string, std::string> outputs;  // name -> sha256
  double duration_s = 0.0;
  std::string finished_at;  // ISO-8601 UTC

  nlohmann::ordered_json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// Directory layout:
//   stages/<stage>/<name>   latest artifact of each stage
//   objects/<sha256>        content-addressed copy of every artifact written
//   runs/<stage>.json       run record of the latest run
//   labels.jsonl            label log
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path stage_dir(std::string_view stage) const;
  std::filesystem::path stage_file(std::string_view stage, std::string_view name) const;
  bool has(std::string_view stage, std::string_view name) const;

  // Atomically writes the artifact and its object copy; returns the hash.
  std::string put(std::string_view stage, std::string_view name, std::string_view bytes);
  // Registers a file already written at stage_file(stage, name).
  std::string commit(std::string_view stage, std::string_view name);
  // Throws ContractError naming the missing artifact.
  std::string get(std::string_view stage, std::string_view name) const;
  std::string hash_of(std::string_view stage, std::string_view name) const;
  std::filesystem::path object_path(const std::string& hash) const;

  void write_run_record(const RunRecord& record);
  std::optional<RunRecord> run_record(std::string_view stage) const;

  std::filesystem::path labels_path() const { return root_ / "labels.jsonl"; }

 private:
  std::filesystem::path root_;
};

std::string utc_timestamp();

}  // namespace privi::service
