#include "privi/service/workspace.hpp"

#include <chrono>
#include <ctime>

#include "privi/common/error.hpp"
#include "privi/common/hash.hpp"
#include "privi/common/io.hpp"

namespace privi::service {

namespace fs = std::filesystem;

nlohmann::ordered_json RunRecord::to_json() const {
  return {{"stage", stage},   {"config_hash", config_hash}, {"inputs", inputs},
          {"outputs", outputs}, {"duration_s", duration_s}, {"finished_at", finished_at}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.stage = j.at("stage").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  r.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  r.duration_s = j.at("duration_s").get<double>();
  r.finished_at = j.at("finished_at").get<std::string>();
  return r;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
  require(!root_.empty(), "workspace path is empty (use --workspace or PRIVI_WORKSPACE)");
  fs::create_directories(root_ / "stages");
  fs::create_directories(root_ / "objects");
  fs::create_directories(root_ / "runs");
}

fs::path Workspace::stage_dir(std::string_view stage) const {
  const auto dir = root_ / "stages" / std::string(stage);
  fs::create_directories(dir);
  return dir;
}

fs::path Workspace::stage_file(std::string_view stage, std::string_view name) const {
  return stage_dir(stage) / std::string(name);
}

bool Workspace::has(std::string_view stage, std::string_view name) const {
  return fs::exists(root_ / "stages" / std::string(stage) / std::string(name));
}

fs::path Workspace::object_path(const std::string& hash) const { return root_ / "objects" / hash; }

std::string Workspace::put(std::string_view stage, std::string_view name, std::string_view bytes) {
  const std::string hash = sha256_hex(bytes);
  if (!fs::exists(object_path(hash))) write_file_atomic(object_path(hash), bytes);
  write_file_atomic(stage_file(stage, name), bytes);
  return hash;
}

std::string Workspace::commit(std::string_view stage, std::string_view name) {
  const std::string bytes = read_file(stage_file(stage, name));
  const std::string hash = sha256_hex(bytes);
  if (!fs::exists(object_path(hash))) write_file_atomic(object_path(hash), bytes);
  return hash;
}

std::string Workspace::get(std::string_view stage, std::string_view name) const {
  if (!has(stage, name))
    throw MissingArtifactError("missing stage artifact '" + std::string(stage) + "/" + std::string(name) +
                               "'; run the '" + std::string(stage) + "' stage first");
  return read_file(root_ / "stages" / std::string(stage) / std::string(name));
}

std::string Workspace::hash_of(std::string_view stage, std::string_view name) const {
  return sha256_hex(get(stage, name));
}

void Workspace::write_run_record(const RunRecord& record) {
  write_file_atomic(root_ / "runs" / (record.stage + ".json"), record.to_json().dump(2) + "\n");
}

std::optional<RunRecord> Workspace::run_record(std::string_view stage) const {
  const auto path = root_ / "runs" / (std::string(stage) + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return RunRecord::from_json(nlohmann::json::parse(read_file(path)));
}

}  // namespace privi::service
