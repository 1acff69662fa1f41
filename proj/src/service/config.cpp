#include "privi/service/config.hpp"

#include <set>

#include "privi/common/error.hpp"
#include "privi/common/hash.hpp"
#include "privi/common/io.hpp"

namespace privi::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ContractError("config key '" + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), "config section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items())
    require(allowed.count(key) > 0, "unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
}

curation::SourceDataset source_from_json(const json& j) {
  reject_unknown(j, {"id", "setting", "species", "diversity", "target_proportion", "chunk_stride_s"}, "sources[]");
  curation::SourceDataset s;
  s.id = get_as<std::string>(j.at("id"), "sources[].id");
  if (j.contains("setting")) s.setting = curation::parse_setting(get_as<std::string>(j["setting"], "setting"));
  if (j.contains("species")) s.species = get_as<std::vector<std::string>>(j["species"], "species");
  if (j.contains("diversity")) s.diversity = curation::parse_diversity(get_as<std::string>(j["diversity"], "diversity"));
  if (j.contains("target_proportion")) s.target_proportion = get_as<double>(j["target_proportion"], "target_proportion");
  if (j.contains("chunk_stride_s")) s.chunk_stride_s = get_as<double>(j["chunk_stride_s"], "chunk_stride_s");
  return s;
}

ordered_json source_to_json(const curation::SourceDataset& s) {
  return {{"id", s.id},
          {"setting", curation::to_string(s.setting)},
          {"species", s.species},
          {"diversity", curation::to_string(s.diversity)},
          {"target_proportion", s.target_proportion},
          {"chunk_stride_s", s.chunk_stride_s}};
}

}  // namespace

ordered_json fixture_options_to_json(const curation::FixtureOptions& o) {
  return {{"clips", o.clips},
          {"seed", o.seed},
          {"fps", o.fps},
          {"width", o.width},
          {"height", o.height},
          {"min_frames", o.min_frames},
          {"max_frames", o.max_frames},
          {"max_cuts", o.max_cuts},
          {"min_segment_frames", o.min_segment_frames},
          {"relevant_fraction", o.relevant_fraction},
          {"irrelevant_box_fraction", o.irrelevant_box_fraction},
          {"off_list_label_fraction", o.off_list_label_fraction},
          {"embedding_dim", o.embedding_dim},
          {"separation_sigma", o.separation_sigma}};
}

curation::FixtureOptions fixture_options_from_json(const json& j) {
  reject_unknown(j,
                 {"clips", "seed", "fps", "width", "height", "min_frames", "max_frames", "max_cuts",
                  "min_segment_frames", "relevant_fraction", "irrelevant_box_fraction", "off_list_label_fraction",
                  "embedding_dim", "separation_sigma"},
                 "fixture");
  curation::FixtureOptions o;
  for (const auto& [key, v] : j.items()) {
    const std::string k = "fixture." + key;
    if (key == "clips") o.clips = get_as<std::size_t>(v, k);
    else if (key == "seed") o.seed = get_as<std::uint64_t>(v, k);
    else if (key == "fps") o.fps = get_as<double>(v, k);
    else if (key == "width") o.width = get_as<int>(v, k);
    else if (key == "height") o.height = get_as<int>(v, k);
    else if (key == "min_frames") o.min_frames = get_as<std::size_t>(v, k);
    else if (key == "max_frames") o.max_frames = get_as<std::size_t>(v, k);
    else if (key == "max_cuts") o.max_cuts = get_as<std::size_t>(v, k);
    else if (key == "min_segment_frames") o.min_segment_frames = get_as<std::size_t>(v, k);
    else if (key == "relevant_fraction") o.relevant_fraction = get_as<double>(v, k);
    else if (key == "irrelevant_box_fraction") o.irrelevant_box_fraction = get_as<double>(v, k);
    else if (key == "off_list_label_fraction") o.off_list_label_fraction = get_as<double>(v, k);
    else if (key == "embedding_dim") o.embedding_dim = get_as<std::size_t>(v, k);
    else if (key == "separation_sigma") o.separation_sigma = get_as<double>(v, k);
  }
  return o;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"sources", "videos", "fixture", "cut_threshold", "snippet_length_s", "relevance",
                  "relevance_threshold", "nms_iou", "detection_score", "detection_prompt", "subsample_budget",
                  "subsample_targets", "label_criteria", "providers", "seed", "workers", "workspace"},
                 "");
  PipelineConfig c;
  if (j.contains("sources"))
    for (const auto& s : j["sources"]) c.sources.push_back(source_from_json(s));
  if (j.contains("videos")) {
    for (const auto& v : j["videos"]) {
      reject_unknown(v, {"video_ref", "source_id", "kind", "path", "command", "fps", "frame_count"}, "videos[]");
      VideoSpec spec;
      spec.video_ref = get_as<std::string>(v.at("video_ref"), "videos[].video_ref");
      spec.source_id = get_as<std::string>(v.at("source_id"), "videos[].source_id");
      if (v.contains("kind")) spec.kind = get_as<std::string>(v["kind"], "videos[].kind");
      if (v.contains("path")) spec.path = get_as<std::string>(v["path"], "videos[].path");
      if (v.contains("command")) spec.command = get_as<std::string>(v["command"], "videos[].command");
      if (v.contains("fps")) spec.fps = get_as<double>(v["fps"], "videos[].fps");
      if (v.contains("frame_count")) spec.frame_count = get_as<std::size_t>(v["frame_count"], "videos[].frame_count");
      c.videos.push_back(std::move(spec));
    }
  }
  if (j.contains("fixture")) c.fixture = fixture_options_from_json(j["fixture"]);
  if (j.contains("cut_threshold")) c.cut_threshold = get_as<double>(j["cut_threshold"], "cut_threshold");
  if (j.contains("snippet_length_s")) c.snippet_length_s = get_as<double>(j["snippet_length_s"], "snippet_length_s");
  if (j.contains("relevance")) {
    const auto& r = j["relevance"];
    reject_unknown(r, {"hidden_dim", "dropout", "val_fraction", "epochs", "batch_size", "base_lr", "min_precision"},
                   "relevance");
    if (r.contains("hidden_dim")) c.relevance.hidden_dim = get_as<std::size_t>(r["hidden_dim"], "relevance.hidden_dim");
    if (r.contains("dropout")) c.relevance.dropout = get_as<double>(r["dropout"], "relevance.dropout");
    if (r.contains("val_fraction")) c.relevance.val_fraction = get_as<double>(r["val_fraction"], "relevance.val_fraction");
    if (r.contains("epochs")) c.relevance.epochs = get_as<std::size_t>(r["epochs"], "relevance.epochs");
    if (r.contains("batch_size")) c.relevance.batch_size = get_as<std::size_t>(r["batch_size"], "relevance.batch_size");
    if (r.contains("base_lr")) c.relevance.base_lr = get_as<double>(r["base_lr"], "relevance.base_lr");
    if (r.contains("min_precision"))
      c.relevance.min_precision = get_as<double>(r["min_precision"], "relevance.min_precision");
  }
  if (j.contains("relevance_threshold") && !j["relevance_threshold"].is_null())
    c.relevance_threshold = get_as<double>(j["relevance_threshold"], "relevance_threshold");
  if (j.contains("nms_iou")) c.nms_iou = get_as<double>(j["nms_iou"], "nms_iou");
  if (j.contains("detection_score")) c.detection_score = get_as<double>(j["detection_score"], "detection_score");
  if (j.contains("detection_prompt")) c.detection_prompt = get_as<std::string>(j["detection_prompt"], "detection_prompt");
  if (j.contains("subsample_budget") && !j["subsample_budget"].is_null()) c.subsample_budget = get_as<std::size_t>(j["subsample_budget"], "subsample_budget");
  if (j.contains("subsample_targets"))
    c.subsample_targets = get_as<std::map<std::string, double>>(j["subsample_targets"], "subsample_targets");
  if (j.contains("label_criteria")) c.label_criteria = get_as<std::vector<std::string>>(j["label_criteria"], "label_criteria");
  if (j.contains("providers")) {
    const auto& p = j["providers"];
    reject_unknown(p, {"embedder", "detector", "timeout_s", "retries", "max_in_flight"}, "providers");
    if (p.contains("embedder")) c.providers.embedder = get_as<std::string>(p["embedder"], "providers.embedder");
    if (p.contains("detector")) c.providers.detector = get_as<std::string>(p["detector"], "providers.detector");
    if (p.contains("timeout_s")) c.providers.timeout_s = get_as<double>(p["timeout_s"], "providers.timeout_s");
    if (p.contains("retries")) c.providers.retries = get_as<int>(p["retries"], "providers.retries");
    if (p.contains("max_in_flight")) c.providers.max_in_flight = get_as<int>(p["max_in_flight"], "providers.max_in_flight");
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("workers")) c.workers = get_as<std::size_t>(j["workers"], "workers");
  if (j.contains("workspace")) c.workspace = get_as<std::string>(j["workspace"], "workspace");
  c.relevance.seed = c.seed;
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  require(std::filesystem::is_regular_file(path), "config file '" + path.string() + "' does not exist");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ContractError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

ordered_json PipelineConfig::to_json() const {
  ordered_json j;
  j["sources"] = ordered_json::array();
  for (const auto& s : sources) j["sources"].push_back(source_to_json(s));
  j["videos"] = ordered_json::array();
  for (const auto& v : videos)
    j["videos"].push_back({{"video_ref", v.video_ref}, {"source_id", v.source_id}, {"kind", v.kind}, {"path", v.path},
                           {"command", v.command}, {"fps", v.fps}, {"frame_count", v.frame_count}});
  if (fixture) j["fixture"] = fixture_options_to_json(*fixture);
  j["cut_threshold"] = cut_threshold;
  j["snippet_length_s"] = snippet_length_s;
  j["relevance"] = {{"hidden_dim", relevance.hidden_dim}, {"dropout", relevance.dropout},
                    {"val_fraction", relevance.val_fraction}, {"epochs", relevance.epochs},
                    {"batch_size", relevance.batch_size}, {"base_lr", relevance.base_lr},
                    {"min_precision", relevance.min_precision}};
  j["relevance_threshold"] = relevance_threshold ? ordered_json(*relevance_threshold) : ordered_json(nullptr);
  j["nms_iou"] = nms_iou;
  j["detection_score"] = detection_score;
  j["detection_prompt"] = detection_prompt;
  j["subsample_budget"] = subsample_budget ? ordered_json(*subsample_budget) : ordered_json(nullptr);
  j["subsample_targets"] = ordered_json(subsample_targets);
  j["label_criteria"] = label_criteria;
  j["providers"] = {{"embedder", providers.embedder}, {"detector", providers.detector},
                    {"timeout_s", providers.timeout_s}, {"retries", providers.retries},
                    {"max_in_flight", providers.max_in_flight}};
  j["seed"] = seed;
  j["workers"] = workers;
  j["workspace"] = workspace;
  return j;
}

std::string PipelineConfig::hash() const {
  ordered_json j = to_json();
  j.erase("workspace");
  j.erase("workers");
  return sha256_hex(j.dump());
}

void PipelineConfig::validate() const {
  curation::validate_sources(sources);
  std::set<std::string> ids;
  for (const auto& s : sources) ids.insert(s.id);
  std::set<std::string> refs;
  for (const auto& v : videos) {
    require(!v.video_ref.empty(), "videos[] entry without video_ref");
    require(refs.insert(v.video_ref).second, "duplicate video_ref '" + v.video_ref + "'");
    require(ids.count(v.source_id) > 0, "video '" + v.video_ref + "' names unknown source '" + v.source_id + "'");
    require(v.kind == "frames_dir" || v.kind == "decoder", "video '" + v.video_ref + "' has unknown kind '" + v.kind + "'");
    require(v.fps > 0, "video '" + v.video_ref + "' needs a positive fps");
    if (v.kind == "decoder") require(!v.command.empty() && v.frame_count > 0, "decoder video '" + v.video_ref + "' needs command and frame_count");
    else require(!v.path.empty(), "frames_dir video '" + v.video_ref + "' needs a path");
  }
  if (fixture) {
    for (const auto& s : curation::fixture_sources())
      require(ids.count(s.id) > 0, "fixture corpus needs source '" + s.id + "' in the config");
  }
  require(cut_threshold > 0, "cut_threshold must be positive");
  require(snippet_length_s > 0, "snippet_length_s must be positive");
  for (const auto& s : sources)
    require(s.chunk_stride_s <= snippet_length_s, "source '" + s.id + "' stride exceeds the snippet length");
  require(relevance.min_precision > 0 && relevance.min_precision <= 1, "relevance.min_precision must be in (0, 1]");
  require(relevance.val_fraction > 0 && relevance.val_fraction < 1, "relevance.val_fraction must be in (0, 1)");
  require(relevance.dropout >= 0 && relevance.dropout < 1, "relevance.dropout must be in [0, 1)");
  if (relevance_threshold)
    require(*relevance_threshold > 0 && *relevance_threshold < 1, "relevance_threshold must be in (0, 1)");
  require(nms_iou >= 0 && nms_iou <= 1, "nms_iou must be in [0, 1]");
  require(detection_score >= 0 && detection_score <= 1, "detection_score must be in [0, 1]");
  double total = 0.0;
  for (const auto& [id, t] : subsample_targets) {
    require(ids.count(id) > 0, "subsample_targets names unknown source '" + id + "'");
    require(t >= 0 && t <= 1, "subsample target for '" + id + "' must be in [0, 1]");
    total += t;
  }
  require(total <= 1.0 + 1e-9, "subsample_targets sum above 1");
  require(providers.timeout_s > 0 && providers.retries >= 0 && providers.max_in_flight >= 1,
          "providers timeout, retries and max_in_flight must be positive");
  require(workers >= 1, "workers must be at least 1");
}

std::map<std::string, double> PipelineConfig::effective_targets() const {
  if (!subsample_targets.empty()) return subsample_targets;
  std::map<std::string, double> t;
  for (const auto& s : sources) t[s.id] = s.target_proportion;
  return t;
}

const curation::SourceDataset& PipelineConfig::source(const std::string& id) const {
  for (const auto& s : sources)
    if (s.id == id) return s;
  throw ContractError("unknown source '" + id + "'");
}

}  // namespace privi::service
