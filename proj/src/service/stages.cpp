#include "privi/service/stages.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "privi/common/error.hpp"
#include "privi/common/hash.hpp"
#include "privi/common/parallel.hpp"
#include "privi/common/rng.hpp"
#include "privi/curation/boxes.hpp"
#include "privi/curation/chunk.hpp"
#include "privi/curation/cuts.hpp"
#include "privi/curation/detection_filter.hpp"
#include "privi/curation/embedding_store.hpp"
#include "privi/curation/manifest.hpp"
#include "privi/curation/species.hpp"
#include "privi/curation/subsample.hpp"
#include "privi/metrics/metrics.hpp"
#include "privi/providers/http_client.hpp"
#include "privi/providers/synthetic.hpp"

namespace privi::service {

using nlohmann::json;
using nlohmann::ordered_json;
namespace cur = privi::curation;

namespace {

constexpr const char* kSnippets = "snippets.jsonl";
constexpr const char* kEmbeddings = "embeddings.pvem";

std::string key(std::string_view stage, std::string_view name) { return std::string(stage) + "/" + std::string(name); }

ordered_json discard_tally(const std::vector<cur::Snippet>& snippets) {
  std::map<std::string, std::size_t> by_reason;
  std::size_t kept = 0;
  for (const auto& s : snippets) {
    if (s.kept)
      ++kept;
    else
      ++by_reason[std::string(cur::to_string(s.discard_reason))];
  }
  return {{"total", snippets.size()}, {"kept", kept}, {"discarded", ordered_json(by_reason)}};
}

std::vector<cur::Snippet> sorted_by_id(std::vector<cur::Snippet> s) {
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.snippet_id < b.snippet_id; });
  return s;
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::cuts: return "cuts";
    case Stage::chunk: return "chunk";
    case Stage::embed: return "embed";
    case Stage::detect: return "detect";
    case Stage::filter: return "filter";
    case Stage::subsample: return "subsample";
    case Stage::manifest: return "manifest";
  }
  return "cuts";
}

Stage parse_stage(std::string_view name) {
  for (auto s : kAllStages)
    if (to_string(s) == name) return s;
  throw ContractError("unknown stage '" + std::string(name) + "'");
}

ordered_json StageResult::to_json() const {
  return {{"stage", to_string(stage)}, {"record", record.to_json()}, {"warnings", warnings},
          {"pending", pending},        {"summary", summary}};
}

ProviderSet make_providers(const PipelineConfig& config) {
  ProviderSet set;
  HttpClientOptions http;
  http.timeout = std::chrono::milliseconds(static_cast<long>(config.providers.timeout_s * 1000));
  http.retries = config.providers.retries;
  http.max_in_flight = config.providers.max_in_flight;
  std::map<std::string, std::shared_ptr<HttpInferenceClient>> clients;
  const auto client = [&](const std::string& url) {
    auto& c = clients[url];
    if (!c) c = std::make_shared<HttpInferenceClient>(url, http);
    return c;
  };
  const auto is_url = [](const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; };

  const auto& e = config.providers.embedder;
  if (e == "synthetic") {
    // Without a fixture the embed stage reports the missing provider.
    if (config.fixture)
      set.embedder = std::make_shared<SyntheticEmbedder>(cur::make_fixture_corpus(*config.fixture).embedder());
  } else if (is_url(e)) {
    set.embedder = client(e);
  } else {
    throw ContractError("unknown embedder '" + e + "'");
  }
  const auto& d = config.providers.detector;
  if (d == "synthetic") set.detector = std::make_shared<TagDetector>();
  else if (d == "empty") set.detector = std::make_shared<EmptyDetector>();
  else if (is_url(d)) set.detector = client(d);
  else throw ContractError("unknown detector '" + d + "'");
  return set;
}

Pipeline::Pipeline(PipelineConfig config, Workspace workspace)
    : Pipeline(config, std::move(workspace), make_providers(config)) {}

Pipeline::Pipeline(PipelineConfig config, Workspace workspace, ProviderSet providers)
    : config_(std::move(config)),
      workspace_(std::move(workspace)),
      providers_(std::move(providers)),
      labels_(workspace_.labels_path()) {
  config_.validate();
  for (const auto& v : config_.videos) {
    std::shared_ptr<const cur::FrameSource> src;
    if (v.kind == "decoder")
      src = std::make_shared<cur::DecoderFrameSource>(v.video_ref, v.command, v.fps, v.frame_count);
    else
      src = std::make_shared<cur::DirectoryFrameSource>(v.video_ref, v.path, v.fps);
    videos_.push_back({v.video_ref, v.source_id, std::move(src)});
  }
  if (config_.fixture) {
    fixture_ = cur::make_fixture_corpus(*config_.fixture);
    for (const auto& clip : fixture_->clips) videos_.push_back({clip.video_ref, clip.source_id, clip.source()});
  }
  for (std::size_t i = 0; i < videos_.size(); ++i) {
    require(video_index_.emplace(videos_[i].video_ref, i).second,
            "video '" + videos_[i].video_ref + "' is defined twice");
  }
}

const VideoEntry& Pipeline::video(const std::string& ref) const {
  const auto it = video_index_.find(ref);
  require(it != video_index_.end(), "snippet refers to unknown video '" + ref + "'");
  return videos_[it->second];
}

std::optional<Frame> Pipeline::keyframe(const cur::Snippet& snippet) const {
  return video(snippet.video_ref).frames->frame_at(snippet.keyframe_time_s);
}

StageResult Pipeline::run(Stage stage) {
  const auto t0 = std::chrono::steady_clock::now();
  StageResult r;
  switch (stage) {
    case Stage::cuts: r = run_cuts(); break;
    case Stage::chunk: r = run_chunk(); break;
    case Stage::embed: r = run_embed(); break;
    case Stage::detect: r = run_detect(); break;
    case Stage::filter: r = run_filter(); break;
    case Stage::subsample: r = run_subsample(); break;
    case Stage::manifest: r = run_manifest(); break;
  }
  r.stage = stage;
  r.record.stage = std::string(to_string(stage));
  r.record.config_hash = config_.hash();
  r.record.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.record.finished_at = utc_timestamp();
  workspace_.write_run_record(r.record);
  return r;
}

StageResult Pipeline::run_cuts() {
  require(!videos_.empty(), "cuts: the config lists no videos");
  std::vector<cur::CutList> cuts(videos_.size());
  std::vector<std::string> errors(videos_.size());
  parallel_for(videos_.size(), config_.workers, [&](std::size_t i) {
    cuts[i] = cur::detect_cuts(*videos_[i].frames, config_.cut_threshold);
  });
  StageResult r;
  std::string out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < videos_.size(); ++i) {
    const auto& v = videos_[i];
    ordered_json line = {{"video_ref", v.video_ref},
                         {"source_id", v.source_id},
                         {"fps", cuts[i].fps},
                         {"frame_count", v.frames->frame_count()},
                         {"cut_frames", cuts[i].cut_frames},
                         {"warnings", cuts[i].warnings}};
    out += line.dump() + "\n";
    total += cuts[i].cut_frames.size();
    for (const auto& w : cuts[i].warnings) r.warnings.push_back(v.video_ref + ": " + w);
  }
  ordered_json video_specs = config_.to_json()["videos"];
  if (config_.fixture) video_specs.push_back(fixture_options_to_json(*config_.fixture));
  r.record.inputs["videos"] = sha256_hex(video_specs.dump());
  r.record.outputs[key("cuts", "cuts.jsonl")] = workspace_.put("cuts", "cuts.jsonl", out);
  r.summary = {{"videos", videos_.size()}, {"cuts", total}};
  return r;
}

StageResult Pipeline::run_chunk() {
  StageResult r;
  const std::string text = workspace_.get("cuts", "cuts.jsonl");
  r.record.inputs[key("cuts", "cuts.jsonl")] = sha256_hex(text);
  std::vector<cur::Snippet> all;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const std::string line = text.substr(start, end - start);
    start = end == std::string::npos ? text.size() : end + 1;
    if (line.empty()) continue;
    const json j = json::parse(line);
    const auto& v = video(j.at("video_ref").get<std::string>());
    cur::CutList cuts;
    cuts.video_ref = v.video_ref;
    cuts.fps = j.at("fps").get<double>();
    cuts.cut_frames = j.at("cut_frames").get<std::vector<std::int64_t>>();
    const auto& source = config_.source(v.source_id);
    auto snippets = cur::chunk_timeline(v.video_ref, v.source_id, v.frames->duration_s(), cuts,
                                        config_.snippet_length_s, source.chunk_stride_s);
    cur::mark_cut_overlaps(snippets, cuts);
    for (auto& s : snippets) all.push_back(std::move(s));
  }
  all = sorted_by_id(std::move(all));
  r.record.outputs[key("chunk", kSnippets)] = workspace_.put("chunk", kSnippets, cur::manifest_to_jsonl(all));
  r.summary = discard_tally(all);
  return r;
}

StageResult Pipeline::run_embed() {
  StageResult r;
  const std::string text = workspace_.get("chunk", kSnippets);
  r.record.inputs[key("chunk", kSnippets)] = sha256_hex(text);
  auto snippets = cur::manifest_from_jsonl(text);
  require(providers_.embedder != nullptr,
          "the synthetic embedder needs a 'fixture' section in the config; set providers.embedder to a URL");
  const auto& embedder = *providers_.embedder;
  std::vector<std::vector<float>> rows(snippets.size());
  parallel_for(snippets.size(), config_.workers, [&](std::size_t i) {
    if (!snippets[i].kept) return;
    const auto frame = keyframe(snippets[i]);
    require(frame.has_value(), "embed: keyframe of '" + snippets[i].snippet_id + "' is unreadable");
    rows[i] = embedder.embed(*frame);
    require(rows[i].size() == embedder.dim(), "embed: provider returned a vector of the wrong length");
  });
  cur::EmbeddingStore store(static_cast<std::uint32_t>(embedder.dim()));
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    if (!snippets[i].kept) continue;
    const auto row = store.add(snippets[i].snippet_id, rows[i]);
    snippets[i].embedding_ref = std::string(kEmbeddings) + "#" + std::to_string(row);
  }
  store.save(workspace_.stage_file("embed", kEmbeddings));
  r.record.outputs[key("embed", kEmbeddings)] = workspace_.commit("embed", kEmbeddings);
  r.record.outputs[key("embed", std::string(kEmbeddings) + ".index")] =
      workspace_.commit("embed", std::string(kEmbeddings) + ".index");
  r.record.outputs[key("embed", kSnippets)] = workspace_.put("embed", kSnippets, cur::manifest_to_jsonl(snippets));
  r.summary = {{"embedded", store.size()}, {"dim", store.dim()}, {"provider", embedder.id()}};
  return r;
}

std::vector<cur::Snippet> Pipeline::upstream_snippets(std::map<std::string, std::string>& inputs) const {
  const char* stage = workspace_.has("embed", kSnippets) ? "embed" : "chunk";
  const std::string text = workspace_.get(stage, kSnippets);
  inputs[key(stage, kSnippets)] = sha256_hex(text);
  return cur::manifest_from_jsonl(text);
}

StageResult Pipeline::run_detect() {
  StageResult r;
  auto snippets = upstream_snippets(r.record.inputs);
  const auto& detector = *providers_.detector;
  std::vector<std::string> notes(snippets.size());
  parallel_for(snippets.size(), config_.workers, [&](std::size_t i) {
    auto& s = snippets[i];
    if (!s.kept) return;
    const auto frame = keyframe(s);
    if (!frame) {
      notes[i] = "keyframe unavailable for '" + s.snippet_id + "'";
      return;
    }
    try {
      auto raw = detector.detect(*frame, config_.detection_prompt);
      validate_boxes(raw, frame->width, frame->height);
      s.boxes = cur::nms(raw, config_.nms_iou, config_.detection_score);
    } catch (const ProviderError& e) {
      notes[i] = "detector failed for '" + s.snippet_id + "': " + e.what();
    }
  });
  std::size_t with_boxes = 0;
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    if (!notes[i].empty()) {
      r.pending.push_back(snippets[i].snippet_id);
      r.warnings.push_back(notes[i]);
    }
    if (!snippets[i].boxes.empty()) ++with_boxes;
  }
  r.record.outputs[key("detect", kSnippets)] = workspace_.put("detect", kSnippets, cur::manifest_to_jsonl(snippets));
  r.record.outputs[key("detect", "pending.json")] = workspace_.put("detect", "pending.json", json(r.pending).dump() + "\n");
  r.summary = {{"snippets", snippets.size()}, {"with_boxes", with_boxes}, {"pending", r.pending.size()}};
  return r;
}

bool Pipeline::has_relevance_model() const { return workspace_.has("relevance", "model.json"); }

cur::RelevanceModel Pipeline::load_model() const {
  auto model = cur::RelevanceModel::from_json(workspace_.get("relevance", "model.json"));
  if (config_.relevance_threshold) model.set_threshold(*config_.relevance_threshold);
  return model;
}

std::optional<double> Pipeline::effective_threshold() const {
  if (!has_relevance_model()) return std::nullopt;
  return load_model().threshold();
}

StageResult Pipeline::run_filter() {
  StageResult r;
  auto snippets = upstream_snippets(r.record.inputs);
  const std::size_t input_count = snippets.size();
  std::optional<double> threshold;
  if (has_relevance_model()) {
    const auto model = load_model();
    threshold = model.threshold();
    r.record.inputs[key("relevance", "model.json")] = workspace_.hash_of("relevance", "model.json");
    const auto store = cur::EmbeddingStore::load(workspace_.stage_file("embed", kEmbeddings));
    r.record.inputs[key("embed", kEmbeddings)] = workspace_.hash_of("embed", kEmbeddings);
    cur::filter_by_relevance(snippets, model, [&](const cur::Snippet& s) -> std::optional<std::vector<float>> {
      const auto row = store.find(s.snippet_id);
      if (!row) return std::nullopt;
      return std::vector<float>(row->begin(), row->end());
    });
  } else {
    r.warnings.push_back("no relevance model in the workspace; relevance filtering skipped");
  }
  cur::DetectionFilterOptions opts;
  opts.score_threshold = config_.detection_score;
  opts.iou_threshold = config_.nms_iou;
  opts.prompt = config_.detection_prompt;
  opts.workers = config_.workers;
  auto detected = cur::filter_by_detection(std::move(snippets), *providers_.detector,
                                           [this](const cur::Snippet& s) { return keyframe(s); }, opts);
  snippets = std::move(detected.snippets);
  for (auto& s : snippets)
    if (s.kept && !s.boxes.empty()) s.species = cur::assign_species(s, config_.source(s.source_id));
  require(snippets.size() == input_count, "filter changed the snippet count");
  r.pending = detected.pending;
  r.warnings.insert(r.warnings.end(), detected.warnings.begin(), detected.warnings.end());
  r.record.outputs[key("filter", kSnippets)] = workspace_.put("filter", kSnippets, cur::manifest_to_jsonl(snippets));
  r.record.outputs[key("filter", "pending.json")] = workspace_.put("filter", "pending.json", json(r.pending).dump() + "\n");
  r.summary = discard_tally(snippets);
  r.summary["threshold"] = threshold ? ordered_json(*threshold) : ordered_json(nullptr);
  r.summary["pending"] = r.pending.size();
  return r;
}

StageResult Pipeline::run_subsample() {
  StageResult r;
  const std::string text = workspace_.get("filter", kSnippets);
  r.record.inputs[key("filter", kSnippets)] = sha256_hex(text);
  auto snippets = cur::manifest_from_jsonl(text);
  std::map<std::string, std::size_t> kept;
  for (const auto& s : config_.sources) kept[s.id] = 0;
  std::size_t total = 0;
  for (const auto& s : snippets)
    if (s.kept) {
      ++kept[s.source_id];
      ++total;
    }
  ordered_json alloc;
  if (config_.subsample_budget) {
    const auto res = cur::subsample(kept, config_.effective_targets(), *config_.subsample_budget);
    cur::apply_subsample(snippets, res.allocation, config_.seed);
    r.warnings = res.warnings;
    alloc = {{"budget", *config_.subsample_budget}, {"available", ordered_json(kept)},
             {"allocation", ordered_json(res.allocation)}, {"optimum", ordered_json(res.optimum)},
             {"deviation", res.deviation}, {"warnings", res.warnings}};
  } else {
    alloc = {{"budget", nullptr}, {"available", ordered_json(kept)}, {"allocation", ordered_json(kept)},
             {"optimum", nullptr}, {"deviation", false}, {"warnings", ordered_json::array()}};
  }
  r.record.outputs[key("subsample", kSnippets)] =
      workspace_.put("subsample", kSnippets, cur::manifest_to_jsonl(snippets));
  r.record.outputs[key("subsample", "allocation.json")] = workspace_.put("subsample", "allocation.json", alloc.dump(2) + "\n");
  r.summary = discard_tally(snippets);
  r.summary["available"] = total;
  return r;
}

StageResult Pipeline::run_manifest() {
  StageResult r;
  const char* stage = workspace_.has("subsample", kSnippets) ? "subsample" : "filter";
  const std::string text = workspace_.get(stage, kSnippets);
  r.record.inputs[key(stage, kSnippets)] = sha256_hex(text);
  auto build = cur::build_manifest(cur::manifest_from_jsonl(text), config_.sources);
  r.record.outputs[key("manifest", "manifest.jsonl")] =
      workspace_.put("manifest", "manifest.jsonl", cur::manifest_to_jsonl(build.manifest.snippets));
  r.record.outputs[key("manifest", "sources.json")] =
      workspace_.put("manifest", "sources.json", cur::sources_to_json(config_.sources));
  r.record.outputs[key("manifest", "composition.json")] =
      workspace_.put("manifest", "composition.json", build.report.to_json());
  r.record.outputs[key("manifest", "composition.txt")] =
      workspace_.put("manifest", "composition.txt", build.report.to_table());
  r.summary = json::parse(build.report.to_json());
  return r;
}

std::vector<cur::Snippet> Pipeline::labelling_pool() const {
  const char* stage = workspace_.has("embed", kSnippets) ? "embed" : "chunk";
  std::vector<cur::Snippet> out;
  for (auto& s : cur::manifest_from_jsonl(workspace_.get(stage, kSnippets)))
    if (s.kept) out.push_back(std::move(s));
  Rng rng(config_.seed, 0x1abe1);
  std::shuffle(out.begin(), out.end(), rng.engine());
  return out;
}

std::pair<std::string, std::vector<cur::Snippet>> Pipeline::latest_snippets() const {
  if (workspace_.has("manifest", "manifest.jsonl"))
    return {"manifest", cur::manifest_from_jsonl(workspace_.get("manifest", "manifest.jsonl"))};
  for (const char* stage : {"subsample", "filter", "detect", "embed", "chunk"})
    if (workspace_.has(stage, kSnippets)) return {stage, cur::manifest_from_jsonl(workspace_.get(stage, kSnippets))};
  return {"", {}};
}

ordered_json Pipeline::train_relevance() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string snippets_text = workspace_.get("embed", kSnippets);
  const auto store = cur::EmbeddingStore::load(workspace_.stage_file("embed", kEmbeddings));
  const auto verdicts = labels_.verdicts();
  std::vector<cur::RelevanceExample> examples;
  std::size_t unmatched = 0;
  for (const auto& [ref, relevant] : verdicts) {
    const auto row = store.find(ref);
    if (!row) {
      ++unmatched;
      continue;
    }
    examples.push_back({std::vector<float>(row->begin(), row->end()), relevant});
  }
  require(!examples.empty(), "train-relevance: no labelled keyframe matches an embedded snippet");
  auto trained = cur::train_relevance(examples, config_.relevance);

  ordered_json curve = ordered_json::array();
  for (const auto& p : trained.report.pr_curve)
    curve.push_back({{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall},
                     {"fpr", p.fpr}, {"predicted_positive", p.predicted_positive}});
  ordered_json scores = ordered_json::array();
  for (std::size_t r = 0; r < store.size(); ++r)
    scores.push_back({{"snippet_id", store.ids()[r]}, {"score", trained.model.score(store.row(r))}});
  const auto& c = trained.report.choice;
  ordered_json report = {{"roc_auc", trained.report.roc_auc},
                         {"choice", {{"threshold", c.threshold}, {"precision", c.precision}, {"recall", c.recall},
                                     {"attained", c.attained}}},
                         {"min_precision", config_.relevance.min_precision},
                         {"n_labels", examples.size()},
                         {"n_unmatched_labels", unmatched},
                         {"n_train", trained.report.n_train},
                         {"n_val", trained.report.n_val},
                         {"curve", curve},
                         {"scores", scores}};
  RunRecord rec;
  rec.stage = "relevance";
  rec.config_hash = config_.hash();
  rec.inputs[key("embed", kSnippets)] = sha256_hex(snippets_text);
  rec.inputs[key("embed", kEmbeddings)] = workspace_.hash_of("embed", kEmbeddings);
  rec.inputs["labels.jsonl"] = sha256_file(workspace_.labels_path());
  rec.outputs[key("relevance", "model.json")] = workspace_.put("relevance", "model.json", trained.model.to_json());
  rec.outputs[key("relevance", "report.json")] = workspace_.put("relevance", "report.json", report.dump() + "\n");
  rec.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.finished_at = utc_timestamp();
  workspace_.write_run_record(rec);
  if (!c.attained) report["warning"] = "min_precision not attainable; using the highest-precision threshold";
  return report;
}

void Pipeline::set_relevance_threshold(double value) {
  require(value > 0.0 && value < 1.0, "threshold must be in (0, 1)");
  require(has_relevance_model(), "no relevance model has been trained yet");
  auto model = cur::RelevanceModel::from_json(workspace_.get("relevance", "model.json"));
  model.set_threshold(value);
  workspace_.put("relevance", "model.json", model.to_json());
}

}  // namespace privi::service
