#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "privi/curation/fixtures.hpp"
#include "privi/curation/frame_source.hpp"
#include "privi/curation/relevance.hpp"
#include "privi/curation/types.hpp"
#include "privi/providers/providers.hpp"
#include "privi/service/config.hpp"
#include "privi/service/labels.hpp"
#include "privi/service/workspace.hpp"

namespace privi::service {

enum class Stage { cuts, chunk, embed, detect, filter, subsample, manifest };

inline constexpr Stage kAllStages[] = {Stage::cuts,   Stage::chunk,     Stage::embed,   Stage::detect,
                                       Stage::filter, Stage::subsample, Stage::manifest};

std::string_view to_string(Stage s);
// Throws ContractError on an unknown name.
Stage parse_stage(std::string_view name);

struct StageResult {
  Stage stage = Stage::cuts;
  RunRecord record;
  std::vector<std::string> warnings;
  std::vector<std::string> pending;
  nlohmann::ordered_json summary;

  nlohmann::ordered_json to_json() const;
};

struct ProviderSet {
  std::shared_ptr<const EmbeddingProvider> embedder;
  std::shared_ptr<const DetectorProvider> detector;
};

// Resolves the configured endpoints. The synthetic embedder is left unset
// when the config has no fixture.
ProviderSet make_providers(const PipelineConfig& config);

struct VideoEntry {
  std::string video_ref;
  std::string source_id;
  std::shared_ptr<const curation::FrameSource> frames;
};

// Runs pipeline stages against a workspace. Each stage reads the artifacts
// of earlier stages, writes its own, and records a run record. Outputs are
// a pure function of the config, the inputs and the label log.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, Workspace workspace);
  Pipeline(PipelineConfig config, Workspace workspace, ProviderSet providers);

  const PipelineConfig& config() const { return config_; }
  Workspace& workspace() { return workspace_; }
  const Workspace& workspace() const { return workspace_; }
  LabelLog& labels() { return labels_; }
  const std::vector<VideoEntry>& videos() const { return videos_; }
  const std::optional<curation::FixtureCorpus>& fixture() const { return fixture_; }

  StageResult run(Stage stage);

  // Trains the relevance model from the label log and the embed stage's
  // embeddings; writes relevance/model.json and relevance/report.json.
  nlohmann::ordered_json train_relevance();
  bool has_relevance_model() const;
  // Rewrites the stored model with a new operating threshold.
  void set_relevance_threshold(double value);
  // Threshold the filter stage will apply, if a model exists.
  std::optional<double> effective_threshold() const;

  std::optional<Frame> keyframe(const curation::Snippet& snippet) const;
  // Snippets of the most downstream stage with output, and that stage.
  std::pair<std::string, std::vector<curation::Snippet>> latest_snippets() const;
  // Kept snippets eligible for labelling (embed output, else chunk output)
  // in a seeded shuffle, so consecutive keyframes span many videos.
  std::vector<curation::Snippet> labelling_pool() const;

 private:
  StageResult run_cuts();
  StageResult run_chunk();
  StageResult run_embed();
  StageResult run_detect();
  StageResult run_filter();
  StageResult run_subsample();
  StageResult run_manifest();

  // Embed output if present, otherwise chunk output; records the input hash.
  std::vector<curation::Snippet> upstream_snippets(std::map<std::string, std::string>& inputs) const;
  const VideoEntry& video(const std::string& ref) const;
  curation::RelevanceModel load_model() const;

  PipelineConfig config_;
  Workspace workspace_;
  ProviderSet providers_;
  LabelLog labels_;
  std::optional<curation::FixtureCorpus> fixture_;
  std::vector<VideoEntry> videos_;
  std::map<std::string, std::size_t> video_index_;
};

}  // namespace privi::service
