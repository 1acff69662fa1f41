#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <set>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "privi/common/error.hpp"
#include "privi/common/hash.hpp"
#include "privi/curation/manifest.hpp"
#include "privi/providers/frame.hpp"
#include "privi/service/api.hpp"
#include "privi/service/config.hpp"
#include "privi/service/labels.hpp"
#include "privi/service/stages.hpp"
#include "privi/service/workspace.hpp"
#include "tempdir.hpp"

namespace privi::service {
namespace {

namespace cur = privi::curation;
using nlohmann::json;
using privi::testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PipelineConfig fixture_config(const std::filesystem::path& workspace, std::size_t clips = 12) {
  PipelineConfig c;
  c.sources = cur::fixture_sources();
  cur::FixtureOptions fx;
  fx.clips = clips;
  c.fixture = fx;
  c.label_criteria = {"primate_prominent", "real_world"};
  c.seed = 3;
  c.workspace = workspace.string();
  return c;
}

// Labels every pool keyframe (or the first `limit`) from fixture ground truth.
std::size_t label_from_truth(Pipeline& p, std::size_t limit = SIZE_MAX) {
  std::size_t n = 0;
  for (const auto& s : p.labelling_pool()) {
    if (n == limit) break;
    LabelRecord r;
    r.keyframe_ref = s.snippet_id;
    r.relevant = p.fixture()->clip(s.video_ref).segment_at(s.keyframe_time_s).relevant;
    r.annotator = "truth";
    r.timestamp = "2026-01-01T00:00:00Z";
    p.labels().append(r);
    ++n;
  }
  return n;
}

// ---- config

TEST(Config, UnknownKeysAreRejectedByName) {
  try {
    PipelineConfig::from_json({{"sources", json::array()}, {"cut_treshold", 20}});
    FAIL() << "accepted an unknown key";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("cut_treshold"), std::string::npos);
  }
  EXPECT_THROW(PipelineConfig::from_json({{"relevance", {{"epochz", 3}}}}), ContractError);
  EXPECT_THROW(PipelineConfig::from_json({{"sources", {{{"id", "a"}, {"colour", "red"}}}}}), ContractError);
  EXPECT_THROW(PipelineConfig::from_json({{"nms_iou", "high"}}), ContractError);
}

TEST(Config, HashIgnoresWorkspaceAndWorkers) {
  TempDir tmp("cfg");
  auto a = fixture_config(tmp / "a");
  auto b = fixture_config(tmp / "b");
  b.workers = 4;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 64u);
  b.seed = 4;
  EXPECT_NE(a.hash(), b.hash());
  const auto back = PipelineConfig::from_json(json::parse(a.to_json().dump()));
  EXPECT_EQ(back.hash(), a.hash());
  std::ofstream(tmp / "c.json") << a.to_json().dump(2);
  EXPECT_EQ(PipelineConfig::load(tmp / "c.json").hash(), a.hash());
}

TEST(Config, EffectiveTargetsDefaultToSourceProportions) {
  auto c = fixture_config("/nowhere");
  const auto t = c.effective_targets();
  EXPECT_EQ(t.at("camtrap"), 0.5);
  EXPECT_EQ(t.at("sanctuary"), 0.2);
  c.subsample_targets = {{"zoo", 1.0}};
  EXPECT_EQ(c.effective_targets().size(), 1u);
  c.subsample_targets = {{"nope", 1.0}};
  EXPECT_THROW(c.validate(), ContractError);
}

// ---- workspace

TEST(Workspace, ContentAddressedArtifacts) {
  TempDir tmp("ws");
  Workspace ws(tmp.path());
  const auto h = ws.put("chunk", "snippets.jsonl", "hello\n");
  EXPECT_EQ(h, sha256_hex("hello\n"));
  EXPECT_EQ(ws.get("chunk", "snippets.jsonl"), "hello\n");
  EXPECT_EQ(slurp(ws.object_path(h)), "hello\n");
  EXPECT_EQ(ws.hash_of("chunk", "snippets.jsonl"), h);
  try {
    ws.get("embed", "embeddings.pvem");
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_NE(std::string(e.what()).find("embed/embeddings.pvem"), std::string::npos);
  }
  RunRecord r;
  r.stage = "chunk";
  r.config_hash = "abc";
  r.outputs = {{"snippets.jsonl", h}};
  r.duration_s = 0.5;
  r.finished_at = utc_timestamp();
  ws.write_run_record(r);
  const auto back = ws.run_record("chunk");
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->to_json(), r.to_json());
  EXPECT_FALSE(ws.run_record("cuts").has_value());
}

// ---- labels

TEST(Labels, LastWriteWinsPerAnnotator) {
  TempDir tmp("labels");
  LabelLog log(tmp / "labels.jsonl");
  const auto rec = [](std::string ref, bool rel, std::string who) {
    LabelRecord r;
    r.keyframe_ref = std::move(ref);
    r.relevant = rel;
    r.annotator = std::move(who);
    r.timestamp = "2026-01-01T00:00:00Z";
    return r;
  };
  log.append(rec("k1", true, "ann"));
  log.append(rec("k1", false, "ann"));
  log.append(rec("k2", true, "ann"));
  log.append(rec("k2", false, "other"));
  EXPECT_EQ(log.size(), 4u);
  EXPECT_EQ(log.current().size(), 3u);
  EXPECT_FALSE(log.current().at({"k1", "ann"}).relevant);
  // Across annotators the most recent label decides.
  EXPECT_EQ(log.verdicts(), (std::map<std::string, bool>{{"k1", false}, {"k2", false}}));
  EXPECT_EQ(log.labelled_keyframes(), (std::set<std::string>{"k1", "k2"}));
  // Durable: a fresh reader sees every record.
  EXPECT_EQ(LabelLog(tmp / "labels.jsonl").records().size(), 4u);
}

TEST(Labels, PayloadValidation) {
  const json ok = {{"keyframe_ref", "k"}, {"verdict", "relevant"}, {"annotator", "a"}};
  EXPECT_TRUE(LabelRecord::from_json(ok).relevant);
  EXPECT_FALSE(LabelRecord::from_json(ok).timestamp.empty());
  auto bad = ok;
  bad["verdict"] = "maybe";
  EXPECT_THROW(LabelRecord::from_json(bad), SchemaError);
  bad = ok;
  bad.erase("annotator");
  EXPECT_THROW(LabelRecord::from_json(bad), SchemaError);
  bad = ok;
  bad["criteria"] = {{"blurry", true}};
  EXPECT_THROW(LabelRecord::from_json(bad, {"real_world"}), SchemaError);
  EXPECT_NO_THROW(LabelRecord::from_json(bad));
  bad["criteria"] = {{"blurry", "yes"}};
  EXPECT_THROW(LabelRecord::from_json(bad), SchemaError);
}

// ---- pipeline

TEST(Pipeline, StagesNeedTheirInputs) {
  TempDir tmp("deps");
  Pipeline p(fixture_config(tmp.path(), 3), Workspace(tmp.path()));
  EXPECT_THROW(p.run(Stage::chunk), MissingArtifactError);
  p.run(Stage::cuts);
  EXPECT_THROW(p.run(Stage::embed), MissingArtifactError);
  EXPECT_THROW(p.train_relevance(), MissingArtifactError);
  EXPECT_FALSE(p.has_relevance_model());
  EXPECT_THROW(p.set_relevance_threshold(0.5), ContractError);
  EXPECT_EQ(parse_stage("manifest"), Stage::manifest);
  EXPECT_THROW(parse_stage("bogus"), ContractError);
}

TEST(Pipeline, FullRunOnFixtureCorpus) {
  TempDir tmp("pipeline");
  const auto cfg = fixture_config(tmp / "a", 24);
  Pipeline p(cfg, Workspace(tmp / "a"));
  for (auto s : {Stage::cuts, Stage::chunk, Stage::embed}) p.run(s);

  // Chunked snippets never straddle a planted cut.
  for (const auto& s : cur::manifest_from_jsonl(p.workspace().get("chunk", "snippets.jsonl"))) {
    if (!s.kept) continue;
    for (auto f : p.fixture()->clip(s.video_ref).planted_cuts()) {
      const double t = static_cast<double>(f) / cfg.fixture->fps;
      EXPECT_FALSE(s.start_s < t && s.end_s > t) << s.snippet_id;
    }
  }
  label_from_truth(p);
  const auto report = p.train_relevance();
  EXPECT_GE(report["roc_auc"].get<double>(), 0.99);
  EXPECT_TRUE(p.has_relevance_model());
  const auto filter = p.run(Stage::filter);
  EXPECT_TRUE(filter.pending.empty());
  p.run(Stage::subsample);
  const auto manifest = p.run(Stage::manifest);

  // Composition matches a hand tally over the manifest.
  const auto snippets = cur::read_manifest(p.workspace().stage_file("manifest", "manifest.jsonl"));
  std::map<std::string, double> by_source;
  std::size_t kept = 0;
  for (const auto& s : snippets) {
    if (!s.kept) continue;
    ++kept;
    by_source[s.source_id] += 1;
    EXPECT_EQ(s.discard_reason, cur::DiscardReason::none);
  }
  ASSERT_GT(kept, 0u);
  const auto composition = json::parse(p.workspace().get("manifest", "composition.json"));
  EXPECT_EQ(composition["kept_snippets"].get<std::size_t>(), kept);
  for (const auto& [id, n] : by_source) EXPECT_EQ(composition["source_counts"][id].get<double>(), n);

  // Every stage that ran left a run record with the config hash.
  for (auto s : {Stage::cuts, Stage::chunk, Stage::embed, Stage::filter, Stage::subsample, Stage::manifest}) {
    const auto rec = p.workspace().run_record(to_string(s));
    ASSERT_TRUE(rec.has_value()) << to_string(s);
    EXPECT_EQ(rec->config_hash, cfg.hash());
  }

  // A second workspace with the same config and labels reproduces every byte.
  std::filesystem::create_directories(tmp / "b");
  std::filesystem::copy_file(p.workspace().labels_path(), tmp / "b" / "labels.jsonl");
  Pipeline q(fixture_config(tmp / "b", 24), Workspace(tmp / "b"));
  for (auto s : {Stage::cuts, Stage::chunk, Stage::embed}) q.run(s);
  q.train_relevance();
  for (auto s : {Stage::filter, Stage::subsample, Stage::manifest}) q.run(s);
  for (const auto& [stage, name] : std::vector<std::pair<std::string, std::string>>{
           {"cuts", "cuts.jsonl"}, {"embed", "embeddings.pvem"}, {"filter", "snippets.jsonl"},
           {"relevance", "model.json"}, {"manifest", "manifest.jsonl"}, {"manifest", "composition.txt"}})
    EXPECT_EQ(p.workspace().hash_of(stage, name), q.workspace().hash_of(stage, name)) << stage << "/" << name;
}

TEST(Pipeline, EmptyDetectorDiscardsEverything) {
  TempDir tmp("empty");
  auto cfg = fixture_config(tmp.path(), 4);
  cfg.providers.detector = "empty";
  Pipeline p(cfg, Workspace(tmp.path()));
  for (auto s : {Stage::cuts, Stage::chunk, Stage::filter}) p.run(s);
  for (const auto& s : cur::manifest_from_jsonl(p.workspace().get("filter", "snippets.jsonl"))) {
    EXPECT_FALSE(s.kept);
    if (s.discard_reason != cur::DiscardReason::cut_overlap) {
      EXPECT_EQ(s.discard_reason, cur::DiscardReason::no_detection);
    }
  }
}

TEST(Pipeline, LabellingPoolIsASeededShuffle) {
  TempDir tmp("pool");
  Pipeline p(fixture_config(tmp.path(), 6), Workspace(tmp.path()));
  p.run(Stage::cuts);
  p.run(Stage::chunk);
  const auto a = p.labelling_pool(), b = p.labelling_pool();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].snippet_id, b[i].snippet_id);
  std::set<std::string> first_videos;
  for (std::size_t i = 0; i < std::min<std::size_t>(a.size(), 6); ++i) first_videos.insert(a[i].video_ref);
  EXPECT_GT(first_videos.size(), 1u);
}

// ---- HTTP API

class ApiTest : public ::testing::Test {
 protected:
  void start(PipelineConfig cfg) {
    pipeline_ = std::make_unique<Pipeline>(std::move(cfg), Workspace(tmp_.path()));
    server_ = std::make_unique<ApiServer>(*pipeline_);
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->serve(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(120, 0);
    for (int i = 0; i < 200; ++i) {
      if (client_->Get("/api/health")) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    FAIL() << "server did not come up";
  }
  void TearDown() override {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
  }
  int post(const std::string& path, const json& body) {
    const auto r = client_->Post(path, body.dump(), "application/json");
    return r ? r->status : -1;
  }
  json get_json(const std::string& path, int expect = 200) {
    const auto r = client_->Get(path);
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << ": " << r->body;
    return r->body.empty() ? json() : json::parse(r->body);
  }
  json label_payload(const cur::Snippet& s) {
    const bool rel = pipeline_->fixture()->clip(s.video_ref).segment_at(s.keyframe_time_s).relevant;
    return {{"keyframe_ref", s.snippet_id},
            {"verdict", rel ? "relevant" : "irrelevant"},
            {"annotator", "api"},
            {"criteria", {{"real_world", true}}}};
  }

  TempDir tmp_{"api"};
  std::unique_ptr<Pipeline> pipeline_;
  std::unique_ptr<ApiServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(ApiTest, LabellingTrainingAndThresholdFlow) {
  start(fixture_config(tmp_.path(), 16));
  EXPECT_EQ(get_json("/api/frames/next", 409)["error"].get<std::string>().find("chunk") != std::string::npos, true);
  EXPECT_EQ(post("/api/pipeline/bogus/run", json::object()), 404);
  for (const char* s : {"cuts", "chunk", "embed", "detect"})
    EXPECT_EQ(post(std::string("/api/pipeline/") + s + "/run", json::object()), 200) << s;

  const auto frame = client_->Get("/api/frames/next");
  ASSERT_TRUE(frame);
  ASSERT_EQ(frame->status, 200);
  EXPECT_EQ(frame->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(frame->body.substr(1, 3), "PNG");
  const auto ref = frame->get_header_value("X-Keyframe-Ref");
  EXPECT_FALSE(ref.empty());
  const auto meta = get_json("/api/frames/next?format=json");
  EXPECT_EQ(meta["keyframe_ref"], ref);
  EXPECT_EQ(meta["criteria"], json({"primate_prominent", "real_world"}));

  // Invalid payloads.
  EXPECT_EQ(client_->Post("/api/labels", "{not json", "application/json")->status, 422);
  EXPECT_EQ(post("/api/labels", {{"keyframe_ref", ref}, {"verdict", "maybe"}, {"annotator", "a"}}), 422);
  EXPECT_EQ(post("/api/labels", {{"keyframe_ref", "nope@000000000"}, {"verdict", "relevant"}, {"annotator", "a"}}),
            422);
  EXPECT_EQ(post("/api/labels", {{"keyframe_ref", ref}, {"verdict", "relevant"}, {"annotator", "a"},
                                 {"criteria", {{"blurry", true}}}}),
            422);
  EXPECT_EQ(pipeline_->labels().size(), 0u);

  get_json("/api/relevance/curve", 404);
  EXPECT_EQ(client_->Put("/api/config/threshold", R"({"value":0.7})", "application/json")->status, 409);

  // 50 labels, acknowledged only after they are on disk.
  const auto pool = pipeline_->labelling_pool();
  ASSERT_GE(pool.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    ASSERT_EQ(post("/api/labels", label_payload(pool[i])), 201);
    EXPECT_EQ(LabelLog(pipeline_->workspace().labels_path()).size(), i + 1);
  }
  const auto status = get_json("/api/pipeline/status");
  EXPECT_EQ(status["labels"], 50);
  EXPECT_EQ(status["relevance_model"], false);

  const auto trained = client_->Post("/api/relevance/train");
  ASSERT_TRUE(trained);
  ASSERT_EQ(trained->status, 200) << trained->body;
  const auto report = json::parse(trained->body);
  EXPECT_TRUE(std::isfinite(report["roc_auc"].get<double>()));
  EXPECT_FALSE(report["curve"].empty());
  const auto curve = get_json("/api/relevance/curve");
  EXPECT_EQ(curve["curve"], report["curve"]);
  EXPECT_EQ(curve["scores"].size(), pool.size());

  // Threshold changes are validated and persisted.
  EXPECT_EQ(client_->Put("/api/config/threshold", R"({"value":1.5})", "application/json")->status, 422);
  EXPECT_EQ(client_->Put("/api/config/threshold", R"({"value":"x"})", "application/json")->status, 422);
  EXPECT_EQ(client_->Put("/api/config/threshold", R"({"value":0.7})", "application/json")->status, 200);
  EXPECT_EQ(get_json("/api/relevance/curve")["threshold"], 0.7);
  EXPECT_EQ(post("/api/pipeline/filter/run", json::object()), 200);

  // Offline run at a fixed 0.7 threshold over the same labels.
  TempDir offline("api-offline");
  std::filesystem::copy_file(pipeline_->workspace().labels_path(), offline / "labels.jsonl");
  auto cfg = fixture_config(offline.path(), 16);
  cfg.relevance_threshold = 0.7;
  Pipeline q(cfg, Workspace(offline.path()));
  for (auto s : {Stage::cuts, Stage::chunk, Stage::embed, Stage::detect}) q.run(s);
  q.train_relevance();
  q.run(Stage::filter);
  std::set<std::string> online_kept, offline_kept;
  for (const auto& s : cur::manifest_from_jsonl(pipeline_->workspace().get("filter", "snippets.jsonl")))
    if (s.kept) online_kept.insert(s.snippet_id);
  for (const auto& s : cur::manifest_from_jsonl(q.workspace().get("filter", "snippets.jsonl")))
    if (s.kept) offline_kept.insert(s.snippet_id);
  EXPECT_EQ(online_kept, offline_kept);
  EXPECT_FALSE(online_kept.empty());
}

TEST_F(ApiTest, SnippetBrowserPaginationAndThumbnails) {
  auto cfg = fixture_config(tmp_.path(), 16);
  start(cfg);
  for (const char* s : {"cuts", "chunk", "detect"}) ASSERT_EQ(post(std::string("/api/pipeline/") + s + "/run", {}), 200);
  const auto first = get_json("/api/snippets?page_size=7");
  EXPECT_EQ(first["stage"], "detect");
  const std::size_t total = first["total"];
  const std::size_t pages = first["pages"];
  EXPECT_EQ(pages, (total + 6) / 7);
  std::multiset<std::string> seen;
  for (std::size_t page = 0; page < pages; ++page) {
    const auto body = get_json("/api/snippets?page_size=7&page=" + std::to_string(page));
    for (const auto& item : body["items"]) seen.insert(item["snippet_id"].get<std::string>());
  }
  EXPECT_EQ(seen.size(), total);
  EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), total);
  EXPECT_TRUE(get_json("/api/snippets?page=" + std::to_string(pages))["items"].empty());

  const auto overlaps = get_json("/api/snippets?reason=cut_overlap&page_size=500");
  for (const auto& item : overlaps["items"]) EXPECT_EQ(item["discard_reason"], "cut_overlap");
  const auto camtrap = get_json("/api/snippets?source=camtrap&kept=true&page_size=500");
  for (const auto& item : camtrap["items"]) {
    EXPECT_EQ(item["source_id"], "camtrap");
    EXPECT_EQ(item["kept"], true);
  }
  get_json("/api/snippets?page_size=501", 400);
  get_json("/api/snippets?reason=bogus", 400);

  const std::string thumb_url = first["items"][0]["thumbnail"];
  const auto thumb = client_->Get(thumb_url);
  ASSERT_TRUE(thumb);
  EXPECT_EQ(thumb->status, 200);
  EXPECT_EQ(thumb->body.substr(1, 3), "PNG");
  EXPECT_EQ(client_->Get("/api/snippets/none@000000000/thumbnail")->status, 404);
}

TEST_F(ApiTest, FramesExhaustThenNoContent) {
  start(fixture_config(tmp_.path(), 3));
  ASSERT_EQ(post("/api/pipeline/cuts/run", {}), 200);
  ASSERT_EQ(post("/api/pipeline/chunk/run", {}), 200);
  std::size_t labelled = 0;
  for (;;) {
    const auto r = client_->Get("/api/frames/next?format=json");
    ASSERT_TRUE(r);
    if (r->status == 204) break;
    ASSERT_EQ(r->status, 200);
    const auto ref = json::parse(r->body)["keyframe_ref"].get<std::string>();
    ASSERT_EQ(post("/api/labels", {{"keyframe_ref", ref}, {"verdict", "irrelevant"}, {"annotator", "a"}}), 201);
    ASSERT_LT(++labelled, 1000u);
  }
  EXPECT_EQ(labelled, pipeline_->labelling_pool().size());
  EXPECT_EQ(client_->Get("/api/frames/next")->status, 204);
}

TEST_F(ApiTest, ConcurrentRetrainIsRejected) {
  auto cfg = fixture_config(tmp_.path(), 40);
  cfg.relevance.epochs = 400;
  start(cfg);
  for (const char* s : {"cuts", "chunk", "embed"}) ASSERT_EQ(post(std::string("/api/pipeline/") + s + "/run", {}), 200);
  label_from_truth(*pipeline_);
  std::vector<std::future<int>> calls;
  for (int i = 0; i < 4; ++i)
    calls.push_back(std::async(std::launch::async, [this] {
      httplib::Client c("127.0.0.1", port_);
      c.set_read_timeout(300, 0);
      const auto r = c.Post("/api/relevance/train");
      return r ? r->status : -1;
    }));
  std::multiset<int> statuses;
  for (auto& f : calls) statuses.insert(f.get());
  EXPECT_GE(statuses.count(200), 1u);
  EXPECT_GE(statuses.count(409), 1u);
  EXPECT_EQ(statuses.count(200) + statuses.count(409), 4u);
  EXPECT_EQ(get_json("/api/pipeline/status")["busy"], false);
}

// ---- CLI

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult cli(const std::string& args, const std::filesystem::path& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd =
      std::string("\"") + PRIVI_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Config over one 9-second frames directory at 4 fps.
std::filesystem::path nine_second_config(const std::filesystem::path& dir, const std::string& detector) {
  std::filesystem::create_directories(dir / "frames");
  for (int i = 0; i < 36; ++i)
    write_ppm(dir / "frames" / cur::DirectoryFrameSource::frame_filename(i), solid_frame(16, 12, 40, 90, 160));
  json cfg = {
      {"sources", {{{"id", "zoo"}, {"setting", "captive"}, {"species", {"chimpanzee"}}, {"target_proportion", 1.0}}}},
      {"videos", {{{"video_ref", "clip9"}, {"source_id", "zoo"}, {"path", (dir / "frames").string()}, {"fps", 4.0}}}},
      {"providers", {{"detector", detector}}},
      {"workspace", (dir / "ws").string()}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  return dir / "config.json";
}

TEST(Cli, ChunkOnNineSecondVideo) {
  TempDir tmp("cli-chunk");
  const auto config = nine_second_config(tmp.path(), "synthetic");
  const auto missing = cli("--config " + config.string() + " chunk", tmp.path());
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("cuts/cuts.jsonl"), std::string::npos) << missing.err;
  ASSERT_EQ(cli("--config " + config.string() + " cuts", tmp.path()).code, 0);
  const auto chunk = cli("--config " + config.string() + " chunk", tmp.path());
  ASSERT_EQ(chunk.code, 0) << chunk.err;
  const auto snippets = cur::read_manifest(tmp / "ws" / "stages" / "chunk" / "snippets.jsonl");
  ASSERT_EQ(snippets.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(snippets[i].start_s, 2.0 * static_cast<double>(i));
  EXPECT_EQ(json::parse(chunk.out)["stage"], "chunk");
  // The workspace flag overrides the config.
  ASSERT_EQ(cli("--config " + config.string() + " --workspace " + (tmp / "ws2").string() + " cuts", tmp.path()).code,
            0);
  EXPECT_TRUE(std::filesystem::exists(tmp / "ws2" / "stages" / "cuts" / "cuts.jsonl"));
}

TEST(Cli, FilterWithEmptyDetector) {
  TempDir tmp("cli-filter");
  const auto config = nine_second_config(tmp.path(), "empty");
  for (const char* stage : {"cuts", "chunk", "filter"})
    ASSERT_EQ(cli("--config " + config.string() + " " + stage, tmp.path()).code, 0) << stage;
  const auto snippets = cur::read_manifest(tmp / "ws" / "stages" / "filter" / "snippets.jsonl");
  ASSERT_EQ(snippets.size(), 4u);
  for (const auto& s : snippets) {
    EXPECT_FALSE(s.kept);
    EXPECT_EQ(s.discard_reason, cur::DiscardReason::no_detection);
  }
}

TEST(Cli, ExitCodes) {
  TempDir tmp("cli-codes");
  const auto config = nine_second_config(tmp.path(), "synthetic");
  EXPECT_EQ(cli("--config " + config.string() + " nosuchcommand", tmp.path()).code, 2);
  EXPECT_EQ(cli("--config " + (tmp / "absent.json").string() + " cuts", tmp.path()).code, 2);
  std::ofstream(tmp / "bad.json") << R"({"sources": [], "mystery": 1})";
  const auto bad = cli("--config " + (tmp / "bad.json").string() + " cuts", tmp.path());
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("mystery"), std::string::npos);
  // The embed stage needs a provider; an unreachable URL is a provider failure.
  json cfg = json::parse(slurp(config));
  cfg["providers"] = {{"embedder", "http://127.0.0.1:9"}, {"retries", 0}, {"timeout_s", 1.0}};
  std::ofstream(tmp / "remote.json") << cfg.dump();
  for (const char* stage : {"cuts", "chunk"})
    ASSERT_EQ(cli("--config " + (tmp / "remote.json").string() + " " + stage, tmp.path()).code, 0);
  EXPECT_EQ(cli("--config " + (tmp / "remote.json").string() + " embed", tmp.path()).code, 3);
}

TEST(Cli, FixtureWorkflowAndReport) {
  TempDir tmp("cli-fixture");
  const auto config = tmp / "fx.json";
  ASSERT_EQ(cli("fixture config --out " + config.string() + " --clips 8", tmp.path()).code, 0);
  const std::string base = "--config " + config.string() + " --workspace " + (tmp / "ws").string() + " ";
  for (const char* stage : {"cuts", "chunk", "embed"}) ASSERT_EQ(cli(base + stage, tmp.path()).code, 0) << stage;
  ASSERT_EQ(cli(base + "fixture labels --count 40", tmp.path()).code, 0);
  const auto train = cli(base + "train-relevance", tmp.path());
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_TRUE(json::parse(train.out).contains("roc_auc"));
  for (const char* stage : {"filter", "subsample", "manifest"}) ASSERT_EQ(cli(base + stage, tmp.path()).code, 0);
  const auto report = cli(base + "report", tmp.path());
  ASSERT_EQ(report.code, 0);
  EXPECT_NE(report.out.find("manifest"), std::string::npos);
}

TEST(Cli, ClassifierCommands) {
  TempDir tmp("cli-clf");
  const auto features = [&](const std::string& name, int split) {
    return cli("--seed 5 fixture features --out " + (tmp / name).string() + " --sequences 12 --split " +
                   std::to_string(split),
               tmp.path())
        .code;
  };
  ASSERT_EQ(features("train.jsonl", 0), 0);
  ASSERT_EQ(features("val.jsonl", 1), 0);
  const auto head = cli("train-head --train " + (tmp / "train.jsonl").string() + " --val " +
                            (tmp / "val.jsonl").string() + " --out " + (tmp / "head.pvck").string() +
                            " --epochs 3 --width 16 --layers 1 --heads 2 --history " + (tmp / "h.jsonl").string(),
                        tmp.path());
  ASSERT_EQ(head.code, 0) << head.err;
  EXPECT_TRUE(std::filesystem::exists(tmp / "head.pvck"));
  const auto eval = cli("eval --features " + (tmp / "val.jsonl").string() + " --head " + (tmp / "head.pvck").string(),
                        tmp.path());
  ASSERT_EQ(eval.code, 0) << eval.err;
  EXPECT_NE(eval.out.find("acc"), std::string::npos);
  const auto le = cli("label-efficiency --train " + (tmp / "train.jsonl").string() + " --test " +
                          (tmp / "val.jsonl").string() + " --out " + (tmp / "le").string() +
                          " --fractions 1,0.5 --repeats 2 --epochs 2 --width 16 --layers 1 --heads 2",
                      tmp.path());
  ASSERT_EQ(le.code, 0) << le.err;
  EXPECT_TRUE(std::filesystem::exists(tmp / "le" / "label_efficiency.csv"));
  const auto jepa = cli("jepa-toy --steps 5 --out " + (tmp / "jepa").string(), tmp.path());
  ASSERT_EQ(jepa.code, 0) << jepa.err;
  EXPECT_TRUE(std::filesystem::exists(tmp / "jepa" / "diagnostics.jsonl"));
}

}  // namespace
}  // namespace privi::service
