// Command-line entry point: pipeline stages, head training and evaluation,
// experiments, and the HTTP API.
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "privi/classifier/checkpoint.hpp"
#include "privi/classifier/efficiency.hpp"
#include "privi/classifier/protocol.hpp"
#include "privi/classifier/train.hpp"
#include "privi/common/error.hpp"
#include "privi/common/io.hpp"
#include "privi/jepa/pretrain.hpp"
#include "privi/metrics/report.hpp"
#include "privi/service/api.hpp"
#include "privi/service/stages.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace privi;
using namespace privi::service;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string workspace;
};

PipelineConfig load_config(const Globals& g) {
  require(!g.config.empty(), "--config is required for this command");
  auto c = PipelineConfig::load(g.config);
  if (g.seed) {
    c.seed = *g.seed;
    c.relevance.seed = *g.seed;
  }
  if (g.workers) c.workers = *g.workers;
  if (!g.workspace.empty()) c.workspace = g.workspace;
  else if (const char* env = std::getenv("PRIVI_WORKSPACE"); env && *env) c.workspace = env;
  require(!c.workspace.empty(), "no workspace: pass --workspace, set PRIVI_WORKSPACE or set 'workspace' in the config");
  return c;
}

Pipeline open_pipeline(const Globals& g) {
  auto c = load_config(g);
  Workspace ws(c.workspace);
  return Pipeline(std::move(c), std::move(ws));
}

void print(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Head hyperparameters: a JSON file if given, else shape taken from the data.
struct HeadFlags {
  std::string config_path;
  std::optional<std::size_t> epochs, width, layers, heads, batch;
  std::optional<double> lr;
  std::string loss;

  void add(CLI::App* cmd) {
    cmd->add_option("--head-config", config_path, "classifier config JSON");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--width", width, "attention width D'");
    cmd->add_option("--layers", layers);
    cmd->add_option("--heads", heads);
    cmd->add_option("--batch-size", batch);
    cmd->add_option("--lr", lr, "base learning rate");
    cmd->add_option("--loss", loss, "ce, bce or eql");
  }

  clf::ClassifierConfig resolve(const clf::FeatureSet& data, std::optional<std::uint64_t> seed) const {
    clf::ClassifierConfig c;
    if (!config_path.empty()) {
      c = clf::ClassifierConfig::from_json(json::parse(read_file(config_path)));
    } else {
      require(!data.samples.empty(), "training set is empty");
      c.input_dim = data.samples.front().features.d;
      c.classes = data.classes;
      c.task = data.task;
      c.loss = data.task == clf::Task::multi_label ? clf::LossKind::bce : clf::LossKind::ce;
    }
    if (epochs) c.epochs = *epochs;
    if (width) c.width = *width;
    if (layers) c.layers = *layers;
    if (heads) c.heads = *heads;
    if (batch) c.batch_size = *batch;
    if (lr) c.base_lr = *lr;
    if (!loss.empty()) c.loss = clf::parse_loss(loss);
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(',', start);
    const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ContractError("bad fraction '" + item + "'");
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Primate video curation and training toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "pipeline config JSON");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--workers", g.workers, "worker threads");
  app.add_option("--workspace", g.workspace, "workspace directory (default: $PRIVI_WORKSPACE)");

  for (auto stage : kAllStages) {
    const std::string name(to_string(stage));
    auto* cmd = app.add_subcommand(name, "run the " + name + " stage");
    cmd->callback([&g, stage] {
      auto p = open_pipeline(g);
      const auto r = p.run(stage);
      warn_all(r.warnings);
      print(r.to_json());
    });
  }

  auto* train_rel = app.add_subcommand("train-relevance", "train the relevance MLP from the label log");
  train_rel->callback([&g] {
    auto p = open_pipeline(g);
    auto report = p.train_relevance();
    report.erase("curve");
    report.erase("scores");
    print(report);
  });

  std::string train_path, val_path, out_path, history_path;
  HeadFlags head;
  auto* train_head = app.add_subcommand("train-head", "train an attentive classifier head on frozen features");
  train_head->add_option("--train", train_path, "training feature set")->required();
  train_head->add_option("--val", val_path, "validation feature set");
  train_head->add_option("--out", out_path, "checkpoint path")->required();
  train_head->add_option("--history", history_path, "training history JSONL (default: <out>.history.jsonl)");
  head.add(train_head);
  train_head->callback([&] {
    const auto train = clf::load_feature_set(train_path);
    std::optional<clf::FeatureSet> val;
    if (!val_path.empty()) val = clf::load_feature_set(val_path);
    const auto cfg = head.resolve(train, g.seed);
    const auto r = clf::train_head(cfg, train, val ? &*val : nullptr);
    warn_all(r.warnings);
    clf::save_classifier(out_path, r.model);
    write_file_atomic(history_path.empty() ? out_path + ".history.jsonl" : history_path,
                      clf::history_to_jsonl(r.history));
    ordered_json out = {{"checkpoint", out_path},
                        {"parameters", r.model.parameter_count()},
                        {"steps", r.history.size()},
                        {"final_train_loss", r.history.empty() ? 0.0 : r.history.back().train_loss}};
    if (r.best_val_metric) {
      out["best_val_metric"] = *r.best_val_metric;
      out["best_epoch"] = r.best_epoch;
    }
    print(out);
  });

  std::string eval_set, eval_out;
  std::vector<std::string> head_paths;
  auto* eval = app.add_subcommand("eval", "score a feature set with one or more heads (views averaged per clip)");
  eval->add_option("--features", eval_set, "feature set")->required();
  eval->add_option("--head", head_paths, "checkpoint; repeat for an ensemble")->required();
  eval->add_option("--out", eval_out, "report JSONL path (default: stdout)");
  eval->callback([&] {
    const auto set = clf::load_feature_set(eval_set);
    std::vector<clf::AttentiveClassifier> heads;
    for (const auto& p : head_paths) heads.push_back(clf::load_classifier(p));
    const auto preds = clf::evaluate_set(heads, set);
    const auto report = set.task == clf::Task::multi_label ? metrics::map_report(preds, set.classes, set.class_names)
                                                           : metrics::single_label_report(preds, set.classes,
                                                                                          set.class_names);
    warn_all(report.flags);
    if (eval_out.empty()) std::cout << metrics::report_to_jsonl(report);
    else metrics::write_report(eval_out, report);
  });

  std::string le_train, le_test, le_out, le_fractions = "1,0.5,0.25,0.1";
  std::size_t le_repeats = 3;
  HeadFlags le_head;
  auto* le = app.add_subcommand("label-efficiency", "accuracy against training-set fraction (whole sequences)");
  le->add_option("--train", le_train)->required();
  le->add_option("--test", le_test)->required();
  le->add_option("--out", le_out, "output directory")->required();
  le->add_option("--fractions", le_fractions, "comma-separated fractions")->capture_default_str();
  le->add_option("--repeats", le_repeats)->capture_default_str();
  le_head.add(le);
  le->callback([&] {
    const auto train = clf::load_feature_set(le_train);
    const auto test = clf::load_feature_set(le_test);
    const auto cfg = le_head.resolve(train, g.seed);
    const auto fractions = parse_fractions(le_fractions);
    const auto r = clf::run_label_efficiency(cfg, train, test, fractions, le_repeats, cfg.seed);
    fs::create_directories(le_out);
    write_file_atomic(fs::path(le_out) / "label_efficiency.json", r.to_json().dump(2) + "\n");
    write_file_atomic(fs::path(le_out) / "label_efficiency.csv", metrics::plot_data_csv(r.curve));
    print(r.to_json()["curve"]);
  });

  std::string jepa_cfg_path, jepa_out;
  std::optional<std::size_t> jepa_steps;
  bool no_ema = false;
  auto* jepa = app.add_subcommand("jepa-toy", "masked-latent-prediction pretraining on a toy clip stream");
  jepa->add_option("--jepa-config", jepa_cfg_path, "JEPA config JSON");
  jepa->add_option("--steps", jepa_steps);
  jepa->add_flag("--no-ema", no_ema, "ablation: no EMA target and no stop-gradient");
  jepa->add_option("--out", jepa_out, "output directory")->required();
  jepa->callback([&] {
    jepa::JepaConfig cfg;
    if (!jepa_cfg_path.empty()) cfg = jepa::JepaConfig::from_json(json::parse(read_file(jepa_cfg_path)));
    if (jepa_steps) cfg.steps = *jepa_steps;
    if (no_ema) cfg.ema_target = false;
    if (g.seed) cfg.seed = *g.seed;
    cfg.validate();
    const auto stream = jepa::moving_pattern_stream(cfg, cfg.seed);
    const auto r = jepa::run_pretrain(cfg, stream);
    fs::create_directories(jepa_out);
    write_file_atomic(fs::path(jepa_out) / "diagnostics.jsonl", jepa::diagnostics_to_jsonl(r.diagnostics));
    jepa::save_jepa_checkpoint(fs::path(jepa_out) / "checkpoint.pvjp", cfg, r);
    ordered_json out = {{"completed_steps", r.completed_steps}, {"aborted", r.aborted}};
    if (r.aborted) out["abort_reason"] = r.abort_reason;
    if (!r.diagnostics.empty()) {
      const auto& a = r.diagnostics.front();
      const auto& b = r.diagnostics.back();
      out["initial_loss"] = a.loss;
      out["final_loss"] = b.loss;
      out["initial_target_variance"] = a.target_variance;
      out["final_target_variance"] = b.target_variance;
    }
    print(out);
    if (r.aborted) throw FaultError(r.abort_reason);
  });

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "serve the console HTTP API");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();
  serve->callback([&] {
    auto p = open_pipeline(g);
    ApiServer server(p);
    const int bound = server.bind(host, port);
    std::cerr << fmt::format("listening on http://{}:{}\n", host, bound);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.serve();
    g_server = nullptr;
  });

  auto* report = app.add_subcommand("report", "stage run records and the dataset composition");
  report->callback([&g] {
    auto p = open_pipeline(g);
    const auto& ws = p.workspace();
    for (const auto& name : {"cuts", "chunk", "embed", "relevance", "detect", "filter", "subsample", "manifest"}) {
      const auto rec = ws.run_record(name);
      if (!rec) {
        std::cout << fmt::format("{:<10} not run\n", name);
        continue;
      }
      std::cout << fmt::format("{:<10} {}  {:.2f}s  config {}\n", name, rec->finished_at, rec->duration_s,
                               rec->config_hash.substr(0, 12));
    }
    if (ws.has("manifest", "composition.txt")) std::cout << "\n" << ws.get("manifest", "composition.txt");
  });

  // fixture: synthetic inputs for trying the pipeline without real data.
  auto* fixture = app.add_subcommand("fixture", "generate synthetic configs, feature sets and labels");
  fixture->require_subcommand(1);

  std::string fx_out;
  curation::FixtureOptions fx_opts;
  std::optional<std::size_t> fx_budget;
  auto* fx_config = fixture->add_subcommand("config", "write a pipeline config over the synthetic video corpus");
  fx_config->add_option("--out", fx_out)->required();
  fx_config->add_option("--clips", fx_opts.clips)->capture_default_str();
  fx_config->add_option("--fixture-seed", fx_opts.seed)->capture_default_str();
  fx_config->add_option("--budget", fx_budget, "subsample budget");
  fx_config->callback([&] {
    PipelineConfig c;
    c.fixture = fx_opts;
    c.sources = curation::fixture_sources();
    c.subsample_budget = fx_budget;
    c.label_criteria = {"primate_prominent", "real_world"};
    if (g.seed) {
      c.seed = *g.seed;
      c.relevance.seed = *g.seed;
    }
    if (g.workers) c.workers = *g.workers;
    c.workspace = g.workspace;
    c.validate();
    write_file_atomic(fx_out, c.to_json().dump(2) + "\n");
    std::cout << fx_out << "\n";
  });

  std::size_t fx_label_count = 0;
  std::string fx_annotator = "simulated";
  auto* fx_labels = fixture->add_subcommand("labels", "label keyframes from the fixture ground truth");
  fx_labels->add_option("--count", fx_label_count, "keyframes to label")->required();
  fx_labels->add_option("--annotator", fx_annotator)->capture_default_str();
  fx_labels->callback([&] {
    auto p = open_pipeline(g);
    require(p.fixture().has_value(), "the config has no fixture section");
    const auto labelled = p.labels().labelled_keyframes();
    std::size_t added = 0;
    for (const auto& s : p.labelling_pool()) {
      if (added == fx_label_count) break;
      if (labelled.count(s.snippet_id)) continue;
      LabelRecord rec;
      rec.keyframe_ref = s.snippet_id;
      rec.relevant = p.fixture()->clip(s.video_ref).segment_at(s.keyframe_time_s).relevant;
      rec.annotator = fx_annotator;
      rec.timestamp = utc_timestamp();
      p.labels().append(rec);
      ++added;
    }
    print({{"added", added}, {"labels", p.labels().size()}});
  });

  std::string fs_out, fs_task = "single_label";
  clf::SyntheticTaskOptions fs_opts;
  auto* fx_features = fixture->add_subcommand("features", "write a synthetic frozen-feature set");
  fx_features->add_option("--out", fs_out)->required();
  fx_features->add_option("--task", fs_task)->capture_default_str();
  fx_features->add_option("--classes", fs_opts.classes)->capture_default_str();
  fx_features->add_option("--sequences", fs_opts.sequences)->capture_default_str();
  fx_features->add_option("--samples-per-sequence", fs_opts.samples_per_sequence)->capture_default_str();
  fx_features->add_option("--tokens", fs_opts.tokens)->capture_default_str();
  fx_features->add_option("--dim", fs_opts.dim)->capture_default_str();
  fx_features->add_option("--signal", fs_opts.signal)->capture_default_str();
  fx_features->add_option("--noise", fs_opts.noise)->capture_default_str();
  fx_features->add_option("--split", fs_opts.split, "train/val/test draws share class directions")
      ->capture_default_str();
  fx_features->callback([&] {
    fs_opts.task = clf::parse_task(fs_task);
    if (g.seed) fs_opts.seed = *g.seed;
    const auto set = clf::make_synthetic_task(fs_opts);
    clf::save_feature_set(fs_out, set);
    print({{"features", fs_out}, {"samples", set.samples.size()}, {"classes", set.classes}});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
