#include "privi/service/api.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>

#include <httplib.h>

#include "privi/common/base64.hpp"
#include "privi/common/error.hpp"
#include "privi/common/png.hpp"
#include "privi/curation/manifest.hpp"

namespace privi::service {

using nlohmann::json;
using nlohmann::ordered_json;
namespace cur = privi::curation;

namespace {

constexpr int kThumbnailMaxSide = 160;
constexpr std::size_t kDefaultPageSize = 50;
constexpr std::size_t kMaxPageSize = 500;

void reply(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

// Nearest-neighbour downscale so the longer side is at most `max_side`.
Frame downscale(const Frame& f, int max_side) {
  const int longest = std::max(f.width, f.height);
  if (longest <= max_side) return f;
  Frame out;
  out.ref = f.ref;
  out.width = std::max(1, f.width * max_side / longest);
  out.height = std::max(1, f.height * max_side / longest);
  out.rgb.resize(out.pixel_count() * 3);
  for (int y = 0; y < out.height; ++y) {
    const int sy = y * f.height / out.height;
    for (int x = 0; x < out.width; ++x) {
      const int sx = x * f.width / out.width;
      const auto src = (static_cast<std::size_t>(sy) * f.width + sx) * 3;
      const auto dst = (static_cast<std::size_t>(y) * out.width + x) * 3;
      std::copy_n(f.rgb.begin() + static_cast<std::ptrdiff_t>(src), 3, out.rgb.begin() + static_cast<std::ptrdiff_t>(dst));
    }
  }
  return out;
}

std::string png_string(const Frame& f) {
  const auto bytes = encode_png_rgb(f.width, f.height, f.rgb);
  return std::string(bytes.begin(), bytes.end());
}

std::size_t parse_count(const std::string& text, const std::string& name) {
  std::size_t pos = 0;
  long long v = -1;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
  }
  require(pos == text.size() && v >= 0, "query parameter '" + name + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

struct ApiServer::Impl {
  Pipeline& pipeline;
  httplib::Server server;
  std::mutex writer;
  std::mutex retrain;
  std::atomic<int> busy{0};

  explicit Impl(Pipeline& p) : pipeline(p) { routes(); }

  struct BusyGuard {
    std::atomic<int>& n;
    explicit BusyGuard(std::atomic<int>& c) : n(c) { ++n; }
    ~BusyGuard() { --n; }
  };

  void routes() {
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const MissingArtifactError& e) {
        fail(res, 409, e.what());
      } catch (const ContractError& e) {
        fail(res, 400, e.what());
      } catch (const SchemaError& e) {
        fail(res, 422, e.what());
      } catch (const ProviderError& e) {
        fail(res, 502, e.what());
      } catch (const std::exception& e) {
        fail(res, 500, e.what());
      }
    });

    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"ok", true}}); });

    server.Get("/api/frames/next", [this](const httplib::Request& req, httplib::Response& res) {
      const auto labelled = pipeline.labels().labelled_keyframes();
      const auto pool = pipeline.labelling_pool();
      const cur::Snippet* next = nullptr;
      std::size_t remaining = 0;
      for (const auto& s : pool) {
        if (labelled.count(s.snippet_id)) continue;
        if (!next) next = &s;
        ++remaining;
      }
      if (!next) {
        res.status = 204;
        return;
      }
      const auto frame = pipeline.keyframe(*next);
      require(frame.has_value(), "keyframe of '" + next->snippet_id + "' is unreadable");
      const std::string png = png_string(*frame);
      if (req.get_param_value("format") == "json") {
        reply(res, 200,
              {{"keyframe_ref", next->snippet_id}, {"video_ref", next->video_ref},
               {"source_id", next->source_id}, {"keyframe_time_s", next->keyframe_time_s},
               {"remaining", remaining}, {"labelled", labelled.size()},
               {"criteria", pipeline.config().label_criteria}, {"width", frame->width},
               {"height", frame->height},
               {"image_png_base64", base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()))}});
        return;
      }
      res.set_header("X-Keyframe-Ref", next->snippet_id);
      res.set_header("X-Snippet-Id", next->snippet_id);
      res.set_header("X-Video-Ref", next->video_ref);
      res.set_header("X-Keyframe-Time", std::to_string(next->keyframe_time_s));
      res.set_header("X-Remaining", std::to_string(remaining));
      res.set_content(png, "image/png");
    });

    server.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        return fail(res, 422, std::string("label payload is not JSON: ") + e.what());
      }
      LabelRecord rec;
      try {
        rec = LabelRecord::from_json(body, pipeline.config().label_criteria);
      } catch (const SchemaError& e) {
        return fail(res, 422, e.what());
      }
      const auto pool = pipeline.labelling_pool();
      const bool known = std::any_of(pool.begin(), pool.end(),
                                     [&](const cur::Snippet& s) { return s.snippet_id == rec.keyframe_ref; });
      if (!known) return fail(res, 422, "unknown keyframe_ref '" + rec.keyframe_ref + "'");
      pipeline.labels().append(rec);
      reply(res, 201, {{"stored", rec.to_json()}, {"labels", pipeline.labels().size()}});
    });

    server.Post("/api/relevance/train", [this](const httplib::Request&, httplib::Response& res) {
      std::unique_lock<std::mutex> once(retrain, std::try_to_lock);
      if (!once.owns_lock()) return fail(res, 409, "a retrain is already running");
      BusyGuard guard(busy);
      std::lock_guard<std::mutex> lock(writer);
      reply(res, 200, pipeline.train_relevance());
    });

    server.Get("/api/relevance/curve", [this](const httplib::Request&, httplib::Response& res) {
      const auto& ws = pipeline.workspace();
      if (!ws.has("relevance", "report.json")) return fail(res, 404, "no relevance model has been trained yet");
      auto report = ordered_json::parse(ws.get("relevance", "report.json"));
      const auto t = pipeline.effective_threshold();
      report["threshold"] = t ? ordered_json(*t) : ordered_json(nullptr);
      reply(res, 200, report);
    });

    server.Put("/api/config/threshold", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        return fail(res, 422, std::string("payload is not JSON: ") + e.what());
      }
      if (!body.is_object() || !body.contains("value") || !body["value"].is_number())
        return fail(res, 422, "payload must be {\"value\": <number>}");
      const double value = body["value"].get<double>();
      if (!(value > 0.0 && value < 1.0)) return fail(res, 422, "threshold must be in (0, 1)");
      std::lock_guard<std::mutex> lock(writer);
      if (!pipeline.has_relevance_model()) return fail(res, 409, "no relevance model has been trained yet");
      pipeline.set_relevance_threshold(value);
      reply(res, 200, {{"threshold", value}});
    });

    server.Get("/api/snippets", [this](const httplib::Request& req, httplib::Response& res) {
      const auto [stage, snippets] = pipeline.latest_snippets();
      std::optional<bool> kept;
      if (req.has_param("kept")) {
        const auto v = req.get_param_value("kept");
        require(v == "true" || v == "false", "query parameter 'kept' must be true or false");
        kept = v == "true";
      }
      std::optional<cur::DiscardReason> reason;
      if (req.has_param("reason")) reason = cur::parse_discard_reason(req.get_param_value("reason"));
      const std::string source = req.get_param_value("source");
      const std::size_t page = req.has_param("page") ? parse_count(req.get_param_value("page"), "page") : 0;
      const std::size_t page_size =
          req.has_param("page_size") ? parse_count(req.get_param_value("page_size"), "page_size") : kDefaultPageSize;
      require(page_size > 0 && page_size <= kMaxPageSize, "page_size must be in [1, 500]");

      std::vector<const cur::Snippet*> match;
      for (const auto& s : snippets) {
        if (kept && s.kept != *kept) continue;
        if (reason && s.discard_reason != *reason) continue;
        if (!source.empty() && s.source_id != source) continue;
        match.push_back(&s);
      }
      ordered_json items = ordered_json::array();
      for (std::size_t i = page * page_size; i < match.size() && i < (page + 1) * page_size; ++i) {
        auto item = ordered_json::parse(cur::snippet_to_json_line(*match[i]));
        item["thumbnail"] = "/api/snippets/" + match[i]->snippet_id + "/thumbnail";
        items.push_back(std::move(item));
      }
      reply(res, 200,
            {{"stage", stage}, {"total", match.size()}, {"page", page}, {"page_size", page_size},
             {"pages", (match.size() + page_size - 1) / page_size}, {"items", items}});
    });

    server.Get(R"(/api/snippets/(.+)/thumbnail)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto [stage, snippets] = pipeline.latest_snippets();
      const auto it = std::find_if(snippets.begin(), snippets.end(),
                                   [&](const cur::Snippet& s) { return s.snippet_id == id; });
      if (it == snippets.end()) return fail(res, 404, "unknown snippet '" + id + "'");
      const auto frame = pipeline.keyframe(*it);
      if (!frame) return fail(res, 404, "keyframe of '" + id + "' is unreadable");
      res.set_content(png_string(downscale(*frame, kThumbnailMaxSide)), "image/png");
    });

    server.Post(R"(/api/pipeline/([a-z]+)/run)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string name = req.matches[1];
      Stage stage;
      try {
        stage = parse_stage(name);
      } catch (const ContractError& e) {
        return fail(res, 404, e.what());
      }
      BusyGuard guard(busy);
      std::lock_guard<std::mutex> lock(writer);
      reply(res, 200, pipeline.run(stage).to_json());
    });

    server.Get("/api/pipeline/status", [this](const httplib::Request&, httplib::Response& res) {
      const auto& ws = pipeline.workspace();
      ordered_json stages = ordered_json::array();
      for (auto s : kAllStages) {
        const std::string name(to_string(s));
        const auto rec = ws.run_record(name);
        ordered_json entry = {{"stage", name}, {"done", rec.has_value()}};
        if (rec) entry["record"] = rec->to_json();
        stages.push_back(std::move(entry));
      }
      const auto relevance = ws.run_record("relevance");
      const auto t = pipeline.effective_threshold();
      reply(res, 200,
            {{"config_hash", pipeline.config().hash()},
             {"busy", busy.load() > 0},
             {"labels", pipeline.labels().size()},
             {"labelled_keyframes", pipeline.labels().labelled_keyframes().size()},
             {"relevance_model", pipeline.has_relevance_model()},
             {"threshold", t ? ordered_json(*t) : ordered_json(nullptr)},
             {"relevance", relevance ? relevance->to_json() : ordered_json(nullptr)},
             {"stages", stages}});
    });
  }
};

ApiServer::ApiServer(Pipeline& pipeline) : impl_(std::make_unique<Impl>(pipeline)) {}
ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    require(bound > 0, "could not bind to " + host);
    return bound;
  }
  require(impl_->server.bind_to_port(host, port), "could not bind to " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::serve() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace privi::service
