#include "privi/providers/http_client.hpp"

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <nlohmann/json.hpp>
#include <semaphore>
#include <thread>

#include "privi/common/base64.hpp"
#include "privi/common/error.hpp"

namespace privi {
namespace {

using nlohmann::json;

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

json encode_image(const Frame& f) {
  require(f.valid(), "http client: frame '" + f.ref + "' has an invalid pixel buffer");
  return json{{"image", base64_encode(f.rgb)}, {"width", f.width}, {"height", f.height}};
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception&) {
    throw SchemaError("response is not JSON: " + excerpt(body));
  }
}

TokenLayout parse_layout(const json& j, const std::string& body) {
  TokenLayout l;
  try {
    l.frames = j.at("frames").get<std::size_t>();
    l.height = j.at("height").get<std::size_t>();
    l.width = j.at("width").get<std::size_t>();
    l.tubelet_depth = j.at("tubelet").get<std::size_t>();
    l.patch = j.at("patch").get<std::size_t>();
  } catch (const json::exception&) {
    throw SchemaError("health layout malformed: " + excerpt(body));
  }
  return l;
}

}  // namespace

struct HttpInferenceClient::Impl {
  explicit Impl(int max_in_flight) : slots(std::max(1, max_in_flight)) {}

  std::counting_semaphore<1024> slots;
  std::atomic<int> attempts{0};
  std::mutex health_mu;
  std::optional<HealthInfo> health;
};

HttpInferenceClient::HttpInferenceClient(std::string base_url, HttpClientOptions options)
    : base_url_(std::move(base_url)), options_(options), impl_(std::make_unique<Impl>(options.max_in_flight)) {
  require(!base_url_.empty(), "http client: empty base url");
  require(options_.retries >= 0, "http client: retries must be non-negative");
}

HttpInferenceClient::~HttpInferenceClient() = default;

int HttpInferenceClient::attempts() const { return impl_->attempts.load(); }

namespace {

struct Call {
  std::string method;
  std::string path;
  std::string body;
};

}  // namespace

static std::string perform(const std::string& base_url, const HttpClientOptions& opt, std::counting_semaphore<1024>& slots,
                           std::atomic<int>& attempts, const Call& call) {
  slots.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots};

  std::string last_error;
  auto backoff = opt.backoff;
  for (int attempt = 0; attempt <= opt.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    ++attempts;
    httplib::Client client(base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opt.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opt.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = call.method == "GET" ? client.Get(call.path)
                                    : client.Post(call.path, call.body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProviderError(call.path + " rejected with HTTP " + std::to_string(res->status) + ": " +
                          excerpt(res->body));
    return res->body;
  }
  throw ProviderError(call.path + " failed after " + std::to_string(opt.retries + 1) + " attempts: " + last_error);
}

HealthInfo HttpInferenceClient::health() const {
  std::lock_guard lock(impl_->health_mu);
  if (impl_->health) return *impl_->health;
  const auto body = perform(base_url_, options_, impl_->slots, impl_->attempts, {"GET", "/health", ""});
  const json j = parse_body(body);
  HealthInfo h;
  try {
    h.dim = j.at("dim").get<std::size_t>();
  } catch (const json::exception&) {
    throw SchemaError("health response lacks dim: " + excerpt(body));
  }
  if (j.contains("layout")) h.layout = parse_layout(j.at("layout"), body);
  impl_->health = h;
  return h;
}

std::size_t HttpInferenceClient::dim() const { return options_.dim ? *options_.dim : health().dim; }

TokenLayout HttpInferenceClient::layout() const { return options_.layout ? *options_.layout : health().layout; }

std::vector<float> HttpInferenceClient::embed(const Frame& keyframe) const {
  const auto body =
      perform(base_url_, options_, impl_->slots, impl_->attempts, {"POST", "/embed", encode_image(keyframe).dump()});
  const json j = parse_body(body);
  if (!j.contains("embedding") || !j["embedding"].is_array())
    throw SchemaError("embed response lacks embedding array: " + excerpt(body));
  std::vector<float> out;
  out.reserve(j["embedding"].size());
  for (const auto& v : j["embedding"]) {
    if (!v.is_number()) throw SchemaError("embedding holds a non-number: " + excerpt(body));
    out.push_back(v.get<float>());
  }
  const std::size_t expected = dim();
  if (out.size() != expected)
    throw SchemaError("embedding has " + std::to_string(out.size()) + " values, expected " +
                      std::to_string(expected) + ": " + excerpt(body));
  return out;
}

std::vector<DetectionBox> HttpInferenceClient::detect(const Frame& keyframe, std::string_view prompt) const {
  json req = encode_image(keyframe);
  req["prompt"] = std::string(prompt);
  const auto body = perform(base_url_, options_, impl_->slots, impl_->attempts, {"POST", "/detect", req.dump()});
  const json j = parse_body(body);
  if (!j.contains("boxes") || !j["boxes"].is_array())
    throw SchemaError("detect response lacks boxes array: " + excerpt(body));
  std::vector<DetectionBox> boxes;
  try {
    for (const auto& b : j["boxes"]) {
      DetectionBox box;
      box.x1 = b.at("x1").get<double>();
      box.y1 = b.at("y1").get<double>();
      box.x2 = b.at("x2").get<double>();
      box.y2 = b.at("y2").get<double>();
      box.score = b.at("score").get<double>();
      box.label = b.at("label").get<std::string>();
      boxes.push_back(std::move(box));
    }
  } catch (const json::exception&) {
    throw SchemaError("detect box malformed: " + excerpt(body));
  }
  try {
    validate_boxes(boxes, keyframe.width, keyframe.height);
  } catch (const SchemaError& e) {
    throw SchemaError(std::string(e.what()) + ": " + excerpt(body));
  }
  return boxes;
}

TokenFeatures HttpInferenceClient::features(const Miniclip& clip) const {
  require(!clip.frames.empty(), "features: miniclip '" + clip.ref + "' has no frames");
  json frames = json::array();
  for (const auto& f : clip.frames) {
    require(f.valid(), "features: invalid frame in miniclip '" + clip.ref + "'");
    frames.push_back(base64_encode(f.rgb));
  }
  json req{{"frames", frames},
           {"width", clip.frames.front().width},
           {"height", clip.frames.front().height},
           {"crop", {{"x1", clip.crop.x1}, {"y1", clip.crop.y1}, {"x2", clip.crop.x2}, {"y2", clip.crop.y2}}}};
  const auto body = perform(base_url_, options_, impl_->slots, impl_->attempts, {"POST", "/features", req.dump()});
  const json j = parse_body(body);
  TokenFeatures tf;
  try {
    tf.n = j.at("n").get<std::size_t>();
    tf.d = j.at("d").get<std::size_t>();
    tf.tokens = j.at("tokens").get<std::vector<float>>();
  } catch (const json::exception&) {
    throw SchemaError("features response malformed: " + excerpt(body));
  }
  if (tf.tokens.size() != tf.n * tf.d)
    throw SchemaError("features: tokens length " + std::to_string(tf.tokens.size()) + " != n*d: " + excerpt(body));
  for (float v : tf.tokens)
    if (!std::isfinite(v)) throw SchemaError("features: non-finite token value: " + excerpt(body));
  const auto l = layout();
  if (tf.n != tokenize_layout(l) || tf.d != dim())
    throw SchemaError("features: shape " + std::to_string(tf.n) + "x" + std::to_string(tf.d) +
                      " does not match the declared layout: " + excerpt(body));
  tf.provider_id = id();
  tf.miniclip_ref = clip.ref;
  tf.crop = clip.crop;
  return tf;
}

}  // namespace privi
