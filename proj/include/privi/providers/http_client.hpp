#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "privi/providers/providers.hpp"

namespace privi {

struct HttpClientOptions {
  std::chrono::milliseconds timeout{10000};
  int retries = 3;
  std::chrono::milliseconds backoff{100};  // doubled after each retry
  int max_in_flight = 8;
  // When set, skips the /health round-trip for these values.
  std::optional<std::size_t> dim;
  std::optional<TokenLayout> layout;
};

struct HealthInfo {
  std::size_t dim = 0;
  TokenLayout layout;
};

// JSON-over-HTTP client for an inference server exposing
//   POST /embed, POST /detect, POST /features, GET /health.
// 5xx and transport failures are retried with exponential backoff; once
// retries are exhausted a ProviderError is thrown. Payloads that violate the
// wire schema throw SchemaError with an excerpt of the offending body.
class HttpInferenceClient final : public EmbeddingProvider, public DetectorProvider, public FeatureProvider {
 public:
  explicit HttpInferenceClient(std::string base_url, HttpClientOptions options = {});
  ~HttpInferenceClient() override;

  std::string id() const override { return "http:" + base_url_; }
  std::size_t dim() const override;
  TokenLayout layout() const override;

  HealthInfo health() const;
  std::vector<float> embed(const Frame& keyframe) const override;
  std::vector<DetectionBox> detect(const Frame& keyframe, std::string_view prompt) const override;
  TokenFeatures features(const Miniclip& clip) const override;

  // Requests issued so far including retries; exposed for tests.
  int attempts() const;

 private:
  struct Impl;
  std::string base_url_;
  HttpClientOptions options_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace privi
