#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace privi::curation {

// Row-major float32 embeddings keyed by snippet id.
//
// File layout (little-endian):
//   "PVEM" | u32 version = 1 | u32 dim | u64 count | count * dim f32
// The sidecar "<file>.index" holds one "<snippet_id>\t<row>" line per row.
class EmbeddingStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  EmbeddingStore() = default;
  explicit EmbeddingStore(std::uint32_t dim) : dim_(dim) {}

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  // Throws ContractError on a duplicate id or wrong dimension.
  std::size_t add(const std::string& snippet_id, std::span<const float> embedding);
  std::optional<std::span<const float>> find(const std::string& snippet_id) const;
  std::span<const float> row(std::size_t r) const;

  void save(const std::filesystem::path& path) const;
  static EmbeddingStore load(const std::filesystem::path& path);
  static std::filesystem::path index_path(const std::filesystem::path& path);

 private:
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> rows_;
};

}  // namespace privi::curation
