#include "privi/curation/embedding_store.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "privi/common/error.hpp"
#include "privi/common/io.hpp"

namespace privi::curation {
namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& off) {
  require(off + sizeof(T) <= in.size(), "embedding store truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  off += sizeof(T);
  return v;
}

}  // namespace

std::size_t EmbeddingStore::add(const std::string& snippet_id, std::span<const float> embedding) {
  require(dim_ > 0, "embedding store has no dimension");
  require(embedding.size() == dim_, "embedding for '" + snippet_id + "' has " + std::to_string(embedding.size()) +
                                        " values, store dim is " + std::to_string(dim_));
  require(snippet_id.find_first_of("\t\n") == std::string::npos, "snippet id contains a tab or newline");
  const auto [it, inserted] = rows_.try_emplace(snippet_id, ids_.size());
  require(inserted, "duplicate embedding for '" + snippet_id + "'");
  ids_.push_back(snippet_id);
  data_.insert(data_.end(), embedding.begin(), embedding.end());
  return it->second;
}

std::optional<std::span<const float>> EmbeddingStore::find(const std::string& snippet_id) const {
  const auto it = rows_.find(snippet_id);
  if (it == rows_.end()) return std::nullopt;
  return row(it->second);
}

std::span<const float> EmbeddingStore::row(std::size_t r) const {
  require(r < ids_.size(), "embedding row out of range");
  return {data_.data() + r * dim_, dim_};
}

std::filesystem::path EmbeddingStore::index_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".index");
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
  std::string out = "PVEM";
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, dim_);
  put_le<std::uint64_t>(out, ids_.size());
  out.reserve(out.size() + data_.size() * 4);
  for (float f : data_) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  std::string index;
  for (std::size_t r = 0; r < ids_.size(); ++r) index += ids_[r] + "\t" + std::to_string(r) + "\n";
  write_file_atomic(path, out);
  write_file_atomic(index_path(path), index);
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  require(in.size() >= 20 && in.compare(0, 4, "PVEM") == 0, "'" + path.string() + "' is not a PVEM file");
  std::size_t off = 4;
  const auto version = get_le<std::uint32_t>(in, off);
  require(version == kVersion, "unsupported PVEM version " + std::to_string(version));
  EmbeddingStore store(get_le<std::uint32_t>(in, off));
  const auto count = get_le<std::uint64_t>(in, off);
  require(in.size() == off + count * store.dim_ * 4, "PVEM body size does not match header");
  store.data_.resize(count * store.dim_);
  for (auto& f : store.data_) f = std::bit_cast<float>(get_le<std::uint32_t>(in, off));

  std::istringstream index(read_file(index_path(path)));
  std::string line;
  std::vector<std::string> ids(count);
  std::size_t seen = 0;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    require(tab != std::string::npos, "malformed embedding index line");
    const auto r = std::stoull(line.substr(tab + 1));
    require(r < count && ids[r].empty(), "embedding index row out of range or repeated");
    ids[r] = line.substr(0, tab);
    ++seen;
  }
  require(seen == count, "embedding index does not cover every row");
  store.ids_ = std::move(ids);
  for (std::size_t r = 0; r < count; ++r)
    require(store.rows_.try_emplace(store.ids_[r], r).second, "duplicate id in embedding index");
  return store;
}

}  // namespace privi::curation
