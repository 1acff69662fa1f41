#include "privi/classifier/checkpoint.hpp"

#include <bit>

#include "privi/common/error.hpp"
#include "privi/common/io.hpp"

namespace privi {
namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& off) {
  require(off + sizeof(T) <= in.size(), "parameter file truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  off += sizeof(T);
  return v;
}

}  // namespace

std::string encode_param_file(const std::string& magic, const nlohmann::json& config,
                              std::span<const nn::Tensor> params) {
  require(magic.size() == 4, "parameter file magic must be 4 bytes");
  const std::string cfg = config.dump();
  std::string out = magic;
  put_le<std::uint32_t>(out, kParamFileVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  put_le<std::uint64_t>(out, nn::count_parameters(params));
  for (const auto& p : params)
    for (double v : p.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

void write_param_file(const std::filesystem::path& path, const std::string& magic, const nlohmann::json& config,
                      std::span<const nn::Tensor> params) {
  write_file_atomic(path, encode_param_file(magic, config, params));
}

ParamFile read_param_file(const std::filesystem::path& path, const std::string& magic) {
  const std::string in = read_file(path);
  require(in.size() >= 12 && in.compare(0, 4, magic) == 0,
          "'" + path.string() + "' is not a " + magic + " parameter file");
  ParamFile f;
  f.magic = magic;
  std::size_t off = 4;
  f.version = get_le<std::uint32_t>(in, off);
  require(f.version == kParamFileVersion, "unsupported parameter file version " + std::to_string(f.version));
  const auto cfg_len = get_le<std::uint32_t>(in, off);
  require(off + cfg_len <= in.size(), "parameter file truncated");
  try {
    f.config = nlohmann::json::parse(in.substr(off, cfg_len));
  } catch (const nlohmann::json::exception& e) {
    throw ContractError("parameter file config is not valid JSON: " + std::string(e.what()));
  }
  off += cfg_len;
  const auto count = get_le<std::uint64_t>(in, off);
  require(in.size() == off + count * 4, "parameter file body does not match its count");
  f.values.resize(count);
  for (auto& v : f.values) v = std::bit_cast<float>(get_le<std::uint32_t>(in, off));
  return f;
}

void assign_parameters(std::span<nn::Tensor> params, std::span<const float> values) {
  require(nn::count_parameters(params) == values.size(),
          "parameter count " + std::to_string(values.size()) + " does not match the model (" +
              std::to_string(nn::count_parameters(params)) + ")");
  std::size_t off = 0;
  for (auto& p : params) {
    auto data = p.mutable_data();
    for (auto& v : data) v = values[off++];
  }
}

}  // namespace privi

namespace privi::clf {

void save_classifier(const std::filesystem::path& path, const AttentiveClassifier& model) {
  const auto params = model.parameters();
  write_param_file(path, "PVHD", model.config().to_json(), params);
}

AttentiveClassifier load_classifier(const std::filesystem::path& path) {
  const auto file = read_param_file(path, "PVHD");
  auto model = AttentiveClassifier::create(ClassifierConfig::from_json(file.config));
  auto params = model.parameters();
  assign_parameters(params, file.values);
  return model;
}

}  // namespace privi::clf
