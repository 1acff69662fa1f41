#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privi/classifier/attentive.hpp"
#include "privi/numerics/tensor.hpp"

namespace privi {

// Versioned parameter file, little-endian:
//   magic[4] | u32 version | u32 config_len | config JSON | u64 count | count f32
// Parameters are stored flat in declaration order.
struct ParamFile {
  std::string magic;
  std::uint32_t version = 1;
  nlohmann::json config;
  std::vector<float> values;
};

inline constexpr std::uint32_t kParamFileVersion = 1;

std::string encode_param_file(const std::string& magic, const nlohmann::json& config,
                              std::span<const nn::Tensor> params);
void write_param_file(const std::filesystem::path& path, const std::string& magic, const nlohmann::json& config,
                      std::span<const nn::Tensor> params);
// Throws ContractError on a wrong magic, version or truncated body.
ParamFile read_param_file(const std::filesystem::path& path, const std::string& magic);
// Copies the flat values into the tensors; sizes must match exactly.
void assign_parameters(std::span<nn::Tensor> params, std::span<const float> values);

}  // namespace privi

namespace privi::clf {

void save_classifier(const std::filesystem::path& path, const AttentiveClassifier& model);
AttentiveClassifier load_classifier(const std::filesystem::path& path);

}  // namespace privi::clf
