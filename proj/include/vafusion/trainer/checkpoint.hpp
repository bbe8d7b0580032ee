#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vafusion/numerics/autograd.hpp"

namespace vaf {

/// Contents of a checkpoint file.
///
/// Layout (all integers little-endian, doubles as their IEEE-754 bit pattern in a u64):
///   magic "VAFCKPT1" | u32 version | str arch | str config_json
///   u64 n_tensors  { str name | u32 rank | u64 extent[rank] | f64 data[prod] }
///   u64 adam_steps | u64 n_moments { str name | tensor m | tensor v }
///   u64 epoch | u8 has_best | f64 best_metric
/// where str is u64 length followed by UTF-8 bytes.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string arch;
  nlohmann::json config;
  std::vector<std::pair<std::string, NumArray>> tensors;
  std::uint64_t adam_steps = 0;
  std::vector<std::pair<std::string, std::pair<NumArray, NumArray>>> moments;
  std::uint64_t epoch = 0;
  std::optional<double> best_metric;
};

/// Writes to a temporary sibling and renames, so a crash never leaves a torn file.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::pair<std::string, NumArray>> snapshot_parameters(const ParameterSet& params);
/// Copies tensors into same-named parameters. Every parameter must be present with its shape.
void restore_parameters(const std::vector<std::pair<std::string, NumArray>>& tensors, ParameterSet& params);

}  // namespace vaf
