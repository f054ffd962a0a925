#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "drq/nn/parameter.hpp"

namespace drq::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using Metadata = std::vector<std::pair<std::string, std::uint64_t>>;

template <typename T>
struct CheckpointData {
  std::uint32_t version = kCheckpointVersion;
  Metadata metadata;
  std::vector<Parameter<T>> parameters;

  const Parameter<T>* find(const std::string& name) const;
  std::uint64_t meta(const std::string& key) const;  // throws FormatError if absent
};

// Byte layout: docs/checkpoint_format.md.
template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Metadata& metadata,
                                            const std::vector<const Parameter<T>*>& params);
template <typename T>
CheckpointData<T> decode_checkpoint(std::span<const std::uint8_t> bytes);

template <typename T>
void write_checkpoint(const std::filesystem::path& path, const Metadata& metadata,
                      const std::vector<const Parameter<T>*>& params);
template <typename T>
CheckpointData<T> read_checkpoint(const std::filesystem::path& path);

// Copies values and Adam state from `source` into `target` by name; shapes
// must match exactly.
template <typename T>
void restore_parameters(const CheckpointData<T>& source, std::span<Parameter<T>> target);

}  // namespace drq::nn
