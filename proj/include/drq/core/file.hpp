#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace drq {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace drq
