#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "drq/replay/replay_buffer.hpp"

// One-file-per-episode persistence. Layout in docs/episode_format.md.
namespace drq::replay {

std::vector<std::uint8_t> encode_episode(const EpisodeRecord& episode);
EpisodeRecord decode_episode(std::span<const std::uint8_t> bytes);
void write_episode(const std::filesystem::path& path, const EpisodeRecord& episode);
EpisodeRecord read_episode(const std::filesystem::path& path);

}  // namespace drq::replay
