#include "drq/replay/episode_io.hpp"

#include "drq/core/bytes.hpp"
#include "drq/core/file.hpp"

namespace drq::replay {
namespace {

constexpr std::string_view kMagic = "DRQEPIS1";
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> encode_episode(const EpisodeRecord& e) {
  require(e.frames.size() == (e.length() + 1) * e.frame.bytes(), "encode_episode: frame count must be length + 1");
  require(e.actions.size() == e.length() * e.action_dim, "encode_episode: action count mismatch");
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(e.frame.channels));
  w.u32(static_cast<std::uint32_t>(e.frame.height));
  w.u32(static_cast<std::uint32_t>(e.frame.width));
  w.u32(static_cast<std::uint32_t>(e.action_dim));
  w.u64(e.length());
  w.bytes(e.frames);
  for (float a : e.actions) w.f32(a);
  for (float r : e.rewards) w.f32(r);
  w.u64(fnv1a64(w.buffer()));
  return std::move(w.buffer());
}

EpisodeRecord decode_episode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("episode file truncated");
  ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("episode file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw FormatError("episode file: unsupported version " + std::to_string(version));
  EpisodeRecord e;
  e.frame.channels = r.u32();
  e.frame.height = r.u32();
  e.frame.width = r.u32();
  e.action_dim = r.u32();
  const std::uint64_t length = r.u64();
  const std::size_t fb = e.frame.bytes();
  if (fb == 0 || e.action_dim == 0) throw FormatError("episode file: zero extent in header");
  if (length >= r.remaining()) throw FormatError("episode file: payload shorter than header declares");
  const std::uint64_t payload = (length + 1) * fb + length * e.action_dim * 4 + length * 4;
  if (payload + 8 > r.remaining()) throw FormatError("episode file: payload shorter than header declares");
  auto frames = r.bytes((length + 1) * fb);
  e.frames.assign(frames.begin(), frames.end());
  e.actions.resize(length * e.action_dim);
  for (auto& a : e.actions) a = r.f32();
  e.rewards.resize(length);
  for (auto& x : e.rewards) x = r.f32();
  const std::size_t body = r.offset();
  const std::uint64_t stored = r.u64();
  if (stored != fnv1a64(bytes.first(body))) throw FormatError("episode file: checksum mismatch");
  if (r.remaining() != 0) throw FormatError("episode file: trailing bytes");
  return e;
}

void write_episode(const std::filesystem::path& path, const EpisodeRecord& episode) {
  const auto bytes = encode_episode(episode);
  write_file_atomic(path, bytes);
}

EpisodeRecord read_episode(const std::filesystem::path& path) { return decode_episode(read_file_bytes(path)); }

}  // namespace drq::replay
