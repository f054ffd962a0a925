#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "drq/core/rng.hpp"
#include "drq/nn/tensor.hpp"

namespace drq::replay {

struct FrameSpec {
  std::size_t channels = 3;
  std::size_t height = 84;
  std::size_t width = 84;

  std::size_t bytes() const { return channels * height * width; }
  bool operator==(const FrameSpec&) const = default;
};

struct BufferConfig {
  // Counted in stored environment transitions (one per add_step).
  std::size_t capacity = 1'000'000;
  std::size_t n = 3;
  double gamma = 0.99;
  std::size_t frame_stack = 3;
};

// One trajectory. frames holds length + 1 single frames: the reset frame and
// one per step, each frame.bytes() long.
struct EpisodeRecord {
  FrameSpec frame;
  std::size_t action_dim = 0;
  std::vector<std::uint8_t> frames;
  std::vector<float> actions;
  std::vector<float> rewards;

  std::size_t length() const { return rewards.size(); }
  std::size_t frame_count() const { return frame.bytes() == 0 ? 0 : frames.size() / frame.bytes(); }
  std::span<const std::uint8_t> frame_at(std::size_t t) const;
  std::size_t storage_bytes() const;
};

// Writes the channel-concatenation of frames max(t-k+1, 0) ... t into dst,
// which must hold frame_stack * frame.bytes() bytes.
void stacked_obs(const EpisodeRecord& episode, std::size_t t, std::size_t frame_stack, std::span<std::uint8_t> dst);

template <typename T>
struct NStepBatch {
  nn::Tensor<T> obs;       // [B, k*C, H, W], stack at t
  nn::Tensor<T> action;    // [B, A]
  nn::Tensor<T> reward;    // [B], sum_i gamma^i r_{t+i}
  nn::Tensor<T> discount;  // [B], gamma^n
  nn::Tensor<T> next_obs;  // [B, k*C, H, W], stack at t+n
  // Source of each row, in buffer-relative terms: the sequence number of the
  // episode (counted from the first ever added) and t.
  std::vector<std::uint64_t> episode;
  std::vector<std::size_t> step;
};

// Episodic replay with per-step frame storage. Stacks are rebuilt at sample
// time so each frame is held once. Thread-safe for one writer plus readers.
class ReplayBuffer {
 public:
  ReplayBuffer(BufferConfig config, FrameSpec frame, std::size_t action_dim);

  const BufferConfig& config() const { return config_; }
  const FrameSpec& frame_spec() const { return frame_; }
  std::size_t action_dim() const { return action_dim_; }

  void begin_episode(std::span<const std::uint8_t> first_frame);
  // frame is the observation after the step; reward must lie in [0, 1].
  void add_step(std::span<const std::uint8_t> frame, std::span<const float> action, double reward);
  void end_episode();
  // Appends a complete, closed episode (used when restoring from disk).
  void add_episode(EpisodeRecord episode);

  bool episode_open() const;
  // Transitions held, including the open episode.
  std::size_t stored_steps() const;
  std::size_t closed_episodes() const;
  // Number of (episode, t) pairs sample() draws from.
  std::size_t valid_windows() const;
  bool ready() const { return valid_windows() > 0; }
  std::uint64_t evicted_episodes() const;

  // nullopt when no closed episode has length >= n (not ready).
  template <typename T>
  std::optional<NStepBatch<T>> sample(std::size_t batch_size, Rng& rng) const;

  // Copy of one closed episode by position (0 = oldest).
  EpisodeRecord episode(std::size_t index) const;
  // Bytes held in episode storage, measured from allocated buffer capacities.
  std::size_t storage_bytes() const;

 private:
  void evict_if_needed_locked();
  void rebuild_index_locked();
  void check_episode_locked(const EpisodeRecord& e) const;

  BufferConfig config_;
  FrameSpec frame_;
  std::size_t action_dim_;

  mutable std::mutex mutex_;
  std::deque<std::shared_ptr<const EpisodeRecord>> closed_;
  std::unique_ptr<EpisodeRecord> open_;
  std::size_t closed_steps_ = 0;
  std::uint64_t evicted_ = 0;
  // cumulative_[i] = valid windows in closed_[0..i].
  std::vector<std::size_t> cumulative_;
};

// Comparison layout that stores the full stacked observation for every step.
class NaiveStackedStore {
 public:
  NaiveStackedStore(FrameSpec frame, std::size_t frame_stack, std::size_t action_dim);
  void add_episode(const EpisodeRecord& episode);
  std::size_t storage_bytes() const;

 private:
  FrameSpec frame_;
  std::size_t frame_stack_;
  std::size_t action_dim_;
  std::vector<std::vector<std::uint8_t>> observations_;
  std::vector<std::vector<float>> actions_;
  std::vector<std::vector<float>> rewards_;
};

}  // namespace drq::replay
