#include "drq/replay/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "drq/core/error.hpp"
#include "drq/kernels/kernels.hpp"

namespace drq::replay {

std::span<const std::uint8_t> EpisodeRecord::frame_at(std::size_t t) const {
  require(t < frame_count(), "frame index " + std::to_string(t) + " out of range for episode with " +
                                 std::to_string(frame_count()) + " frames");
  return std::span<const std::uint8_t>(frames).subspan(t * frame.bytes(), frame.bytes());
}

std::size_t EpisodeRecord::storage_bytes() const {
  return frames.capacity() * sizeof(std::uint8_t) + actions.capacity() * sizeof(float) +
         rewards.capacity() * sizeof(float) + sizeof(EpisodeRecord);
}

void stacked_obs(const EpisodeRecord& episode, std::size_t t, std::size_t frame_stack, std::span<std::uint8_t> dst) {
  require(frame_stack >= 1, "stacked_obs: frame_stack must be positive");
  require(t <= episode.length(), "stacked_obs: t = " + std::to_string(t) + " outside [0, " +
                                     std::to_string(episode.length()) + "]");
  const std::size_t fb = episode.frame.bytes();
  require(dst.size() == frame_stack * fb, "stacked_obs: destination holds " + std::to_string(dst.size()) +
                                              " bytes, need " + std::to_string(frame_stack * fb));
  for (std::size_t k = 0; k < frame_stack; ++k) {
    // Slot k holds frame t - (frame_stack - 1 - k), clamped at the reset frame.
    const std::size_t back = frame_stack - 1 - k;
    const std::size_t src = t >= back ? t - back : 0;
    std::memcpy(dst.data() + k * fb, episode.frames.data() + src * fb, fb);
  }
}

ReplayBuffer::ReplayBuffer(BufferConfig config, FrameSpec frame, std::size_t action_dim)
    : config_(config), frame_(frame), action_dim_(action_dim) {
  require(config_.capacity >= 1, "replay capacity must be at least 1");
  require(config_.n >= 1, "n-step horizon must be at least 1");
  require(config_.frame_stack >= 1, "frame_stack must be at least 1");
  require(config_.gamma >= 0.0 && config_.gamma <= 1.0, "discount must lie in [0, 1]");
  require(frame_.bytes() > 0, "frame extents must be positive");
  require(action_dim_ >= 1, "action_dim must be positive");
}

void ReplayBuffer::begin_episode(std::span<const std::uint8_t> first_frame) {
  std::lock_guard lock(mutex_);
  require(!open_, "begin_episode: an episode is already open");
  require(first_frame.size() == frame_.bytes(), "begin_episode: frame has " + std::to_string(first_frame.size()) +
                                                    " bytes, expected " + std::to_string(frame_.bytes()));
  open_ = std::make_unique<EpisodeRecord>();
  open_->frame = frame_;
  open_->action_dim = action_dim_;
  open_->frames.assign(first_frame.begin(), first_frame.end());
}

void ReplayBuffer::add_step(std::span<const std::uint8_t> frame, std::span<const float> action, double reward) {
  require(std::isfinite(reward) && reward >= 0.0 && reward <= 1.0,
          "reward " + std::to_string(reward) + " outside [0, 1]");
  require(frame.size() == frame_.bytes(), "add_step: frame has " + std::to_string(frame.size()) +
                                              " bytes, expected " + std::to_string(frame_.bytes()));
  require(action.size() == action_dim_, "add_step: action has " + std::to_string(action.size()) +
                                            " entries, expected " + std::to_string(action_dim_));
  std::lock_guard lock(mutex_);
  require(open_ != nullptr, "add_step: no open episode");
  require(open_->length() + 1 <= config_.capacity,
          "add_step: a single episode longer than capacity " + std::to_string(config_.capacity));
  open_->frames.insert(open_->frames.end(), frame.begin(), frame.end());
  open_->actions.insert(open_->actions.end(), action.begin(), action.end());
  open_->rewards.push_back(static_cast<float>(reward));
  evict_if_needed_locked();
}

void ReplayBuffer::end_episode() {
  std::lock_guard lock(mutex_);
  require(open_ != nullptr, "end_episode: no open episode");
  // Drop the geometric-growth slack; closed episodes never grow again.
  open_->frames.shrink_to_fit();
  open_->actions.shrink_to_fit();
  open_->rewards.shrink_to_fit();
  closed_steps_ += open_->length();
  closed_.push_back(std::shared_ptr<const EpisodeRecord>(open_.release()));
  rebuild_index_locked();
}

void ReplayBuffer::check_episode_locked(const EpisodeRecord& e) const {
  require(e.frame == frame_, "add_episode: frame extents differ from the buffer's");
  require(e.action_dim == action_dim_, "add_episode: action_dim differs from the buffer's");
  require(e.frames.size() == (e.length() + 1) * frame_.bytes(), "add_episode: frame count must be length + 1");
  require(e.actions.size() == e.length() * action_dim_, "add_episode: action count must be length * action_dim");
  require(e.length() <= config_.capacity, "add_episode: episode longer than capacity");
  for (float r : e.rewards) {
    require(std::isfinite(r) && r >= 0.0f && r <= 1.0f, "reward " + std::to_string(r) + " outside [0, 1]");
  }
}

void ReplayBuffer::add_episode(EpisodeRecord episode) {
  std::lock_guard lock(mutex_);
  require(!open_, "add_episode: an episode is open");
  check_episode_locked(episode);
  closed_steps_ += episode.length();
  closed_.push_back(std::make_shared<const EpisodeRecord>(std::move(episode)));
  evict_if_needed_locked();
  rebuild_index_locked();
}

void ReplayBuffer::evict_if_needed_locked() {
  const std::size_t open_steps = open_ ? open_->length() : 0;
  bool changed = false;
  while (closed_steps_ + open_steps > config_.capacity && !closed_.empty()) {
    closed_steps_ -= closed_.front()->length();
    closed_.pop_front();
    ++evicted_;
    changed = true;
  }
  if (changed) rebuild_index_locked();
}

void ReplayBuffer::rebuild_index_locked() {
  cumulative_.resize(closed_.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < closed_.size(); ++i) {
    const std::size_t len = closed_[i]->length();
    if (len >= config_.n) total += len - config_.n + 1;
    cumulative_[i] = total;
  }
}

bool ReplayBuffer::episode_open() const {
  std::lock_guard lock(mutex_);
  return open_ != nullptr;
}

std::size_t ReplayBuffer::stored_steps() const {
  std::lock_guard lock(mutex_);
  return closed_steps_ + (open_ ? open_->length() : 0);
}

std::size_t ReplayBuffer::closed_episodes() const {
  std::lock_guard lock(mutex_);
  return closed_.size();
}

std::size_t ReplayBuffer::valid_windows() const {
  std::lock_guard lock(mutex_);
  return cumulative_.empty() ? 0 : cumulative_.back();
}

std::uint64_t ReplayBuffer::evicted_episodes() const {
  std::lock_guard lock(mutex_);
  return evicted_;
}

EpisodeRecord ReplayBuffer::episode(std::size_t index) const {
  std::lock_guard lock(mutex_);
  require(index < closed_.size(), "episode index " + std::to_string(index) + " out of range");
  return *closed_[index];
}

std::size_t ReplayBuffer::storage_bytes() const {
  std::lock_guard lock(mutex_);
  std::size_t bytes = 0;
  for (const auto& e : closed_) bytes += e->storage_bytes();
  if (open_) bytes += open_->storage_bytes();
  return bytes;
}

namespace {

template <typename T>
void bytes_to_unit(std::span<const std::uint8_t> src, T* dst) {
  kernels::unit_from_bytes(src, std::span<T>(dst, src.size()));
}

}  // namespace

template <typename T>
std::optional<NStepBatch<T>> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  require(batch_size >= 1, "sample: batch size must be positive");
  std::lock_guard lock(mutex_);
  const std::size_t windows = cumulative_.empty() ? 0 : cumulative_.back();
  if (windows == 0) return std::nullopt;

  const std::size_t k = config_.frame_stack;
  const std::size_t fb = frame_.bytes();
  const std::size_t n = config_.n;
  NStepBatch<T> batch;
  batch.obs = nn::Tensor<T>({batch_size, k * frame_.channels, frame_.height, frame_.width});
  batch.next_obs = nn::Tensor<T>(batch.obs.shape());
  batch.action = nn::Tensor<T>({batch_size, action_dim_});
  batch.reward = nn::Tensor<T>({batch_size});
  batch.discount = nn::Tensor<T>({batch_size});
  batch.episode.resize(batch_size);
  batch.step.resize(batch_size);

  double discount = 1.0;
  for (std::size_t i = 0; i < n; ++i) discount *= config_.gamma;

  std::vector<std::uint8_t> stack(k * fb);
  for (std::size_t row = 0; row < batch_size; ++row) {
    const std::size_t draw = uniform_index(rng, windows);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), draw);
    const auto ei = static_cast<std::size_t>(it - cumulative_.begin());
    const std::size_t before = ei == 0 ? 0 : cumulative_[ei - 1];
    const std::size_t t = draw - before;
    const EpisodeRecord& e = *closed_[ei];

    stacked_obs(e, t, k, stack);
    bytes_to_unit<T>(stack, batch.obs.data() + row * k * fb);
    stacked_obs(e, t + n, k, stack);
    bytes_to_unit<T>(stack, batch.next_obs.data() + row * k * fb);
    for (std::size_t a = 0; a < action_dim_; ++a) {
      batch.action[row * action_dim_ + a] = static_cast<T>(e.actions[t * action_dim_ + a]);
    }
    double ret = 0.0, g = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      ret += g * static_cast<double>(e.rewards[t + i]);
      g *= config_.gamma;
    }
    batch.reward[row] = static_cast<T>(ret);
    batch.discount[row] = static_cast<T>(discount);
    batch.episode[row] = evicted_ + ei;
    batch.step[row] = t;
  }
  return batch;
}

template std::optional<NStepBatch<float>> ReplayBuffer::sample<float>(std::size_t, Rng&) const;
template std::optional<NStepBatch<double>> ReplayBuffer::sample<double>(std::size_t, Rng&) const;

NaiveStackedStore::NaiveStackedStore(FrameSpec frame, std::size_t frame_stack, std::size_t action_dim)
    : frame_(frame), frame_stack_(frame_stack), action_dim_(action_dim) {}

void NaiveStackedStore::add_episode(const EpisodeRecord& episode) {
  const std::size_t sb = frame_stack_ * frame_.bytes();
  std::vector<std::uint8_t> obs((episode.length() + 1) * sb);
  for (std::size_t t = 0; t <= episode.length(); ++t) {
    stacked_obs(episode, t, frame_stack_, std::span<std::uint8_t>(obs).subspan(t * sb, sb));
  }
  observations_.push_back(std::move(obs));
  actions_.push_back(episode.actions);
  rewards_.push_back(episode.rewards);
}

std::size_t NaiveStackedStore::storage_bytes() const {
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    bytes += observations_[i].capacity() + actions_[i].capacity() * sizeof(float) +
             rewards_[i].capacity() * sizeof(float) + sizeof(EpisodeRecord);
  }
  return bytes;
}

}  // namespace drq::replay
