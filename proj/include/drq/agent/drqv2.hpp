#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drq/agent/schedule.hpp"
#include "drq/core/rng.hpp"
#include "drq/nn/networks.hpp"
#include "drq/replay/replay_buffer.hpp"

namespace drq::agent {

struct AgentConfig {
  std::size_t batch_size = 256;
  double lr = 1e-4;
  double gamma = 0.99;
  double tau = 0.01;
  std::size_t nstep = 3;
  double noise_clip = 0.3;
  std::uint64_t update_every = 2;       // environment steps between update pairs
  std::uint64_t seed_frames = 4000;     // environment steps before the first update
  std::uint64_t exploration_actor_steps = 2000;
  NoiseSchedule schedule = NoiseSchedule::linear(1.0, 0.1, 500'000);
  std::size_t features_dim = 50;
  std::size_t hidden_dim = 1024;
  std::size_t filters = 32;
  std::size_t aug_pad = 4;              // 0 disables augmentation
};

// Throws ConfigError naming the offending field.
void validate(const AgentConfig& config);

enum class ActMode { kTrain, kEval, kSeed };

struct ObsSpec {
  std::size_t channels = 9;
  std::size_t height = 84;
  std::size_t width = 84;
};

// Scalars streamed to the diagnostics hook after every update.
struct UpdateStats {
  enum class Kind { kCritic, kActor } kind = Kind::kCritic;
  std::uint64_t update_index = 0;
  double sigma = 0.0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double q_mean = 0.0;
  double target_mean = 0.0;
  double max_abs_noise = 0.0;
};

struct CriticLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
};

struct StepLosses {
  CriticLosses critic;
  double actor = 0.0;
  std::uint64_t updates = 0;  // update pairs run during this train_step call
};

template <typename T>
class DrQV2Agent {
 public:
  // min over critics of Q(h, a), shape [B, 1]; used to substitute a critic
  // in actor updates under test.
  using QFunction = std::function<nn::Var(nn::Tape<T>&, nn::Var features, nn::Var action)>;

  DrQV2Agent(AgentConfig config, ObsSpec obs, std::size_t action_dim, std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  const ObsSpec& obs_spec() const { return obs_; }
  std::size_t action_dim() const { return action_dim_; }
  double stddev(std::uint64_t t) const { return config_.schedule(t); }

  // obs: one stacked 8-bit observation [channels, H, W]. Never augmented.
  std::vector<float> act(std::span<const std::uint8_t> obs, std::uint64_t t, ActMode mode);
  // Same with an explicit noise stddev for train mode.
  std::vector<float> act_with_sigma(std::span<const std::uint8_t> obs, double sigma, ActMode mode);

  // y = r + discount * min_k Qtarget_k(h', clamp(pi(h') + clip(eps))), with
  // next_obs augmented and encoded by the current encoder, no gradients.
  nn::Tensor<T> td_target(const replay::NStepBatch<T>& batch, double sigma);
  CriticLosses update_critic(const replay::NStepBatch<T>& batch, double sigma);
  double update_actor(const replay::NStepBatch<T>& batch, double sigma);
  double update_actor_with(const replay::NStepBatch<T>& batch, double sigma, const QFunction& q);

  // Runs every update pair due at environment frames in (last_t, t]: one
  // critic update then one actor update on independent batches.
  std::optional<StepLosses> train_step(std::uint64_t t, const replay::ReplayBuffer& buffer);

  void set_diagnostics_hook(std::function<void(const UpdateStats&)> hook) { hook_ = std::move(hook); }
  // Receives every clipped noise tensor drawn inside td_target / actor updates.
  void set_noise_observer(std::function<void(std::span<const T>)> observer) { noise_observer_ = std::move(observer); }
  // Identity augmentation regardless of aug_pad (determinism checks).
  void set_augmentation_enabled(bool on) { augment_ = on; }

  nn::Encoder<T>& encoder() { return encoder_; }
  nn::Actor<T>& actor() { return actor_; }
  nn::Critic<T>& critic(int k) { return k == 0 ? critic1_ : critic2_; }
  nn::Critic<T>& target_critic(int k) { return k == 0 ? target1_ : target2_; }
  const nn::Encoder<T>& encoder() const { return encoder_; }
  const nn::Actor<T>& actor() const { return actor_; }
  const nn::Critic<T>& critic(int k) const { return k == 0 ? critic1_ : critic2_; }
  const nn::Critic<T>& target_critic(int k) const { return k == 0 ? target1_ : target2_; }

  std::uint64_t last_train_step() const { return last_t_; }
  std::uint64_t update_count() const { return updates_; }

  // Networks, optimizer state, counters and the agent's RNG streams.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);
  // Acting, augmentation, target-noise and sampling streams, in that order.
  std::vector<std::string> rng_states() const;
  void set_rng_states(const std::vector<std::string>& states);

 private:
  nn::Tensor<T> observation_batch(const nn::Tensor<T>& obs);
  nn::Tensor<T> clipped_noise(std::size_t rows, double sigma);
  nn::Var min_q(nn::Tape<T>& tape, nn::Critic<T>& a, nn::Critic<T>& b, nn::Var h, nn::Var action, bool trainable);
  void check_finite(const char* what, double value, double sigma) const;
  void emit(const UpdateStats& s) const;

  AgentConfig config_;
  nn::AdamConfig adam_;
  ObsSpec obs_;
  std::size_t action_dim_;
  nn::Encoder<T> encoder_;
  nn::Actor<T> actor_;
  nn::Critic<T> critic1_, critic2_;
  nn::Critic<T> target1_, target2_;

  Rng act_rng_;
  Rng aug_rng_;
  Rng noise_rng_;
  Rng sample_rng_;

  std::uint64_t last_t_ = 0;
  std::uint64_t updates_ = 0;
  bool augment_ = true;
  double last_max_noise_ = 0.0;
  std::function<void(const UpdateStats&)> hook_;
  std::function<void(std::span<const T>)> noise_observer_;
};

extern template class DrQV2Agent<float>;
extern template class DrQV2Agent<double>;

}  // namespace drq::agent
