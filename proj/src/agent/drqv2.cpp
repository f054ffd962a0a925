#include "drq/agent/drqv2.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drq/augment/random_shift.hpp"
#include "drq/core/error.hpp"
#include "drq/kernels/kernels.hpp"
#include "drq/nn/checkpoint.hpp"

namespace drq::agent {

void validate(const AgentConfig& c) {
  const auto fail = [](const std::string& what) { throw ConfigError("agent." + what); };
  if (c.batch_size < 1) fail("batch_size must be at least 1");
  if (!(c.lr > 0.0)) fail("lr must be positive");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (!(c.tau > 0.0 && c.tau <= 1.0)) fail("tau must lie in (0, 1]");
  if (c.nstep < 1) fail("nstep must be at least 1");
  if (!(c.noise_clip > 0.0)) fail("noise_clip must be positive");
  if (c.update_every < 1) fail("update_every must be at least 1");
  if (c.features_dim < 1 || c.hidden_dim < 1 || c.filters < 1) fail("network widths must be positive");
}

namespace {

// Stable names for the target critics inside a checkpoint.
template <typename T>
std::vector<nn::Parameter<T>> renamed(const nn::ParameterSet<T>& set, const std::string& prefix) {
  std::vector<nn::Parameter<T>> out(set.all().begin(), set.all().end());
  for (auto& p : out) p.name = prefix + p.name;
  return out;
}

template <typename T>
bool grads_finite(const nn::ParameterSet<T>& set) {
  for (const auto& p : set.all()) {
    for (T g : p.tensor.grad()) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

template <typename T>
void adam_all(nn::ParameterSet<T>& set, const nn::AdamConfig& adam) {
  for (auto& p : set.all()) nn::adam_step(p, adam);
  set.drop_grad();
}

template <typename T>
void polyak_all(nn::ParameterSet<T>& target, const nn::ParameterSet<T>& online, double tau) {
  for (std::size_t i = 0; i < target.size(); ++i) nn::polyak_update(target[i].tensor, online[i].tensor, tau);
}

template <typename T>
double mean_of(std::span<const T> v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x);
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

template <typename T>
DrQV2Agent<T>::DrQV2Agent(AgentConfig config, ObsSpec obs, std::size_t action_dim, std::uint64_t seed)
    : config_(std::move(config)), obs_(obs), action_dim_(action_dim) {
  validate(config_);
  require(action_dim_ >= 1, "agent: action_dim must be positive");
  adam_.lr = config_.lr;
  Rng init(derive_seed(seed, 0));
  nn::EncoderSpec spec;
  spec.channels = obs_.channels;
  spec.height = obs_.height;
  spec.width = obs_.width;
  spec.features_dim = config_.features_dim;
  spec.filters = config_.filters;
  encoder_ = nn::Encoder<T>(spec, init);
  actor_ = nn::Actor<T>(config_.features_dim, config_.hidden_dim, action_dim_, init);
  critic1_ = nn::Critic<T>(config_.features_dim, action_dim_, config_.hidden_dim, init, "critic1");
  critic2_ = nn::Critic<T>(config_.features_dim, action_dim_, config_.hidden_dim, init, "critic2");
  target1_ = critic1_;
  target2_ = critic2_;
  act_rng_.seed(derive_seed(seed, 1));
  aug_rng_.seed(derive_seed(seed, 2));
  noise_rng_.seed(derive_seed(seed, 3));
  sample_rng_.seed(derive_seed(seed, 4));
}

template <typename T>
std::vector<float> DrQV2Agent<T>::act(std::span<const std::uint8_t> obs, std::uint64_t t, ActMode mode) {
  return act_with_sigma(obs, stddev(t), mode);
}

template <typename T>
std::vector<float> DrQV2Agent<T>::act_with_sigma(std::span<const std::uint8_t> obs, double sigma, ActMode mode) {
  std::vector<float> action(action_dim_);
  if (mode == ActMode::kSeed) {
    for (auto& a : action) a = static_cast<float>(uniform(act_rng_, -1.0, 1.0));
    return action;
  }
  const std::size_t n = obs_.channels * obs_.height * obs_.width;
  require(obs.size() == n, "act: observation has " + std::to_string(obs.size()) + " bytes, expected " +
                               std::to_string(n));
  nn::Tensor<T> x({1, obs_.channels, obs_.height, obs_.width});
  kernels::unit_from_bytes(obs, x.values());
  nn::Tape<T> tape;
  const nn::Var h = encoder_.forward(tape, tape.constant(std::move(x)), false);
  const nn::Var mu = actor_.forward(tape, h, false);
  const auto& m = tape.value(mu);
  for (std::size_t i = 0; i < action_dim_; ++i) {
    double a = static_cast<double>(m[i]);
    if (mode == ActMode::kTrain) a += sigma * standard_normal(act_rng_);
    action[i] = static_cast<float>(std::clamp(a, -1.0, 1.0));
  }
  return action;
}

template <typename T>
nn::Tensor<T> DrQV2Agent<T>::observation_batch(const nn::Tensor<T>& obs) {
  if (!augment_ || config_.aug_pad == 0) return obs;
  return augment::random_shift(obs, config_.aug_pad, aug_rng_);
}

template <typename T>
nn::Tensor<T> DrQV2Agent<T>::clipped_noise(std::size_t rows, double sigma) {
  nn::Tensor<T> eps({rows, action_dim_});
  const double c = config_.noise_clip;
  double max_abs = 0.0;
  for (auto& e : eps.values()) {
    const double v = std::clamp(sigma * standard_normal(noise_rng_), -c, c);
    e = static_cast<T>(v);
    max_abs = std::max(max_abs, std::abs(v));
  }
  last_max_noise_ = max_abs;
  if (noise_observer_) noise_observer_(eps.values());
  return eps;
}

template <typename T>
nn::Var DrQV2Agent<T>::min_q(nn::Tape<T>& tape, nn::Critic<T>& a, nn::Critic<T>& b, nn::Var h, nn::Var action,
                             bool trainable) {
  const nn::Var q1 = a.forward(tape, h, action, trainable);
  const nn::Var q2 = b.forward(tape, h, action, trainable);
  return nn::minimum(tape, q1, q2);
}

template <typename T>
void DrQV2Agent<T>::check_finite(const char* what, double value, double sigma) const {
  if (std::isfinite(value)) return;
  std::ostringstream os;
  os << what << " is non-finite (" << value << ") at update " << updates_ << ", env step " << last_t_
     << ", sigma " << sigma << "; weight hashes: encoder " << nn::weights_hash(encoder_.params()) << " actor "
     << nn::weights_hash(actor_.params()) << " critic1 " << nn::weights_hash(critic1_.params()) << " critic2 "
     << nn::weights_hash(critic2_.params());
  throw NumericsError(os.str());
}

template <typename T>
void DrQV2Agent<T>::emit(const UpdateStats& s) const {
  if (hook_) hook_(s);
}

template <typename T>
nn::Tensor<T> DrQV2Agent<T>::td_target(const replay::NStepBatch<T>& batch, double sigma) {
  const std::size_t rows = batch.reward.size();
  require(batch.discount.size() == rows && batch.next_obs.rank() == 4 && batch.next_obs.dim(0) == rows,
          "td_target: inconsistent batch");
  const nn::Tensor<T> next = observation_batch(batch.next_obs);
  nn::Tape<T> tape;
  const nn::Var h = encoder_.forward(tape, tape.constant(next), false);
  const nn::Var mu = actor_.forward(tape, h, false);
  nn::Var a = nn::add(tape, mu, tape.constant(clipped_noise(rows, sigma)));
  a = nn::clamp_straight_through(tape, a, T(-1), T(1));
  const auto& q = tape.value(min_q(tape, target1_, target2_, h, a, false));
  nn::Tensor<T> y({rows});
  for (std::size_t i = 0; i < rows; ++i) y[i] = batch.reward[i] + batch.discount[i] * q[i];
  return y;
}

template <typename T>
CriticLosses DrQV2Agent<T>::update_critic(const replay::NStepBatch<T>& batch, double sigma) {
  const nn::Tensor<T> obs = observation_batch(batch.obs);
  const nn::Tensor<T> y = td_target(batch, sigma);

  encoder_.params().zero_grad();
  critic1_.params().zero_grad();
  critic2_.params().zero_grad();
  nn::Tape<T> tape;
  const nn::Var h = encoder_.forward(tape, tape.constant(obs), true);
  const nn::Var a = tape.constant(batch.action);
  const nn::Var q1 = critic1_.forward(tape, h, a, true);
  const nn::Var q2 = critic2_.forward(tape, h, a, true);
  const nn::Var l1 = nn::mse(tape, q1, y.values());
  const nn::Var l2 = nn::mse(tape, q2, y.values());
  const nn::Var total = nn::add(tape, l1, l2);

  CriticLosses losses{static_cast<double>(tape.value(l1)[0]), static_cast<double>(tape.value(l2)[0])};
  check_finite("critic1 loss", losses.critic1, sigma);
  check_finite("critic2 loss", losses.critic2, sigma);
  tape.backward(total);
  if (!grads_finite(encoder_.params()) || !grads_finite(critic1_.params()) || !grads_finite(critic2_.params())) {
    check_finite("critic gradient", std::numeric_limits<double>::quiet_NaN(), sigma);
  }
  adam_all(encoder_.params(), adam_);
  adam_all(critic1_.params(), adam_);
  adam_all(critic2_.params(), adam_);
  polyak_all(target1_.params(), critic1_.params(), config_.tau);
  polyak_all(target2_.params(), critic2_.params(), config_.tau);

  UpdateStats s;
  s.kind = UpdateStats::Kind::kCritic;
  s.update_index = updates_;
  s.sigma = sigma;
  s.critic1_loss = losses.critic1;
  s.critic2_loss = losses.critic2;
  s.q_mean = mean_of<T>(tape.value(q1).values());
  s.target_mean = mean_of<T>(y.values());
  s.max_abs_noise = last_max_noise_;
  emit(s);
  return losses;
}

template <typename T>
double DrQV2Agent<T>::update_actor(const replay::NStepBatch<T>& batch, double sigma) {
  return update_actor_with(batch, sigma, [this](nn::Tape<T>& tape, nn::Var h, nn::Var a) {
    return min_q(tape, critic1_, critic2_, h, a, false);
  });
}

template <typename T>
double DrQV2Agent<T>::update_actor_with(const replay::NStepBatch<T>& batch, double sigma, const QFunction& q) {
  const nn::Tensor<T> obs = observation_batch(batch.obs);
  const std::size_t rows = obs.dim(0);
  actor_.params().zero_grad();
  nn::Tape<T> tape;
  // Frozen encoder: the actor loss never reaches its weights.
  const nn::Var h = encoder_.forward(tape, tape.constant(obs), false);
  const nn::Var mu = actor_.forward(tape, h, true);
  nn::Var a = nn::add(tape, mu, tape.constant(clipped_noise(rows, sigma)));
  a = nn::clamp_straight_through(tape, a, T(-1), T(1));
  const nn::Var qmin = q(tape, h, a);
  const nn::Var loss = nn::scale(tape, nn::mean(tape, qmin), T(-1));
  const double value = static_cast<double>(tape.value(loss)[0]);
  check_finite("actor loss", value, sigma);
  tape.backward(loss);
  if (!grads_finite(actor_.params())) check_finite("actor gradient", std::numeric_limits<double>::quiet_NaN(), sigma);
  adam_all(actor_.params(), adam_);

  UpdateStats s;
  s.kind = UpdateStats::Kind::kActor;
  s.update_index = updates_;
  s.sigma = sigma;
  s.actor_loss = value;
  s.q_mean = -value;
  s.max_abs_noise = last_max_noise_;
  emit(s);
  return value;
}

template <typename T>
std::optional<StepLosses> DrQV2Agent<T>::train_step(std::uint64_t t, const replay::ReplayBuffer& buffer) {
  require(t >= last_t_, "train_step: env step counter went backwards (" + std::to_string(t) + " < " +
                            std::to_string(last_t_) + ")");
  const std::uint64_t ue = config_.update_every;
  // Learning starts after the seed frames: a budget of exactly seed_frames never updates.
  const std::uint64_t lo = std::max<std::uint64_t>(last_t_ + 1, config_.seed_frames + 1);
  last_t_ = t;
  if (lo > t) return std::nullopt;
  // Frames f in [lo, t] with f % update_every == 0.
  const std::uint64_t due = t / ue - (lo - 1) / ue;
  if (due == 0) return std::nullopt;

  const double sigma = stddev(t);
  StepLosses out;
  for (std::uint64_t k = 0; k < due; ++k) {
    auto critic_batch = buffer.sample<T>(config_.batch_size, sample_rng_);
    if (!critic_batch) break;
    auto actor_batch = buffer.sample<T>(config_.batch_size, sample_rng_);
    out.critic = update_critic(*critic_batch, sigma);
    out.actor = update_actor(*actor_batch, sigma);
    ++updates_;
    ++out.updates;
  }
  if (out.updates == 0) return std::nullopt;
  return out;
}

template <typename T>
void DrQV2Agent<T>::save(const std::filesystem::path& path) const {
  nn::Metadata meta = {
      {"agent.last_t", last_t_},
      {"agent.updates", updates_},
      {"agent.action_dim", action_dim_},
      {"obs.channels", obs_.channels},
      {"obs.height", obs_.height},
      {"obs.width", obs_.width},
      {"net.features_dim", config_.features_dim},
      {"net.hidden_dim", config_.hidden_dim},
      {"net.filters", config_.filters},
  };
  const auto t1 = renamed(target1_.params(), "target.");
  const auto t2 = renamed(target2_.params(), "target.");
  std::vector<const nn::Parameter<T>*> params;
  for (const auto* set : {&encoder_.params(), &actor_.params(), &critic1_.params(), &critic2_.params()}) {
    for (const auto& p : set->all()) params.push_back(&p);
  }
  for (const auto& p : t1) params.push_back(&p);
  for (const auto& p : t2) params.push_back(&p);
  nn::write_checkpoint<T>(path, meta, params);
}

template <typename T>
void DrQV2Agent<T>::load(const std::filesystem::path& path) {
  const auto data = nn::read_checkpoint<T>(path);
  const std::pair<const char*, std::uint64_t> expected[] = {
      {"agent.action_dim", action_dim_},       {"obs.channels", obs_.channels},
      {"obs.height", obs_.height},             {"obs.width", obs_.width},
      {"net.features_dim", config_.features_dim}, {"net.hidden_dim", config_.hidden_dim},
      {"net.filters", config_.filters},
  };
  for (const auto& [key, value] : expected) {
    if (data.meta(key) != value) {
      throw FormatError("checkpoint " + path.string() + ": " + key + " = " + std::to_string(data.meta(key)) +
                        ", agent has " + std::to_string(value));
    }
  }
  nn::restore_parameters(data, encoder_.params().all());
  nn::restore_parameters(data, actor_.params().all());
  nn::restore_parameters(data, critic1_.params().all());
  nn::restore_parameters(data, critic2_.params().all());
  for (auto* target : {&target1_, &target2_}) {
    auto staged = renamed(target->params(), "target.");
    nn::restore_parameters(data, std::span<nn::Parameter<T>>(staged));
    for (std::size_t i = 0; i < staged.size(); ++i) {
      auto& dst = target->params()[i];
      std::copy(staged[i].tensor.values().begin(), staged[i].tensor.values().end(), dst.tensor.values().begin());
    }
  }
  last_t_ = data.meta("agent.last_t");
  updates_ = data.meta("agent.updates");
}

template <typename T>
std::vector<std::string> DrQV2Agent<T>::rng_states() const {
  return {serialize_rng(act_rng_), serialize_rng(aug_rng_), serialize_rng(noise_rng_), serialize_rng(sample_rng_)};
}

template <typename T>
void DrQV2Agent<T>::set_rng_states(const std::vector<std::string>& states) {
  if (states.size() != 4) throw FormatError("agent expects 4 RNG states, got " + std::to_string(states.size()));
  act_rng_ = deserialize_rng(states[0]);
  aug_rng_ = deserialize_rng(states[1]);
  noise_rng_ = deserialize_rng(states[2]);
  sample_rng_ = deserialize_rng(states[3]);
}

template class DrQV2Agent<float>;
template class DrQV2Agent<double>;

}  // namespace drq::agent
