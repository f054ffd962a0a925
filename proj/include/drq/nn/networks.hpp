#pragma once

#include <array>
#include <string>

#include "drq/core/rng.hpp"
#include "drq/nn/ops.hpp"
#include "drq/nn/parameter.hpp"
#include "drq/nn/tape.hpp"

namespace drq::nn {

struct EncoderSpec {
  std::size_t channels = 9;  // frame_stack * RGB
  std::size_t height = 84;
  std::size_t width = 84;
  std::size_t features_dim = 50;
  std::size_t filters = 32;
  std::array<std::size_t, 4> strides{2, 1, 1, 1};
};

// Spatial extent after the conv stack for a given input extent.
std::size_t conv_stack_extent(std::size_t extent, const std::array<std::size_t, 4>& strides);

// Pixels -> latent: input centring (x - 0.5), 4 x (3x3 conv, ReLU),
// flatten, linear to features_dim, layer norm, tanh.
template <typename T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderSpec& spec, Rng& rng, const std::string& prefix = "encoder");

  // obs [B, channels, height, width] with values in [0, 1] -> [B, features_dim].
  Var forward(Tape<T>& tape, Var obs, bool trainable);

  const EncoderSpec& spec() const { return spec_; }
  std::size_t flat_dim() const;
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

 private:
  EncoderSpec spec_;
  ParameterSet<T> params_;
};

// features -> hidden -> hidden -> action_dim, ReLU between, tanh output.
template <typename T>
class Actor {
 public:
  Actor() = default;
  Actor(std::size_t features_dim, std::size_t hidden_dim, std::size_t action_dim, Rng& rng,
        const std::string& prefix = "actor");

  Var forward(Tape<T>& tape, Var features, bool trainable);

  std::size_t action_dim() const { return action_dim_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

 private:
  std::size_t action_dim_ = 0;
  ParameterSet<T> params_;
};

// (features ++ action) -> hidden -> hidden -> 1, ReLU between.
template <typename T>
class Critic {
 public:
  Critic() = default;
  Critic(std::size_t features_dim, std::size_t action_dim, std::size_t hidden_dim, Rng& rng,
         const std::string& prefix = "critic");

  // Returns Q-values of shape [B, 1].
  Var forward(Tape<T>& tape, Var features, Var action, bool trainable);

  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

 private:
  ParameterSet<T> params_;
};

// Dense layer helper shared by the MLPs: params[w], params[b].
template <typename T>
Var dense(Tape<T>& tape, Var x, ParameterSet<T>& params, std::size_t w, std::size_t b, bool trainable);

extern template class Encoder<float>;
extern template class Encoder<double>;
extern template class Actor<float>;
extern template class Actor<double>;
extern template class Critic<float>;
extern template class Critic<double>;

}  // namespace drq::nn
