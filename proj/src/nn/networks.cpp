#include "drq/nn/networks.hpp"

#include <cmath>

#include "drq/core/error.hpp"
#include "drq/nn/init.hpp"

namespace drq::nn {
namespace {
const double kReluGain = std::sqrt(2.0);
}

std::size_t conv_stack_extent(std::size_t extent, const std::array<std::size_t, 4>& strides) {
  for (std::size_t s : strides) {
    require(extent >= 3, "encoder: input too small for the conv stack");
    extent = (extent - 3) / s + 1;
  }
  return extent;
}

template <typename T>
Var dense(Tape<T>& tape, Var x, ParameterSet<T>& params, std::size_t w, std::size_t b, bool trainable) {
  return linear(tape, x, tape.param(params[w], trainable), tape.param(params[b], trainable));
}

template <typename T>
Encoder<T>::Encoder(const EncoderSpec& spec, Rng& rng, const std::string& prefix) : spec_(spec) {
  std::size_t in_ch = spec.channels;
  for (std::size_t l = 0; l < spec.strides.size(); ++l) {
    const std::string name = prefix + ".conv" + std::to_string(l);
    const auto w = params_.add(name + ".weight", {spec.filters, in_ch, 3, 3});
    params_.add(name + ".bias", {spec.filters});
    orthogonal_init(params_[w].tensor, kReluGain, rng);
    in_ch = spec.filters;
  }
  const auto w = params_.add(prefix + ".trunk.weight", {spec.features_dim, flat_dim()});
  params_.add(prefix + ".trunk.bias", {spec.features_dim});
  orthogonal_init(params_[w].tensor, 1.0, rng);
  const auto g = params_.add(prefix + ".norm.gain", {spec.features_dim});
  params_.add(prefix + ".norm.shift", {spec.features_dim});
  for (auto& v : params_[g].tensor.values()) v = T(1);
}

template <typename T>
std::size_t Encoder<T>::flat_dim() const {
  return spec_.filters * conv_stack_extent(spec_.height, spec_.strides) *
         conv_stack_extent(spec_.width, spec_.strides);
}

template <typename T>
Var Encoder<T>::forward(Tape<T>& tape, Var obs, bool trainable) {
  const Shape& s = tape.shape(obs);
  require(s.size() == 4 && s[1] == spec_.channels && s[2] == spec_.height && s[3] == spec_.width,
          "encoder: expected [B, " + std::to_string(spec_.channels) + ", " + std::to_string(spec_.height) +
              ", " + std::to_string(spec_.width) + "], got " + shape_string(s));
  const std::size_t batch = s[0];
  Var x = add_scalar(tape, obs, T(-0.5));
  for (std::size_t l = 0; l < spec_.strides.size(); ++l) {
    x = conv2d(tape, x, tape.param(params_[2 * l], trainable), tape.param(params_[2 * l + 1], trainable),
               spec_.strides[l]);
    x = relu(tape, x);
  }
  x = reshape(tape, x, {batch, flat_dim()});
  const std::size_t base = 2 * spec_.strides.size();
  x = dense(tape, x, params_, base, base + 1, trainable);
  x = layernorm(tape, x, tape.param(params_[base + 2], trainable), tape.param(params_[base + 3], trainable));
  return nn::tanh(tape, x);
}

template <typename T>
Actor<T>::Actor(std::size_t features_dim, std::size_t hidden_dim, std::size_t action_dim, Rng& rng,
                const std::string& prefix)
    : action_dim_(action_dim) {
  const std::size_t dims[4] = {features_dim, hidden_dim, hidden_dim, action_dim};
  for (std::size_t l = 0; l < 3; ++l) {
    const std::string name = prefix + ".fc" + std::to_string(l);
    const auto w = params_.add(name + ".weight", {dims[l + 1], dims[l]});
    params_.add(name + ".bias", {dims[l + 1]});
    orthogonal_init(params_[w].tensor, l < 2 ? kReluGain : 1.0, rng);
  }
}

template <typename T>
Var Actor<T>::forward(Tape<T>& tape, Var features, bool trainable) {
  Var x = relu(tape, dense(tape, features, params_, 0, 1, trainable));
  x = relu(tape, dense(tape, x, params_, 2, 3, trainable));
  return nn::tanh(tape, dense(tape, x, params_, 4, 5, trainable));
}

template <typename T>
Critic<T>::Critic(std::size_t features_dim, std::size_t action_dim, std::size_t hidden_dim, Rng& rng,
                  const std::string& prefix) {
  const std::size_t dims[4] = {features_dim + action_dim, hidden_dim, hidden_dim, 1};
  for (std::size_t l = 0; l < 3; ++l) {
    const std::string name = prefix + ".fc" + std::to_string(l);
    const auto w = params_.add(name + ".weight", {dims[l + 1], dims[l]});
    params_.add(name + ".bias", {dims[l + 1]});
    orthogonal_init(params_[w].tensor, l < 2 ? kReluGain : 1.0, rng);
  }
}

template <typename T>
Var Critic<T>::forward(Tape<T>& tape, Var features, Var action, bool trainable) {
  Var x = concat_columns(tape, features, action);
  x = relu(tape, dense(tape, x, params_, 0, 1, trainable));
  x = relu(tape, dense(tape, x, params_, 2, 3, trainable));
  return dense(tape, x, params_, 4, 5, trainable);
}

template Var dense<float>(Tape<float>&, Var, ParameterSet<float>&, std::size_t, std::size_t, bool);
template Var dense<double>(Tape<double>&, Var, ParameterSet<double>&, std::size_t, std::size_t, bool);
template class Encoder<float>;
template class Encoder<double>;
template class Actor<float>;
template class Actor<double>;
template class Critic<float>;
template class Critic<double>;

}  // namespace drq::nn
