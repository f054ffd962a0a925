#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "drq/core/error.hpp"

namespace drq::envs::detail {

template <typename P>
using ParamTable = std::vector<std::pair<const char*, double P::*>>;

template <typename P>
std::map<std::string, double> read_params(const P& p, const ParamTable<P>& table) {
  std::map<std::string, double> out;
  for (const auto& [key, field] : table) out[key] = p.*field;
  return out;
}

template <typename P>
void write_param(P& p, const ParamTable<P>& table, const std::string& task, const std::string& key, double value) {
  for (const auto& [name, field] : table) {
    if (key == name) {
      p.*field = value;
      return;
    }
  }
  throw ConfigError("unknown " + task + " parameter '" + key + "'");
}

inline int iteration_count(double iterations) {
  if (!(iterations >= 1.0)) return 1;
  return static_cast<int>(iterations + 0.5);
}

}  // namespace drq::envs::detail
