#pragma once

#include <memory>
#include <string>
#include <vector>

#include "drq/envs/pixel_env.hpp"

namespace drq::envs {

std::vector<std::string> task_names();
// Throws ConfigError for unknown ids or physics keys.
std::unique_ptr<Task> make_task(const std::string& id);
std::unique_ptr<PixelControlEnv> make_env(const EnvConfig& config);

}  // namespace drq::envs
