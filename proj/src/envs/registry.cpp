#include "drq/envs/registry.hpp"

#include "drq/core/error.hpp"
#include "drq/envs/tasks.hpp"

namespace drq::envs {

std::vector<std::string> task_names() { return {"pendulum", "cartpole", "reacher"}; }

std::unique_ptr<Task> make_task(const std::string& id) {
  if (id == "pendulum") return std::make_unique<PendulumTask>();
  if (id == "cartpole") return std::make_unique<CartpoleTask>();
  if (id == "reacher") return std::make_unique<ReacherTask>();
  std::string known;
  for (const auto& n : task_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown task '" + id + "' (known: " + known + ")");
}

std::unique_ptr<PixelControlEnv> make_env(const EnvConfig& config) {
  return std::make_unique<PixelControlEnv>(config, make_task(config.task));
}

}  // namespace drq::envs
