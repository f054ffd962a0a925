#include "drq/harness/benchmark.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "drq/augment/random_shift.hpp"
#include "drq/core/parallel.hpp"
#include "drq/core/rng.hpp"
#include "drq/harness/training.hpp"
#include "drq/kernels/kernels.hpp"
#include "drq/replay/replay_buffer.hpp"

namespace drq::harness {
namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

HardwareInfo hardware_info() {
  HardwareInfo h;
  std::ifstream cpu("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpu, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) h.cpu_model = line.substr(colon + 2);
      break;
    }
  }
  if (h.cpu_model.empty()) h.cpu_model = "unknown";
  h.logical_cores = std::thread::hardware_concurrency();
  h.kernel_threads = num_threads();
  h.isa = std::string(kernels::isa_name(kernels::active_isa()));
#if defined(__clang__)
  h.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  h.compiler = "gcc " __VERSION__;
#else
  h.compiler = "unknown";
#endif
#ifdef NDEBUG
  h.build_type = "optimized";
#else
  h.build_type = "debug";
#endif
  return h;
}

std::string hardware_json(const HardwareInfo& h) {
  json j;
  j["cpu_model"] = h.cpu_model;
  j["logical_cores"] = h.logical_cores;
  j["kernel_threads"] = h.kernel_threads;
  j["isa"] = h.isa;
  j["compiler"] = h.compiler;
  j["build_type"] = h.build_type;
  return j.dump();
}

AugmentBench bench_augmentation(AugmentBench spec, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor<float> batch({spec.batch, spec.channels, spec.size, spec.size});
  for (auto& v : batch.values()) v = static_cast<float>(uniform01(rng));
  const auto shifts = augment::draw_shifts(spec.batch, spec.pad, rng);

  nn::Tensor<float> ref, opt;
  auto t0 = Clock::now();
  for (std::size_t r = 0; r < spec.reference_reps; ++r) ref = augment::apply_shifts_reference(batch, shifts, spec.pad);
  const double ref_s = seconds_since(t0);
  // The optimized path writes into a persistent output; one untimed call
  // allocates it, as a long-lived caller would once.
  augment::apply_shifts_into(batch, shifts, spec.pad, opt);
  t0 = Clock::now();
  for (std::size_t r = 0; r < spec.optimized_reps; ++r) augment::apply_shifts_into(batch, shifts, spec.pad, opt);
  const double opt_s = seconds_since(t0);

  spec.max_abs_diff = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    spec.max_abs_diff = std::max(spec.max_abs_diff, static_cast<double>(std::abs(ref[i] - opt[i])));
  }
  const double images = static_cast<double>(spec.batch);
  spec.reference_images_per_s = images * static_cast<double>(spec.reference_reps) / ref_s;
  spec.optimized_images_per_s = images * static_cast<double>(spec.optimized_reps) / opt_s;
  spec.speedup = spec.optimized_images_per_s / spec.reference_images_per_s;
  return spec;
}

BufferBench bench_buffer(BufferBench spec, std::uint64_t seed) {
  Rng rng(seed);
  replay::FrameSpec frame{3, spec.frame_size, spec.frame_size};
  replay::BufferConfig cfg;
  cfg.capacity = spec.episodes * spec.episode_length;
  cfg.n = spec.nstep;
  replay::ReplayBuffer buffer(cfg, frame, 1);
  std::vector<std::uint8_t> pixels(frame.bytes());
  for (auto& p : pixels) p = static_cast<std::uint8_t>(rng() & 0xFF);
  const float action = 0.5f;

  auto t0 = Clock::now();
  for (std::size_t e = 0; e < spec.episodes; ++e) {
    buffer.begin_episode(pixels);
    for (std::size_t t = 0; t < spec.episode_length; ++t) {
      pixels[t % pixels.size()] ^= 0x5A;
      buffer.add_step(pixels, std::span<const float>(&action, 1), 0.5);
    }
    buffer.end_episode();
  }
  const double add_s = seconds_since(t0);
  t0 = Clock::now();
  std::size_t rows = 0;
  for (std::size_t r = 0; r < spec.sample_reps; ++r) {
    const auto batch = buffer.sample<float>(spec.batch, rng);
    if (batch) rows += batch->reward.size();
  }
  const double sample_s = seconds_since(t0);
  spec.add_steps_per_s = static_cast<double>(spec.episodes * spec.episode_length) / add_s;
  spec.sample_transitions_per_s = static_cast<double>(rows) / sample_s;
  return spec;
}

EndToEndBench bench_end_to_end(const RunConfig& config, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const TrainingResult r = run_training(config, seed);
  EndToEndBench out;
  out.elapsed_s = seconds_since(t0);
  out.frames = r.env_frames;
  out.fps = static_cast<double>(out.frames) / out.elapsed_s;
  return out;
}

BenchReport benchmark_throughput(const RunConfig& e2e_config, const AugmentBench& augment, const BufferBench& buffer) {
  BenchReport report;
  report.augment = bench_augmentation(augment);
  report.buffer = bench_buffer(buffer);
  report.end_to_end = bench_end_to_end(e2e_config);
  report.hardware = hardware_info();
  return report;
}

std::string report_json(const BenchReport& r) {
  json j;
  j["hardware"] = json::parse(hardware_json(r.hardware));
  j["augmentation"] = {
      {"batch_shape", {r.augment.batch, r.augment.channels, r.augment.size, r.augment.size}},
      {"pad", r.augment.pad},
      {"reference_images_per_s", r.augment.reference_images_per_s},
      {"optimized_images_per_s", r.augment.optimized_images_per_s},
      {"speedup", r.augment.speedup},
      {"max_abs_diff", r.augment.max_abs_diff},
  };
  j["buffer"] = {
      {"frame_size", r.buffer.frame_size},
      {"batch", r.buffer.batch},
      {"nstep", r.buffer.nstep},
      {"add_steps_per_s", r.buffer.add_steps_per_s},
      {"sample_transitions_per_s", r.buffer.sample_transitions_per_s},
  };
  j["end_to_end"] = {
      {"frames", r.end_to_end.frames},
      {"elapsed_s", r.end_to_end.elapsed_s},
      {"fps", r.end_to_end.fps},
  };
  return j.dump(2);
}

}  // namespace drq::harness
