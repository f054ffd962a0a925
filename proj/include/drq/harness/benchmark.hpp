#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "drq/harness/run_config.hpp"

namespace drq::harness {

struct HardwareInfo {
  std::string cpu_model;
  unsigned logical_cores = 0;
  std::size_t kernel_threads = 0;
  std::string isa;
  std::string compiler;
  std::string build_type;
};

HardwareInfo hardware_info();
std::string hardware_json(const HardwareInfo& info);

struct AugmentBench {
  std::size_t batch = 256, channels = 9, size = 84, pad = 4;
  std::size_t reference_reps = 2;
  std::size_t optimized_reps = 10;
  double reference_images_per_s = 0.0;
  double optimized_images_per_s = 0.0;
  double speedup = 0.0;
  double max_abs_diff = 0.0;
};

struct BufferBench {
  std::size_t frame_size = 84;
  std::size_t episodes = 8;
  std::size_t episode_length = 250;
  std::size_t batch = 256;
  std::size_t nstep = 3;
  std::size_t sample_reps = 20;
  double add_steps_per_s = 0.0;
  double sample_transitions_per_s = 0.0;
};

struct EndToEndBench {
  std::uint64_t frames = 0;
  double elapsed_s = 0.0;
  double fps = 0.0;
};

struct BenchReport {
  HardwareInfo hardware;
  AugmentBench augment;
  BufferBench buffer;
  EndToEndBench end_to_end;
};

// Augmentation throughput: reference vs optimized random shift on identical
// inputs and shift draws.
AugmentBench bench_augmentation(AugmentBench spec, std::uint64_t seed = 1);
BufferBench bench_buffer(BufferBench spec, std::uint64_t seed = 1);
// Wall time of a complete run_training call (setup included) and the
// resulting env frames per second.
EndToEndBench bench_end_to_end(const RunConfig& config, std::uint64_t seed = 1);

BenchReport benchmark_throughput(const RunConfig& e2e_config, const AugmentBench& augment, const BufferBench& buffer);
std::string report_json(const BenchReport& report);

}  // namespace drq::harness
