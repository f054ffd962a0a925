#include "drq/nn/checkpoint.hpp"

#include "drq/core/bytes.hpp"
#include "drq/core/error.hpp"
#include "drq/core/file.hpp"

namespace drq::nn {
namespace {
constexpr std::string_view kMagic = "DRQV2CKP";
constexpr std::uint32_t kMaxRank = 8;
}  // namespace

template <typename T>
const Parameter<T>* CheckpointData<T>::find(const std::string& name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
std::uint64_t CheckpointData<T>::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  throw FormatError("checkpoint: missing metadata key '" + key + "'");
}

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Metadata& metadata,
                                            const std::vector<const Parameter<T>*>& params) {
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(sizeof(T));
  w.u32(static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [key, value] : metadata) {
    w.string(key);
    w.u64(value);
  }
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.string(p->name);
    w.u32(static_cast<std::uint32_t>(p->tensor.rank()));
    for (auto d : p->tensor.shape()) w.u64(d);
    w.u64(p->step_count);
  }
  for (const auto* p : params) {
    const std::size_t n = p->tensor.size();
    for (std::size_t i = 0; i < n; ++i) w.scalar(p->tensor[i]);
    for (std::size_t i = 0; i < n; ++i) w.scalar(i < p->adam_m.size() ? p->adam_m[i] : T(0));
    for (std::size_t i = 0; i < n; ++i) w.scalar(i < p->adam_v.size() ? p->adam_v[i] : T(0));
  }
  const std::uint64_t digest = fnv1a64(w.buffer());
  w.u64(digest);
  return std::move(w.buffer());
}

template <typename T>
CheckpointData<T> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 + 8) throw FormatError("checkpoint: file too short");
  ByteReader trailer(bytes.subspan(bytes.size() - 8));
  const std::uint64_t stored = trailer.u64();
  if (fnv1a64(bytes.first(bytes.size() - 8)) != stored) throw FormatError("checkpoint: checksum mismatch");

  ByteReader r(bytes.first(bytes.size() - 8));
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("checkpoint: bad magic");
  CheckpointData<T> out;
  out.version = r.u32();
  if (out.version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(out.version));
  }
  const std::uint32_t width = r.u32();
  if (width != sizeof(T)) {
    throw FormatError("checkpoint: stored scalar width " + std::to_string(width) + " bytes, reader expects " +
                      std::to_string(sizeof(T)));
  }
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.string();
    out.metadata.emplace_back(std::move(key), r.u64());
  }
  const std::uint32_t n_params = r.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    std::string name = r.string();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > kMaxRank) throw FormatError("checkpoint: bad rank for '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) {
      d = r.u64();
      if (d == 0) throw FormatError("checkpoint: zero extent in '" + name + "'");
    }
    Parameter<T> p(std::move(name), Tensor<T>(shape));
    p.step_count = r.u64();
    out.parameters.push_back(std::move(p));
  }
  for (auto& p : out.parameters) {
    const std::size_t n = p.tensor.size();
    if (r.remaining() < 3 * n * sizeof(T)) throw FormatError("checkpoint: truncated payload for '" + p.name + "'");
    for (std::size_t i = 0; i < n; ++i) p.tensor[i] = r.scalar<T>();
    for (std::size_t i = 0; i < n; ++i) p.adam_m[i] = r.scalar<T>();
    for (std::size_t i = 0; i < n; ++i) p.adam_v[i] = r.scalar<T>();
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return out;
}

template <typename T>
void write_checkpoint(const std::filesystem::path& path, const Metadata& metadata,
                      const std::vector<const Parameter<T>*>& params) {
  write_file_atomic(path, encode_checkpoint<T>(metadata, params));
}

template <typename T>
CheckpointData<T> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<T>(read_file_bytes(path));
}

template <typename T>
void restore_parameters(const CheckpointData<T>& source, std::span<Parameter<T>> target) {
  for (auto& p : target) {
    const Parameter<T>* src = source.find(p.name);
    if (src == nullptr) throw FormatError("checkpoint: missing parameter '" + p.name + "'");
    if (src->tensor.shape() != p.tensor.shape()) {
      throw FormatError("checkpoint: parameter '" + p.name + "' has shape " + shape_string(src->tensor.shape()) +
                        ", model expects " + shape_string(p.tensor.shape()));
    }
    std::copy(src->tensor.values().begin(), src->tensor.values().end(), p.tensor.values().begin());
    p.adam_m = src->adam_m;
    p.adam_v = src->adam_v;
    p.step_count = src->step_count;
  }
}

#define DRQ_INSTANTIATE(T)                                                                          \
  template struct CheckpointData<T>;                                                                \
  template std::vector<std::uint8_t> encode_checkpoint<T>(const Metadata&,                          \
                                                          const std::vector<const Parameter<T>*>&); \
  template CheckpointData<T> decode_checkpoint<T>(std::span<const std::uint8_t>);                   \
  template void write_checkpoint<T>(const std::filesystem::path&, const Metadata&,                  \
                                    const std::vector<const Parameter<T>*>&);                       \
  template CheckpointData<T> read_checkpoint<T>(const std::filesystem::path&);                      \
  template void restore_parameters<T>(const CheckpointData<T>&, std::span<Parameter<T>>);

DRQ_INSTANTIATE(float)
DRQ_INSTANTIATE(double)
#undef DRQ_INSTANTIATE

}  // namespace drq::nn
