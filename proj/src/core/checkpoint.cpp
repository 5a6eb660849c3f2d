#include "intertraj/core/checkpoint.hpp"

#include "intertraj/core/binary_io.hpp"

namespace intertraj {

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint lacks metadata '" + key + "'");
  return it->second;
}

const Checkpoint::Entry& Checkpoint::entry(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw FormatError("checkpoint lacks tensor '" + name + "'");
  return it->second;
}

void Checkpoint::save(const std::string& path) const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& [name, e] : tensors_) {
    w.str(name);
    w.u8(e.dtype);
    w.u32(static_cast<std::uint32_t>(e.rows));
    w.u32(static_cast<std::uint32_t>(e.cols));
    w.bytes({reinterpret_cast<const std::uint8_t*>(e.bytes.data()), e.bytes.size()});
  }
  write_container(path, "CKPT", kCheckpointVersion, w.buffer());
}

Checkpoint Checkpoint::load(const std::string& path) {
  const std::string payload = read_container(path, "CKPT", kCheckpointVersion);
  ByteReader r(payload);
  Checkpoint c;
  const auto nmeta = r.u32();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    auto k = r.str();
    c.meta[k] = r.str();
  }
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto name = r.str();
    Entry e;
    e.dtype = r.u8();
    if (e.dtype != 4 && e.dtype != 8) throw FormatError("checkpoint tensor '" + name + "' has unknown dtype");
    e.rows = r.u32();
    e.cols = r.u32();
    e.bytes.resize(static_cast<std::size_t>(e.rows * e.cols) * e.dtype);
    r.bytes({reinterpret_cast<std::uint8_t*>(e.bytes.data()), e.bytes.size()});
    c.tensors_[name] = std::move(e);
  }
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return c;
}

}  // namespace intertraj
