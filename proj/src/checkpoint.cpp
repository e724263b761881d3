// RCNET1 checkpoint: "RCNET1", u16 format version, u64 seed, u32-length
// prefixed UTF-8 config (key=value lines), u32 record count, then per record
// a u32-length prefixed name and an RTEN1 tensor. Little-endian throughout.

#include "rcnet/binary_io.hpp"
#include "rcnet/network.hpp"
#include "rcnet/tensor_io.hpp"

namespace rcnet {

namespace {
constexpr std::string_view kCheckpointMagic = "RCNET1";
}

std::vector<std::uint8_t> checkpoint_bytes(const Model &m) {
  ByteWriter w;
  w.text(kCheckpointMagic);
  w.u16(m.format_version);
  w.u64(m.seed);
  w.str32(m.config.to_text());
  const ParamStore<float> &ps = m.graph.params();
  w.u32(static_cast<std::uint32_t>(ps.size()));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    w.str32(ps.name(k));
    write_tensor(w, ps[k]);
  }
  return w.take();
}

Model checkpoint_from_bytes(const std::vector<std::uint8_t> &bytes) {
  ByteReader r(bytes);
  r.expect_magic(kCheckpointMagic);
  const std::uint16_t version = r.u16("format version");
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " unsupported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  const std::uint64_t seed = r.u64("seed");
  const std::string cfg_text = r.str32("config");
  const ModelConfig cfg = ModelConfig::from_kv(KvConfig::parse(cfg_text).section(""));

  Model m = build_model(cfg, seed);
  ParamStore<float> &ps = m.graph.params();
  const std::uint32_t count = r.u32("record count");
  if (count != ps.size())
    throw DimMismatchError("checkpoint holds " + std::to_string(count) +
                           " tensors, config implies " +
                           std::to_string(ps.size()));
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::size_t at = r.offset();
    const std::string name = r.str32("record name");
    if (!ps.contains(name))
      throw DimMismatchError("checkpoint tensor '" + name + "' at offset " +
                             std::to_string(at) + " is not in the model");
    Tensor5f t = read_tensor<float>(r);
    Tensor5f &dst = ps[name];
    if (t.dims() != dst.dims())
      throw DimMismatchError("tensor '" + name + "' has dims " +
                             t.dims().str() + ", config implies " +
                             dst.dims().str());
    dst = std::move(t);
  }
  if (!r.at_end())
    throw FormatError("trailing bytes after checkpoint at offset " +
                      std::to_string(r.offset()));
  m.format_version = version;
  return m;
}

void save_checkpoint(const Model &m, const std::string &path) {
  write_file_bytes(path, checkpoint_bytes(m));
}

Model load_checkpoint(const std::string &path) {
  return checkpoint_from_bytes(read_file_bytes(path));
}

} // namespace rcnet
