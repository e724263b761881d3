#include "rcnet/tensor_io.hpp"

#include <fstream>
#include <iterator>

namespace rcnet {

std::vector<std::uint8_t> read_file_bytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string &path,
                      const std::vector<std::uint8_t> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw Error("write to '" + path + "' failed");
}

template <typename T> void write_tensor(ByteWriter &out, const Tensor5<T> &t) {
  out.text(kTensorMagic);
  out.u8(static_cast<std::uint8_t>(dtype_of<T>()));
  const Dims5 &d = t.dims();
  for (std::size_t e : {d.n, d.c, d.l, d.h, d.w})
    out.u64(e);
  out.bytes(t.data(), t.size() * sizeof(T));
}

namespace {

template <typename T> Tensor5<T> read_payload(ByteReader &in, const Dims5 &d) {
  std::size_t count = 0;
  try {
    count = d.count();
  } catch (const DimensionError &e) {
    throw FormatError(std::string("tensor header: ") + e.what());
  }
  in.need(count * sizeof(T), "tensor data");
  Tensor5<T> t(d);
  in.bytes(t.data(), count * sizeof(T), "tensor data");
  return t;
}

} // namespace

AnyTensor read_any_tensor(ByteReader &in) {
  in.expect_magic(kTensorMagic);
  const std::size_t dtype_at = in.offset();
  const std::uint8_t code = in.u8("tensor dtype");
  Dims5 d;
  d.n = in.u64("tensor dims");
  d.c = in.u64("tensor dims");
  d.l = in.u64("tensor dims");
  d.h = in.u64("tensor dims");
  d.w = in.u64("tensor dims");
  switch (code) {
  case 0:
    return read_payload<float>(in, d);
  case 1:
    return read_payload<double>(in, d);
  default:
    throw FormatError("unknown tensor dtype code " + std::to_string(code) +
                      " at offset " + std::to_string(dtype_at));
  }
}

template <typename T> Tensor5<T> read_tensor(ByteReader &in) {
  AnyTensor any = read_any_tensor(in);
  return std::visit(
      [](auto &t) -> Tensor5<T> {
        using Stored = typename std::decay_t<decltype(t)>::value_type;
        if constexpr (std::is_same_v<Stored, T>)
          return std::move(t);
        else
          return t.template cast<T>();
      },
      any);
}

template <typename T>
void save_tensor(const std::string &path, const Tensor5<T> &t) {
  ByteWriter w;
  write_tensor(w, t);
  write_file_bytes(path, w.buffer());
}

template <typename T> Tensor5<T> load_tensor(const std::string &path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  return read_tensor<T>(r);
}

template void write_tensor(ByteWriter &, const Tensor5f &);
template void write_tensor(ByteWriter &, const Tensor5d &);
template Tensor5f read_tensor<float>(ByteReader &);
template Tensor5d read_tensor<double>(ByteReader &);
template void save_tensor(const std::string &, const Tensor5f &);
template void save_tensor(const std::string &, const Tensor5d &);
template Tensor5f load_tensor<float>(const std::string &);
template Tensor5d load_tensor<double>(const std::string &);

} // namespace rcnet
