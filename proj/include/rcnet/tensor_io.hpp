#pragma once

#include <string>
#include <variant>

#include "rcnet/binary_io.hpp"
#include "rcnet/tensor.hpp"

namespace rcnet {

// RTEN1: "RTEN1", u8 dtype (0 = f32, 1 = f64), five u64 dims (N,C,L,H,W),
// raw little-endian element data.
inline constexpr std::string_view kTensorMagic = "RTEN1";

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

template <typename T> constexpr DType dtype_of();
template <> constexpr DType dtype_of<float>() { return DType::f32; }
template <> constexpr DType dtype_of<double>() { return DType::f64; }

using AnyTensor = std::variant<Tensor5f, Tensor5d>;

template <typename T> void write_tensor(ByteWriter &out, const Tensor5<T> &t);
AnyTensor read_any_tensor(ByteReader &in);
/// Reads a tensor and converts it to T if it was stored in the other dtype.
template <typename T> Tensor5<T> read_tensor(ByteReader &in);

template <typename T>
void save_tensor(const std::string &path, const Tensor5<T> &t);
template <typename T> Tensor5<T> load_tensor(const std::string &path);

} // namespace rcnet
