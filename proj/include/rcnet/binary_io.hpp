#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "rcnet/errors.hpp"

namespace rcnet {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

/// Append-only little-endian byte sink.
class ByteWriter {
public:
  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const std::uint8_t *>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T> void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    bytes(&v, sizeof(T));
  }
  void u8(std::uint8_t v) { pod(v); }
  void u16(std::uint16_t v) { pod(v); }
  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  /// u32 byte length followed by the UTF-8 bytes.
  void str32(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    text(s);
  }

  const std::vector<std::uint8_t> &buffer() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader. Every failure reports the byte
/// offset at which it happened.
class ByteReader {
public:
  ByteReader(const std::uint8_t *data, std::size_t size)
      : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<std::uint8_t> &v)
      : ByteReader(v.data(), v.size()) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return size_ - pos_; }
  bool at_end() const { return pos_ == size_; }

  void bytes(void *out, std::size_t n, const char *what) {
    need(n, what);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  template <typename T> T pod(const char *what) {
    T v;
    bytes(&v, sizeof(T), what);
    return v;
  }
  std::uint8_t u8(const char *what) { return pod<std::uint8_t>(what); }
  std::uint16_t u16(const char *what) { return pod<std::uint16_t>(what); }
  std::uint32_t u32(const char *what) { return pod<std::uint32_t>(what); }
  std::uint64_t u64(const char *what) { return pod<std::uint64_t>(what); }
  std::string text(std::size_t n, const char *what) {
    need(n, what);
    std::string s(reinterpret_cast<const char *>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::string str32(const char *what) {
    const std::uint32_t n = u32(what);
    return text(n, what);
  }

  /// Consumes a magic string; MagicError if it does not match.
  void expect_magic(std::string_view magic) {
    const std::size_t at = pos_;
    if (remaining() < magic.size() ||
        std::memcmp(data_ + pos_, magic.data(), magic.size()) != 0)
      throw MagicError("bad magic at offset " + std::to_string(at) +
                       ", expected '" + std::string(magic) + "'");
    pos_ += magic.size();
  }

  void need(std::size_t n, const char *what) const {
    if (remaining() < n)
      throw TruncationError("truncated " + std::string(what) + " at offset " +
                            std::to_string(pos_) + ": need " +
                            std::to_string(n) + " bytes, have " +
                            std::to_string(remaining()));
  }

private:
  const std::uint8_t *data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string &path);
void write_file_bytes(const std::string &path,
                      const std::vector<std::uint8_t> &bytes);

} // namespace rcnet
