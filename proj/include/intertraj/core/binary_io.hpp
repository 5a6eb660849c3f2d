#pragma once

// Versioned binary container shared by every on-disk artifact.
//
//   offset  size  field
//   0       4     magic "ITRJ"
//   4       4     kind tag (e.g. "TRAJ", "RIG ", "CKPT", "PRED")
//   8       4     format version (u32)
//   12      8     payload length in bytes (u64)
//   20      n     payload
//   20+n    4     CRC-32 (zlib polynomial) of the payload
//
// All integers and reals are little-endian; reals are IEEE-754.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

#include "intertraj/core/error.hpp"

namespace intertraj {

static_assert(std::endian::native == std::endian::little, "container IO assumes a little-endian host");

class ByteWriter {
 public:
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void f64s(std::span<const double> v) { raw(v.data(), v.size_bytes()); }
  void f32s(std::span<const float> v) { raw(v.data(), v.size_bytes()); }
  void bytes(std::span<const std::uint8_t> v) { raw(v.data(), v.size_bytes()); }

  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return pod<std::uint8_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int32_t i32() { return pod<std::int32_t>(); }
  float f32() { return pod<float>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void f64s(std::span<double> out) { copy(out.data(), out.size_bytes()); }
  void f32s(std::span<float> out) { copy(out.data(), out.size_bytes()); }
  void bytes(std::span<std::uint8_t> out) { copy(out.data(), out.size_bytes()); }

  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  template <typename T>
  T pod() {
    T v;
    copy(&v, sizeof v);
    return v;
  }
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("container payload truncated");
  }
  void copy(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes);

// Writes payload wrapped in the container header and checksum.
void write_container(const std::string& path, std::string_view kind, std::uint32_t version, std::string_view payload);

// Reads and validates a container; returns the payload. Throws FormatError on
// missing file, bad magic, unexpected kind, unsupported version, truncation or
// checksum mismatch.
std::string read_container(const std::string& path, std::string_view kind, std::uint32_t version);

// Same validation on an in-memory image of a whole container file.
std::string unwrap_container(std::string_view file, std::string_view kind, std::uint32_t version);

}  // namespace intertraj
