#pragma once

// Little-endian binary encoding helpers shared by the checkpoint and dataset formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iso/common/error.hpp"

namespace iso::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class BinaryWriter {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f32s(std::span<const float> v) { raw(v.data(), v.size_bytes()); }
  void bytes(std::string_view s) { raw(s.data(), s.size()); }
  /// u32 length prefix followed by the bytes.
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }

  const std::vector<char>& buffer() const noexcept { return buf_; }
  std::size_t size() const noexcept { return buf_.size(); }

 private:
  std::vector<char> buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::span<const char> data) : data_(data) {}

  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int32_t i32() { return pod<std::int32_t>(); }
  float f32() { return pod<float>(); }
  void f32s(std::span<float> out) { raw(out.data(), out.size_bytes(), "float payload"); }
  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    raw(s.data(), n, "string payload");
    return s;
  }
  std::string str(std::size_t max_len = 1u << 20) {
    const auto at = pos_;
    const auto n = u32();
    if (n > max_len) throw FormatError("string length " + std::to_string(n) + " too large", at);
    return bytes(n);
  }

  std::uint64_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }

  /// Ensures `n` more bytes exist; throws with the current offset otherwise.
  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n)
      throw FormatError("truncated input while reading " + std::string(what) + " (need " +
                            std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")",
                        pos_);
  }

 private:
  template <typename T>
  T pod() {
    T v;
    raw(&v, sizeof v, "scalar field");
    return v;
  }
  void raw(void* out, std::size_t n, std::string_view what) {
    require(n, what);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }

  std::span<const char> data_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling file and rename so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::span<const char> bytes);

}  // namespace iso::io
