#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "warp/error.hpp"

namespace warp::detail {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are unsupported");

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) fail(ErrorCode::kIo, "write failed: " + path_.string());
  }

  template <class T>
    requires std::is_arithmetic_v<T>
  void scalar(T value) { bytes(&value, sizeof(T)); }

  template <class T>
  void array(std::span<const T> values) { bytes(values.data(), values.size_bytes()); }

  void close() {
    out_.close();
    if (!out_) fail(ErrorCode::kIo, "close failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorCode::kIo, "cannot open: " + path.string());
  }

  /// Reads exactly n bytes or throws `short_code`.
  void bytes(void* data, std::size_t n, ErrorCode short_code) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      fail(short_code, "unexpected end of file: " + path_.string());
    }
  }

  template <class T>
    requires std::is_arithmetic_v<T>
  T scalar(ErrorCode short_code) {
    T value{};
    bytes(&value, sizeof(T), short_code);
    return value;
  }

  template <class T>
  std::vector<T> array(std::size_t count, ErrorCode short_code) {
    std::vector<T> out(count);
    bytes(out.data(), count * sizeof(T), short_code);
    return out;
  }

  [[nodiscard]] bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

/// Size in bytes of a file, or throws kIo.
inline std::uintmax_t file_size(const std::filesystem::path& path) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot stat " + path.string() + ": " + ec.message());
  return size;
}

}  // namespace warp::detail
