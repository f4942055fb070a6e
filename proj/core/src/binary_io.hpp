#pragma once

// Little-endian primitives shared by the EMB1 / PRJ1 / STA1 / WOH1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "protoridge/types.hpp"

namespace protoridge::detail {

static_assert(std::endian::native == std::endian::little, "codecs assume a little-endian host");

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    bytes_.insert(bytes_.end(), buf, buf + sizeof(T));
  }

  const std::vector<char>& bytes() const noexcept { return bytes_; }
  std::vector<char> take() noexcept { return std::move(bytes_); }
  void reserve(std::size_t n) { bytes_.reserve(n); }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size, std::string what) : data_(data), size_(size), what_(std::move(what)) {}

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::string_view(data_ + pos_, m.size()) != m) {
      throw FormatError(what_ + ": bad magic '" + std::string(data_ + pos_, m.size()) + "', expected '" +
                        std::string(m) + "'");
    }
    pos_ += m.size();
  }

  template <typename T>
  T get(const char* field) {
    need(sizeof(T), field);
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::size_t remaining() const noexcept { return size_ - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n, const char* field) const {
    if (size_ - pos_ < n) {
      throw FormatError(what_ + ": truncated while reading " + field + " at byte " + std::to_string(pos_));
    }
  }

  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<char> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<char>& bytes);

}  // namespace protoridge::detail
