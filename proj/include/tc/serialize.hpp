#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tc {

class SerializeError : public std::runtime_error {
 public:
  explicit SerializeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Little-endian raw binary writer/reader; this code targets LE hosts.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw SerializeError("cannot write '" + path + "'");
  }
  template <typename T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <typename T>
  void put_vector(const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    put<uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
  void put_string(const std::string& s) {
    put<uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void finish() {
    out_.flush();
    if (!out_) throw SerializeError("write failed for '" + path_ + "'");
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw SerializeError("cannot open '" + path + "'");
  }
  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  template <typename T>
  std::vector<T> get_vector() {
    const auto n = get<uint64_t>();
    std::vector<T> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    check();
    return v;
  }
  std::string get_string() {
    const auto n = get<uint64_t>();
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  void expect_magic(const char* magic, std::size_t len) {
    std::string got(len, '\0');
    in_.read(got.data(), static_cast<std::streamsize>(len));
    check();
    if (std::memcmp(got.data(), magic, len) != 0)
      throw SerializeError(path_ + ": bad magic bytes");
  }

 private:
  void check() {
    if (!in_) throw SerializeError(path_ + ": truncated or unreadable");
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace tc
