#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "spatial/common.hpp"

namespace spatial {

static_assert(sizeof(float) == 4 && sizeof(double) == 8, "IEEE-754 layout expected");

// Little-endian binary stream helpers for checkpoints and embedding files.
class BinWriter {
public:
  explicit BinWriter(std::ostream& os) : os_(os) {}

  void raw(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

  template <typename T>
  void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    raw(&v, sizeof(v));
  }

  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void i64(std::int64_t v) { pod(v); }
  void f32(float v) { pod(v); }
  void f64(double v) { pod(v); }

  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }

  template <typename T>
  void vec(const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    u64(v.size());
    raw(v.data(), v.size() * sizeof(T));
  }

  bool ok() const { return static_cast<bool>(os_); }

private:
  std::ostream& os_;
};

class BinReader {
public:
  explicit BinReader(std::istream& is) : is_(is) {}

  void raw(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is_) data_fail("binary stream truncated");
  }

  template <typename T>
  T pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    raw(&v, sizeof(v));
    return v;
  }

  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int64_t i64() { return pod<std::int64_t>(); }
  float f32() { return pod<float>(); }
  double f64() { return pod<double>(); }

  std::string str() {
    const auto n = u64();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }

  template <typename T>
  std::vector<T> vec() {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto n = u64();
    std::vector<T> v(n);
    raw(v.data(), n * sizeof(T));
    return v;
  }

private:
  std::istream& is_;
};

}  // namespace spatial
