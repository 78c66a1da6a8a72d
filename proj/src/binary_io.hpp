#pragma once

// Little-endian writers/readers shared by the graph and checkpoint formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "sagnn/error.hpp"

namespace sagnn::binio {

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((u >> (8 * i)) & 0xffu);
  }
  out.write(buf.data(), buf.size());
}

inline void put_f64(std::ostream& out, double value) {
  put(out, std::bit_cast<std::uint64_t>(value));
}

inline void put_string(std::ostream& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n,
                       const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ValidationError(std::string("truncated file while reading ") + what);
  }
}

template <typename T>
T get(std::istream& in, const char* what) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  std::array<char, sizeof(T)> buf{};
  read_exact(in, buf.data(), buf.size(), what);
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<U>(static_cast<unsigned char>(buf[i])) << (8 * i);
  }
  return static_cast<T>(u);
}

inline double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get<std::uint64_t>(in, what));
}

inline std::string get_string(std::istream& in, const char* what,
                              std::uint32_t max_len = 1u << 20) {
  auto n = get<std::uint32_t>(in, what);
  if (n > max_len) throw ValidationError(std::string("corrupt length in ") + what);
  std::string s(n, '\0');
  if (n > 0) read_exact(in, s.data(), n, what);
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4];
  read_exact(in, buf, 4, "magic");
  if (std::memcmp(buf, magic, 4) != 0) {
    throw ValidationError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace sagnn::binio
