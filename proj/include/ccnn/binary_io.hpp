#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ccnn::io {

// Explicit little-endian encoding, independent of the host byte order.

inline void put_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

template <typename U>
void put_le(std::ostream& os, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::ostream& os, std::uint16_t v) { put_le(os, v); }
inline void put_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
inline void put_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
inline void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

inline void put_string(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct truncated_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw truncated_error("unexpected end of file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline std::uint8_t get_u8(std::istream& is) { return get_le<std::uint8_t>(is); }
inline std::uint16_t get_u16(std::istream& is) { return get_le<std::uint16_t>(is); }
inline std::uint32_t get_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
inline std::uint64_t get_u64(std::istream& is) { return get_le<std::uint64_t>(is); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

inline std::string get_string(std::istream& is, std::uint64_t max_len = 1u << 26) {
  const std::uint64_t n = get_u64(is);
  if (n > max_len) throw std::runtime_error("string length " + std::to_string(n) + " is implausible");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), static_cast<std::streamsize>(n))) throw truncated_error("unexpected end of file");
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  if (!is.read(buf, 4)) throw truncated_error("unexpected end of file");
  if (std::memcmp(buf, magic, 4) != 0) throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

}  // namespace ccnn::io
