#pragma once

// Little-endian binary primitives shared by the bundle and classifier model files.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posehar/error.hpp"

namespace posehar::binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

inline void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw Error(Errc::ParseError, "unexpected end of binary file");
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  read_bytes(in, &value, sizeof(T));
  return value;
}

inline void write_u32(std::ostream& out, std::uint32_t v) { write_pod(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_pod(out, v); }
inline void write_i32(std::ostream& out, std::int32_t v) { write_pod(out, v); }
inline void write_f64(std::ostream& out, double v) { write_pod(out, v); }
inline std::uint32_t read_u32(std::istream& in) { return read_pod<std::uint32_t>(in); }
inline std::uint64_t read_u64(std::istream& in) { return read_pod<std::uint64_t>(in); }
inline std::int32_t read_i32(std::istream& in) { return read_pod<std::int32_t>(in); }
inline double read_f64(std::istream& in) { return read_pod<double>(in); }

/// u32 byte length followed by the bytes.
inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

inline std::string read_string(std::istream& in) {
  const auto n = read_u32(in);
  if (n > (1u << 30)) throw Error(Errc::ParseError, "string length out of range");
  std::string s(n, '\0');
  read_bytes(in, s.data(), n);
  return s;
}

/// u32 rows, u32 cols, then rows*cols f64 in column-major order.
template <typename Derived>
void write_matrix(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
  const Eigen::MatrixXd dense = m.template cast<double>();
  write_u32(out, static_cast<std::uint32_t>(dense.rows()));
  write_u32(out, static_cast<std::uint32_t>(dense.cols()));
  write_bytes(out, dense.data(), sizeof(double) * static_cast<std::size_t>(dense.size()));
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
  const auto rows = read_u32(in);
  const auto cols = read_u32(in);
  if (static_cast<std::uint64_t>(rows) * cols > (1ull << 32)) throw Error(Errc::ParseError, "matrix too large");
  Eigen::MatrixXd m(rows, cols);
  read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  return m;
}

inline void expect_magic(std::istream& in, const char (&magic)[9]) {
  char buf[8];
  read_bytes(in, buf, 8);
  if (std::memcmp(buf, magic, 8) != 0)
    throw Error(Errc::ParseError, std::string("bad magic, expected ") + magic);
}

}  // namespace posehar::binio
