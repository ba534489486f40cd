#pragma once

// Little-endian primitive I/O independent of host byte order.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "smm/linalg.hpp"

namespace smm::byteio {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(v >> (8 * k));
    out_.write(reinterpret_cast<const char*>(buf), 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void complex(Scalar z) {
    f64(z.real());
    f64(z.imag());
  }
  void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t u64() {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), 8);
    if (in_.gcount() != 8) throw Error("unexpected end of binary input");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Scalar complex() {
    const double re = f64();
    const double im = f64();
    return {re, im};
  }
  void bytes(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw Error("unexpected end of binary input");
  }

 private:
  std::istream& in_;
};

}  // namespace smm::byteio
