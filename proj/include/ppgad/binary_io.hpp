#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "ppgad/error.hpp"

// Little-endian float64 blocks shared by the checkpoint and windows-archive
// containers.
namespace ppgad::io {

inline void write_f64_le(std::ostream& out, std::span<const double> values) {
  char buf[8];
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      buf[i] = static_cast<char>(bits & 0xffu);
      bits >>= 8;
    }
    out.write(buf, 8);
  }
}

inline void read_f64_le(std::istream& in, std::span<double> values, const std::string& source) {
  unsigned char buf[8];
  for (double& v : values) {
    if (!in.read(reinterpret_cast<char*>(buf), 8)) {
      throw IngestionError("truncated binary payload in " + source);
    }
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | buf[i];
    v = std::bit_cast<double>(bits);
  }
}

}  // namespace ppgad::io
