#pragma once

// Portable ParamVector checkpoints.
//
// Layout (all integers and floats little-endian):
//   magic   8 bytes  "PLFLCKPT"
//   version u32      (1)
//   groups  u32
//   per group: name_len u32, name bytes, rows u64, cols u64, rows*cols f64

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plfl/param_vector.hpp"

namespace plfl {

inline constexpr std::array<char, 8> kCheckpointMagic = {'P', 'L', 'F', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw CheckpointError("checkpoint truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
  return value;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const ParamVector& p) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.group_count()));
  for (std::size_t i = 0; i < p.group_count(); ++i) {
    const auto& g = p.spec(i);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.name.size()));
    out.write(g.name.data(), static_cast<std::streamsize>(g.name.size()));
    detail::put_le<std::uint64_t>(out, g.rows);
    detail::put_le<std::uint64_t>(out, g.cols);
    for (double v : p.group(i)) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
}

inline ParamVector read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw CheckpointError("not a parameter checkpoint (bad magic)");
  }
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto n = detail::get_le<std::uint32_t>(in);
  std::vector<GroupSpec> groups;
  std::vector<double> values;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto len = detail::get_le<std::uint32_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw CheckpointError("checkpoint truncated in group name");
    const auto rows = detail::get_le<std::uint64_t>(in);
    const auto cols = detail::get_le<std::uint64_t>(in);
    groups.push_back({name, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)});
    for (std::uint64_t k = 0; k < rows * cols; ++k) {
      values.push_back(std::bit_cast<double>(detail::get_le<std::uint64_t>(in)));
    }
  }
  return ParamVector::unflatten(std::move(groups), values);
}

inline void write_checkpoint(const std::string& path, const ParamVector& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  write_checkpoint(out, p);
  if (!out) throw CheckpointError("write failed for " + path);
}

inline ParamVector read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  try {
    return read_checkpoint(in);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

}  // namespace plfl
