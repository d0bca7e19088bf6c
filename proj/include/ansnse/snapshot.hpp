#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ansnse/error.hpp"
#include "ansnse/field.hpp"
#include "ansnse/grid.hpp"

// Field snapshot file, little-endian:
//   "ANSF" | u32 version (1) | u32 n1 n2 n3 | f64 L | u32 components |
//   components x (n1*n2*n3) f64, row-major with x3 fastest.

namespace ansnse {

inline constexpr char kSnapshotMagic[4] = {'A', 'N', 'S', 'F'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct Snapshot {
  Grid grid;
  std::vector<ScalarField> components;
};

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("snapshot file is truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline std::string encode_snapshot(const Grid& grid, std::span<const ScalarField> components) {
  std::string out(kSnapshotMagic, 4);
  detail::put_le<std::uint32_t>(out, kSnapshotVersion);
  for (int axis = 0; axis < 3; ++axis) detail::put_le<std::uint32_t>(out, grid.n(axis));
  detail::put_le<double>(out, grid.length());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(components.size()));
  out.reserve(out.size() + components.size() * grid.size() * sizeof(double));
  for (const auto& c : components) {
    if (!(c.grid() == grid)) throw InvalidFieldError("snapshot component on a different grid");
    for (double v : c.values()) detail::put_le<double>(out, v);
  }
  return out;
}

inline Snapshot decode_snapshot(const std::string& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kSnapshotMagic, 4) != 0) {
    throw FormatError("not a field snapshot (bad magic)");
  }
  pos = 4;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kSnapshotVersion) {
    throw FormatError("unsupported snapshot version " + std::to_string(version));
  }
  std::array<int, 3> n{};
  for (auto& d : n) {
    const auto v = detail::get_le<std::uint32_t>(bytes, pos);
    if (v > (1u << 16)) throw FormatError("snapshot dimension out of range");
    d = static_cast<int>(v);
  }
  const double length = detail::get_le<double>(bytes, pos);
  const auto count = detail::get_le<std::uint32_t>(bytes, pos);
  Grid grid;
  try {
    grid = Grid(n, length);
  } catch (const InvalidGridError& e) {
    throw FormatError(std::string("snapshot header: ") + e.what());
  }
  const std::size_t expected = pos + static_cast<std::size_t>(count) * grid.size() * sizeof(double);
  if (bytes.size() < expected) throw FormatError("snapshot file is truncated");
  if (bytes.size() > expected) throw FormatError("snapshot file has trailing bytes");
  Snapshot snap{grid, {}};
  snap.components.reserve(count);
  for (std::uint32_t c = 0; c < count; ++c) {
    std::vector<double> values(grid.size());
    for (auto& v : values) v = detail::get_le<double>(bytes, pos);
    snap.components.emplace_back(grid, std::move(values));
  }
  return snap;
}

inline void write_snapshot(const std::filesystem::path& path, const Grid& grid,
                           std::span<const ScalarField> components) {
  const std::string bytes = encode_snapshot(grid, components);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

inline void write_snapshot(const std::filesystem::path& path, const VectorField3& v) {
  write_snapshot(path, v.grid(), v.components());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

inline VectorField3 to_vector_field(const Snapshot& snap) {
  if (snap.components.size() != 3) {
    throw FormatError("expected 3 components, snapshot has " +
                      std::to_string(snap.components.size()));
  }
  return {snap.components[0], snap.components[1], snap.components[2]};
}

}  // namespace ansnse
