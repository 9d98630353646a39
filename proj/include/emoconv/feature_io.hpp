// emoconv/feature_io.hpp

// Copyright 2026  The emoconv authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOCONV_FEATURE_IO_HPP_
#define EMOCONV_FEATURE_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "emoconv/errors.hpp"

namespace emoconv {

// On-disk carrier for every per-frame feature kind: F0 and momenta are
// rows x 1, spectral frames are rows x D. The file does not know which; the
// manifest declares semantics.
struct FeatureMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool valid() const {
    return rows >= 1 && cols >= 1 &&
           data.size() == static_cast<std::size_t>(rows) * cols;
  }
};

namespace detail {

constexpr char kEmo1Magic[4] = {'E', 'M', 'O', '1'};
constexpr std::uint32_t kEmo1Version = 1;

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f64_le(std::string& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

/// Serializes a matrix to the 16-byte header + binary64 payload layout.
/// Byte-deterministic: no timestamps, no padding, no footer.
inline std::string encode_feature_matrix(const FeatureMatrix& m) {
  if (!m.valid())
    throw ShapeError("feature matrix invariant violated: rows*cols=" +
                     std::to_string(static_cast<std::size_t>(m.rows) * m.cols) +
                     " data=" + std::to_string(m.data.size()));
  std::string out;
  out.reserve(16 + m.data.size() * 8);
  out.append(detail::kEmo1Magic, 4);
  detail::put_u32_le(out, detail::kEmo1Version);
  detail::put_u32_le(out, m.rows);
  detail::put_u32_le(out, m.cols);
  for (double v : m.data) detail::put_f64_le(out, v);
  return out;
}

inline FeatureMatrix decode_feature_matrix(const std::string& bytes,
                                           const std::string& origin) {
  if (bytes.size() < 16)
    throw FormatError(origin + ": truncated header (" +
                      std::to_string(bytes.size()) + " bytes)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, detail::kEmo1Magic, 4) != 0)
    throw FormatError(origin + ": bad magic, expected EMO1");
  const std::uint32_t version = detail::get_u32_le(p + 4);
  if (version != detail::kEmo1Version)
    throw FormatError(origin + ": unsupported version " +
                      std::to_string(version));
  FeatureMatrix m;
  m.rows = detail::get_u32_le(p + 8);
  m.cols = detail::get_u32_le(p + 12);
  const std::size_t n = static_cast<std::size_t>(m.rows) * m.cols;
  if (m.rows < 1 || m.cols < 1)
    throw FormatError(origin + ": zero dimension " + std::to_string(m.rows) +
                      "x" + std::to_string(m.cols));
  if (bytes.size() != 16 + n * 8)
    throw FormatError(origin + ": payload size " +
                      std::to_string(bytes.size() - 16) + " does not match " +
                      std::to_string(m.rows) + "x" + std::to_string(m.cols));
  m.data.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    m.data[i] = detail::get_f64_le(p + 16 + i * 8);
  return m;
}

inline void write_feature_file(const std::filesystem::path& path,
                               const FeatureMatrix& m) {
  const std::string bytes = encode_feature_matrix(m);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.flush();
  if (!f) throw IoError("short write: " + path.string());
}

inline FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failure: " + path.string());
  return decode_feature_matrix(bytes, path.string());
}

}  // namespace emoconv

#endif  // EMOCONV_FEATURE_IO_HPP_
