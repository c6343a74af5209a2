// Copyright (c) the dsr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsr/adapter.hpp"
#include "dsr/denoiser.hpp"
#include "dsr/tensor.hpp"

// Weight file layout (all integers and doubles little-endian):
//
//   "DTIA"            4-byte magic
//   u32 version       currently 1
//   u32 D             token width
//   u32 count         number of adapter arrays, followed by that many arrays
//   [ "TOYD" u32 count arrays... ]   optional toy-denoiser section
//
// Each array is: u32 name length, name bytes, u32 rank, rank x u64 extents,
// then prod(extents) x f64.
namespace dsr {

inline constexpr std::array<char, 4> kAdapterMagic = {'D', 'T', 'I', 'A'};
inline constexpr std::array<char, 4> kDenoiserTag = {'T', 'O', 'Y', 'D'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

namespace wire {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline void read_exact(std::istream& is, char* dst, std::size_t n) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw FormatError("weights: unexpected end of file");
  }
}

inline std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char buf[8];
  read_exact(is, reinterpret_cast<char*>(buf), static_cast<std::size_t>(bytes));
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& is) {
  return static_cast<std::uint32_t>(get_le(is, 4));
}
inline std::uint64_t get_u64(std::istream& is) { return get_le(is, 8); }
inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

inline void put_array(std::ostream& os, const NamedArray& a) {
  put_u32(os, static_cast<std::uint32_t>(a.name.size()));
  os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
  put_u32(os, static_cast<std::uint32_t>(a.value.rank()));
  for (std::size_t e : a.value.shape()) put_u64(os, e);
  for (double v : a.value.values()) put_f64(os, v);
}

inline NamedArray get_array(std::istream& is) {
  constexpr std::uint32_t kMaxName = 256, kMaxRank = 8;
  constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;
  NamedArray a;
  const std::uint32_t name_len = get_u32(is);
  if (name_len > kMaxName) throw FormatError("weights: array name too long");
  a.name.resize(name_len);
  read_exact(is, a.name.data(), name_len);
  const std::uint32_t rank = get_u32(is);
  if (rank == 0 || rank > kMaxRank) throw FormatError("weights: bad rank");
  Shape shape(rank);
  std::uint64_t total = 1;
  for (auto& e : shape) {
    const std::uint64_t v = get_u64(is);
    if (v == 0 || v > kMaxElements) throw FormatError("weights: bad extent");
    total *= v;
    if (total > kMaxElements) throw FormatError("weights: array too large");
    e = static_cast<std::size_t>(v);
  }
  std::vector<double> data(static_cast<std::size_t>(total));
  for (double& v : data) v = get_f64(is);
  a.value = Tensor(std::move(shape), std::move(data));
  return a;
}

inline void put_section(std::ostream& os, const std::vector<NamedArray>& arrays) {
  put_u32(os, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) put_array(os, a);
}

inline std::vector<NamedArray> get_section(std::istream& is) {
  const std::uint32_t count = get_u32(is);
  if (count > 1024) throw FormatError("weights: too many arrays");
  std::vector<NamedArray> arrays;
  for (std::uint32_t i = 0; i < count; ++i) arrays.push_back(get_array(is));
  return arrays;
}

}  // namespace wire

struct WeightFile {
  std::uint32_t dim = 0;
  std::vector<NamedArray> adapter;
  std::optional<std::vector<NamedArray>> denoiser;

  friend bool operator==(const WeightFile&, const WeightFile&) = default;
};

inline void write_weights(std::ostream& os, const WeightFile& file) {
  os.write(kAdapterMagic.data(), 4);
  wire::put_u32(os, kWeightFormatVersion);
  wire::put_u32(os, file.dim);
  wire::put_section(os, file.adapter);
  if (file.denoiser) {
    os.write(kDenoiserTag.data(), 4);
    wire::put_section(os, *file.denoiser);
  }
  if (!os) throw std::runtime_error("weights: write failed");
}

inline WeightFile read_weights(std::istream& is) {
  std::array<char, 4> magic{};
  wire::read_exact(is, magic.data(), 4);
  if (magic != kAdapterMagic) throw FormatError("weights: bad magic");
  const std::uint32_t version = wire::get_u32(is);
  if (version != kWeightFormatVersion) {
    throw FormatError("weights: unsupported version " + std::to_string(version));
  }
  WeightFile file;
  file.dim = wire::get_u32(is);
  file.adapter = wire::get_section(is);
  std::array<char, 4> tag{};
  is.read(tag.data(), 4);
  if (is.gcount() == 0) return file;
  if (is.gcount() != 4 || tag != kDenoiserTag) {
    throw FormatError("weights: unknown trailing section");
  }
  file.denoiser = wire::get_section(is);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("weights: trailing bytes after TOYD section");
  }
  return file;
}

template <typename Params>
std::vector<NamedArray> to_arrays(const Params& params) {
  std::vector<NamedArray> out;
  params.for_each([&out](const char* name, const Tensor& t) {
    out.push_back({name, t});
  });
  return out;
}

// Fills `params` (already shaped) from named arrays; names and shapes must
// match exactly.
template <typename Params>
void from_arrays(const std::vector<NamedArray>& arrays, Params& params) {
  std::size_t k = 0;
  params.for_each([&](const char* name, Tensor& t) {
    if (k >= arrays.size() || arrays[k].name != name) {
      throw FormatError(std::string("weights: expected array '") + name + "'");
    }
    if (arrays[k].value.shape() != t.shape()) {
      throw FormatError(std::string("weights: shape mismatch for '") + name +
                        "'");
    }
    t = arrays[k++].value;
  });
  if (k != arrays.size()) throw FormatError("weights: unexpected extra arrays");
}

inline WeightFile make_weight_file(const AdapterWeights& adapter,
                                   const ToyDenoiser* denoiser = nullptr) {
  WeightFile f;
  f.dim = static_cast<std::uint32_t>(adapter.shape.dim);
  f.adapter = to_arrays(adapter);
  if (denoiser) f.denoiser = to_arrays(*denoiser);
  return f;
}

inline AdapterWeights adapter_from_file(const WeightFile& f) {
  auto find = [&f](const char* name) -> const Tensor& {
    for (const auto& a : f.adapter) {
      if (a.name == name) return a.value;
    }
    throw FormatError(std::string("weights: missing array '") + name + "'");
  };
  AdapterShape s;
  s.dim = f.dim;
  s.hidden = find("w1").extent(0);
  s.time_hidden = find("t_w1").extent(0);
  s.pe_dim = find("t_w1").extent(1);
  AdapterWeights w = AdapterWeights::zeros(s);
  from_arrays(f.adapter, w);
  return w;
}

inline void save_weights(const std::string& path, const WeightFile& file) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_weights(os, file);
}

inline WeightFile load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_weights(is);
}

}  // namespace dsr
