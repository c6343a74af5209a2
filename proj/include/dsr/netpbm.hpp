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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsr/tensor.hpp"

// Binary netpbm: P5 (grey) and P6 (RGB), maxval 255. Samples map to [0,1]
// as v / 255.
namespace dsr {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void skip_space_and_comments(std::istream& is) {
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (c != std::char_traits<char>::eof() && std::isspace(c)) {
      is.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_header_int(std::istream& is, const std::string& where) {
  skip_space_and_comments(is);
  std::size_t v = 0;
  bool any = false;
  while (std::isdigit(is.peek())) {
    v = v * 10 + static_cast<std::size_t>(is.get() - '0');
    any = true;
    if (v > (1u << 24)) throw IoError(where + ": header value too large");
  }
  if (!any) throw IoError(where + ": malformed netpbm header");
  return v;
}

}  // namespace detail

inline Image read_netpbm(std::istream& is, const std::string& where = "<stream>") {
  char magic[2] = {};
  is.read(magic, 2);
  if (is.gcount() != 2 || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw IoError(where + ": not a binary PGM/PPM (P5/P6) file");
  }
  const std::size_t channels = magic[1] == '5' ? 1 : 3;
  const std::size_t width = detail::read_header_int(is, where);
  const std::size_t height = detail::read_header_int(is, where);
  const std::size_t maxval = detail::read_header_int(is, where);
  if (width == 0 || height == 0) throw IoError(where + ": zero image extent");
  if (maxval != 255) throw IoError(where + ": only 8-bit (maxval 255) supported");
  if (!std::isspace(is.get())) throw IoError(where + ": malformed netpbm header");

  const std::size_t n = width * height * channels;
  std::vector<unsigned char> raw(n);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw IoError(where + ": truncated pixel data");
  }
  std::vector<double> px(n);
  for (std::size_t i = 0; i < n; ++i) px[i] = raw[i] / 255.0;
  return Image(Tensor({height, width, channels}, std::move(px)));
}

inline Image read_netpbm_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path + ": cannot open file");
  return read_netpbm(is, path);
}

// Samples are quantised as round(255 v).
inline void write_netpbm(std::ostream& os, const Image& image) {
  os << (image.channels() == 1 ? "P5" : "P6") << "\n"
     << image.width() << " " << image.height() << "\n255\n";
  for (double v : image.pixels().values()) {
    os.put(static_cast<char>(
        static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
}

inline void write_netpbm_file(const std::string& path, const Image& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path + ": cannot open file for writing");
  write_netpbm(os, image);
  if (!os) throw IoError(path + ": write failed");
}

}  // namespace dsr
