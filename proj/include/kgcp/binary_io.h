/*
 * Copyright 2026 The kgcp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Little-endian binary helpers shared by the on-disk formats.

#ifndef KGCP_BINARY_IO_H_
#define KGCP_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "kgcp/error.h"

namespace kgcp::binary_io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

template <typename T>
void Write(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void WriteDoubles(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

template <typename T>
T Read(std::istream& in, const std::string& what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error("truncated file while reading " + what);
  }
  return value;
}

inline void ReadDoubles(std::istream& in, std::span<double> values,
                        const std::string& what) {
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    throw Error("truncated file while reading " + what);
  }
}

constexpr uint32_t Magic(const char (&tag)[5]) {
  return static_cast<uint32_t>(static_cast<unsigned char>(tag[0])) |
         static_cast<uint32_t>(static_cast<unsigned char>(tag[1])) << 8 |
         static_cast<uint32_t>(static_cast<unsigned char>(tag[2])) << 16 |
         static_cast<uint32_t>(static_cast<unsigned char>(tag[3])) << 24;
}

}  // namespace kgcp::binary_io

#endif  // KGCP_BINARY_IO_H_
