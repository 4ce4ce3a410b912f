// SPDX-License-Identifier: Apache-2.0
//
// csiq - modular CSI quantization for FDD massive MIMO
// Copyright (C) 2026 The csiq authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace csiq::binary
{

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_le(T v)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <typename T>
void put(std::ostream &os, T v)
{
    v = to_le(v);
    os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T get(std::istream &is)
{
    T v{};
    is.read(reinterpret_cast<char *>(&v), sizeof(T));
    if (!is)
        throw std::runtime_error("binary read: unexpected end of stream");
    return to_le(v);
}

inline void put_string(std::ostream &os, const std::string &s)
{
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream &is)
{
    const auto n = get<std::uint32_t>(is);
    if (n > (1u << 26))
        throw std::runtime_error("binary read: string length too large");
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is)
        throw std::runtime_error("binary read: unexpected end of stream");
    return s;
}

inline void put_magic(std::ostream &os, const char (&magic)[9])
{
    os.write(magic, 8);
}

inline void expect_magic(std::istream &is, const char (&magic)[9])
{
    char buf[8];
    is.read(buf, 8);
    if (!is || std::memcmp(buf, magic, 8) != 0)
        throw std::runtime_error(std::string("binary read: bad magic, expected ") + magic);
}

} // namespace csiq::binary
