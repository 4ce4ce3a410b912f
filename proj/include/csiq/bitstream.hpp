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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace csiq
{

/// Packs unsigned fields MSB-first into a byte vector.
class BitWriter
{
public:
    void put(std::uint64_t value, int bits)
    {
        if (bits < 0 || bits > 64)
            throw std::invalid_argument("BitWriter: field width must be in [0, 64]");
        if (bits < 64 && (value >> bits) != 0)
            throw std::invalid_argument("BitWriter: value does not fit in the field width");
        for (int b = bits - 1; b >= 0; --b)
        {
            if (count_ % 8 == 0)
                bytes_.push_back(0);
            if ((value >> b) & 1u)
                bytes_.back() = static_cast<std::uint8_t>(bytes_.back() | (0x80u >> (count_ % 8)));
            ++count_;
        }
    }

    std::size_t bit_count() const noexcept { return count_; }
    const std::vector<std::uint8_t> &bytes() const noexcept { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t count_ = 0;
};

class BitReader
{
public:
    BitReader(const std::vector<std::uint8_t> &bytes, std::size_t bit_count) : bytes_(bytes), count_(bit_count)
    {
        if (bit_count > bytes.size() * 8)
            throw std::invalid_argument("BitReader: bit count exceeds the buffer");
    }

    std::uint64_t get(int bits)
    {
        if (bits < 0 || bits > 64)
            throw std::invalid_argument("BitReader: field width must be in [0, 64]");
        if (pos_ + static_cast<std::size_t>(bits) > count_)
            throw std::runtime_error("BitReader: payload exhausted");
        std::uint64_t v = 0;
        for (int b = 0; b < bits; ++b, ++pos_)
            v = (v << 1) | ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u);
        return v;
    }

    std::size_t remaining() const noexcept { return count_ - pos_; }

private:
    const std::vector<std::uint8_t> &bytes_;
    std::size_t count_;
    std::size_t pos_ = 0;
};

/// ceil(log2(n)) for n >= 1.
inline int ceil_log2(std::size_t n)
{
    int b = 0;
    while ((std::size_t{1} << b) < n)
        ++b;
    return b;
}

} // namespace csiq
