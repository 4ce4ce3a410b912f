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

#include "csiq/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace csiq
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of substream `stream` under `master`. Substreams are independent of the order in which
/// they are requested, so per-user generation can run on any thread.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream)
{
    return splitmix64(master ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// mt19937_64 with portable uniform/normal transforms (the std distributions are
/// implementation-defined, which would break cross-platform determinism).
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t master, std::uint64_t stream) : engine_(substream_seed(master, stream)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        // Rejection keeps the draw unbiased.
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do
            x = engine_();
        while (x >= limit);
        return x % n;
    }

    double normal()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly-symmetric complex Gaussian with unit variance.
    cplx cnormal()
    {
        const double re = normal();
        const double im = normal();
        return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
    }

    /// Laplacian with zero mean and the given standard deviation.
    double laplace(double stddev)
    {
        const double b = stddev / std::numbers::sqrt2;
        const double u = uniform() - 0.5;
        const double s = u < 0.0 ? -1.0 : 1.0;
        double t = 1.0 - 2.0 * std::abs(u);
        if (t <= 0.0)
            t = 0x1.0p-53;
        return -b * s * std::log(t);
    }

    CVec cnormal_vector(Eigen::Index n)
    {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v(i) = cnormal();
        return v;
    }

    /// Uniformly distributed unit vector in C^n.
    CVec unit_vector(Eigen::Index n)
    {
        CVec v = cnormal_vector(n);
        return v / v.norm();
    }

    /// Haar-distributed n x n unitary (QR of a Gaussian matrix with the R diagonal phases removed).
    CMat haar_unitary(Eigen::Index n)
    {
        CMat g(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                g(i, j) = cnormal();
        Eigen::HouseholderQR<CMat> qr(g);
        CMat q = qr.householderQ();
        const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < n; ++j)
        {
            const double mag = std::abs(r(j, j));
            if (mag > 0.0)
                q.col(j) *= r(j, j) / mag;
        }
        return q;
    }

    std::mt19937_64 &engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace csiq
