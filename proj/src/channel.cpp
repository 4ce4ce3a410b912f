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

#include "csiq/channel.hpp"
#include "csiq/binary_io.hpp"
#include "csiq/rng.hpp"
#include "csiq/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csiq
{

namespace
{

constexpr double deg = std::numbers::pi / 180.0;

// Delay scaling factor of the exponential delay profile.
constexpr double delay_scaling = 2.3;

CVec dft_phase_vector(int n, double spatial_freq)
{
    CVec v(n);
    for (int k = 0; k < n; ++k)
        v(k) = std::polar(1.0 / std::sqrt(static_cast<double>(n)), 2.0 * std::numbers::pi * spatial_freq * k);
    return v;
}

CVec kron(const CVec &a, const CVec &b)
{
    CVec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

} // namespace

void ArrayGeometry::validate() const
{
    if (n_h < 1 || n_v < 1 || n_p < 1)
        throw std::invalid_argument("ArrayGeometry: element counts must be >= 1");
    if (n_p > 2)
        throw std::invalid_argument("ArrayGeometry: at most two polarizations are supported");
    if (!(spacing > 0.0))
        throw std::invalid_argument("ArrayGeometry: spacing must be positive");
}

void ClusterModelConfig::validate() const
{
    if (n_clusters < 1 || rays_per_cluster < 1 || n_subbands < 1)
        throw std::invalid_argument("ClusterModelConfig: counts must be >= 1");
    if (angle_spread_deg < 0.0 || elevation_spread_deg < 0.0 || delay_spread_s < 0.0 || sector_deg < 0.0 ||
        elevation_range_deg < 0.0 || cluster_shadowing_db < 0.0)
        throw std::invalid_argument("ClusterModelConfig: spreads must be non-negative");
    if (!(bandwidth_hz > 0.0))
        throw std::invalid_argument("ClusterModelConfig: bandwidth must be positive");
    if (indoor_ratio < 0.0 || indoor_ratio > 1.0 || indoor_attenuation <= 0.0 || indoor_attenuation > 1.0)
        throw std::invalid_argument("ClusterModelConfig: indoor_ratio in [0,1], indoor_attenuation in (0,1]");
}

std::string_view to_string(PolarizationMode mode)
{
    switch (mode)
    {
    case PolarizationMode::Full:
        return "full";
    case PolarizationMode::BplusBminus:
        return "bplusbminus";
    case PolarizationMode::B00B:
        return "b00b";
    }
    return "?";
}

PolarizationMode polarization_mode_from_string(std::string_view s)
{
    if (s == "full")
        return PolarizationMode::Full;
    if (s == "bplusbminus")
        return PolarizationMode::BplusBminus;
    if (s == "b00b")
        return PolarizationMode::B00B;
    throw std::invalid_argument("unknown polarization mode '" + std::string(s) + "' (full|bplusbminus|b00b)");
}

CVec upa_steering(const ArrayGeometry &geom, double azimuth, double elevation, double pol_phase)
{
    geom.validate();
    const CVec hh = dft_phase_vector(geom.n_h, geom.spacing * std::sin(azimuth) * std::cos(elevation));
    const CVec hv = dft_phase_vector(geom.n_v, geom.spacing * std::sin(elevation));
    CVec hp(geom.n_p);
    if (geom.n_p == 1)
        hp(0) = 1.0;
    else
    {
        hp(0) = std::numbers::sqrt2 / 2.0;
        hp(1) = std::polar(std::numbers::sqrt2 / 2.0, pol_phase);
    }
    return kron(hp, kron(hh, hv));
}

ChannelSet generate_user_channels(const ArrayGeometry &geom, const ClusterModelConfig &cfg, std::uint64_t seed,
                                  std::uint64_t user_id)
{
    geom.validate();
    cfg.validate();
    Rng rng(seed, user_id);

    const bool indoor = rng.uniform() < cfg.indoor_ratio;
    const double user_amp = indoor ? cfg.indoor_attenuation : 1.0;

    struct Ray
    {
        cplx gain;
        double delay;
        CVec steering;
    };
    std::vector<Ray> rays;
    rays.reserve(static_cast<std::size_t>(cfg.n_clusters * cfg.rays_per_cluster));

    std::vector<double> cluster_power(static_cast<std::size_t>(cfg.n_clusters));
    std::vector<double> cluster_delay(static_cast<std::size_t>(cfg.n_clusters));
    double total = 0.0;
    for (int c = 0; c < cfg.n_clusters; ++c)
    {
        double u = rng.uniform();
        if (u <= 0.0)
            u = 0x1.0p-53;
        const double tau = -delay_scaling * cfg.delay_spread_s * std::log(u);
        const double shadow = cfg.cluster_shadowing_db * rng.normal();
        double p = std::pow(10.0, -shadow / 10.0);
        if (cfg.delay_spread_s > 0.0)
            p *= std::exp(-tau * (delay_scaling - 1.0) / (delay_scaling * cfg.delay_spread_s));
        cluster_power[static_cast<std::size_t>(c)] = p;
        cluster_delay[static_cast<std::size_t>(c)] = tau;
        total += p;
    }

    for (int c = 0; c < cfg.n_clusters; ++c)
    {
        const double az_c = rng.uniform(-0.5, 0.5) * cfg.sector_deg * deg;
        const double el_c = rng.uniform(-1.0, 1.0) * cfg.elevation_range_deg * deg;
        const double ray_amp = std::sqrt(cluster_power[static_cast<std::size_t>(c)] / total / cfg.rays_per_cluster);
        for (int r = 0; r < cfg.rays_per_cluster; ++r)
        {
            const double az = az_c + rng.laplace(cfg.angle_spread_deg * deg);
            const double el = el_c + rng.laplace(cfg.elevation_spread_deg * deg);
            const double pol = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double tau = cluster_delay[static_cast<std::size_t>(c)] + 0.1 * cfg.delay_spread_s * rng.uniform();
            const cplx g = ray_amp * user_amp * rng.cnormal();
            rays.push_back({g, tau, upa_steering(geom, az, el, pol)});
        }
    }

    ChannelSet out;
    out.user_id = user_id;
    out.seed = seed;
    out.subbands.reserve(static_cast<std::size_t>(cfg.n_subbands));
    for (int s = 0; s < cfg.n_subbands; ++s)
    {
        const double f = s * (cfg.bandwidth_hz / cfg.n_subbands);
        CVec h = CVec::Zero(geom.n_t());
        for (const Ray &ray : rays)
            h += ray.gain * std::polar(1.0, -2.0 * std::numbers::pi * f * ray.delay) * ray.steering;
        out.subbands.push_back(std::move(h));
    }
    return out;
}

std::vector<ChannelSet> generate_channels(const ArrayGeometry &geom, const ClusterModelConfig &cfg,
                                          std::uint64_t seed, std::size_t count, int threads)
{
    std::vector<ChannelSet> out(count);
    parallel_for(count, threads, [&](std::size_t u) { out[u] = generate_user_channels(geom, cfg, seed, u); });
    return out;
}

HermitianPSD normalized_sample_covariance(const std::vector<CVec> &vectors)
{
    if (vectors.empty())
        throw std::invalid_argument("normalized_sample_covariance: empty channel set");
    const Eigen::Index n = vectors.front().size();
    CMat r = CMat::Zero(n, n);
    for (const CVec &h : vectors)
    {
        if (h.size() != n)
            throw std::invalid_argument("normalized_sample_covariance: inconsistent dimensions");
        const double nh = h.norm();
        if (!(nh > 0.0))
            throw std::domain_error("normalized_sample_covariance: zero subband channel");
        const CVec ht = h / nh;
        r.noalias() += ht * ht.adjoint();
    }
    r /= static_cast<double>(vectors.size());
    return HermitianPSD::trusted(std::move(r));
}

HermitianPSD normalized_sample_covariance(const ChannelSet &ch)
{
    return normalized_sample_covariance(ch.subbands);
}

std::vector<HermitianPSD> polarization_blocks(const HermitianPSD &r, PolarizationMode mode)
{
    if (mode == PolarizationMode::Full)
        return {r};
    const Eigen::Index n = r.dim();
    if (n % 2 != 0)
        throw std::invalid_argument("polarization_blocks: dimension must be even");
    const Eigen::Index h = n / 2;
    const CMat &m = r.matrix();
    CMat bp = m.topLeftCorner(h, h);
    CMat bm = m.bottomRightCorner(h, h);
    if (mode == PolarizationMode::BplusBminus)
        return {HermitianPSD::trusted(std::move(bp)), HermitianPSD::trusted(std::move(bm))};
    return {HermitianPSD::trusted((bp + bm) * 0.5)};
}

CMat b00b_reassembled(const HermitianPSD &r)
{
    const auto blocks = polarization_blocks(r, PolarizationMode::B00B);
    const Eigen::Index h = blocks.front().dim();
    CMat out = CMat::Zero(2 * h, 2 * h);
    out.topLeftCorner(h, h) = blocks.front().matrix();
    out.bottomRightCorner(h, h) = blocks.front().matrix();
    return out;
}

void write_channel_dump(std::ostream &os, const std::vector<ChannelSet> &users, std::uint64_t seed)
{
    const std::uint32_t n_t = users.empty() ? 0u : static_cast<std::uint32_t>(users.front().n_t());
    const std::uint32_t s = users.empty() ? 0u : static_cast<std::uint32_t>(users.front().n_subbands());
    binary::put_magic(os, "CSIQCH01");
    binary::put<std::uint32_t>(os, n_t);
    binary::put<std::uint32_t>(os, s);
    binary::put<std::uint32_t>(os, static_cast<std::uint32_t>(users.size()));
    binary::put<std::uint64_t>(os, seed);
    for (const ChannelSet &u : users)
    {
        if (u.n_t() != n_t || u.n_subbands() != s)
            throw std::invalid_argument("write_channel_dump: users have inconsistent shapes");
        binary::put<std::uint64_t>(os, u.user_id);
        for (const CVec &h : u.subbands)
            for (Eigen::Index i = 0; i < h.size(); ++i)
            {
                binary::put<double>(os, h(i).real());
                binary::put<double>(os, h(i).imag());
            }
    }
}

std::vector<ChannelSet> read_channel_dump(std::istream &is, std::uint64_t *seed_out)
{
    binary::expect_magic(is, "CSIQCH01");
    const auto n_t = binary::get<std::uint32_t>(is);
    const auto s = binary::get<std::uint32_t>(is);
    const auto count = binary::get<std::uint32_t>(is);
    const auto seed = binary::get<std::uint64_t>(is);
    if (seed_out)
        *seed_out = seed;
    std::vector<ChannelSet> users(count);
    for (ChannelSet &u : users)
    {
        u.seed = seed;
        u.user_id = binary::get<std::uint64_t>(is);
        u.subbands.assign(s, CVec(n_t));
        for (CVec &h : u.subbands)
            for (std::uint32_t i = 0; i < n_t; ++i)
            {
                const double re = binary::get<double>(is);
                const double im = binary::get<double>(is);
                h(i) = {re, im};
            }
    }
    return users;
}

} // namespace csiq
