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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace csiq
{

/// Uniform planar array. Entry ordering is polarization-major: index = p*(n_h*n_v) + h*n_v + v,
/// so the two polarization halves [h_+; h_-] are contiguous.
struct ArrayGeometry
{
    int n_h = 8;
    int n_v = 2;
    int n_p = 2;
    double spacing = 0.5; // wavelengths

    int n_t() const { return n_h * n_v * n_p; }
    void validate() const;
};

/// Geometric cluster/ray model standing in for a standardized channel generator. It keeps the two
/// properties modular feedback relies on: few dominant spatial directions per user and
/// frequency-selective, correlated subbands.
struct ClusterModelConfig
{
    int n_clusters = 8;
    int rays_per_cluster = 20;
    double angle_spread_deg = 5.0;       // per-cluster Laplacian azimuth spread
    double elevation_spread_deg = 2.0;   // per-cluster Laplacian elevation spread
    double sector_deg = 120.0;           // cluster centers uniform in +-sector/2
    double elevation_range_deg = 10.0;   // cluster elevations uniform in +-range
    double delay_spread_s = 300e-9;
    double bandwidth_hz = 18e6;
    int n_subbands = 30;
    double indoor_ratio = 0.8;           // probability that a user is indoor
    double indoor_attenuation = 0.3;     // amplitude factor applied to indoor users
    double cluster_shadowing_db = 3.0;

    void validate() const;
};

struct ChannelSet
{
    std::vector<CVec> subbands; // h_s, each of length N_t
    std::uint64_t user_id = 0;
    std::uint64_t seed = 0;

    Eigen::Index n_t() const { return subbands.empty() ? 0 : subbands.front().size(); }
    std::size_t n_subbands() const { return subbands.size(); }
};

enum class PolarizationMode
{
    Full,
    BplusBminus,
    B00B
};

std::string_view to_string(PolarizationMode mode);
PolarizationMode polarization_mode_from_string(std::string_view s);

/// Unit-norm steering vector h_p (x) h_h (x) h_v for the given departure angles (radians) and
/// polarization phase.
CVec upa_steering(const ArrayGeometry &geom, double azimuth, double elevation, double pol_phase);

/// Channels of one user, drawn from substream (seed, user_id).
ChannelSet generate_user_channels(const ArrayGeometry &geom, const ClusterModelConfig &cfg, std::uint64_t seed,
                                  std::uint64_t user_id);

/// Users 0..count-1, optionally across `threads` workers; output is independent of the thread count.
std::vector<ChannelSet> generate_channels(const ArrayGeometry &geom, const ClusterModelConfig &cfg,
                                          std::uint64_t seed, std::size_t count, int threads = 1);

/// (1/S) sum_s h~_s h~_s^H with h~_s = h_s / ||h_s||; trace one.
HermitianPSD normalized_sample_covariance(const ChannelSet &ch);
HermitianPSD normalized_sample_covariance(const std::vector<CVec> &vectors);

/// Full -> {R}; BplusBminus -> {B_+, B_-}; B00B -> {(B_+ + B_-)/2}.
std::vector<HermitianPSD> polarization_blocks(const HermitianPSD &r, PolarizationMode mode);

/// Block-diagonal matrix diag(B, B) used to compare against the full covariance.
CMat b00b_reassembled(const HermitianPSD &r);

// Channel dump, little-endian:
//   "CSIQCH01" | u32 N_t | u32 S | u32 users | u64 seed
//   per user: u64 user_id | S*N_t * (f64 re, f64 im), subband-major
void write_channel_dump(std::ostream &os, const std::vector<ChannelSet> &users, std::uint64_t seed);
std::vector<ChannelSet> read_channel_dump(std::istream &is, std::uint64_t *seed_out = nullptr);

} // namespace csiq
