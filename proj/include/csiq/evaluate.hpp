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

#include "csiq/channel.hpp"
#include "csiq/codebook.hpp"
#include "csiq/subband.hpp"
#include "csiq/wideband.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace csiq
{

/// Wideband scheme, subband scheme and their parameters; the codebook is passed separately.
struct PipelineConfig
{
    Eigen::Index k = 8;
    WidebandScheme wideband = WidebandScheme::OWP;
    PolarizationMode pol_mode = PolarizationMode::Full;
    SubbandScheme subband = SubbandScheme::INT5;
    BitAllocationParams alloc{};
    std::optional<ProductCodebook> pcb;
    CoordinateMode ind_coordinates = CoordinateMode::PseudoInverse;
    std::size_t max_candidates = 8;
};

/// Per-set sums of the subband-level distortion terms.
struct SubbandTerms
{
    double d_h = 0.0;     // mean d^2(h_s, h_hat_s)
    double d_b = 0.0;     // mean d^2(b_s, b_hat_s)
    double in_span = 0.0; // mean ||h~_par||^2 d^2(h_par, h_hat_s)
    std::size_t degenerate = 0; // subbands with no energy in span(W)
    std::size_t inexact = 0;    // product searches that hit their node budget
    std::vector<CVec> h_hat;
    std::vector<SubbandFeedback> records;
};

/// Quantizes and reconstructs every channel against a fixed basis W and amplitudes sigma_hat.
SubbandTerms evaluate_subbands(const std::vector<CVec> &channels, const CMat &w, const RVec &sigma_hat,
                               const PipelineConfig &cfg, CoordinateMode mode);

struct UserOutcome
{
    WidebandFeedback wideband;
    SubbandTerms terms;
    double d_p = 0.0;
    int wb_bits = 0;
    int sb_bits = 0;
};

/// Full user-side pipeline for one user, including the payload-length invariant.
UserOutcome run_user(const ChannelSet &ch, const LineCodebook &cb, const PipelineConfig &cfg);

struct DistortionReport
{
    double D_H = 0.0;
    double D_B = 0.0;
    double d_p = 0.0;
    double in_span = 0.0;
    double decomposition_residual = 0.0; // |D_H - (in_span + d_p)|
    double lower_gap = 0.0;              // D_H - d_p
    double upper_gap = 0.0;              // D_B + d_p - D_H
    std::vector<double> user_D_H;
    std::vector<double> user_D_B;
    std::vector<double> user_d_p;
    int wb_bits = 0;
    int sb_bits = 0;
    std::size_t degenerate = 0;
    std::size_t inexact = 0;
};

/// Runs the pipeline over all users (in parallel, reduced in user order).
DistortionReport evaluate_pipeline(const std::vector<ChannelSet> &users, const LineCodebook &cb,
                                   const PipelineConfig &cfg, int threads = 1,
                                   std::vector<UserOutcome> *outcomes = nullptr);

/// Mean d^2(h_s, h_hat_s) over users and subbands.
double overall_distortion(const std::vector<ChannelSet> &users, const LineCodebook &cb, const PipelineConfig &cfg,
                          int threads = 1);

/// Mean d^2(b_s, b_hat_s); W must be orthonormal.
double subband_distortion(const std::vector<CVec> &channels, const CMat &w, const RVec &sigma_hat,
                          const PipelineConfig &cfg);

/// |mean d^2(h, h_hat) - (mean ||h~_par||^2 d^2(h_par, h_hat) + d_p)| for h_hat the nearest word of
/// an in-span codebook to h_par. W must be orthonormal and every codeword must lie in span(W).
double decomposition_check(const std::vector<CVec> &channels, const CMat &w, const LineCodebook &in_span);

struct BoundsGaps
{
    double D_H = 0.0;
    double D_B = 0.0;
    double d_p = 0.0;
    double lower_gap = 0.0;
    double upper_gap = 0.0;
};

/// d_p <= D_H <= D_B + d_p on one channel set, d_p from the set's own normalized covariance.
BoundsGaps bounds_check(const std::vector<CVec> &channels, const CMat &w, const RVec &sigma_hat,
                        const PipelineConfig &cfg, CoordinateMode mode = CoordinateMode::Projection);

/// Raised by zf_precoder when the fed-back channels are linearly dependent.
class RankDeficientError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Zero-forcing precoder for the U x N_t matrix whose rows are h_hat_u^H. Columns are unit norm
/// and satisfy h_hat_v^H z_u = 0 for v != u.
CMat zf_precoder(const CMat &h_hat_rows);

/// Largest |h_hat_v^H z_u| / |h_hat_u^H z_u| over v != u.
double nulling_residual(const CMat &h_hat_rows, const CMat &z);

struct ZFConfig
{
    int users_per_drop = 4;
    int drops = 100;
    std::vector<double> snr_db{0.0, 10.0, 20.0};
    double power = 1.0;

    void validate(Eigen::Index n_t, std::size_t pool) const;
};

struct SpectralEfficiency
{
    std::vector<double> snr_db;
    std::vector<double> se; // bit/s/Hz per user, averaged over drops, subbands and users
    std::size_t dropped_users = 0;
    double max_nulling_residual = 0.0;
};

/// ZF multiuser evaluation: precoders from h_hat[u][s], SINR from the true channels (each user
/// scaled to unit mean squared norm), equal power P/U, N_0 = (P/U) / rho.
SpectralEfficiency spectral_efficiency(const std::vector<ChannelSet> &channels,
                                       const std::vector<std::vector<CVec>> &h_hat, const ZFConfig &zf,
                                       std::uint64_t seed, int threads = 1);

/// Feedback equal to the true channel directions (the perfect-CSI baseline).
std::vector<std::vector<CVec>> perfect_feedback(const std::vector<ChannelSet> &channels);

} // namespace csiq
