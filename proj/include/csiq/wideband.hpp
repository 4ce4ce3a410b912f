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

#include "csiq/bitstream.hpp"
#include "csiq/channel.hpp"
#include "csiq/codebook.hpp"
#include "csiq/linalg.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace csiq
{

enum class WidebandScheme
{
    IND,
    OWP,
    SWP
};

std::string_view to_string(WidebandScheme scheme);
WidebandScheme wideband_scheme_from_string(std::string_view s);

/// Amplitude levels {1/sqrt(2^m)}, m = 0..6, followed by 0; code = position in this list.
struct AmplitudeCodebook
{
    static constexpr int bits = 3;
    static const std::array<double, 8> &levels();
    /// Nearest level by absolute distance, ties to the larger level.
    static int nearest(double ratio);
};

/// Quantized wideband amplitudes. The strongest beam is signalled by index and has level 1; every
/// other beam carries a 3-bit code of its amplitude relative to the strongest.
struct AmplitudeFeedback
{
    std::size_t strongest = 0;
    std::vector<int> codes; // one per beam; codes[strongest] == 0
    RVec sigma_hat;         // relative amplitudes, sigma_hat[strongest] == 1

    /// ceil(log2 K) + 3 (K - 1).
    int bit_count() const;
};

AmplitudeFeedback quantize_amplitudes(const RVec &sigma);
AmplitudeFeedback amplitudes_from_codes(std::size_t strongest, std::vector<int> codes);

/// Column k is the nearest codeword to u_k.
CMat quantize_ind(const CMat &u, const LineCodebook &cb, std::vector<std::size_t> *indices = nullptr);

/// Feedback of one polarization block: fed-back indices, codewords V and the derived basis W
/// (W == V for IND).
struct BlockFeedback
{
    std::vector<std::size_t> indices;
    CMat V;
    CMat W;
};

/// Raised when the fed-back codewords do not span K dimensions.
class DegenerateFeedbackError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

BlockFeedback ind(const CMat &u, const LineCodebook &cb);

/// W = orthonormalize(V). With max_candidates > 1, a column whose nearest codeword collapses onto
/// the span of the previous ones falls back to its next-nearest codewords.
BlockFeedback owp(const CMat &u, const LineCodebook &cb, std::size_t max_candidates = 1);

/// Sequential wideband precoding. A codeword annihilated by the running projector
/// (||P v|| < 1e-8) is replaced by the next-nearest one, up to max_candidates.
BlockFeedback swp(const HermitianPSD &r, Eigen::Index k, const LineCodebook &cb, std::size_t max_candidates = 8);

/// Basis the receiver derives from fed-back indices alone.
CMat block_basis(WidebandScheme scheme, const std::vector<std::size_t> &indices, const LineCodebook &cb);

/// 1 - Tr(P R) with P the projector onto span(w); R must have unit trace.
double projection_distortion(const CMat &w, const HermitianPSD &r);

/// sigma_j = sqrt(w_j^H R w_j).
RVec wideband_amplitudes(const CMat &w, const HermitianPSD &r);

/// Per-block layout of a polarization mode for K beams on an N_t antenna array.
struct BlockLayout
{
    int blocks;
    Eigen::Index block_dim;
    Eigen::Index block_k;
};
BlockLayout block_layout(PolarizationMode mode, Eigen::Index n_t, Eigen::Index k);

/// Complete wideband feedback of one user.
struct WidebandFeedback
{
    WidebandScheme scheme = WidebandScheme::OWP;
    PolarizationMode pol_mode = PolarizationMode::Full;
    std::vector<std::size_t> v_indices; // block-major canonical order (the fed-back payload)
    CMat V;                             // lifted codewords, canonical order
    AmplitudeFeedback amplitudes;       // canonical order
    std::vector<std::size_t> order;     // W.col(j) is canonical column order[j]
    CMat W;                             // N_t x K basis, columns sorted by sigma_hat (IND: codewords)
    RVec sigma_hat;                     // sorted, non-increasing
    int index_bits = 0;

    Eigen::Index k() const { return W.cols(); }
    int basis_bits() const { return static_cast<int>(v_indices.size()) * index_bits; }
    int amplitude_bits() const { return amplitudes.bit_count(); }
    int bit_count() const { return basis_bits() + amplitude_bits(); }
};

/// Lifts per-block feedback to the full array, measures and quantizes the wideband amplitudes
/// against r_full and sorts the columns by quantized amplitude (stable in canonical order).
WidebandFeedback assemble_polarized(const std::vector<BlockFeedback> &blocks, WidebandScheme scheme,
                                    PolarizationMode mode, const HermitianPSD &r_full, const LineCodebook &cb);

/// User side: block covariances, per-block scheme, assembly.
WidebandFeedback quantize_wideband(const HermitianPSD &r_full, Eigen::Index k, WidebandScheme scheme,
                                   PolarizationMode mode, const LineCodebook &cb, std::size_t max_candidates = 8);

/// Receiver side: rebuilds the feedback from indices and amplitude codes; W is bit-identical to
/// the user's.
WidebandFeedback reconstruct_wideband(WidebandScheme scheme, PolarizationMode mode, Eigen::Index n_t,
                                      const std::vector<std::size_t> &indices, const AmplitudeFeedback &amplitudes,
                                      const LineCodebook &cb);

// Payload: K index fields (index_bits each, canonical order), strongest beam (ceil(log2 K) bits),
// then a 3-bit amplitude code for every other beam in canonical order.
void encode_wideband(BitWriter &out, const WidebandFeedback &fb);
WidebandFeedback decode_wideband(BitReader &in, WidebandScheme scheme, PolarizationMode mode, Eigen::Index n_t,
                                 Eigen::Index k, const LineCodebook &cb);

// Record file, little-endian:
//   "CSIQWB01" | u8 scheme | u8 pol_mode | str codebook descriptor | u32 N_t | u32 K
//   | u32 payload bits | payload bytes
void write_wideband_record(std::ostream &os, const WidebandFeedback &fb, const LineCodebook &cb);
WidebandFeedback read_wideband_record(std::istream &is, const LineCodebook &cb);

} // namespace csiq
