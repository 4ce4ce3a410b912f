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
#include "csiq/codebook.hpp"
#include "csiq/linalg.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace csiq
{

enum class SubbandScheme
{
    EXT2,
    INT5,
    PCB,
    Perfect // unquantized reference: c_hat = c, no payload
};

std::string_view to_string(SubbandScheme scheme);
SubbandScheme subband_scheme_from_string(std::string_view s);

/// Scalar bit allocation: m strong coordinates with b_strong phase bits, the remaining K - m - 1
/// weak ones with b_weak phase bits, one phase reference.
struct BitAllocationParams
{
    int m = 0;
    int b_strong = 3;
    int b_weak = 2;
    double eta = 2.0;

    void validate(Eigen::Index k, SubbandScheme scheme) const;
};

/// How effective-channel coordinates are taken from a (possibly non-orthogonal) basis.
enum class CoordinateMode
{
    Projection,   // b = W^H h
    PseudoInverse // b = W^+ h
};

struct EffectiveChannels
{
    CVec b;
    CVec c;                   // c_j = b_j / sigma_hat_j, 0 where sigma_hat_j == 0
    std::vector<bool> pruned; // sigma_hat_j == 0 while b_j != 0
};

EffectiveChannels effective_channels(const CMat &w, const RVec &sigma_hat, const CVec &h,
                                     CoordinateMode mode = CoordinateMode::Projection);

struct SubbandFeedback
{
    SubbandScheme scheme = SubbandScheme::EXT2;
    std::size_t ref_index = 0;
    std::vector<int> amp_bits;   // EXT2: per coordinate (only strong ones used); INT5: per coordinate
    std::vector<int> phase_codes; // per coordinate; the reference carries 0
    std::vector<std::size_t> pcb_indices;
    std::vector<int> pcb_phases;
    CVec c_hat;                  // reconstructed coefficient vector
    double distortion = 1.0;     // weighted chordal d^2(Sigma c, Sigma c_hat)
    int bit_count = 0;
    bool exact = true;
};

/// Uniform phase code of angle phi with `bits` bits (nearest grid point).
int quantize_phase(double phi, int bits);
double phase_of_code(int code, int bits);

/// INT5 amplitude levels {s, sqrt(5) s} with s = sqrt(2 / (K (1 + 5))).
std::pair<double, double> int5_levels(Eigen::Index k);

SubbandFeedback quantize_ext2(const CVec &c, const RVec &sigma_hat, const BitAllocationParams &p);
SubbandFeedback quantize_int5(const CVec &c, const RVec &sigma_hat, const BitAllocationParams &p);
SubbandFeedback quantize_pcb_subband(const CVec &b, const RVec &sigma_hat, const ProductCodebook &pcb);
SubbandFeedback quantize_perfect(const CVec &c, const RVec &sigma_hat);

/// Rebuilds c_hat for an EXT2/INT5 record from its codes.
CVec scalar_coefficients(SubbandScheme scheme, const std::vector<int> &amp_bits, const std::vector<int> &phase_codes,
                         const RVec &sigma_hat, const BitAllocationParams &p, std::size_t *ref_out = nullptr);

/// Unit-norm h_hat = normalize(W Sigma_hat c_hat).
CVec reconstruct(const CMat &w, const RVec &sigma_hat, const SubbandFeedback &fb);

/// Payload bit count of one subband record. EXT2: (B_l+1) m + B_s (K-m-1); INT5: K + B_l m +
/// B_s (K-m-1); PCB: blocks * N_b + (blocks-1) * phase_bits; Perfect: 0.
int bit_count(SubbandScheme scheme, Eigen::Index k, const BitAllocationParams &p,
              const std::optional<ProductCodebook> &pcb = std::nullopt);

// Payloads, MSB-first:
//   EXT2: for each strong coordinate in sigma_hat order: 1 amplitude bit then B_l phase bits;
//         then each weak coordinate in sigma_hat order: B_s phase bits.
//   INT5: K amplitude bits in coordinate order; then strong coordinates in alpha order (B_l bits
//         each) and weak coordinates in alpha order (B_s bits each).
//   PCB:  blocks index fields of N_b bits, then (blocks - 1) phase fields.
void encode_subband(BitWriter &out, const SubbandFeedback &fb, const RVec &sigma_hat, const BitAllocationParams &p,
                    const std::optional<ProductCodebook> &pcb = std::nullopt);
SubbandFeedback decode_subband(BitReader &in, SubbandScheme scheme, const RVec &sigma_hat,
                               const BitAllocationParams &p, const std::optional<ProductCodebook> &pcb = std::nullopt);

} // namespace csiq
