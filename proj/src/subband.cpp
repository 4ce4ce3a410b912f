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

#include "csiq/subband.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace csiq
{

namespace
{

std::vector<std::size_t> descending_order(const RVec &key)
{
    std::vector<std::size_t> order(static_cast<std::size_t>(key.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return key(static_cast<Eigen::Index>(a)) > key(static_cast<Eigen::Index>(b));
    });
    return order;
}

// Weighted squared chordal distance with a zero-energy target mapped to 1.
double weighted_distance(const CVec &c, const CVec &c_hat, const RVec &sigma)
{
    const CVec x = sigma.cast<cplx>().cwiseProduct(c);
    const CVec y = sigma.cast<cplx>().cwiseProduct(c_hat);
    const double nx = x.squaredNorm();
    const double ny = y.squaredNorm();
    if (!(nx > 0.0) || !(ny > 0.0))
        return 1.0;
    return std::clamp(1.0 - std::norm(x.dot(y)) / (nx * ny), 0.0, 1.0);
}

struct ScalarLayout
{
    std::size_t ref;
    std::vector<std::size_t> strong;
    std::vector<std::size_t> weak;
};

ScalarLayout layout_from_order(const std::vector<std::size_t> &order, int m)
{
    ScalarLayout l;
    l.ref = order.front();
    for (std::size_t i = 1; i < order.size(); ++i)
        (static_cast<int>(i) <= m ? l.strong : l.weak).push_back(order[i]);
    return l;
}

// Coordinate amplitudes of a scalar record (before phases).
RVec scalar_amplitudes(SubbandScheme scheme, const std::vector<int> &amp_bits, const ScalarLayout &l, Eigen::Index k)
{
    RVec a(k);
    if (scheme == SubbandScheme::EXT2)
    {
        const double weak = 1.0 / std::sqrt(2.0);
        a.setConstant(weak);
        a(static_cast<Eigen::Index>(l.ref)) = 1.0;
        for (std::size_t j : l.strong)
            a(static_cast<Eigen::Index>(j)) = amp_bits[j] ? weak : 1.0;
    }
    else
    {
        const auto [lo, hi] = int5_levels(k);
        for (Eigen::Index j = 0; j < k; ++j)
            a(j) = amp_bits[static_cast<std::size_t>(j)] ? hi : lo;
    }
    return a;
}

ScalarLayout scalar_layout(SubbandScheme scheme, const std::vector<int> &amp_bits, const RVec &sigma_hat, int m)
{
    if (scheme == SubbandScheme::EXT2)
        return layout_from_order(descending_order(sigma_hat), m);
    const RVec a = scalar_amplitudes(scheme, amp_bits, ScalarLayout{}, sigma_hat.size());
    return layout_from_order(descending_order(sigma_hat.cwiseProduct(a)), m);
}

CVec assemble_coefficients(const RVec &amp, const std::vector<int> &phase_codes, const ScalarLayout &l,
                           const BitAllocationParams &p)
{
    CVec c(amp.size());
    c(static_cast<Eigen::Index>(l.ref)) = amp(static_cast<Eigen::Index>(l.ref));
    for (std::size_t j : l.strong)
        c(static_cast<Eigen::Index>(j)) =
            std::polar(amp(static_cast<Eigen::Index>(j)), phase_of_code(phase_codes[j], p.b_strong));
    for (std::size_t j : l.weak)
        c(static_cast<Eigen::Index>(j)) =
            std::polar(amp(static_cast<Eigen::Index>(j)), phase_of_code(phase_codes[j], p.b_weak));
    return c;
}

// Exhaustive over the amplitude patterns of the format, nearest phases for each pattern.
SubbandFeedback quantize_scalar(SubbandScheme scheme, const CVec &c, const RVec &sigma_hat,
                                const BitAllocationParams &p)
{
    const Eigen::Index k = c.size();
    if (sigma_hat.size() != k)
        throw std::invalid_argument("subband quantizer: c and sigma_hat lengths differ");
    p.validate(k, scheme);
    if ((sigma_hat.array() < 0.0).any())
        throw std::invalid_argument("subband quantizer: negative sigma_hat entry");

    const std::vector<std::size_t> sigma_order = descending_order(sigma_hat);
    const ScalarLayout ext_layout = layout_from_order(sigma_order, p.m);
    // Amplitude-bit positions searched exhaustively.
    std::vector<std::size_t> free_bits;
    if (scheme == SubbandScheme::EXT2)
        free_bits = ext_layout.strong;
    else
        for (Eigen::Index j = 0; j < k; ++j)
            free_bits.push_back(static_cast<std::size_t>(j));

    SubbandFeedback best;
    best.scheme = scheme;
    best.bit_count = bit_count(scheme, k, p);
    best.distortion = std::numeric_limits<double>::infinity();
    const std::size_t patterns = std::size_t{1} << free_bits.size();
    for (std::size_t pat = 0; pat < patterns; ++pat)
    {
        std::vector<int> amp_bits(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < free_bits.size(); ++i)
            amp_bits[free_bits[i]] = static_cast<int>((pat >> i) & 1u);
        const ScalarLayout l = scheme == SubbandScheme::EXT2 ? ext_layout : scalar_layout(scheme, amp_bits, sigma_hat, p.m);
        const RVec amp = scalar_amplitudes(scheme, amp_bits, l, k);
        const cplx cref = c(static_cast<Eigen::Index>(l.ref));
        const double ref_phase = std::abs(cref) > 0.0 ? std::arg(cref) : 0.0;
        std::vector<int> phase_codes(static_cast<std::size_t>(k), 0);
        for (std::size_t j : l.strong)
            phase_codes[j] = quantize_phase(std::arg(c(static_cast<Eigen::Index>(j))) - ref_phase, p.b_strong);
        for (std::size_t j : l.weak)
            phase_codes[j] = quantize_phase(std::arg(c(static_cast<Eigen::Index>(j))) - ref_phase, p.b_weak);
        const CVec c_hat = assemble_coefficients(amp, phase_codes, l, p);
        const double d = weighted_distance(c, c_hat, sigma_hat);
        if (d < best.distortion)
        {
            best.distortion = d;
            best.ref_index = l.ref;
            best.amp_bits = amp_bits;
            best.phase_codes = phase_codes;
            best.c_hat = c_hat;
        }
    }
    return best;
}

} // namespace

std::string_view to_string(SubbandScheme scheme)
{
    switch (scheme)
    {
    case SubbandScheme::EXT2:
        return "EXT2";
    case SubbandScheme::INT5:
        return "INT5";
    case SubbandScheme::PCB:
        return "PCB";
    case SubbandScheme::Perfect:
        return "perfect";
    }
    return "?";
}

SubbandScheme subband_scheme_from_string(std::string_view s)
{
    if (s == "EXT2")
        return SubbandScheme::EXT2;
    if (s == "INT5")
        return SubbandScheme::INT5;
    if (s == "PCB")
        return SubbandScheme::PCB;
    if (s == "perfect")
        return SubbandScheme::Perfect;
    throw std::invalid_argument("unknown subband scheme '" + std::string(s) + "' (EXT2|INT5|PCB|perfect)");
}

void BitAllocationParams::validate(Eigen::Index k, SubbandScheme scheme) const
{
    if (k < 1)
        throw std::invalid_argument("BitAllocationParams: K must be >= 1");
    if (m < 0 || m > k - 1)
        throw std::invalid_argument("BitAllocationParams: m must satisfy 0 <= m <= K-1");
    if (!(b_strong > b_weak && b_weak >= 1) || b_strong > 16)
        throw std::invalid_argument("BitAllocationParams: need 16 >= B_l > B_s >= 1");
    if (scheme == SubbandScheme::EXT2 && eta != 2.0)
        throw std::invalid_argument("BitAllocationParams: EXT2 requires eta = 2");
    if (scheme == SubbandScheme::INT5 && eta != 5.0)
        throw std::invalid_argument("BitAllocationParams: INT5 requires eta = 5");
}

int quantize_phase(double phi, int bits)
{
    const int levels = 1 << bits;
    const double step = 2.0 * std::numbers::pi / levels;
    long long q = std::llround(phi / step);
    q %= levels;
    if (q < 0)
        q += levels;
    return static_cast<int>(q);
}

double phase_of_code(int code, int bits)
{
    return 2.0 * std::numbers::pi * code / static_cast<double>(1 << bits);
}

std::pair<double, double> int5_levels(Eigen::Index k)
{
    const double s = std::sqrt(2.0 / (static_cast<double>(k) * 6.0));
    return {s, std::sqrt(5.0) * s};
}

EffectiveChannels effective_channels(const CMat &w, const RVec &sigma_hat, const CVec &h, CoordinateMode mode)
{
    if (w.rows() != h.size() || w.cols() != sigma_hat.size())
        throw std::invalid_argument("effective_channels: dimension mismatch");
    EffectiveChannels e;
    e.b = mode == CoordinateMode::Projection ? CVec(w.adjoint() * h) : CVec(pseudo_inverse(w) * h);
    e.c.resize(e.b.size());
    e.pruned.assign(static_cast<std::size_t>(e.b.size()), false);
    for (Eigen::Index j = 0; j < e.b.size(); ++j)
    {
        if (sigma_hat(j) > 0.0)
            e.c(j) = e.b(j) / sigma_hat(j);
        else
        {
            e.c(j) = 0.0;
            e.pruned[static_cast<std::size_t>(j)] = std::abs(e.b(j)) > 0.0;
        }
    }
    return e;
}

SubbandFeedback quantize_ext2(const CVec &c, const RVec &sigma_hat, const BitAllocationParams &p)
{
    return quantize_scalar(SubbandScheme::EXT2, c, sigma_hat, p);
}

SubbandFeedback quantize_int5(const CVec &c, const RVec &sigma_hat, const BitAllocationParams &p)
{
    return quantize_scalar(SubbandScheme::INT5, c, sigma_hat, p);
}

SubbandFeedback quantize_pcb_subband(const CVec &b, const RVec &sigma_hat, const ProductCodebook &pcb)
{
    if (b.size() != pcb.dim() || sigma_hat.size() != b.size())
        throw std::invalid_argument("quantize_pcb_subband: K must equal blocks * component dimension");
    SubbandFeedback fb;
    fb.scheme = SubbandScheme::PCB;
    fb.bit_count = pcb.bit_count();
    CVec target(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j)
        target(j) = sigma_hat(j) > 0.0 ? b(j) : cplx(0.0);
    if (!(target.squaredNorm() > 0.0))
    {
        // Nothing to describe: the all-zero-index record.
        fb.pcb_indices.assign(static_cast<std::size_t>(pcb.blocks), 0);
        fb.pcb_phases.assign(static_cast<std::size_t>(pcb.blocks), 0);
        fb.c_hat = pcb.assemble(fb.pcb_indices, fb.pcb_phases);
        fb.distortion = 1.0;
        return fb;
    }
    const QuantizeResult q = pcb_quantize(target, sigma_hat, pcb);
    fb.pcb_indices = q.indices;
    fb.pcb_phases = q.phase_indices;
    fb.c_hat = q.word;
    fb.distortion = q.distortion;
    fb.exact = q.exact;
    return fb;
}

SubbandFeedback quantize_perfect(const CVec &c, const RVec &sigma_hat)
{
    if (c.size() != sigma_hat.size())
        throw std::invalid_argument("quantize_perfect: dimension mismatch");
    SubbandFeedback fb;
    fb.scheme = SubbandScheme::Perfect;
    fb.c_hat = c;
    fb.distortion = 0.0;
    fb.bit_count = 0;
    return fb;
}

CVec scalar_coefficients(SubbandScheme scheme, const std::vector<int> &amp_bits, const std::vector<int> &phase_codes,
                         const RVec &sigma_hat, const BitAllocationParams &p, std::size_t *ref_out)
{
    const Eigen::Index k = sigma_hat.size();
    if (amp_bits.size() != static_cast<std::size_t>(k) || phase_codes.size() != static_cast<std::size_t>(k))
        throw std::invalid_argument("scalar_coefficients: record length does not match K");
    const ScalarLayout l = scalar_layout(scheme, amp_bits, sigma_hat, p.m);
    if (ref_out)
        *ref_out = l.ref;
    return assemble_coefficients(scalar_amplitudes(scheme, amp_bits, l, k), phase_codes, l, p);
}

CVec reconstruct(const CMat &w, const RVec &sigma_hat, const SubbandFeedback &fb)
{
    if (w.cols() != sigma_hat.size() || fb.c_hat.size() != sigma_hat.size())
        throw std::invalid_argument("reconstruct: dimension mismatch");
    const CVec h = w * sigma_hat.cast<cplx>().cwiseProduct(fb.c_hat);
    const double n = h.norm();
    if (!(n > 0.0))
        throw std::domain_error("reconstruct: record reconstructs to the zero vector");
    return h / n;
}

int bit_count(SubbandScheme scheme, Eigen::Index k, const BitAllocationParams &p,
              const std::optional<ProductCodebook> &pcb)
{
    const int kk = static_cast<int>(k);
    switch (scheme)
    {
    case SubbandScheme::EXT2:
        p.validate(k, scheme);
        return (p.b_strong + 1) * p.m + p.b_weak * (kk - p.m - 1);
    case SubbandScheme::INT5:
        p.validate(k, scheme);
        return kk + p.b_strong * p.m + p.b_weak * (kk - p.m - 1);
    case SubbandScheme::PCB:
        if (!pcb)
            throw std::invalid_argument("bit_count: PCB needs a product codebook");
        if (pcb->dim() != k)
            throw std::invalid_argument("bit_count: product codebook dimension does not match K");
        return pcb->bit_count();
    case SubbandScheme::Perfect:
        return 0;
    }
    return 0;
}

void encode_subband(BitWriter &out, const SubbandFeedback &fb, const RVec &sigma_hat, const BitAllocationParams &p,
                    const std::optional<ProductCodebook> &pcb)
{
    switch (fb.scheme)
    {
    case SubbandScheme::EXT2:
    case SubbandScheme::INT5: {
        const ScalarLayout l = scalar_layout(fb.scheme, fb.amp_bits, sigma_hat, p.m);
        if (fb.scheme == SubbandScheme::INT5)
            for (int a : fb.amp_bits)
                out.put(static_cast<std::uint64_t>(a), 1);
        for (std::size_t j : l.strong)
        {
            if (fb.scheme == SubbandScheme::EXT2)
                out.put(static_cast<std::uint64_t>(fb.amp_bits[j]), 1);
            out.put(static_cast<std::uint64_t>(fb.phase_codes[j]), p.b_strong);
        }
        for (std::size_t j : l.weak)
            out.put(static_cast<std::uint64_t>(fb.phase_codes[j]), p.b_weak);
        break;
    }
    case SubbandScheme::PCB: {
        if (!pcb)
            throw std::invalid_argument("encode_subband: PCB needs a product codebook");
        for (std::size_t i : fb.pcb_indices)
            out.put(i, pcb->component.index_bits());
        for (std::size_t b = 1; b < fb.pcb_phases.size(); ++b)
            out.put(static_cast<std::uint64_t>(fb.pcb_phases[b]), pcb->phase_bits);
        break;
    }
    case SubbandScheme::Perfect:
        throw std::invalid_argument("encode_subband: the perfect reference has no payload");
    }
}

SubbandFeedback decode_subband(BitReader &in, SubbandScheme scheme, const RVec &sigma_hat,
                               const BitAllocationParams &p, const std::optional<ProductCodebook> &pcb)
{
    const Eigen::Index k = sigma_hat.size();
    SubbandFeedback fb;
    fb.scheme = scheme;
    fb.bit_count = bit_count(scheme, k, p, pcb);
    switch (scheme)
    {
    case SubbandScheme::EXT2:
    case SubbandScheme::INT5: {
        fb.amp_bits.assign(static_cast<std::size_t>(k), 0);
        fb.phase_codes.assign(static_cast<std::size_t>(k), 0);
        if (scheme == SubbandScheme::INT5)
            for (int &a : fb.amp_bits)
                a = static_cast<int>(in.get(1));
        const ScalarLayout l = scalar_layout(scheme, fb.amp_bits, sigma_hat, p.m);
        for (std::size_t j : l.strong)
        {
            if (scheme == SubbandScheme::EXT2)
                fb.amp_bits[j] = static_cast<int>(in.get(1));
            fb.phase_codes[j] = static_cast<int>(in.get(p.b_strong));
        }
        for (std::size_t j : l.weak)
            fb.phase_codes[j] = static_cast<int>(in.get(p.b_weak));
        fb.c_hat = scalar_coefficients(scheme, fb.amp_bits, fb.phase_codes, sigma_hat, p, &fb.ref_index);
        break;
    }
    case SubbandScheme::PCB: {
        fb.pcb_indices.resize(static_cast<std::size_t>(pcb->blocks));
        fb.pcb_phases.assign(static_cast<std::size_t>(pcb->blocks), 0);
        for (std::size_t &i : fb.pcb_indices)
        {
            i = in.get(pcb->component.index_bits());
            if (i >= pcb->component.size())
                throw std::runtime_error("decode_subband: component index out of range");
        }
        for (std::size_t b = 1; b < fb.pcb_phases.size(); ++b)
            fb.pcb_phases[b] = static_cast<int>(in.get(pcb->phase_bits));
        fb.c_hat = pcb->assemble(fb.pcb_indices, fb.pcb_phases);
        break;
    }
    case SubbandScheme::Perfect:
        throw std::invalid_argument("decode_subband: the perfect reference has no payload");
    }
    return fb;
}

} // namespace csiq
