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

#include "csiq/wideband.hpp"
#include "csiq/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace csiq
{

namespace
{

constexpr double annihilation_tol = 1e-8;
constexpr double projector_tol = 1e-8;

CMat columns_of(const LineCodebook &cb, const std::vector<std::size_t> &indices)
{
    CMat v(cb.dim(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j)
    {
        if (indices[j] >= cb.size())
            throw std::out_of_range("wideband: codeword index " + std::to_string(indices[j]) + " out of range");
        v.col(static_cast<Eigen::Index>(j)) = cb.words().col(static_cast<Eigen::Index>(indices[j]));
    }
    return v;
}

void check_projector(const CMat &p, Eigen::Index expected_rank, Eigen::Index step)
{
    const double herm = (p - p.adjoint()).cwiseAbs().maxCoeff();
    const double idem = (p * p - p).cwiseAbs().maxCoeff();
    const double rank = p.trace().real();
    if (herm > projector_tol || idem > projector_tol ||
        std::abs(rank - static_cast<double>(expected_rank)) > projector_tol)
        throw std::logic_error("swp: complement projector lost idempotence/Hermitian structure at step " +
                               std::to_string(step));
}

} // namespace

std::string_view to_string(WidebandScheme scheme)
{
    switch (scheme)
    {
    case WidebandScheme::IND:
        return "IND";
    case WidebandScheme::OWP:
        return "OWP";
    case WidebandScheme::SWP:
        return "SWP";
    }
    return "?";
}

WidebandScheme wideband_scheme_from_string(std::string_view s)
{
    if (s == "IND")
        return WidebandScheme::IND;
    if (s == "OWP")
        return WidebandScheme::OWP;
    if (s == "SWP")
        return WidebandScheme::SWP;
    throw std::invalid_argument("unknown wideband scheme '" + std::string(s) + "' (IND|OWP|SWP)");
}

const std::array<double, 8> &AmplitudeCodebook::levels()
{
    static const std::array<double, 8> l = {1.0,
                                            1.0 / std::sqrt(2.0),
                                            0.5,
                                            1.0 / std::sqrt(8.0),
                                            0.25,
                                            1.0 / std::sqrt(32.0),
                                            0.125,
                                            0.0};
    return l;
}

int AmplitudeCodebook::nearest(double ratio)
{
    if (!std::isfinite(ratio) || ratio < 0.0)
        throw std::invalid_argument("AmplitudeCodebook: ratio must be finite and non-negative");
    const auto &l = levels();
    int best = 0;
    double bd = std::abs(ratio - l[0]);
    for (int i = 1; i < static_cast<int>(l.size()); ++i)
    {
        const double d = std::abs(ratio - l[static_cast<std::size_t>(i)]);
        if (d < bd) // strict: ties keep the larger level
        {
            bd = d;
            best = i;
        }
    }
    return best;
}

int AmplitudeFeedback::bit_count() const
{
    const std::size_t k = codes.size();
    return k == 0 ? 0 : ceil_log2(k) + AmplitudeCodebook::bits * static_cast<int>(k - 1);
}

AmplitudeFeedback quantize_amplitudes(const RVec &sigma)
{
    if (sigma.size() == 0)
        throw std::invalid_argument("quantize_amplitudes: empty input");
    if (!sigma.allFinite() || (sigma.array() < 0.0).any())
        throw std::invalid_argument("quantize_amplitudes: amplitudes must be finite and non-negative");
    Eigen::Index strongest = 0;
    for (Eigen::Index j = 1; j < sigma.size(); ++j)
        if (sigma(j) > sigma(strongest))
            strongest = j;
    const double smax = sigma(strongest);
    if (!(smax > 0.0))
        throw std::domain_error("quantize_amplitudes: all amplitudes are zero");
    std::vector<int> codes(static_cast<std::size_t>(sigma.size()));
    for (Eigen::Index j = 0; j < sigma.size(); ++j)
        codes[static_cast<std::size_t>(j)] = j == strongest ? 0 : AmplitudeCodebook::nearest(sigma(j) / smax);
    return amplitudes_from_codes(static_cast<std::size_t>(strongest), std::move(codes));
}

AmplitudeFeedback amplitudes_from_codes(std::size_t strongest, std::vector<int> codes)
{
    if (strongest >= codes.size())
        throw std::invalid_argument("amplitudes_from_codes: strongest index out of range");
    AmplitudeFeedback a;
    a.strongest = strongest;
    a.codes = std::move(codes);
    a.codes[strongest] = 0;
    a.sigma_hat.resize(static_cast<Eigen::Index>(a.codes.size()));
    for (std::size_t j = 0; j < a.codes.size(); ++j)
    {
        if (a.codes[j] < 0 || a.codes[j] >= 8)
            throw std::invalid_argument("amplitudes_from_codes: code out of range");
        a.sigma_hat(static_cast<Eigen::Index>(j)) = AmplitudeCodebook::levels()[static_cast<std::size_t>(a.codes[j])];
    }
    return a;
}

CMat quantize_ind(const CMat &u, const LineCodebook &cb, std::vector<std::size_t> *indices)
{
    if (u.rows() != cb.dim())
        throw std::invalid_argument("quantize_ind: eigenvector dimension " + std::to_string(u.rows()) +
                                    " does not match codebook dimension " + std::to_string(cb.dim()));
    CMat v(u.rows(), u.cols());
    if (indices)
        indices->clear();
    for (Eigen::Index k = 0; k < u.cols(); ++k)
    {
        const QuantizeResult q = quantize_line(u.col(k), cb);
        v.col(k) = q.word;
        if (indices)
            indices->push_back(q.indices.front());
    }
    return v;
}

BlockFeedback ind(const CMat &u, const LineCodebook &cb)
{
    BlockFeedback fb;
    fb.V = quantize_ind(u, cb, &fb.indices);
    fb.W = fb.V;
    return fb;
}

BlockFeedback owp(const CMat &u, const LineCodebook &cb, std::size_t max_candidates)
{
    if (u.rows() != cb.dim())
        throw std::invalid_argument("owp: eigenvector dimension does not match the codebook");
    if (u.cols() > u.rows())
        throw std::invalid_argument("owp: K exceeds the block dimension");
    max_candidates = std::max<std::size_t>(1, max_candidates);
    BlockFeedback fb;
    CMat q(u.rows(), 0);
    for (Eigen::Index k = 0; k < u.cols(); ++k)
    {
        bool placed = false;
        for (std::size_t idx : nearest_words(u.col(k), cb, max_candidates))
        {
            const CVec v = cb.word(idx);
            CVec r = v;
            for (int pass = 0; pass < 2; ++pass)
                r -= q * (q.adjoint() * r);
            if (r.norm() < annihilation_tol)
                continue;
            fb.indices.push_back(idx);
            q.conservativeResize(Eigen::NoChange, q.cols() + 1);
            q.col(q.cols() - 1) = r / r.norm();
            placed = true;
            break;
        }
        if (!placed)
            throw DegenerateFeedbackError("owp: codewords for eigenvector " + std::to_string(k) +
                                          " fall in the span of earlier columns; use a larger codebook");
    }
    fb.V = columns_of(cb, fb.indices);
    fb.W = orthonormalize(fb.V);
    return fb;
}

BlockFeedback swp(const HermitianPSD &r, Eigen::Index k, const LineCodebook &cb, std::size_t max_candidates)
{
    const Eigen::Index n = r.dim();
    if (n != cb.dim())
        throw std::invalid_argument("swp: covariance dimension does not match the codebook");
    if (k < 1 || k > n)
        throw std::invalid_argument("swp: K must satisfy 1 <= K <= N");
    max_candidates = std::max<std::size_t>(1, max_candidates);
    const double tr = r.trace();

    BlockFeedback fb;
    CMat perp = CMat::Identity(n, n);
    CMat w_loop(n, k);
    for (Eigen::Index j = 0; j < k; ++j)
    {
        const CMat rj = perp * r.matrix() * perp;
        if (!(rj.trace().real() > 1e-12 * tr))
            throw std::invalid_argument("swp: K exceeds the numerical rank of the covariance");
        CVec e;
        try
        {
            e = principal_eigenvector(rj, 1e-10, 5000).vector;
        }
        catch (const NonConvergenceError &)
        {
            e = eigh_jacobi(rj).vectors.col(0);
        }
        bool placed = false;
        for (std::size_t idx : nearest_words(e, cb, max_candidates))
        {
            const CVec p = perp * cb.word(idx);
            const double pn = p.norm();
            if (pn < annihilation_tol)
                continue;
            const CVec w = p / pn;
            perp -= w * w.adjoint();
            check_projector(perp, n - j - 1, j);
            w_loop.col(j) = w;
            fb.indices.push_back(idx);
            placed = true;
            break;
        }
        if (!placed)
            throw DegenerateFeedbackError("swp: all " + std::to_string(max_candidates) +
                                          " candidate codewords are annihilated by the projector at step " +
                                          std::to_string(j));
    }
    fb.V = columns_of(cb, fb.indices);
    // The receiver only sees V; Gram-Schmidt of V reproduces the sequential basis.
    fb.W = orthonormalize(fb.V);
    if ((fb.W - w_loop).cwiseAbs().maxCoeff() > 1e-8)
        throw std::logic_error("swp: sequential basis differs from the Gram-Schmidt reconstruction");
    return fb;
}

CMat block_basis(WidebandScheme scheme, const std::vector<std::size_t> &indices, const LineCodebook &cb)
{
    CMat v = columns_of(cb, indices);
    if (scheme == WidebandScheme::IND)
        return v;
    return orthonormalize(v);
}

double projection_distortion(const CMat &w, const HermitianPSD &r)
{
    if (w.rows() != r.dim())
        throw std::invalid_argument("projection_distortion: dimension mismatch");
    if (std::abs(r.trace() - 1.0) > 1e-9)
        throw std::invalid_argument("projection_distortion: covariance must have unit trace");
    const CMat p = span_projector(w);
    const double captured = (p * r.matrix()).trace().real();
    return std::clamp(1.0 - captured, 0.0, 1.0);
}

RVec wideband_amplitudes(const CMat &w, const HermitianPSD &r)
{
    if (w.rows() != r.dim())
        throw std::invalid_argument("wideband_amplitudes: dimension mismatch");
    RVec s(w.cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        s(j) = std::sqrt(std::max(0.0, w.col(j).dot(r.matrix() * w.col(j)).real()));
    return s;
}

BlockLayout block_layout(PolarizationMode mode, Eigen::Index n_t, Eigen::Index k)
{
    if (k < 1 || k > n_t)
        throw std::invalid_argument("block_layout: K must satisfy 1 <= K <= N_t");
    if (mode == PolarizationMode::Full)
        return {1, n_t, k};
    if (n_t % 2 != 0 || k % 2 != 0)
        throw std::invalid_argument("block_layout: polarization modes need even N_t and even K");
    if (mode == PolarizationMode::BplusBminus)
        return {2, n_t / 2, k / 2};
    return {1, n_t / 2, k / 2};
}

namespace
{

// Lifts block matrices (codewords or bases) to full-array columns in canonical order.
CMat lift(const std::vector<CMat> &blocks, PolarizationMode mode)
{
    if (mode == PolarizationMode::Full)
        return blocks.front();
    const Eigen::Index h = blocks.front().rows();
    if (mode == PolarizationMode::BplusBminus)
    {
        const Eigen::Index kb = blocks[0].cols();
        CMat out = CMat::Zero(2 * h, 2 * kb);
        out.block(0, 0, h, kb) = blocks[0];
        out.block(h, kb, h, kb) = blocks[1];
        return out;
    }
    const Eigen::Index kb = blocks[0].cols();
    CMat out = CMat::Zero(2 * h, 2 * kb);
    for (Eigen::Index j = 0; j < kb; ++j)
    {
        out.block(0, 2 * j, h, 1) = blocks[0].col(j);
        out.block(h, 2 * j + 1, h, 1) = blocks[0].col(j);
    }
    return out;
}

std::vector<std::size_t> sorted_order(const RVec &sigma_hat)
{
    std::vector<std::size_t> order(static_cast<std::size_t>(sigma_hat.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sigma_hat(static_cast<Eigen::Index>(a)) > sigma_hat(static_cast<Eigen::Index>(b));
    });
    return order;
}

void finish(WidebandFeedback &fb, const CMat &w_canonical)
{
    fb.order = sorted_order(fb.amplitudes.sigma_hat);
    fb.W.resize(w_canonical.rows(), w_canonical.cols());
    fb.sigma_hat.resize(w_canonical.cols());
    for (std::size_t j = 0; j < fb.order.size(); ++j)
    {
        fb.W.col(static_cast<Eigen::Index>(j)) = w_canonical.col(static_cast<Eigen::Index>(fb.order[j]));
        fb.sigma_hat(static_cast<Eigen::Index>(j)) = fb.amplitudes.sigma_hat(static_cast<Eigen::Index>(fb.order[j]));
    }
}

} // namespace

WidebandFeedback assemble_polarized(const std::vector<BlockFeedback> &blocks, WidebandScheme scheme,
                                    PolarizationMode mode, const HermitianPSD &r_full, const LineCodebook &cb)
{
    const int expected = mode == PolarizationMode::BplusBminus ? 2 : 1;
    if (static_cast<int>(blocks.size()) != expected)
        throw std::invalid_argument("assemble_polarized: wrong number of blocks for the polarization mode");
    const Eigen::Index dim = blocks.front().V.rows();
    const Eigen::Index kb = blocks.front().V.cols();
    for (const BlockFeedback &b : blocks)
        if (b.V.rows() != dim || b.V.cols() != kb || b.W.rows() != dim || b.W.cols() != kb ||
            b.indices.size() != static_cast<std::size_t>(kb))
            throw std::invalid_argument("assemble_polarized: inconsistent block dimensions");
    const Eigen::Index n_t = mode == PolarizationMode::Full ? dim : 2 * dim;
    if (r_full.dim() != n_t)
        throw std::invalid_argument("assemble_polarized: covariance dimension does not match the blocks");

    WidebandFeedback fb;
    fb.scheme = scheme;
    fb.pol_mode = mode;
    fb.index_bits = cb.index_bits();
    std::vector<CMat> vs;
    std::vector<CMat> ws;
    for (const BlockFeedback &b : blocks)
    {
        fb.v_indices.insert(fb.v_indices.end(), b.indices.begin(), b.indices.end());
        vs.push_back(b.V);
        ws.push_back(b.W);
    }
    fb.V = lift(vs, mode);
    const CMat w_canonical = lift(ws, mode);
    fb.amplitudes = quantize_amplitudes(wideband_amplitudes(w_canonical, r_full));
    finish(fb, w_canonical);
    return fb;
}

WidebandFeedback quantize_wideband(const HermitianPSD &r_full, Eigen::Index k, WidebandScheme scheme,
                                   PolarizationMode mode, const LineCodebook &cb, std::size_t max_candidates)
{
    const BlockLayout layout = block_layout(mode, r_full.dim(), k);
    if (cb.dim() != layout.block_dim)
        throw std::invalid_argument("quantize_wideband: codebook dimension " + std::to_string(cb.dim()) +
                                    " does not match the block dimension " + std::to_string(layout.block_dim));
    std::vector<BlockFeedback> blocks;
    for (const HermitianPSD &b : polarization_blocks(r_full, mode))
    {
        switch (scheme)
        {
        case WidebandScheme::IND:
            blocks.push_back(ind(eigh_topk(b, layout.block_k).vectors, cb));
            break;
        case WidebandScheme::OWP:
            blocks.push_back(owp(eigh_topk(b, layout.block_k).vectors, cb, max_candidates));
            break;
        case WidebandScheme::SWP:
            blocks.push_back(swp(b, layout.block_k, cb, max_candidates));
            break;
        }
    }
    return assemble_polarized(blocks, scheme, mode, r_full, cb);
}

WidebandFeedback reconstruct_wideband(WidebandScheme scheme, PolarizationMode mode, Eigen::Index n_t,
                                      const std::vector<std::size_t> &indices, const AmplitudeFeedback &amplitudes,
                                      const LineCodebook &cb)
{
    const Eigen::Index k = static_cast<Eigen::Index>(amplitudes.codes.size());
    const BlockLayout layout = block_layout(mode, n_t, k);
    if (cb.dim() != layout.block_dim)
        throw std::invalid_argument("reconstruct_wideband: codebook does not match the block dimension");
    if (indices.size() != static_cast<std::size_t>(layout.blocks * layout.block_k))
        throw std::invalid_argument("reconstruct_wideband: wrong number of indices");
    WidebandFeedback fb;
    fb.scheme = scheme;
    fb.pol_mode = mode;
    fb.index_bits = cb.index_bits();
    fb.v_indices = indices;
    fb.amplitudes = amplitudes;
    std::vector<CMat> vs;
    std::vector<CMat> ws;
    for (int b = 0; b < layout.blocks; ++b)
    {
        const auto first = indices.begin() + b * layout.block_k;
        const std::vector<std::size_t> bi(first, first + layout.block_k);
        vs.push_back(columns_of(cb, bi));
        ws.push_back(block_basis(scheme, bi, cb));
    }
    fb.V = lift(vs, mode);
    finish(fb, lift(ws, mode));
    return fb;
}

void encode_wideband(BitWriter &out, const WidebandFeedback &fb)
{
    for (std::size_t idx : fb.v_indices)
        out.put(idx, fb.index_bits);
    const std::size_t k = fb.amplitudes.codes.size();
    out.put(fb.amplitudes.strongest, ceil_log2(k));
    for (std::size_t j = 0; j < k; ++j)
        if (j != fb.amplitudes.strongest)
            out.put(static_cast<std::uint64_t>(fb.amplitudes.codes[j]), AmplitudeCodebook::bits);
}

WidebandFeedback decode_wideband(BitReader &in, WidebandScheme scheme, PolarizationMode mode, Eigen::Index n_t,
                                 Eigen::Index k, const LineCodebook &cb)
{
    const BlockLayout layout = block_layout(mode, n_t, k);
    std::vector<std::size_t> indices(static_cast<std::size_t>(layout.blocks * layout.block_k));
    for (std::size_t &idx : indices)
        idx = in.get(cb.index_bits());
    const auto strongest = static_cast<std::size_t>(in.get(ceil_log2(static_cast<std::size_t>(k))));
    if (strongest >= static_cast<std::size_t>(k))
        throw std::runtime_error("decode_wideband: strongest-beam index out of range");
    std::vector<int> codes(static_cast<std::size_t>(k), 0);
    for (std::size_t j = 0; j < codes.size(); ++j)
        if (j != strongest)
            codes[j] = static_cast<int>(in.get(AmplitudeCodebook::bits));
    return reconstruct_wideband(scheme, mode, n_t, indices, amplitudes_from_codes(strongest, std::move(codes)), cb);
}

void write_wideband_record(std::ostream &os, const WidebandFeedback &fb, const LineCodebook &cb)
{
    BitWriter bw;
    encode_wideband(bw, fb);
    binary::put_magic(os, "CSIQWB01");
    binary::put<std::uint8_t>(os, static_cast<std::uint8_t>(fb.scheme));
    binary::put<std::uint8_t>(os, static_cast<std::uint8_t>(fb.pol_mode));
    binary::put_string(os, cb.descriptor());
    binary::put<std::uint32_t>(os, static_cast<std::uint32_t>(fb.W.rows()));
    binary::put<std::uint32_t>(os, static_cast<std::uint32_t>(fb.k()));
    binary::put<std::uint32_t>(os, static_cast<std::uint32_t>(bw.bit_count()));
    os.write(reinterpret_cast<const char *>(bw.bytes().data()), static_cast<std::streamsize>(bw.bytes().size()));
}

WidebandFeedback read_wideband_record(std::istream &is, const LineCodebook &cb)
{
    binary::expect_magic(is, "CSIQWB01");
    const auto scheme = binary::get<std::uint8_t>(is);
    const auto mode = binary::get<std::uint8_t>(is);
    if (scheme > 2 || mode > 2)
        throw std::runtime_error("read_wideband_record: unknown scheme or polarization tag");
    const std::string descriptor = binary::get_string(is);
    if (descriptor != cb.descriptor())
        throw std::runtime_error("read_wideband_record: record was produced with a different codebook");
    const auto n_t = binary::get<std::uint32_t>(is);
    const auto k = binary::get<std::uint32_t>(is);
    const auto bits = binary::get<std::uint32_t>(is);
    std::vector<std::uint8_t> bytes((bits + 7) / 8);
    is.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!is)
        throw std::runtime_error("read_wideband_record: truncated payload");
    BitReader br(bytes, bits);
    WidebandFeedback fb = decode_wideband(br, static_cast<WidebandScheme>(scheme), static_cast<PolarizationMode>(mode),
                                          n_t, k, cb);
    if (br.remaining() != 0)
        throw std::runtime_error("read_wideband_record: trailing payload bits");
    return fb;
}

} // namespace csiq
