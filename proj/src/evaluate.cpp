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

#include "csiq/evaluate.hpp"
#include "csiq/parallel.hpp"
#include "csiq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace csiq
{

namespace
{

constexpr double orthonormal_tol = 1e-10;

void require_orthonormal(const CMat &w, const char *who)
{
    if (orthonormality_error(w) > orthonormal_tol)
        throw std::invalid_argument(std::string(who) + ": W must be orthonormal");
}

SubbandFeedback quantize_one(const EffectiveChannels &e, const RVec &sigma_hat, const PipelineConfig &cfg)
{
    switch (cfg.subband)
    {
    case SubbandScheme::EXT2:
        return quantize_ext2(e.c, sigma_hat, cfg.alloc);
    case SubbandScheme::INT5:
        return quantize_int5(e.c, sigma_hat, cfg.alloc);
    case SubbandScheme::PCB:
        if (!cfg.pcb)
            throw std::invalid_argument("pipeline: PCB subband scheme without a product codebook");
        return quantize_pcb_subband(e.b, sigma_hat, *cfg.pcb);
    case SubbandScheme::Perfect:
        return quantize_perfect(e.c, sigma_hat);
    }
    throw std::logic_error("pipeline: unknown subband scheme");
}

} // namespace

SubbandTerms evaluate_subbands(const std::vector<CVec> &channels, const CMat &w, const RVec &sigma_hat,
                               const PipelineConfig &cfg, CoordinateMode mode)
{
    if (channels.empty())
        throw std::invalid_argument("evaluate_subbands: empty channel set");
    SubbandTerms t;
    const CMat p = span_projector(w);
    for (const CVec &h : channels)
    {
        const EffectiveChannels e = effective_channels(w, sigma_hat, h, mode);
        SubbandFeedback fb = quantize_one(e, sigma_hat, cfg);
        t.inexact += fb.exact ? 0 : 1;
        CVec h_hat;
        const CVec raw = w * sigma_hat.cast<cplx>().cwiseProduct(fb.c_hat);
        if (raw.norm() > 0.0)
            h_hat = raw / raw.norm();
        else
        {
            // No energy survives in the basis; any direction in span(W) is equally good.
            h_hat = w.col(0) / w.col(0).norm();
            ++t.degenerate;
        }
        const CVec b_hat = sigma_hat.cast<cplx>().cwiseProduct(fb.c_hat);
        const double dh = chordal_distance2(h, h_hat);
        const double db = (e.b.norm() > 0.0 && b_hat.norm() > 0.0) ? chordal_distance2(e.b, b_hat) : 1.0;
        const CVec ht = h / h.norm();
        const CVec hpar = p * ht;
        const double par2 = hpar.squaredNorm();
        const double in_span = par2 > 1e-300 ? par2 * chordal_distance2(hpar, h_hat) : 0.0;
        t.d_h += dh;
        t.d_b += db;
        t.in_span += in_span;
        t.h_hat.push_back(std::move(h_hat));
        t.records.push_back(std::move(fb));
    }
    const double n = static_cast<double>(channels.size());
    t.d_h /= n;
    t.d_b /= n;
    t.in_span /= n;
    return t;
}

UserOutcome run_user(const ChannelSet &ch, const LineCodebook &cb, const PipelineConfig &cfg)
{
    const HermitianPSD r = normalized_sample_covariance(ch);
    UserOutcome out;
    out.wideband = quantize_wideband(r, cfg.k, cfg.wideband, cfg.pol_mode, cb, cfg.max_candidates);
    const WidebandFeedback &wb = out.wideband;
    out.d_p = projection_distortion(wb.W, r);
    const CoordinateMode mode =
        cfg.wideband == WidebandScheme::IND ? cfg.ind_coordinates : CoordinateMode::Projection;
    out.terms = evaluate_subbands(ch.subbands, wb.W, wb.sigma_hat, cfg, mode);

    out.wb_bits = wb.bit_count();
    out.sb_bits = bit_count(cfg.subband, cfg.k, cfg.alloc, cfg.pcb);
    BitWriter wbw;
    encode_wideband(wbw, wb);
    if (wbw.bit_count() != static_cast<std::size_t>(out.wb_bits))
        throw std::logic_error("invariant payload_length: wideband payload differs from its bit count");
    if (cfg.subband != SubbandScheme::Perfect)
        for (const SubbandFeedback &fb : out.terms.records)
        {
            BitWriter sbw;
            encode_subband(sbw, fb, wb.sigma_hat, cfg.alloc, cfg.pcb);
            if (sbw.bit_count() != static_cast<std::size_t>(out.sb_bits) ||
                fb.bit_count != out.sb_bits)
                throw std::logic_error("invariant payload_length: subband payload differs from its bit count");
        }
    return out;
}

DistortionReport evaluate_pipeline(const std::vector<ChannelSet> &users, const LineCodebook &cb,
                                   const PipelineConfig &cfg, int threads, std::vector<UserOutcome> *outcomes)
{
    if (users.empty())
        throw std::invalid_argument("evaluate_pipeline: empty channel set");
    std::vector<UserOutcome> slots(users.size());
    parallel_for(users.size(), threads, [&](std::size_t u) { slots[u] = run_user(users[u], cb, cfg); });

    DistortionReport rep;
    for (const UserOutcome &o : slots)
    {
        rep.user_D_H.push_back(o.terms.d_h);
        rep.user_D_B.push_back(o.terms.d_b);
        rep.user_d_p.push_back(o.d_p);
        rep.D_H += o.terms.d_h;
        rep.D_B += o.terms.d_b;
        rep.d_p += o.d_p;
        rep.in_span += o.terms.in_span;
        rep.degenerate += o.terms.degenerate;
        rep.inexact += o.terms.inexact;
    }
    const double n = static_cast<double>(users.size());
    rep.D_H /= n;
    rep.D_B /= n;
    rep.d_p /= n;
    rep.in_span /= n;
    rep.decomposition_residual = std::abs(rep.D_H - (rep.in_span + rep.d_p));
    rep.lower_gap = rep.D_H - rep.d_p;
    rep.upper_gap = rep.D_B + rep.d_p - rep.D_H;
    rep.wb_bits = slots.front().wb_bits;
    rep.sb_bits = slots.front().sb_bits;
    if (outcomes)
        *outcomes = std::move(slots);
    return rep;
}

double overall_distortion(const std::vector<ChannelSet> &users, const LineCodebook &cb, const PipelineConfig &cfg,
                          int threads)
{
    return evaluate_pipeline(users, cb, cfg, threads).D_H;
}

double subband_distortion(const std::vector<CVec> &channels, const CMat &w, const RVec &sigma_hat,
                          const PipelineConfig &cfg)
{
    require_orthonormal(w, "subband_distortion");
    return evaluate_subbands(channels, w, sigma_hat, cfg, CoordinateMode::Projection).d_b;
}

double decomposition_check(const std::vector<CVec> &channels, const CMat &w, const LineCodebook &in_span)
{
    if (channels.empty())
        throw std::invalid_argument("decomposition_check: empty channel set");
    require_orthonormal(w, "decomposition_check");
    if (in_span.dim() != w.rows())
        throw std::invalid_argument("decomposition_check: codebook dimension does not match W");
    const CMat p = w * w.adjoint();
    for (std::size_t i = 0; i < in_span.size(); ++i)
    {
        const CVec c = in_span.word(i);
        if ((c - p * c).norm() > 1e-9)
            throw std::invalid_argument("decomposition_check: codeword " + std::to_string(i) +
                                        " lies outside span(W)");
    }
    double lhs = 0.0;
    double in_span_term = 0.0;
    for (const CVec &h : channels)
    {
        const CVec ht = h / h.norm();
        const CVec hpar = p * ht;
        const double par2 = hpar.squaredNorm();
        const CVec h_hat = par2 > 1e-300 ? CVec(quantize_line(hpar, in_span).word) : in_span.word(0);
        lhs += chordal_distance2(ht, h_hat);
        if (par2 > 1e-300)
            in_span_term += par2 * chordal_distance2(hpar, h_hat);
    }
    const double n = static_cast<double>(channels.size());
    const double d_p = projection_distortion(w, normalized_sample_covariance(channels));
    return std::abs(lhs / n - (in_span_term / n + d_p));
}

BoundsGaps bounds_check(const std::vector<CVec> &channels, const CMat &w, const RVec &sigma_hat,
                        const PipelineConfig &cfg, CoordinateMode mode)
{
    const SubbandTerms t = evaluate_subbands(channels, w, sigma_hat, cfg, mode);
    BoundsGaps g;
    g.D_H = t.d_h;
    g.D_B = t.d_b;
    g.d_p = projection_distortion(w, normalized_sample_covariance(channels));
    g.lower_gap = g.D_H - g.d_p;
    g.upper_gap = g.D_B + g.d_p - g.D_H;
    return g;
}

CMat zf_precoder(const CMat &h_hat_rows)
{
    const Eigen::Index u = h_hat_rows.rows();
    if (u < 1 || u > h_hat_rows.cols())
        throw std::invalid_argument("zf_precoder: need 1 <= U <= N_t");
    const CMat g = h_hat_rows * h_hat_rows.adjoint();
    Eigen::LLT<CMat> llt(g);
    const double gmax = g.diagonal().real().maxCoeff();
    if (llt.info() != Eigen::Success || !(gmax > 0.0))
        throw RankDeficientError("zf_precoder: fed-back channels are linearly dependent");
    const CMat l = llt.matrixL();
    const double lmin = l.diagonal().real().minCoeff();
    if (!(lmin * lmin > 1e-12 * gmax))
        throw RankDeficientError("zf_precoder: fed-back channels are linearly dependent");
    CMat z = h_hat_rows.adjoint() * llt.solve(CMat::Identity(u, u));
    for (Eigen::Index j = 0; j < u; ++j)
        z.col(j).normalize();
    return z;
}

double nulling_residual(const CMat &h_hat_rows, const CMat &z)
{
    const CMat m = h_hat_rows * z;
    double worst = 0.0;
    for (Eigen::Index uu = 0; uu < m.cols(); ++uu)
        for (Eigen::Index v = 0; v < m.rows(); ++v)
            if (v != uu)
                worst = std::max(worst, std::abs(m(v, uu)) / std::abs(m(uu, uu)));
    return worst;
}

void ZFConfig::validate(Eigen::Index n_t, std::size_t pool) const
{
    if (users_per_drop < 1 || users_per_drop > n_t)
        throw std::invalid_argument("ZFConfig: users per drop must satisfy 1 <= U <= N_t");
    if (static_cast<std::size_t>(users_per_drop) > pool)
        throw std::invalid_argument("ZFConfig: users per drop exceeds the user pool");
    if (drops < 1)
        throw std::invalid_argument("ZFConfig: drops must be >= 1");
    if (!(power > 0.0))
        throw std::invalid_argument("ZFConfig: power must be positive");
    if (snr_db.empty())
        throw std::invalid_argument("ZFConfig: empty SNR grid");
}

std::vector<std::vector<CVec>> perfect_feedback(const std::vector<ChannelSet> &channels)
{
    std::vector<std::vector<CVec>> out;
    out.reserve(channels.size());
    for (const ChannelSet &c : channels)
    {
        std::vector<CVec> v;
        for (const CVec &h : c.subbands)
            v.push_back(normalized(h));
        out.push_back(std::move(v));
    }
    return out;
}

SpectralEfficiency spectral_efficiency(const std::vector<ChannelSet> &channels,
                                       const std::vector<std::vector<CVec>> &h_hat, const ZFConfig &zf,
                                       std::uint64_t seed, int threads)
{
    if (channels.empty() || channels.size() != h_hat.size())
        throw std::invalid_argument("spectral_efficiency: channels and feedback must cover the same users");
    const Eigen::Index n_t = channels.front().n_t();
    zf.validate(n_t, channels.size());
    const std::size_t s_count = channels.front().n_subbands();
    for (std::size_t u = 0; u < channels.size(); ++u)
        if (channels[u].n_subbands() != s_count || h_hat[u].size() != s_count)
            throw std::invalid_argument("spectral_efficiency: inconsistent subband counts");

    // Each user scaled to unit mean squared channel norm.
    std::vector<double> scale(channels.size());
    for (std::size_t u = 0; u < channels.size(); ++u)
    {
        double e = 0.0;
        for (const CVec &h : channels[u].subbands)
            e += h.squaredNorm();
        scale[u] = 1.0 / std::sqrt(e / static_cast<double>(s_count));
    }

    const std::size_t n_snr = zf.snr_db.size();
    struct DropResult
    {
        std::vector<double> sum;
        std::size_t samples = 0;
        std::size_t dropped = 0;
        double residual = 0.0;
    };
    std::vector<DropResult> drops(static_cast<std::size_t>(zf.drops));
    parallel_for(drops.size(), threads, [&](std::size_t d) {
        Rng rng(seed, d);
        std::vector<std::size_t> pool(channels.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (int i = 0; i < zf.users_per_drop; ++i)
        {
            const std::size_t j = static_cast<std::size_t>(i) + rng.below(pool.size() - static_cast<std::size_t>(i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        const std::vector<std::size_t> selected(pool.begin(), pool.begin() + zf.users_per_drop);
        DropResult &res = drops[d];
        res.sum.assign(n_snr, 0.0);
        for (std::size_t s = 0; s < s_count; ++s)
        {
            std::vector<std::size_t> active = selected;
            CMat z;
            CMat rows;
            while (true)
            {
                rows.resize(static_cast<Eigen::Index>(active.size()), n_t);
                for (std::size_t i = 0; i < active.size(); ++i)
                    rows.row(static_cast<Eigen::Index>(i)) = h_hat[active[i]][s].adjoint();
                try
                {
                    z = zf_precoder(rows);
                    break;
                }
                catch (const RankDeficientError &)
                {
                    active.pop_back();
                    ++res.dropped;
                }
            }
            res.residual = std::max(res.residual, nulling_residual(rows, z));
            const double pu = zf.power / static_cast<double>(active.size());
            for (std::size_t i = 0; i < active.size(); ++i)
            {
                const CVec h = channels[active[i]].subbands[s] * scale[active[i]];
                const CVec g = z.adjoint() * h; // g_v = z_v^H h, |g_v| = |h^H z_v|
                const double signal = pu * std::norm(g(static_cast<Eigen::Index>(i)));
                const double interference = pu * (g.squaredNorm() - std::norm(g(static_cast<Eigen::Index>(i))));
                for (std::size_t q = 0; q < n_snr; ++q)
                {
                    const double rho = std::pow(10.0, zf.snr_db[q] / 10.0);
                    const double n0 = pu / rho;
                    res.sum[q] += std::log2(1.0 + signal / (n0 + std::max(0.0, interference)));
                }
            }
            // Dropped users contribute zero rate to the per-user average.
            res.samples += selected.size();
        }
    });

    SpectralEfficiency out;
    out.snr_db = zf.snr_db;
    out.se.assign(n_snr, 0.0);
    std::size_t samples = 0;
    for (const DropResult &d : drops)
    {
        for (std::size_t q = 0; q < n_snr; ++q)
            out.se[q] += d.sum[q];
        samples += d.samples;
        out.dropped_users += d.dropped;
        out.max_nulling_residual = std::max(out.max_nulling_residual, d.residual);
    }
    for (double &v : out.se)
        v /= static_cast<double>(samples);
    return out;
}

} // namespace csiq
