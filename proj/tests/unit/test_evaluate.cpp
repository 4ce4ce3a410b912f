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

#include <catch2/catch_amalgamated.hpp>

#include "csiq/evaluate.hpp"
#include "csiq/rng.hpp"

#include <cmath>

using namespace csiq;

namespace
{

std::vector<CVec> random_set(Rng &rng, const CMat &dominant, std::size_t count, double spread)
{
    std::vector<CVec> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(dominant * rng.cnormal_vector(dominant.cols()) + spread * rng.cnormal_vector(dominant.rows()));
    return out;
}

PipelineConfig pipeline(WidebandScheme wb, SubbandScheme sb, int m)
{
    PipelineConfig c;
    c.k = 4;
    c.wideband = wb;
    c.subband = sb;
    c.alloc.m = m;
    c.alloc.eta = sb == SubbandScheme::INT5 ? 5.0 : 2.0;
    return c;
}

} // namespace

TEST_CASE("decomposition_check - Overall distortion splits into in-span and projection terms")
{
    Rng rng(51);
    for (int t = 0; t < 20; ++t)
    {
        const CMat w = rng.haar_unitary(8).leftCols(2);
        const LineCodebook local = bloch_codebook(16);
        const LineCodebook in_span(w * local.words(), "in_span");
        const auto set = random_set(rng, rng.haar_unitary(8).leftCols(3), 25, 0.3);
        CHECK(decomposition_check(set, w, in_span) <= 1e-9);
    }
    const CMat w = rng.haar_unitary(6).leftCols(2);
    const LineCodebook outside(rng.haar_unitary(6).leftCols(2), "outside");
    CHECK_THROWS_AS(decomposition_check(random_set(rng, w, 3, 0.1), w, outside), std::invalid_argument);
    CMat skew = w;
    skew.col(1) += 0.3 * w.col(0);
    CHECK_THROWS_AS(decomposition_check(random_set(rng, w, 3, 0.1), skew, outside), std::invalid_argument);
}

TEST_CASE("bounds_check - Orthonormal bases satisfy both distortion bounds")
{
    Rng rng(52);
    for (int t = 0; t < 20; ++t)
    {
        const CMat dom = rng.haar_unitary(8).leftCols(4);
        const auto set = random_set(rng, dom, 20, 0.2);
        const CMat w = orthonormalize(dom + 0.2 * rng.haar_unitary(8).leftCols(4));
        RVec s(4);
        s << 1.0, 0.7, 0.5, 0.25;
        for (SubbandScheme sb : {SubbandScheme::EXT2, SubbandScheme::INT5})
        {
            const BoundsGaps g = bounds_check(set, w, s, pipeline(WidebandScheme::OWP, sb, 2));
            CHECK(g.lower_gap >= -1e-9);
            CHECK(g.upper_gap >= -1e-9);
            CHECK(g.D_H == Catch::Approx(g.lower_gap + g.d_p).margin(1e-14));
        }
    }
}

TEST_CASE("zf_precoder - Nulls interference with unit-norm columns")
{
    Rng rng(53);
    CMat rows(4, 8);
    for (Eigen::Index u = 0; u < 4; ++u)
        rows.row(u) = rng.cnormal_vector(8).adjoint();
    const CMat z = zf_precoder(rows);
    for (Eigen::Index u = 0; u < 4; ++u)
        CHECK(z.col(u).norm() == Catch::Approx(1.0));
    const CMat g = rows * z;
    for (Eigen::Index u = 0; u < 4; ++u)
        for (Eigen::Index v = 0; v < 4; ++v)
            if (u != v)
                CHECK(std::abs(g(v, u)) < 1e-12);
    CHECK(nulling_residual(rows, z) < 1e-12);
    // Oracle: normalized columns of H^H (H H^H)^{-1}.
    const CMat ref = rows.adjoint() * (rows * rows.adjoint()).inverse();
    for (Eigen::Index u = 0; u < 4; ++u)
        CHECK(chordal_distance(z.col(u), ref.col(u)) < 1e-7);

    rows.row(3) = rows.row(1) * cplx(0.0, 2.0);
    CHECK_THROWS_AS(zf_precoder(rows), RankDeficientError);
}

TEST_CASE("spectral_efficiency - Perfect-CSI rate equals the direct SINR formula")
{
    Rng rng(54);
    std::vector<ChannelSet> users(2);
    for (std::size_t u = 0; u < 2; ++u)
    {
        users[u].user_id = u;
        users[u].subbands = {rng.cnormal_vector(4)};
    }
    ZFConfig zf;
    zf.users_per_drop = 2;
    zf.drops = 3;
    zf.snr_db = {0.0, 10.0};
    const SpectralEfficiency se = spectral_efficiency(users, perfect_feedback(users), zf, 1);

    CMat rows(2, 4);
    for (Eigen::Index u = 0; u < 2; ++u)
        rows.row(u) = users[static_cast<std::size_t>(u)].subbands[0].normalized().adjoint();
    CMat z = rows.adjoint() * (rows * rows.adjoint()).inverse();
    z.colwise().normalize();
    for (std::size_t q = 0; q < 2; ++q)
    {
        const double rho = std::pow(10.0, zf.snr_db[q] / 10.0);
        double ref = 0.0;
        for (Eigen::Index u = 0; u < 2; ++u)
            ref += std::log2(1.0 + rho * std::norm(cplx((rows.row(u) * z.col(u))(0, 0))));
        CHECK(se.se[q] == Catch::Approx(ref / 2.0).epsilon(1e-12));
    }
    CHECK(se.max_nulling_residual < 1e-12);
    CHECK(se.dropped_users == 0);
}

TEST_CASE("spectral_efficiency - Quantized feedback is dominated by perfect CSI and grows with SNR")
{
    ClusterModelConfig cfg;
    cfg.n_subbands = 6;
    const ArrayGeometry geom{4, 2, 2, 0.5};
    const auto users = generate_channels(geom, cfg, 77, 12);
    const LineCodebook cb = tsodft(4, 2, 2, 2, true);
    const PipelineConfig pc = pipeline(WidebandScheme::OWP, SubbandScheme::INT5, 2);
    std::vector<UserOutcome> out;
    (void)evaluate_pipeline(users, cb, pc, 1, &out);
    std::vector<std::vector<CVec>> h_hat;
    for (auto &o : out)
        h_hat.push_back(o.terms.h_hat);
    ZFConfig zf;
    zf.users_per_drop = 4;
    zf.drops = 20;
    const SpectralEfficiency q1 = spectral_efficiency(users, h_hat, zf, 5, 1);
    const SpectralEfficiency q2 = spectral_efficiency(users, h_hat, zf, 5, 3);
    const SpectralEfficiency p = spectral_efficiency(users, perfect_feedback(users), zf, 5, 1);
    CHECK(q1.se == q2.se);
    for (std::size_t i = 0; i < 3; ++i)
    {
        CHECK(p.se[i] >= q1.se[i]);
        if (i > 0)
            CHECK(q1.se[i] > q1.se[i - 1]);
    }
    ZFConfig bad = zf;
    bad.users_per_drop = 17;
    CHECK_THROWS_AS(spectral_efficiency(users, h_hat, bad, 5), std::invalid_argument);
}

TEST_CASE("evaluate_pipeline - Thread-independent results and consistent aggregates")
{
    ClusterModelConfig cfg;
    cfg.n_subbands = 5;
    const ArrayGeometry geom{4, 2, 2, 0.5};
    const auto users = generate_channels(geom, cfg, 78, 8);
    const LineCodebook cb = tsodft(4, 2, 2, 2, true);
    for (WidebandScheme wb : {WidebandScheme::IND, WidebandScheme::OWP, WidebandScheme::SWP})
    {
        const PipelineConfig pc = pipeline(wb, SubbandScheme::EXT2, 2);
        const DistortionReport a = evaluate_pipeline(users, cb, pc, 1);
        const DistortionReport b = evaluate_pipeline(users, cb, pc, 4);
        CHECK(a.D_H == b.D_H);
        CHECK(a.user_D_B == b.user_D_B);
        double mean = 0.0;
        for (double v : a.user_D_H)
            mean += v;
        CHECK(a.D_H == Catch::Approx(mean / 8.0).epsilon(1e-12));
        CHECK(a.sb_bits == bit_count(SubbandScheme::EXT2, 4, pc.alloc));
        if (wb != WidebandScheme::IND)
        {
            CHECK(a.decomposition_residual <= 1e-9);
            CHECK(a.lower_gap >= -1e-9);
            CHECK(a.upper_gap >= -1e-9);
        }
    }
}

TEST_CASE("evaluate_pipeline - Perfect subband feedback leaves only the projection distortion")
{
    ClusterModelConfig cfg;
    cfg.n_subbands = 4;
    const ArrayGeometry geom{4, 2, 2, 0.5};
    const auto users = generate_channels(geom, cfg, 79, 4);
    const LineCodebook cb = tsodft(4, 2, 2, 2, true);
    const DistortionReport r = evaluate_pipeline(users, cb, pipeline(WidebandScheme::SWP, SubbandScheme::Perfect, 0));
    CHECK(r.D_B == Catch::Approx(0.0).margin(1e-12));
    CHECK(r.D_H == Catch::Approx(r.d_p).margin(1e-12));
    CHECK(r.sb_bits == 0);
}
