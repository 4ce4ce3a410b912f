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

#include "csiq/wideband.hpp"
#include "csiq/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

using namespace csiq;

namespace
{

HermitianPSD random_covariance(Rng &rng, Eigen::Index n, Eigen::Index rank)
{
    CMat a(n, rank);
    for (Eigen::Index j = 0; j < rank; ++j)
        a.col(j) = rng.cnormal_vector(n) * std::pow(0.7, static_cast<double>(j));
    CMat r = a * a.adjoint();
    r /= r.trace().real();
    return HermitianPSD::trusted(r);
}

std::size_t scan_nearest(const CVec &u, const LineCodebook &cb)
{
    std::size_t best = 0;
    double bd = 2.0;
    for (std::size_t i = 0; i < cb.size(); ++i)
    {
        const double d = chordal_distance2(u, cb.word(i));
        if (d < bd)
        {
            bd = d;
            best = i;
        }
    }
    return best;
}

} // namespace

TEST_CASE("AmplitudeCodebook - Levels and nearest-level ties")
{
    const auto &l = AmplitudeCodebook::levels();
    for (int m = 0; m <= 6; ++m)
        CHECK(l[static_cast<std::size_t>(m)] == Catch::Approx(std::pow(2.0, -m / 2.0)));
    CHECK(l[7] == 0.0);
    CHECK(AmplitudeCodebook::nearest(1.0) == 0);
    CHECK(AmplitudeCodebook::nearest(0.0) == 7);
    CHECK(AmplitudeCodebook::nearest(0.0625) == 6); // equidistant from 1/8 and 0: larger level
    CHECK(AmplitudeCodebook::nearest(0.49) == 2);
    CHECK_THROWS_AS(AmplitudeCodebook::nearest(-0.1), std::invalid_argument);
}

TEST_CASE("quantize_amplitudes - Strongest reference and bit count")
{
    RVec s(8);
    s << 0.3, 0.9, 0.45, 0.2, 0.1, 0.06, 0.03, 0.0;
    const AmplitudeFeedback a = quantize_amplitudes(s);
    CHECK(a.strongest == 1);
    CHECK(a.codes[1] == 0);
    CHECK(a.sigma_hat(1) == 1.0);
    CHECK(a.bit_count() == 3 + 3 * 7);
    for (Eigen::Index j = 0; j < 8; ++j)
        CHECK(a.sigma_hat(j) == AmplitudeCodebook::levels()[static_cast<std::size_t>(a.codes[static_cast<std::size_t>(j)])]);
    const AmplitudeFeedback b = amplitudes_from_codes(a.strongest, a.codes);
    CHECK(b.sigma_hat == a.sigma_hat);
    CHECK_THROWS_AS(quantize_amplitudes(RVec::Zero(3)), std::domain_error);
    CHECK_THROWS_AS(amplitudes_from_codes(5, {0, 1}), std::invalid_argument);
}

TEST_CASE("ind - Columnwise nearest codewords")
{
    Rng rng(31);
    const LineCodebook cb = tsodft(4, 2, 2, 2, false);
    const HermitianPSD r = random_covariance(rng, 8, 6);
    const CMat u = eigh_topk(r, 3).vectors;
    const BlockFeedback fb = ind(u, cb);
    for (Eigen::Index j = 0; j < 3; ++j)
        CHECK(fb.indices[static_cast<std::size_t>(j)] == scan_nearest(u.col(j), cb));
    CHECK(fb.W == fb.V);
}

TEST_CASE("owp - Orthonormalized codewords span the same subspace")
{
    Rng rng(32);
    const LineCodebook cb = tsodft(4, 2, 2, 2, false);
    for (int t = 0; t < 20; ++t)
    {
        const HermitianPSD r = random_covariance(rng, 8, 6);
        const BlockFeedback fb = owp(eigh_topk(r, 3).vectors, cb, 8);
        CHECK(orthonormality_error(fb.W) < 1e-12);
        CHECK((projector(fb.W) - projector(fb.V)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((fb.W - orthonormalize(fb.V)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("owp - Colliding codewords fall back to the next candidates")
{
    // Two eigenvectors with the same nearest DFT word.
    const LineCodebook cb = dft_oversampled(4, 1);
    CMat u(4, 2);
    u.col(0) = CVec::Constant(4, 0.5);
    u.col(1) = CVec::Constant(4, 0.5);
    u(0, 1) = 0.6;
    u.col(1).normalize();
    CHECK_THROWS_AS(owp(u, cb, 1), DegenerateFeedbackError);
    const BlockFeedback fb = owp(u, cb, 4);
    CHECK(fb.indices[0] != fb.indices[1]);
}

TEST_CASE("swp - Each column quantizes the principal eigenvector of the projected covariance")
{
    Rng rng(33);
    const LineCodebook cb = tsodft(4, 2, 2, 2, false);
    for (int t = 0; t < 20; ++t)
    {
        const HermitianPSD r = random_covariance(rng, 8, 8);
        const BlockFeedback fb = swp(r, 4, cb, 8);
        CHECK(orthonormality_error(fb.W) < 1e-10);
        CMat perp = CMat::Identity(8, 8);
        for (Eigen::Index j = 0; j < 4; ++j)
        {
            Eigen::SelfAdjointEigenSolver<CMat> es(perp * r.matrix() * perp);
            const CVec e = es.eigenvectors().col(7);
            const std::size_t ref = scan_nearest(e, cb);
            // The first choice is the nearest word unless it is annihilated by the projector.
            if ((perp * cb.word(ref)).norm() > 1e-6)
                CHECK(fb.indices[static_cast<std::size_t>(j)] == ref);
            const CVec w = fb.W.col(j);
            perp -= w * w.adjoint();
        }
    }
    // A rank-one covariance captured exactly by the first column leaves nothing for the second.
    const LineCodebook axes(CMat::Identity(4, 4), "axes");
    CMat rank_one = CMat::Zero(4, 4);
    rank_one(0, 0) = 1.0;
    CHECK_THROWS_AS(swp(HermitianPSD(rank_one), 2, axes), std::invalid_argument);
}

TEST_CASE("projection_distortion - Equals the residual energy outside span(W)")
{
    Rng rng(34);
    const HermitianPSD r = random_covariance(rng, 8, 8);
    const CMat w = orthonormalize(rng.haar_unitary(8).leftCols(3));
    const double ref = 1.0 - (w * w.adjoint() * r.matrix()).trace().real();
    CHECK(projection_distortion(w, r) == Catch::Approx(ref).margin(1e-14));

    // ||U S - P U S||_F^2 for R = U S^2 U^H.
    Eigen::SelfAdjointEigenSolver<CMat> es(r.matrix());
    const CMat us = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>().asDiagonal();
    const CMat resid = us - w * w.adjoint() * us;
    CHECK(projection_distortion(w, r) == Catch::Approx(resid.squaredNorm()).margin(1e-12));

    CHECK(projection_distortion(rng.haar_unitary(8), r) == Catch::Approx(0.0).margin(1e-12));
    const HermitianPSD twice(r.matrix() * 2.0);
    CHECK_THROWS_AS(projection_distortion(w, twice), std::invalid_argument);
}

TEST_CASE("wideband - Bit counts and layouts for the polarization modes")
{
    CHECK(block_layout(PolarizationMode::Full, 32, 8).blocks == 1);
    CHECK(block_layout(PolarizationMode::BplusBminus, 32, 8).block_dim == 16);
    CHECK(block_layout(PolarizationMode::BplusBminus, 32, 8).block_k == 4);
    CHECK(block_layout(PolarizationMode::B00B, 32, 8).blocks == 1);
    CHECK(block_layout(PolarizationMode::B00B, 32, 8).block_k == 4);
    CHECK_THROWS_AS(block_layout(PolarizationMode::B00B, 32, 7), std::invalid_argument);
    CHECK_THROWS_AS(block_layout(PolarizationMode::Full, 4, 5), std::invalid_argument);

    Rng rng(35);
    const HermitianPSD r = random_covariance(rng, 16, 12);
    const LineCodebook full = tsodft(4, 2, 2, 2, true);
    const LineCodebook half = tsodft(4, 2, 2, 2, false);
    const WidebandFeedback f = quantize_wideband(r, 4, WidebandScheme::OWP, PolarizationMode::Full, full);
    CHECK(f.basis_bits() == 4 * full.index_bits());
    CHECK(f.bit_count() == 4 * full.index_bits() + 2 + 3 * 3);

    const WidebandFeedback pm = quantize_wideband(r, 4, WidebandScheme::SWP, PolarizationMode::BplusBminus, half);
    CHECK(pm.W.topRightCorner(8, 0).size() == 0);
    CHECK(orthonormality_error(pm.W) < 1e-10);
    // Every column lives on exactly one polarization half.
    for (Eigen::Index j = 0; j < 4; ++j)
        CHECK(std::min(pm.W.col(j).head(8).norm(), pm.W.col(j).tail(8).norm()) == 0.0);

    const WidebandFeedback b0 = quantize_wideband(r, 4, WidebandScheme::OWP, PolarizationMode::B00B, half);
    CHECK(b0.v_indices.size() == 2);
    CHECK((b0.V.col(0).head(8) - b0.V.col(1).tail(8)).norm() == 0.0);
    CHECK(orthonormality_error(b0.W) < 1e-10);
    for (Eigen::Index j = 1; j < 4; ++j)
        CHECK(b0.sigma_hat(j) <= b0.sigma_hat(j - 1));
}

TEST_CASE("wideband - Payload round trip reproduces the basis at the receiver")
{
    Rng rng(36);
    const LineCodebook cb = tsodft(4, 2, 2, 2, true);
    for (auto scheme : {WidebandScheme::IND, WidebandScheme::OWP, WidebandScheme::SWP})
    {
        const HermitianPSD r = random_covariance(rng, 16, 10);
        const WidebandFeedback fb = quantize_wideband(r, 6, scheme, PolarizationMode::Full, cb);
        BitWriter bw;
        encode_wideband(bw, fb);
        CHECK(bw.bit_count() == static_cast<std::size_t>(fb.bit_count()));
        BitReader br(bw.bytes(), bw.bit_count());
        const WidebandFeedback back = decode_wideband(br, scheme, PolarizationMode::Full, 16, 6, cb);
        CHECK(br.remaining() == 0);
        CHECK(back.v_indices == fb.v_indices);
        CHECK(back.order == fb.order);
        CHECK((back.W - fb.W).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(back.sigma_hat == fb.sigma_hat);

        std::stringstream ss;
        write_wideband_record(ss, fb, cb);
        const WidebandFeedback rec = read_wideband_record(ss, cb);
        CHECK(rec.v_indices == fb.v_indices);
        CHECK(rec.scheme == scheme);
        CHECK_THROWS(read_wideband_record(ss, cb));
    }
}

TEST_CASE("wideband_scheme - String round trip")
{
    for (auto s : {WidebandScheme::IND, WidebandScheme::OWP, WidebandScheme::SWP})
        CHECK(wideband_scheme_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(wideband_scheme_from_string("XYZ"), std::invalid_argument);
}
