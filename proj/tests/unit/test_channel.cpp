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

#include "csiq/channel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace csiq;

namespace
{

// |sum_i exp(j 2 pi u i)| / n for i = 0..n-1, evaluated in closed form.
double dirichlet(int n, double u)
{
    const double s = std::sin(std::numbers::pi * u);
    if (std::abs(s) < 1e-15)
        return 1.0;
    return std::abs(std::sin(n * std::numbers::pi * u) / (n * s));
}

} // namespace

TEST_CASE("upa_steering - Unit norm and Dirichlet-kernel inner products")
{
    const ArrayGeometry ula{8, 1, 1, 0.5};
    for (double a1 : {-1.0, -0.3, 0.0, 0.4, 1.2})
        for (double a2 : {-0.8, 0.1, 0.7})
        {
            const CVec x = upa_steering(ula, a1, 0.0, 0.0);
            const CVec y = upa_steering(ula, a2, 0.0, 0.0);
            CHECK(x.norm() == Catch::Approx(1.0));
            const double u = ula.spacing * (std::sin(a1) - std::sin(a2));
            CHECK(std::abs(x.dot(y)) == Catch::Approx(dirichlet(8, u)).margin(1e-13));
        }

    // Azimuth separation pi mirrors the spatial frequency.
    const CVec x = upa_steering(ula, 0.3, 0.0, 0.0);
    const CVec y = upa_steering(ula, 0.3 + std::numbers::pi, 0.0, 0.0);
    CHECK(std::abs(x.dot(y)) == Catch::Approx(dirichlet(8, 2.0 * 0.5 * std::sin(0.3))).margin(1e-13));

    // Full UPA: the inner product factorizes over horizontal, vertical and polarization parts.
    const ArrayGeometry upa{4, 2, 2, 0.5};
    const CVec p = upa_steering(upa, 0.2, 0.1, 0.0);
    const CVec q = upa_steering(upa, -0.4, 0.05, std::numbers::pi);
    REQUIRE(p.size() == 16);
    const double uh = 0.5 * (std::sin(0.2) * std::cos(0.1) - std::sin(-0.4) * std::cos(0.05));
    const double uv = 0.5 * (std::sin(0.1) - std::sin(0.05));
    const double pol = 0.0; // (1 + e^{j pi}) / 2
    CHECK(std::abs(p.dot(q)) == Catch::Approx(dirichlet(4, uh) * dirichlet(2, uv) * pol).margin(1e-13));
    const CVec r = upa_steering(upa, -0.4, 0.05, 0.0);
    CHECK(std::abs(p.dot(r)) == Catch::Approx(dirichlet(4, uh) * dirichlet(2, uv)).margin(1e-13));

    CHECK_THROWS_AS(upa_steering(ArrayGeometry{0, 1, 1, 0.5}, 0.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(upa_steering(ArrayGeometry{2, 1, 3, 0.5}, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("generate_channels - Deterministic per user and independent of the thread count")
{
    const ArrayGeometry geom{};
    ClusterModelConfig cfg;
    cfg.n_subbands = 6;
    const auto a = generate_channels(geom, cfg, 99, 5, 1);
    const auto b = generate_channels(geom, cfg, 99, 5, 3);
    REQUIRE(a.size() == 5);
    for (std::size_t u = 0; u < 5; ++u)
    {
        REQUIRE(a[u].n_subbands() == 6);
        CHECK(a[u].n_t() == geom.n_t());
        for (std::size_t s = 0; s < 6; ++s)
            CHECK(a[u].subbands[s] == b[u].subbands[s]);
        const ChannelSet single = generate_user_channels(geom, cfg, 99, u);
        CHECK(single.subbands[3] == a[u].subbands[3]);
    }
    const auto c = generate_channels(geom, cfg, 100, 1, 1);
    CHECK(c[0].subbands[0] != a[0].subbands[0]);

    cfg.n_clusters = 0;
    CHECK_THROWS_AS(generate_channels(geom, cfg, 1, 1), std::invalid_argument);
}

TEST_CASE("generate_channels - Few dominant directions and correlated subbands")
{
    const ArrayGeometry geom{};
    const ClusterModelConfig cfg;
    const auto users = generate_channels(geom, cfg, 5, 40);
    double capture = 0.0;
    double neighbour = 0.0;
    for (const ChannelSet &u : users)
    {
        const HermitianPSD r = normalized_sample_covariance(u);
        capture += eigh_topk(r, 8).values.sum();
        neighbour += 1.0 - chordal_distance2(u.subbands[0], u.subbands[1]);
    }
    capture /= 40.0;
    neighbour /= 40.0;
    CHECK(capture >= 0.8);       // 8 of 32 dimensions carry most of the energy
    CHECK(neighbour > 0.5);      // adjacent subbands are strongly aligned
}

TEST_CASE("normalized_sample_covariance - Trace one and equal to the direct average")
{
    std::vector<CVec> hs;
    CVec a(2), b(2);
    a << 3.0, 0.0;
    b << cplx(0.0, 1.0), 1.0;
    hs = {a, b};
    const HermitianPSD r = normalized_sample_covariance(hs);
    CMat ref = CMat::Zero(2, 2);
    ref(0, 0) = 0.5 + 0.25;
    ref(1, 1) = 0.25;
    ref(0, 1) = cplx(0.0, 1.0) * 0.25;
    ref(1, 0) = cplx(0.0, -1.0) * 0.25;
    CHECK((r.matrix() - ref).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(r.trace() == Catch::Approx(1.0));

    CHECK_THROWS_AS(normalized_sample_covariance(std::vector<CVec>{}), std::invalid_argument);
    CHECK_THROWS_AS(normalized_sample_covariance(std::vector<CVec>{CVec::Zero(2)}), std::domain_error);
    CHECK_THROWS_AS(normalized_sample_covariance(std::vector<CVec>{a, CVec::Ones(3)}), std::invalid_argument);
}

TEST_CASE("polarization_blocks - Block extraction for each mode")
{
    CMat m(4, 4);
    m << 4, 1, 0.5, 0.1, 1, 3, 0.2, 0.3, 0.5, 0.2, 2, 0.4, 0.1, 0.3, 0.4, 1;
    const HermitianPSD r(m / m.trace());
    const auto full = polarization_blocks(r, PolarizationMode::Full);
    REQUIRE(full.size() == 1);
    CHECK(full[0].matrix() == r.matrix());
    const auto pm = polarization_blocks(r, PolarizationMode::BplusBminus);
    REQUIRE(pm.size() == 2);
    CHECK(pm[0].matrix() == r.matrix().topLeftCorner(2, 2));
    CHECK(pm[1].matrix() == r.matrix().bottomRightCorner(2, 2));
    const auto b00b = polarization_blocks(r, PolarizationMode::B00B);
    REQUIRE(b00b.size() == 1);
    const CMat avg = (r.matrix().topLeftCorner(2, 2) + r.matrix().bottomRightCorner(2, 2)) / 2.0;
    CHECK((b00b[0].matrix() - avg).cwiseAbs().maxCoeff() < 1e-15);
    const CMat re = b00b_reassembled(r);
    CHECK((re.topLeftCorner(2, 2) - avg).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((re.bottomRightCorner(2, 2) - avg).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(re.topRightCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);

    const HermitianPSD odd(CMat::Identity(3, 3) / 3.0);
    CHECK_THROWS_AS(polarization_blocks(odd, PolarizationMode::B00B), std::invalid_argument);
}

TEST_CASE("polarization_mode - String round trip")
{
    for (auto m : {PolarizationMode::Full, PolarizationMode::BplusBminus, PolarizationMode::B00B})
        CHECK(polarization_mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(polarization_mode_from_string("diag"), std::invalid_argument);
}

TEST_CASE("channel_dump - Binary round trip and header validation")
{
    const ArrayGeometry geom{2, 2, 2, 0.5};
    ClusterModelConfig cfg;
    cfg.n_subbands = 3;
    const auto users = generate_channels(geom, cfg, 42, 3);
    std::stringstream ss;
    write_channel_dump(ss, users, 42);
    std::uint64_t seed = 0;
    const auto back = read_channel_dump(ss, &seed);
    CHECK(seed == 42);
    REQUIRE(back.size() == 3);
    for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t s = 0; s < 3; ++s)
            CHECK(back[u].subbands[s] == users[u].subbands[s]);

    std::stringstream bad("NOTMAGIC........");
    CHECK_THROWS(read_channel_dump(bad));
}
