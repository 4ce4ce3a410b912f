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

// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit status if any criterion fails.

#include "csiq/channel.hpp"
#include "csiq/codebook.hpp"
#include "csiq/evaluate.hpp"
#include "csiq/experiment.hpp"
#include "csiq/linalg.hpp"
#include "csiq/rng.hpp"
#include "csiq/subband.hpp"
#include "csiq/wideband.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace csiq;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome
{
    bool ok = false;
    std::string detail;
};

std::string fmt(const char *f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

LineCodebook random_codebook(Rng &rng, Eigen::Index dim, Eigen::Index size, const std::string &label)
{
    CMat words(dim, size);
    for (Eigen::Index j = 0; j < size; ++j)
        words.col(j) = rng.unit_vector(dim);
    return LineCodebook(words, label);
}

// One-sided sign test: probability of at least `wins` successes in `n` fair trials.
double sign_test_p(std::size_t wins, std::size_t n)
{
    double p = 0.0;
    for (std::size_t i = wins; i <= n; ++i)
        p += std::exp(std::lgamma(double(n) + 1.0) - std::lgamma(double(i) + 1.0) - std::lgamma(double(n - i) + 1.0) -
                      double(n) * std::log(2.0));
    return std::min(1.0, p);
}

HermitianPSD unit_trace(const CMat &r)
{
    CMat m = 0.5 * (r + r.adjoint());
    m /= m.trace().real();
    return HermitianPSD(m);
}

// ---------------------------------------------------------------------------------------------------------------

Outcome decomposition_identity()
{
    const auto t0 = Clock::now();
    Rng rng(substream_seed(2024, 1));
    double worst = 0.0;
    const int triples = 60;
    for (int t = 0; t < triples; ++t)
    {
        const Eigen::Index n = 6 + static_cast<Eigen::Index>(rng.below(7));
        const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng.below(3));
        const CMat w = rng.haar_unitary(n).leftCols(k);
        const LineCodebook local = random_codebook(rng, k, 8 + static_cast<Eigen::Index>(rng.below(57)), "local");
        const LineCodebook in_span(w * local.words(), "in_span");
        const CMat dominant = rng.haar_unitary(n).leftCols(k + 1);
        std::vector<CVec> set;
        const std::size_t count = 10 + rng.below(31);
        for (std::size_t i = 0; i < count; ++i)
            set.push_back(dominant * rng.cnormal_vector(k + 1) + 0.3 * rng.cnormal_vector(n));
        worst = std::max(worst, decomposition_check(set, w, in_span));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 30.0, std::to_string(triples) + " triples, max |D_H - (in-span + d_p)| = " +
                                               fmt("%.3e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------------------------------------------

struct PresetRun
{
    std::string name;
    ExperimentReport report;
    std::string csv;
    double seconds = 0.0;
};

Outcome distortion_bounds(const std::vector<PresetRun> &runs, const std::vector<std::string> &load_errors)
{
    std::size_t checks = 0;
    std::string failures;
    for (const PresetRun &r : runs)
        for (const InvariantResult &inv : r.report.invariants)
            if (inv.name == "distortion_lower_bound" || inv.name == "distortion_upper_bound")
            {
                checks += inv.checks;
                if (!inv.ok)
                    failures += " " + r.name + ":" + inv.name + " (" + inv.detail + ")";
            }
    std::string violation;
    for (const PresetRun &r : runs)
        for (const std::string &note : r.report.notes)
            if (violation.empty() && note.find("IND upper bound violated") != std::string::npos)
                violation = r.name + ": " + note;
    std::string detail = std::to_string(runs.size()) + " presets, " + std::to_string(checks) + " OWP/SWP bound checks";
    for (const std::string &e : load_errors)
        detail += "; " + e;
    if (!failures.empty())
        detail += "; violated:" + failures;
    detail += violation.empty() ? "; no IND upper-bound violation found" : "; recorded " + violation;
    return {load_errors.empty() && failures.empty() && checks > 0 && !violation.empty(), detail};
}

// ---------------------------------------------------------------------------------------------------------------

Outcome isometry()
{
    Rng rng(substream_seed(2024, 3));
    double worst = 0.0;
    const int pairs = 10000;
    for (int t = 0; t < pairs; ++t)
    {
        const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.below(13));
        const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        const CMat w = rng.haar_unitary(n).leftCols(k);
        const CVec x = rng.cnormal_vector(k);
        const CVec y = rng.cnormal_vector(k);
        worst = std::max(worst, std::abs(chordal_distance(w * x, w * y) - chordal_distance(x, y)));
    }
    CMat v = rng.haar_unitary(8).leftCols(3);
    v.col(1) += 0.8 * v.col(0);
    v.col(2) *= 1.7;
    double skew_gap = 0.0;
    for (int t = 0; t < 1000; ++t)
    {
        const CVec x = rng.cnormal_vector(3);
        const CVec y = rng.cnormal_vector(3);
        skew_gap = std::max(skew_gap, std::abs(chordal_distance(v * x, v * y) - chordal_distance(x, y)));
    }
    return {worst <= 1e-10 && skew_gap > 1e-3, std::to_string(pairs) + " pairs, max orthonormal gap " +
                                                    fmt("%.3e", worst) + ", non-orthogonal V gap " +
                                                    fmt("%.3f", skew_gap)};
}

// ---------------------------------------------------------------------------------------------------------------

struct Comparison
{
    double owp = 0.0;
    double swp = 0.0;
    std::size_t wins = 0;
    std::size_t losses = 0;
    double p = 1.0;
};

Comparison compare_swp_owp(const std::vector<HermitianPSD> &covariances, Eigen::Index k, const LineCodebook &cb)
{
    Comparison c;
    for (const HermitianPSD &r : covariances)
    {
        const CMat u = eigh_topk(r, k).vectors;
        const double d_owp = projection_distortion(owp(u, cb, 8).W, r);
        const double d_swp = projection_distortion(swp(r, k, cb, 8).W, r);
        c.owp += d_owp;
        c.swp += d_swp;
        if (d_swp < d_owp - 1e-12)
            ++c.wins;
        else if (d_swp > d_owp + 1e-12)
            ++c.losses;
    }
    c.owp /= double(covariances.size());
    c.swp /= double(covariances.size());
    c.p = sign_test_p(c.wins, c.wins + c.losses);
    return c;
}

Outcome sequential_ordering()
{
    Rng rng(substream_seed(2024, 4));
    const Eigen::Index n = 4;
    const Eigen::Index k = 2;
    const LineCodebook cb = random_codebook(rng, n, 1024, "radial");
    double max_error = 0.0;
    for (int t = 0; t < 100000; ++t)
        max_error = std::max(max_error, std::sqrt(quantize_line(rng.unit_vector(n), cb).distortion));

    // Haar eigenvectors make the fixed codebook's errors rotationally distributed across the ensemble.
    std::vector<HermitianPSD> covs;
    for (int t = 0; t < 300; ++t)
    {
        const CMat q = rng.haar_unitary(n);
        RVec lambda(n);
        lambda << 1.0, rng.uniform(0.3, 0.9), rng.uniform(0.05, 0.3), 0.0;
        covs.push_back(unit_trace(q * lambda.cast<cplx>().asDiagonal() * q.adjoint() + 0.02 * CMat::Identity(n, n)));
    }
    const Comparison radial = compare_swp_owp(covs, k, cb);

    // TSODFT on cluster-model channels, reported only.
    ArrayGeometry geom;
    geom.n_h = 4;
    geom.n_v = 2;
    geom.n_p = 1;
    ClusterModelConfig ch;
    ch.n_subbands = 20;
    std::vector<HermitianPSD> real_covs;
    for (const ChannelSet &set : generate_channels(geom, ch, substream_seed(2024, 40), 200))
        real_covs.push_back(normalized_sample_covariance(set));
    std::string reported;
    for (int omega : {4, 16})
    {
        const auto [oh, ov] = split_oversampling(omega);
        const Comparison t = compare_swp_owp(real_covs, 3, tsodft(geom.n_h, geom.n_v, oh, ov, false));
        reported += "; TSODFT w=" + std::to_string(omega) + " (200 cov, K=3): OWP " + fmt("%.4f", t.owp) + " SWP " +
                    fmt("%.4f", t.swp) + " p=" + fmt("%.2g", t.p);
    }
    const bool ok = max_error <= 1.0 / std::sqrt(2.0) && covs.size() >= 200 && radial.swp < radial.owp &&
                    radial.p < 0.01;
    return {ok, "radial codebook max error " + fmt("%.3f", max_error) + ", 300 cov: mean d_p OWP " +
                    fmt("%.4f", radial.owp) + " SWP " + fmt("%.4f", radial.swp) + ", wins " +
                    std::to_string(radial.wins) + "/" + std::to_string(radial.wins + radial.losses) + ", p=" +
                    fmt("%.2g", radial.p) + reported};
}

// ---------------------------------------------------------------------------------------------------------------

BitAllocationParams alloc(int m, double eta)
{
    BitAllocationParams p;
    p.m = m;
    p.b_strong = 3;
    p.b_weak = 2;
    p.eta = eta;
    return p;
}

Outcome bit_counts()
{
    const int e5 = bit_count(SubbandScheme::EXT2, 8, alloc(5, 2.0));
    const int e6 = bit_count(SubbandScheme::EXT2, 8, alloc(6, 2.0));
    const int e7 = bit_count(SubbandScheme::EXT2, 8, alloc(7, 2.0));
    const int i2 = bit_count(SubbandScheme::INT5, 8, alloc(2, 5.0));
    const int i6 = bit_count(SubbandScheme::INT5, 8, alloc(6, 5.0));
    const bool ok = e5 == 24 && e6 == 26 && e7 == 28 && i2 == 24 && i6 == 28;
    return {ok, "EXT2 m=5,6,7 -> " + std::to_string(e5) + ", " + std::to_string(e6) + ", " + std::to_string(e7) +
                    "; INT5 m=2,6 -> " + std::to_string(i2) + ", " + std::to_string(i6)};
}

// ---------------------------------------------------------------------------------------------------------------

double weighted_d2(const CVec &c, const CVec &c_hat, const RVec &s)
{
    const CVec x = s.cast<cplx>().cwiseProduct(c);
    const CVec y = s.cast<cplx>().cwiseProduct(c_hat);
    return 1.0 - std::norm(x.dot(y)) / (x.squaredNorm() * y.squaredNorm());
}

double brute_ext2(const CVec &c, const RVec &s, const BitAllocationParams &p)
{
    const int ref = s(1) > s(0) ? 1 : 0;
    const int other = 1 - ref;
    const int bits = p.m == 1 ? p.b_strong : p.b_weak;
    std::vector<double> amps = {1.0 / std::sqrt(2.0)};
    if (p.m == 1)
        amps.push_back(1.0);
    double best = 2.0;
    for (double a : amps)
        for (int q = 0; q < (1 << bits); ++q)
        {
            CVec ch(2);
            ch(ref) = 1.0;
            ch(other) = std::polar(a, 2.0 * std::numbers::pi * q / (1 << bits));
            best = std::min(best, weighted_d2(c, ch, s));
        }
    return best;
}

double brute_int5(const CVec &c, const RVec &s, const BitAllocationParams &p)
{
    const double lo = std::sqrt(2.0 / 12.0);
    const double hi = std::sqrt(5.0) * lo;
    const int bits = p.m == 1 ? p.b_strong : p.b_weak;
    double best = 2.0;
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1)
        {
            const double a[2] = {b0 ? hi : lo, b1 ? hi : lo};
            const int ref = s(1) * a[1] > s(0) * a[0] ? 1 : 0;
            const int other = 1 - ref;
            for (int q = 0; q < (1 << bits); ++q)
            {
                CVec ch(2);
                ch(ref) = a[ref];
                ch(other) = std::polar(a[other], 2.0 * std::numbers::pi * q / (1 << bits));
                best = std::min(best, weighted_d2(c, ch, s));
            }
        }
    return best;
}

double brute_pcb(const CVec &target, const RVec &weights, const ProductCodebook &pcb)
{
    const std::size_t n = pcb.component.size();
    const int blocks = pcb.blocks;
    const int levels = pcb.phase_levels();
    const Eigen::Index nl = pcb.component.dim();
    std::vector<std::size_t> idx(static_cast<std::size_t>(blocks), 0);
    std::vector<int> ph(static_cast<std::size_t>(blocks), 0);
    double best = 2.0;
    while (true)
    {
        CVec word(pcb.dim());
        for (int b = 0; b < blocks; ++b)
            word.segment(b * nl, nl) = std::polar(1.0, 2.0 * std::numbers::pi * ph[std::size_t(b)] / levels) *
                                       pcb.component.word(idx[std::size_t(b)]);
        const CVec deformed = weights.cast<cplx>().cwiseProduct(word);
        if (deformed.squaredNorm() > 0.0)
            best = std::min(best, 1.0 - std::norm(deformed.dot(target)) /
                                            (deformed.squaredNorm() * target.squaredNorm()));
        int pos = 0;
        for (; pos < blocks; ++pos)
        {
            if (++idx[std::size_t(pos)] < n)
                break;
            idx[std::size_t(pos)] = 0;
        }
        if (pos < blocks)
            continue;
        int q = 1;
        for (; q < blocks; ++q)
        {
            if (++ph[std::size_t(q)] < levels)
                break;
            ph[std::size_t(q)] = 0;
        }
        if (q >= blocks)
            break;
    }
    return best;
}

Outcome quantizer_oracles()
{
    Rng rng(substream_seed(2024, 6));
    const double tol = 1e-12;
    int line_ok = 0, pcb_ok = 0, ext2_ok = 0, int5_ok = 0;
    const LineCodebook cb = tsodft(4, 2, 2, 2, true);
    for (int t = 0; t < 100; ++t)
    {
        const CVec u = rng.cnormal_vector(cb.dim());
        std::size_t best = 0;
        double best_d = 2.0;
        for (std::size_t i = 0; i < cb.size(); ++i)
        {
            const double d = chordal_distance2(u, cb.word(i));
            if (d < best_d)
            {
                best_d = d;
                best = i;
            }
        }
        const QuantizeResult q = quantize_line(u, cb);
        line_ok += q.indices.at(0) == best && std::abs(q.distortion - best_d) <= tol;
    }
    for (int t = 0; t < 100; ++t)
    {
        const ProductCodebook pcb = t % 2 == 0 ? ProductCodebook(bloch_codebook(16), 2, 3)
                                               : ProductCodebook(bloch_codebook(8), 3, 2);
        const CVec target = rng.cnormal_vector(pcb.dim());
        RVec w(pcb.dim());
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w(i) = rng.uniform(0.2, 1.0);
        pcb_ok += std::abs(pcb_quantize(target, w, pcb).distortion - brute_pcb(target, w, pcb)) <= tol;
    }
    for (int t = 0; t < 100; ++t)
    {
        const CVec c = rng.cnormal_vector(2);
        RVec s(2);
        s << rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0);
        const BitAllocationParams pe = alloc(t % 2, 2.0);
        ext2_ok += std::abs(quantize_ext2(c, s, pe).distortion - brute_ext2(c, s, pe)) <= tol;
        const BitAllocationParams pi = alloc(t % 3 == 0 ? 0 : 1, 5.0);
        int5_ok += std::abs(quantize_int5(c, s, pi).distortion - brute_int5(c, s, pi)) <= tol;
    }
    const bool ok = line_ok == 100 && pcb_ok == 100 && ext2_ok == 100 && int5_ok == 100;
    return {ok, "exact matches out of 100: quantize_line " + std::to_string(line_ok) + ", pcb_quantize " +
                    std::to_string(pcb_ok) + ", EXT2 " + std::to_string(ext2_ok) + ", INT5 " + std::to_string(int5_ok)};
}

// ---------------------------------------------------------------------------------------------------------------

Outcome default_orderings(const PresetRun *run)
{
    if (run == nullptr)
        return {false, "default preset did not run"};
    std::map<std::string, double> d_b;
    std::map<double, std::map<std::string, double>> se;
    for (const ReportRow &r : run->report.rows)
    {
        if (r.experiment == "subband" && r.D_B)
            d_b[r.subband.substr(0, r.subband.find('('))] = *r.D_B;
        if (r.experiment == "spectral_efficiency" && r.se && r.snr_db)
            se[*r.snr_db][r.wideband] = *r.se;
    }
    std::string detail;
    bool ok = d_b.count("PCB") && d_b.count("INT5") && d_b.count("EXT2") && se.size() == 3;
    if (!ok)
        return {false, "default report lacks the expected rows"};
    detail = "D_B PCB " + fmt("%.4f", d_b["PCB"]) + ", INT5 " + fmt("%.4f", d_b["INT5"]) + ", EXT2 " +
             fmt("%.4f", d_b["EXT2"]);
    std::string broken;
    if (!(d_b["PCB"] <= d_b["INT5"]))
        broken += " PCB > INT5;";
    if (!(d_b["INT5"] <= d_b["EXT2"]))
        broken += " INT5 > EXT2;";
    for (auto &[snr, curve] : se)
    {
        detail += "; SE@" + fmt("%g", snr) + "dB perfect " + fmt("%.3f", curve["perfect"]) + " SWP " +
                  fmt("%.3f", curve["SWP"]) + " OWP " + fmt("%.3f", curve["OWP"]) + " IND " +
                  fmt("%.3f", curve["IND-pi"]);
        if (!(curve["SWP"] >= curve["OWP"] && curve["OWP"] >= curve["IND-pi"]))
            broken += " SE order at " + fmt("%g", snr) + " dB;";
        if (!(curve["perfect"] >= std::max({curve["SWP"], curve["OWP"], curve["IND-pi"]})))
            broken += " perfect-CSI dominance at " + fmt("%g", snr) + " dB;";
    }
    detail += "; runtime " + fmt("%.1f", run->seconds) + " s";
    if (run->seconds >= 600.0)
        broken += " runtime above 10 min;";
    if (!broken.empty())
        detail += "; broken:" + broken;
    return {broken.empty(), detail};
}

// ---------------------------------------------------------------------------------------------------------------

Outcome radial_alignment()
{
    Rng rng(substream_seed(2024, 8));
    const Eigen::Index n = 4;
    const Eigen::Index m = 2;
    const LineCodebook base = random_codebook(rng, n, 1024, "radial");
    const double eps = 0.3;
    CVec u_s = CVec::Zero(n);
    u_s.head(m) = rng.unit_vector(m);
    CVec u_o = CVec::Zero(n);
    u_o.tail(n - m) = rng.unit_vector(n - m);
    const CVec u = eps * u_o + std::sqrt(1.0 - eps * eps) * u_s;

    const int samples = 10000;
    CMat scatter = CMat::Zero(m, m);
    double max_error = 0.0;
    for (int t = 0; t < samples; ++t)
    {
        // A Haar-rotated copy of the codebook makes the error distribution rotationally invariant around u.
        const CMat q = rng.haar_unitary(n);
        const QuantizeResult r = quantize_line(q.adjoint() * u, base);
        const CVec v = q * base.word(r.indices.at(0));
        max_error = std::max(max_error, chordal_distance(u, v));
        CVec v_s = v.head(m);
        v_s /= v_s.norm();
        scatter += v_s * v_s.adjoint();
    }
    // The mean direction of a distribution of lines is the principal eigenvector of its scatter matrix.
    const CVec mean = principal_eigenvector(scatter / double(samples)).vector;
    const double d = chordal_distance(mean, CVec(u_s.head(m)));
    const bool precondition = eps <= std::sqrt(1.0 - max_error * max_error);
    return {d <= 0.05 && precondition, std::to_string(samples) + " samples, max error r " + fmt("%.3f", max_error) +
                                           ", eps " + fmt("%.2f", eps) + ", mean-direction chordal distance " +
                                           fmt("%.4f", d)};
}

// ---------------------------------------------------------------------------------------------------------------

Outcome determinism(const std::vector<PresetRun> &runs, const std::vector<ExperimentConfig> &configs)
{
    std::string mismatches;
    for (std::size_t i = 0; i < runs.size(); ++i)
    {
        const int threads = 2 + static_cast<int>(i % 3);
        if (report_csv(run_experiment(configs[i], threads)) != runs[i].csv)
            mismatches += " " + runs[i].name + "@" + std::to_string(threads);
    }
    if (!runs.empty() && report_csv(run_experiment(configs.front(), 1)) != runs.front().csv)
        mismatches += " " + runs.front().name + " rerun";
    return {mismatches.empty() && !runs.empty(),
            std::to_string(runs.size()) + " presets rerun with 2 to 4 threads against the 1-thread CSV" +
                (mismatches.empty() ? ", all byte-identical" : "; differing:" + mismatches)};
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"csiq acceptance criteria"};
    std::string preset_dir = "presets";
    app.add_option("--presets", preset_dir, "Directory holding the shipped preset configurations")->check(CLI::ExistingDirectory);
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    auto report = [&](int id, const std::string &what, auto &&criterion) {
        Outcome o;
        try
        {
            o = criterion();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s: %s\n", o.ok ? "PASS" : "FAIL", id, what.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.ok ? 0 : 1;
    };

    std::vector<std::filesystem::path> files;
    for (const auto &entry : std::filesystem::directory_iterator(preset_dir))
        if (entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<PresetRun> runs;
    std::vector<ExperimentConfig> configs;
    std::vector<std::string> load_errors;
    for (const auto &file : files)
    {
        try
        {
            std::ifstream in(file);
            std::stringstream ss;
            ss << in.rdbuf();
            ExperimentConfig cfg = parse_config(ss.str());
            const auto t0 = Clock::now();
            PresetRun run;
            run.name = file.stem().string();
            run.report = run_experiment(cfg, 1);
            run.seconds = seconds_since(t0);
            run.csv = report_csv(run.report);
            runs.push_back(std::move(run));
            configs.push_back(std::move(cfg));
        }
        catch (const std::exception &e)
        {
            load_errors.push_back(file.filename().string() + ": " + e.what());
        }
    }
    const PresetRun *default_run = nullptr;
    for (const PresetRun &r : runs)
        if (r.name == "default")
            default_run = &r;

    report(1, "decomposition identity", [&] { return decomposition_identity(); });
    report(2, "distortion bounds for OWP and SWP", [&] { return distortion_bounds(runs, load_errors); });
    report(3, "isometry of orthonormal bases", [&] { return isometry(); });
    report(4, "SWP projection distortion below OWP", [&] { return sequential_ordering(); });
    report(5, "subband bit counts", [&] { return bit_counts(); });
    report(6, "quantizer optimality oracles", [&] { return quantizer_oracles(); });
    report(7, "scheme orderings at the default preset", [&] { return default_orderings(default_run); });
    report(8, "radial alignment of projected quantization errors", [&] { return radial_alignment(); });
    report(9, "determinism across reruns and thread counts", [&] { return determinism(runs, configs); });
    std::printf("%d of 9 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
