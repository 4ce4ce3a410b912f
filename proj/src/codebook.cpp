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

#include "csiq/codebook.hpp"
#include "csiq/binary_io.hpp"
#include "csiq/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace csiq
{

using json = nlohmann::json;

namespace
{

constexpr double unit_norm_tol = 1e-12;
constexpr double duplicate_tol = 1e-9;
constexpr std::size_t gram_check_limit = 4096;

bool near_duplicate(const CVec &a, const CVec &b)
{
    const cplx ip = b.dot(a);
    const double mag = std::abs(ip);
    if (mag < 1.0 - 1e-6)
        return false;
    // Direct difference after phase alignment is accurate where 1 - |ip|^2 is not.
    const cplx ph = mag > 0.0 ? ip / mag : cplx(1.0);
    return (a - ph * b).norm() < duplicate_tol;
}

void check_duplicates(const CMat &w)
{
    const Eigen::Index n = w.cols();
    if (static_cast<std::size_t>(n) <= gram_check_limit)
    {
        const CMat g = w.adjoint() * w;
        for (Eigen::Index j = 1; j < n; ++j)
            for (Eigen::Index i = 0; i < j; ++i)
                if (std::abs(g(i, j)) > 1.0 - 1e-6 && near_duplicate(w.col(i), w.col(j)))
                    throw std::invalid_argument("LineCodebook: words " + std::to_string(i) + " and " +
                                                std::to_string(j) + " are duplicate lines");
        return;
    }
    // Large codebooks: sort phase-normalized words lexicographically and compare neighbours.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto key = [&](Eigen::Index c, Eigen::Index r) {
        return std::pair{std::round(w(r, c).real() * 1e6), std::round(w(r, c).imag() * 1e6)};
    };
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index r = 0; r < w.rows(); ++r)
        {
            const auto ka = key(a, r);
            const auto kb = key(b, r);
            if (ka != kb)
                return ka < kb;
        }
        return a < b;
    });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (near_duplicate(w.col(order[k - 1]), w.col(order[k])))
            throw std::invalid_argument("LineCodebook: duplicate lines at indices " + std::to_string(order[k - 1]) +
                                        " and " + std::to_string(order[k]));
}

// Complex phase of level j out of m uniform levels.
cplx phase_level(int j, int m)
{
    return std::polar(1.0, 2.0 * std::numbers::pi * j / m);
}

} // namespace

LineCodebook::LineCodebook(CMat words, std::string label, std::string descriptor)
    : words_(std::move(words)), label_(std::move(label)), descriptor_(std::move(descriptor))
{
    if (words_.cols() < 1 || words_.rows() < 1)
        throw std::invalid_argument("LineCodebook: needs at least one word of dimension >= 1");
    if (!words_.allFinite())
        throw std::invalid_argument("LineCodebook: non-finite entry");
    for (Eigen::Index j = 0; j < words_.cols(); ++j)
    {
        const double n = words_.col(j).norm();
        if (std::abs(n - 1.0) > unit_norm_tol)
            throw std::invalid_argument("LineCodebook: word " + std::to_string(j) + " is not unit norm");
        words_.col(j) = phase_normalized(words_.col(j));
    }
    check_duplicates(words_);
}

double LineCodebook::bits() const
{
    return std::log2(static_cast<double>(size()));
}

int LineCodebook::index_bits() const
{
    int b = 0;
    while ((std::size_t{1} << b) < size())
        ++b;
    return b;
}

bool LineCodebook::operator==(const LineCodebook &other) const
{
    return label_ == other.label_ && descriptor_ == other.descriptor_ && words_.rows() == other.words_.rows() &&
           words_.cols() == other.words_.cols() && words_ == other.words_;
}

LineCodebook dft_oversampled(int n, int oversampling)
{
    if (n < 1 || oversampling < 1)
        throw std::invalid_argument("dft_oversampled: n and oversampling must be >= 1");
    const int size = n * oversampling;
    CMat w(n, size);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int m = 0; m < size; ++m)
        for (int k = 0; k < n; ++k)
        {
            // Reduce k*m modulo size first so the phase argument stays exact.
            const long long km = (static_cast<long long>(k) * m) % size;
            w(k, m) = std::polar(scale, 2.0 * std::numbers::pi * static_cast<double>(km) / size);
        }
    json d = {{"type", "dft"}, {"n", n}, {"oversampling", oversampling}};
    return LineCodebook(std::move(w), "dft" + std::to_string(n) + "x" + std::to_string(oversampling), d.dump());
}

LineCodebook binary_chirp_2d()
{
    const double s = std::numbers::sqrt2 / 2.0;
    CMat w(2, 4);
    w << s, s, s, s, s, -s, cplx(0, s), cplx(0, -s);
    return LineCodebook(std::move(w), "chirp2", json{{"type", "chirp2"}}.dump());
}

LineCodebook bloch_codebook(std::size_t size)
{
    if (size < 1 || size > codebook_size_cap)
        throw std::invalid_argument("bloch_codebook: size must be in [1, cap]");
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    CMat w(2, static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i)
    {
        // z runs over cell centres of [-1, 1]; the poles are excluded so no two points coincide.
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(size);
        const double theta = std::acos(std::clamp(z, -1.0, 1.0));
        const double phi = golden * static_cast<double>(i);
        w(0, static_cast<Eigen::Index>(i)) = std::cos(theta / 2.0);
        w(1, static_cast<Eigen::Index>(i)) = std::polar(std::sin(theta / 2.0), phi);
    }
    json d = {{"type", "bloch"}, {"size", size}};
    return LineCodebook(std::move(w), "bloch" + std::to_string(size), d.dump());
}

LineCodebook tensored(const std::vector<LineCodebook> &parts, std::size_t cap)
{
    if (parts.empty())
        throw std::invalid_argument("tensored: needs at least one part");
    std::size_t size = 1;
    for (const auto &p : parts)
    {
        if (size > cap / p.size())
            throw std::invalid_argument("tensored: codebook size exceeds cap of " + std::to_string(cap) + " words");
        size *= p.size();
    }
    if (size > cap)
        throw std::invalid_argument("tensored: codebook size exceeds cap of " + std::to_string(cap) + " words");

    CMat acc = parts.front().words();
    for (std::size_t k = 1; k < parts.size(); ++k)
    {
        const CMat &b = parts[k].words();
        CMat next(acc.rows() * b.rows(), acc.cols() * b.cols());
        for (Eigen::Index i = 0; i < acc.cols(); ++i)
            for (Eigen::Index j = 0; j < b.cols(); ++j)
            {
                const Eigen::Index col = i * b.cols() + j;
                for (Eigen::Index r = 0; r < acc.rows(); ++r)
                    next.col(col).segment(r * b.rows(), b.rows()) = acc(r, i) * b.col(j);
            }
        acc = std::move(next);
    }
    json d = {{"type", "tensored"}, {"parts", json::array()}};
    std::string label;
    for (const auto &p : parts)
    {
        d["parts"].push_back(json::parse(p.descriptor()));
        label += (label.empty() ? "" : "*") + p.label();
    }
    return LineCodebook(std::move(acc), label, d.dump());
}

LineCodebook tsodft(int n_h, int n_v, int oversampling_h, int oversampling_v, bool with_polarization, std::size_t cap)
{
    std::vector<LineCodebook> parts;
    if (with_polarization)
        parts.push_back(binary_chirp_2d());
    parts.push_back(dft_oversampled(n_h, oversampling_h));
    parts.push_back(dft_oversampled(n_v, oversampling_v));
    LineCodebook t = tensored(parts, cap);
    json d = {{"type", "tsodft"}, {"n_h", n_h}, {"n_v", n_v}, {"oversampling_h", oversampling_h},
              {"oversampling_v", oversampling_v}, {"polarization", with_polarization}};
    std::string label = "tsodft" + std::to_string(n_h) + "x" + std::to_string(n_v) + "_o" +
                        std::to_string(oversampling_h) + "x" + std::to_string(oversampling_v) +
                        (with_polarization ? "_pol" : "");
    return LineCodebook(t.words(), std::move(label), d.dump());
}

std::pair<int, int> split_oversampling(int total)
{
    if (total < 1 || (total & (total - 1)) != 0)
        throw std::invalid_argument("split_oversampling: total oversampling must be a power of two");
    int n = 0;
    while ((1 << n) < total)
        ++n;
    const int nh = (n + 1) / 2;
    return {1 << nh, 1 << (n - nh)};
}

QuantizeResult quantize_line(const CVec &u, const LineCodebook &cb)
{
    if (u.size() != cb.dim())
        throw std::invalid_argument("quantize_line: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                    std::to_string(cb.dim()) + ")");
    const double nu = u.squaredNorm();
    if (!(nu > 0.0))
        throw std::domain_error("quantize_line: zero input");
    const CVec ips = cb.words().adjoint() * u;
    Eigen::Index best = 0;
    double best_val = std::norm(ips(0));
    for (Eigen::Index i = 1; i < ips.size(); ++i)
    {
        const double v = std::norm(ips(i));
        if (v > best_val)
        {
            best_val = v;
            best = i;
        }
    }
    QuantizeResult r;
    r.indices = {static_cast<std::size_t>(best)};
    r.word = cb.words().col(best);
    r.distortion = chordal_distance2(u, r.word);
    return r;
}

std::vector<std::size_t> nearest_words(const CVec &u, const LineCodebook &cb, std::size_t count)
{
    if (u.size() != cb.dim())
        throw std::invalid_argument("nearest_words: dimension mismatch");
    const CVec ips = cb.words().adjoint() * u;
    std::vector<std::size_t> order(cb.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    count = std::min(count, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double va = std::norm(ips(static_cast<Eigen::Index>(a)));
                          const double vb = std::norm(ips(static_cast<Eigen::Index>(b)));
                          return va != vb ? va > vb : a < b;
                      });
    order.resize(count);
    return order;
}

namespace
{

CVec principal_direction(const CMat &corr)
{
    try
    {
        return principal_eigenvector(corr, 1e-12, 2000).vector;
    }
    catch (const NonConvergenceError &)
    {
        return eigh_jacobi(corr).vectors.col(0);
    }
}

// Assign every sample to its nearest center; returns mean squared chordal distortion.
double assign(const std::vector<CVec> &samples, const CMat &centers, std::vector<std::size_t> &cell,
              std::vector<double> &dist)
{
    double total = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s)
    {
        const CVec ips = centers.adjoint() * samples[s];
        Eigen::Index best = 0;
        double bv = std::norm(ips(0));
        for (Eigen::Index i = 1; i < ips.size(); ++i)
            if (std::norm(ips(i)) > bv)
            {
                bv = std::norm(ips(i));
                best = i;
            }
        cell[s] = static_cast<std::size_t>(best);
        dist[s] = std::clamp(1.0 - bv, 0.0, 1.0);
        total += dist[s];
    }
    return total / static_cast<double>(samples.size());
}

} // namespace

LloydResult lloyd_train(const std::vector<CVec> &samples_in, std::size_t size, int iterations, std::uint64_t seed,
                        const std::string &label)
{
    if (samples_in.empty())
        throw std::invalid_argument("lloyd_train: no samples");
    if (size < 1 || size > samples_in.size())
        throw std::invalid_argument("lloyd_train: size must be in [1, sample count]");
    if (iterations < 0)
        throw std::invalid_argument("lloyd_train: negative iteration count");
    const Eigen::Index dim = samples_in.front().size();
    std::vector<CVec> samples;
    samples.reserve(samples_in.size());
    for (const CVec &s : samples_in)
    {
        if (s.size() != dim)
            throw std::invalid_argument("lloyd_train: inconsistent sample dimensions");
        samples.push_back(normalized(s));
    }

    // k-means++ seeding on the Grassmannian.
    Rng rng(seed);
    CMat centers(dim, static_cast<Eigen::Index>(size));
    centers.col(0) = samples[rng.below(samples.size())];
    std::vector<double> d2(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s)
        d2[s] = chordal_distance2(samples[s], centers.col(0));
    for (std::size_t c = 1; c < size; ++c)
    {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        if (!(total > 1e-24))
            throw std::invalid_argument("lloyd_train: fewer distinct lines than the requested codebook size");
        double pick = rng.uniform() * total;
        std::size_t chosen = samples.size() - 1;
        for (std::size_t s = 0; s < samples.size(); ++s)
        {
            if (d2[s] <= 0.0)
                continue;
            if (pick < d2[s])
            {
                chosen = s;
                break;
            }
            pick -= d2[s];
        }
        while (d2[chosen] <= 0.0)
            --chosen;
        centers.col(static_cast<Eigen::Index>(c)) = samples[chosen];
        for (std::size_t s = 0; s < samples.size(); ++s)
            d2[s] = std::min(d2[s], chordal_distance2(samples[s], centers.col(static_cast<Eigen::Index>(c))));
    }

    std::vector<std::size_t> cell(samples.size());
    std::vector<double> dist(samples.size());
    std::vector<double> trace{assign(samples, centers, cell, dist)};

    for (int it = 0; it < iterations; ++it)
    {
        std::vector<std::size_t> population(size, 0);
        for (std::size_t c : cell)
            ++population[c];

        // Empty cells take the worst-quantized samples, which leave their old cells.
        std::vector<std::size_t> by_error(samples.size());
        std::iota(by_error.begin(), by_error.end(), std::size_t{0});
        std::stable_sort(by_error.begin(), by_error.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
        std::size_t next_worst = 0;
        for (std::size_t c = 0; c < size; ++c)
            if (population[c] == 0)
            {
                while (next_worst < by_error.size() && population[cell[by_error[next_worst]]] <= 1)
                    ++next_worst;
                if (next_worst == by_error.size())
                    break;
                const std::size_t s = by_error[next_worst++];
                --population[cell[s]];
                cell[s] = c;
                population[c] = 1;
            }

        std::vector<CMat> corr(size, CMat::Zero(dim, dim));
        for (std::size_t s = 0; s < samples.size(); ++s)
            corr[cell[s]].noalias() += samples[s] * samples[s].adjoint();
        for (std::size_t c = 0; c < size; ++c)
            if (population[c] > 0)
                centers.col(static_cast<Eigen::Index>(c)) = principal_direction(corr[c]);

        const double d = assign(samples, centers, cell, dist);
        if (d > trace.back() + 1e-12)
            throw std::logic_error("lloyd_train: distortion increased between iterations");
        trace.push_back(d);
        if (trace.back() == trace[trace.size() - 2] && it > 0)
            break;
    }

    for (Eigen::Index c = 0; c < centers.cols(); ++c)
        centers.col(c).normalize();
    json d = {{"type", "lloyd"}, {"size", size}, {"iterations", iterations}, {"seed", seed}, {"samples", samples.size()}};
    return {LineCodebook(std::move(centers), label, d.dump()), std::move(trace)};
}

ProductCodebook::ProductCodebook(LineCodebook comp, int n_blocks, int n_phase_bits)
    : component(std::move(comp)), blocks(n_blocks), phase_bits(n_phase_bits)
{
    if (blocks < 1)
        throw std::invalid_argument("ProductCodebook: blocks must be >= 1");
    if (phase_bits < 0 || phase_bits > 16)
        throw std::invalid_argument("ProductCodebook: phase_bits must be in [0, 16]");
}

int ProductCodebook::bit_count() const
{
    return blocks * component.index_bits() + (blocks - 1) * phase_bits;
}

CVec ProductCodebook::assemble(const std::vector<std::size_t> &indices, const std::vector<int> &phases) const
{
    if (indices.size() != static_cast<std::size_t>(blocks) || phases.size() != static_cast<std::size_t>(blocks))
        throw std::invalid_argument("ProductCodebook::assemble: need one index and one phase per block");
    if (phases.front() != 0)
        throw std::invalid_argument("ProductCodebook::assemble: the first block carries the phase reference");
    const Eigen::Index n = component.dim();
    CVec out(dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(blocks));
    for (int k = 0; k < blocks; ++k)
    {
        const auto i = indices[static_cast<std::size_t>(k)];
        const int p = phases[static_cast<std::size_t>(k)];
        if (i >= component.size() || p < 0 || p >= phase_levels())
            throw std::out_of_range("ProductCodebook::assemble: index or phase out of range");
        out.segment(k * n, n) = scale * phase_level(p, phase_levels()) * component.word(i);
    }
    return out;
}

namespace
{

// One branch-and-bound search for max |sum_k z_k|^2 / sum_k n_k over per-block choices, where
// block k picks component word i (z = phase * p[k][i], n = n[k][i]) and, except block 0, a phase.
class ProductSearch
{
public:
    ProductSearch(std::vector<std::vector<cplx>> p, std::vector<std::vector<double>> n, int levels,
                  std::size_t budget)
        : p_(std::move(p)), n_(std::move(n)), levels_(levels), budget_(budget), blocks_(p_.size())
    {
        amp_.resize(blocks_);
        order_.resize(blocks_);
        for (std::size_t k = 0; k < blocks_; ++k)
        {
            amp_[k].resize(p_[k].size());
            for (std::size_t i = 0; i < p_[k].size(); ++i)
                amp_[k][i] = std::abs(p_[k][i]);
            // Promising words first: largest per-block gain |p|^2 / n.
            order_[k].resize(p_[k].size());
            std::iota(order_[k].begin(), order_[k].end(), std::size_t{0});
            std::stable_sort(order_[k].begin(), order_[k].end(), [&](std::size_t a, std::size_t b) {
                return ratio(k, a) > ratio(k, b);
            });
        }
        phases_.resize(static_cast<std::size_t>(levels_));
        for (int j = 0; j < levels_; ++j)
            phases_[static_cast<std::size_t>(j)] = phase_level(j, levels_);
    }

    void offer(const std::vector<std::size_t> &idx, const std::vector<int> &ph)
    {
        cplx s = 0.0;
        double nn = 0.0;
        for (std::size_t k = 0; k < blocks_; ++k)
        {
            s += phases_[static_cast<std::size_t>(ph[k])] * p_[k][idx[k]];
            nn += n_[k][idx[k]];
        }
        const double v = nn > 0.0 ? std::norm(s) / nn : 0.0;
        if (v > best_ || best_idx_.empty())
        {
            best_ = v;
            best_idx_ = idx;
            best_ph_ = ph;
            rebuild_bounds();
        }
    }

    /// Gradient-linearization ascent: the optimum maximizes Re(e^{-i theta} S) - mu N blockwise
    /// for theta = arg S*, mu = |S*| / (2 N*). Iterating that map never decreases the objective.
    void ascend(double theta, double mu)
    {
        std::vector<std::size_t> idx(blocks_);
        std::vector<int> ph(blocks_);
        for (int it = 0; it < 50; ++it)
        {
            const cplx rot = std::polar(1.0, -theta);
            for (std::size_t k = 0; k < blocks_; ++k)
            {
                double bv = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < p_[k].size(); ++i)
                {
                    const int lv = k == 0 ? 1 : levels_;
                    for (int j = 0; j < lv; ++j)
                    {
                        const double v = (rot * phases_[static_cast<std::size_t>(j)] * p_[k][i]).real() - mu * n_[k][i];
                        if (v > bv)
                        {
                            bv = v;
                            idx[k] = i;
                            ph[k] = j;
                        }
                    }
                }
            }
            cplx s = 0.0;
            double nn = 0.0;
            for (std::size_t k = 0; k < blocks_; ++k)
            {
                s += phases_[static_cast<std::size_t>(ph[k])] * p_[k][idx[k]];
                nn += n_[k][idx[k]];
            }
            const double before = best_;
            offer(idx, ph);
            if (!(nn > 0.0) || std::abs(s) == 0.0)
                break;
            const double nt = std::arg(s);
            const double nm = std::abs(s) / (2.0 * nn);
            if (std::abs(nt - theta) < 1e-15 && std::abs(nm - mu) < 1e-15 && best_ <= before)
                break;
            theta = nt;
            mu = nm;
        }
    }

    void run()
    {
        std::vector<std::size_t> idx(blocks_);
        std::vector<int> ph(blocks_, 0);
        dfs(0, 0.0, 0.0, idx, ph);
    }

    double best() const { return best_; }
    const std::vector<std::size_t> &best_indices() const { return best_idx_; }
    const std::vector<int> &best_phases() const { return best_ph_; }
    bool exhausted_budget() const { return nodes_ > budget_; }

private:
    double ratio(std::size_t k, std::size_t i) const
    {
        const double nn = n_[k][i];
        return nn > 0.0 ? std::norm(p_[k][i]) / nn : (std::norm(p_[k][i]) > 0.0 ? 1e300 : 0.0);
    }

    // Upper envelope of lines 2*lambda*a_i - t*n_i over lambda >= 0, per suffix of blocks, summed.
    struct Piece
    {
        double start; // lambda where this piece begins
        double slope;
        double intercept;
    };

    void rebuild_bounds()
    {
        const double t = best_;
        suffix_.assign(blocks_ + 1, {});
        suffix_[blocks_] = {Piece{0.0, 0.0, 0.0}};
        std::vector<std::vector<Piece>> env(blocks_);
        for (std::size_t k = 0; k < blocks_; ++k)
        {
            // Lines sorted by slope, keep max intercept per slope.
            std::vector<std::pair<double, double>> lines;
            lines.reserve(p_[k].size());
            for (std::size_t i = 0; i < p_[k].size(); ++i)
                lines.emplace_back(2.0 * amp_[k][i], -t * n_[k][i]);
            std::sort(lines.begin(), lines.end());
            std::vector<std::pair<double, double>> hull;
            for (const auto &ln : lines)
            {
                if (!hull.empty() && hull.back().first == ln.first)
                    hull.pop_back(); // same slope, larger intercept comes later in sort order
                while (hull.size() >= 2)
                {
                    const auto &l1 = hull[hull.size() - 2];
                    const auto &l2 = hull.back();
                    // l2 is useless if l1 and ln intersect before l1 and l2 do.
                    const double x12 = (l1.second - l2.second) / (l2.first - l1.first);
                    const double x13 = (l1.second - ln.second) / (ln.first - l1.first);
                    if (x13 <= x12)
                        hull.pop_back();
                    else
                        break;
                }
                hull.push_back(ln);
            }
            // Convert to pieces on lambda >= 0.
            std::vector<Piece> pieces;
            for (std::size_t h = 0; h < hull.size(); ++h)
            {
                double start = 0.0;
                if (h > 0)
                    start = (hull[h - 1].second - hull[h].second) / (hull[h].first - hull[h - 1].first);
                double end = std::numeric_limits<double>::infinity();
                if (h + 1 < hull.size())
                    end = (hull[h].second - hull[h + 1].second) / (hull[h + 1].first - hull[h].first);
                if (end <= 0.0)
                    continue;
                pieces.push_back({std::max(0.0, start), hull[h].first, hull[h].second});
            }
            env[k] = std::move(pieces);
        }
        for (std::size_t k = blocks_; k-- > 0;)
            suffix_[k] = merge(env[k], suffix_[k + 1]);
    }

    static std::vector<Piece> merge(const std::vector<Piece> &a, const std::vector<Piece> &b)
    {
        std::vector<Piece> out;
        std::size_t i = 0;
        std::size_t j = 0;
        double at = 0.0;
        while (true)
        {
            out.push_back({at, a[i].slope + b[j].slope, a[i].intercept + b[j].intercept});
            const double na = i + 1 < a.size() ? a[i + 1].start : std::numeric_limits<double>::infinity();
            const double nb = j + 1 < b.size() ? b[j + 1].start : std::numeric_limits<double>::infinity();
            if (std::isinf(na) && std::isinf(nb))
                break;
            if (na <= nb)
            {
                ++i;
                if (na == nb)
                    ++j;
                at = na;
            }
            else
            {
                ++j;
                at = nb;
            }
        }
        return out;
    }

    // max over completions of blocks k.. of (x + sum a)^2 - t (nn + sum n).
    double bound(std::size_t k, double x, double nn) const
    {
        const auto &pieces = suffix_[k];
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < pieces.size(); ++q)
        {
            const double lo = pieces[q].start;
            const double hi = q + 1 < pieces.size() ? pieces[q + 1].start : std::numeric_limits<double>::infinity();
            const double lam = std::clamp(x + pieces[q].slope / 2.0, lo, hi);
            const double g = -lam * lam + (2.0 * x + pieces[q].slope) * lam + pieces[q].intercept;
            best = std::max(best, g);
        }
        return best - best_ * nn;
    }

    void dfs(std::size_t k, cplx s, double nn, std::vector<std::size_t> &idx, std::vector<int> &ph)
    {
        if (++nodes_ > budget_)
            return;
        const double scale = std::max(1e-300, best_ * std::max(nn, 1e-300));
        if (k > 0 && bound(k, std::abs(s), nn) <= 1e-13 * scale)
            return;
        const bool last = k + 1 == blocks_;
        const int lv = k == 0 ? 1 : levels_;
        for (std::size_t i : order_[k])
        {
            idx[k] = i;
            for (int j = 0; j < lv; ++j)
            {
                ph[k] = j;
                const cplx s2 = s + phases_[static_cast<std::size_t>(j)] * p_[k][i];
                const double n2 = nn + n_[k][i];
                if (last)
                {
                    const double v = n2 > 0.0 ? std::norm(s2) / n2 : 0.0;
                    if (v > best_)
                        offer(idx, ph);
                }
                else
                    dfs(k + 1, s2, n2, idx, ph);
                if (nodes_ > budget_)
                    return;
            }
        }
    }

    std::vector<std::vector<cplx>> p_;
    std::vector<std::vector<double>> n_;
    std::vector<std::vector<double>> amp_;
    std::vector<std::vector<std::size_t>> order_;
    std::vector<cplx> phases_;
    int levels_;
    std::size_t budget_;
    std::size_t blocks_;
    std::size_t nodes_ = 0;
    double best_ = 0.0;
    std::vector<std::size_t> best_idx_;
    std::vector<int> best_ph_;
    std::vector<std::vector<Piece>> suffix_;
};

} // namespace

QuantizeResult pcb_quantize(const CVec &target, const RVec &weights, const ProductCodebook &pcb, std::size_t node_budget)
{
    const Eigen::Index nl = pcb.component.dim();
    if (target.size() != pcb.dim() || weights.size() != pcb.dim())
        throw std::invalid_argument("pcb_quantize: target/weights length must equal blocks * component dimension");
    if ((weights.array() < 0.0).any())
        throw std::invalid_argument("pcb_quantize: negative weight");
    const double tn = target.squaredNorm();
    if (!(tn > 0.0))
        throw std::domain_error("pcb_quantize: zero target");

    const auto blocks = static_cast<std::size_t>(pcb.blocks);
    const CMat &words = pcb.component.words();
    std::vector<std::vector<cplx>> p(blocks);
    std::vector<std::vector<double>> n(blocks);
    for (std::size_t k = 0; k < blocks; ++k)
    {
        const Eigen::Index off = static_cast<Eigen::Index>(k) * nl;
        const CMat weighted = weights.segment(off, nl).cast<cplx>().asDiagonal() * words;
        const CVec ip = weighted.adjoint() * target.segment(off, nl); // conj of t^H W c
        p[k].resize(pcb.component.size());
        n[k].resize(pcb.component.size());
        for (std::size_t i = 0; i < pcb.component.size(); ++i)
        {
            p[k][i] = std::conj(ip(static_cast<Eigen::Index>(i)));
            n[k][i] = weighted.col(static_cast<Eigen::Index>(i)).squaredNorm();
        }
    }
    bool any_weight = false;
    for (std::size_t k = 0; k < blocks; ++k)
        for (double v : n[k])
            any_weight = any_weight || v > 0.0;
    if (!any_weight)
        throw std::domain_error("pcb_quantize: all weights are zero");

    ProductSearch search(p, n, pcb.phase_levels(), node_budget);

    // Baseline incumbent: independent per-block quantization with zero phases.
    std::vector<std::size_t> base_idx(blocks);
    std::vector<int> zero_ph(blocks, 0);
    for (std::size_t k = 0; k < blocks; ++k)
    {
        double bv = -1.0;
        for (std::size_t i = 0; i < p[k].size(); ++i)
        {
            const double v = n[k][i] > 0.0 ? std::norm(p[k][i]) / n[k][i] : 0.0;
            if (v > bv)
            {
                bv = v;
                base_idx[k] = i;
            }
        }
    }
    search.offer(base_idx, zero_ph);
    const double baseline = search.best();
    search.ascend(0.0, 0.0);
    for (int j = 0; j < 4; ++j)
        search.ascend(2.0 * std::numbers::pi * j / 4.0, std::sqrt(baseline) / 2.0);
    search.run();

    QuantizeResult r;
    r.indices = search.best_indices();
    r.phase_indices = search.best_phases();
    r.word = pcb.assemble(r.indices, r.phase_indices);
    r.distortion = chordal_distance2(target, weights.cast<cplx>().cwiseProduct(r.word));
    r.exact = !search.exhausted_budget();
    if (search.best() + 1e-12 < baseline)
        throw std::logic_error("pcb_quantize: search result worse than the zero-phase baseline");
    return r;
}

void write_codebook(std::ostream &os, const LineCodebook &cb, bool parametric_only)
{
    if (parametric_only)
    {
        const auto type = json::parse(cb.descriptor()).value("type", std::string{});
        if (type == "lloyd" || type.empty())
            throw std::invalid_argument("write_codebook: codebook '" + cb.label() + "' is not parametric");
    }
    binary::put_magic(os, "CSIQCB01");
    binary::put_string(os, cb.label());
    binary::put_string(os, cb.descriptor());
    binary::put<std::uint32_t>(os, static_cast<std::uint32_t>(cb.dim()));
    binary::put<std::uint64_t>(os, static_cast<std::uint64_t>(cb.size()));
    binary::put<std::uint8_t>(os, parametric_only ? 1 : 0);
    if (parametric_only)
        return;
    const CMat &w = cb.words();
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
        {
            binary::put<double>(os, w(i, j).real());
            binary::put<double>(os, w(i, j).imag());
        }
}

LineCodebook read_codebook(std::istream &is)
{
    binary::expect_magic(is, "CSIQCB01");
    std::string label = binary::get_string(is);
    std::string descriptor = binary::get_string(is);
    const auto dim = binary::get<std::uint32_t>(is);
    const auto size = binary::get<std::uint64_t>(is);
    const auto storage = binary::get<std::uint8_t>(is);
    if (storage == 1)
    {
        LineCodebook cb = codebook_from_descriptor(descriptor);
        if (static_cast<std::uint64_t>(cb.size()) != size || static_cast<std::uint32_t>(cb.dim()) != dim)
            throw std::runtime_error("read_codebook: descriptor does not reproduce the recorded shape");
        return LineCodebook(cb.words(), std::move(label), std::move(descriptor));
    }
    if (storage != 0)
        throw std::runtime_error("read_codebook: unknown storage flag");
    if (size > codebook_size_cap || dim == 0 || dim > 4096)
        throw std::runtime_error("read_codebook: implausible shape");
    CMat w(dim, static_cast<Eigen::Index>(size));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
        {
            const double re = binary::get<double>(is);
            const double im = binary::get<double>(is);
            w(i, j) = {re, im};
        }
    return LineCodebook(std::move(w), std::move(label), std::move(descriptor));
}

LineCodebook codebook_from_descriptor(const std::string &descriptor)
{
    const json d = json::parse(descriptor);
    const std::string type = d.at("type").get<std::string>();
    if (type == "dft")
        return dft_oversampled(d.at("n").get<int>(), d.at("oversampling").get<int>());
    if (type == "chirp2")
        return binary_chirp_2d();
    if (type == "bloch")
        return bloch_codebook(d.at("size").get<std::size_t>());
    if (type == "tsodft")
        return tsodft(d.at("n_h").get<int>(), d.at("n_v").get<int>(), d.at("oversampling_h").get<int>(),
                      d.at("oversampling_v").get<int>(), d.at("polarization").get<bool>());
    if (type == "tensored")
    {
        std::vector<LineCodebook> parts;
        for (const auto &p : d.at("parts"))
            parts.push_back(codebook_from_descriptor(p.dump()));
        return tensored(parts);
    }
    throw std::invalid_argument("codebook_from_descriptor: type '" + type + "' is not parametric");
}

} // namespace csiq
