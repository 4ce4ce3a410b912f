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

#include "csiq/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace csiq
{

/// Default cap on materialized codebook size.
inline constexpr std::size_t codebook_size_cap = std::size_t{1} << 20;

/// Finite set of unit-norm lines. Words are stored as the columns of a dim x size matrix and are
/// phase-normalized on construction.
class LineCodebook
{
public:
    /// Validates unit norm (1e-12) and the absence of duplicate lines (chordal distance < 1e-9).
    LineCodebook(CMat words, std::string label, std::string descriptor = "{}");

    Eigen::Index dim() const noexcept { return words_.rows(); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(words_.cols()); }
    const CMat &words() const noexcept { return words_; }
    CVec word(std::size_t i) const { return words_.col(static_cast<Eigen::Index>(i)); }
    const std::string &label() const noexcept { return label_; }
    /// JSON text describing how the codebook was built.
    const std::string &descriptor() const noexcept { return descriptor_; }
    /// log2(size); the feedback cost of one index.
    double bits() const;
    /// ceil(log2(size)), the width of an index field in a payload.
    int index_bits() const;

    bool operator==(const LineCodebook &other) const;

private:
    CMat words_;
    std::string label_;
    std::string descriptor_;
};

/// Outcome of a line or product quantization. `distortion` is always a squared chordal distance
/// (weighted where the quantizer is weighted).
struct QuantizeResult
{
    std::vector<std::size_t> indices;
    std::vector<int> phase_indices; // product codebooks only; first entry is 0
    CVec word;
    double distortion = 0.0;
    bool exact = true; // product search completed within its node budget
};

LineCodebook dft_oversampled(int n, int oversampling);

/// The four lines (1,1), (1,-1), (1,i), (1,-i) over sqrt(2).
LineCodebook binary_chirp_2d();

/// `size` lines in C^2 spread over the Bloch sphere by a Fibonacci lattice:
/// (cos(theta/2), e^{i phi} sin(theta/2)).
LineCodebook bloch_codebook(std::size_t size);

/// All Kronecker products parts[0] (x) parts[1] (x) ...; index = ((i0*|p1|)+i1)*|p2|+i2...
LineCodebook tensored(const std::vector<LineCodebook> &parts, std::size_t cap = codebook_size_cap);

/// Tensored oversampled DFT codebook for a (n_h x n_v) array, optionally with the 2-bit chirp
/// polarization factor in front (polarization-major ordering).
LineCodebook tsodft(int n_h, int n_v, int oversampling_h, int oversampling_v, bool with_polarization,
                    std::size_t cap = codebook_size_cap);

/// Splits a total oversampling factor (a power of two) between horizontal and vertical,
/// giving the horizontal dimension the larger share.
std::pair<int, int> split_oversampling(int total);

/// Exhaustive nearest line; ties go to the lowest index.
QuantizeResult quantize_line(const CVec &u, const LineCodebook &cb);

/// Indices of the `count` nearest words, nearest first, ties by index.
std::vector<std::size_t> nearest_words(const CVec &u, const LineCodebook &cb, std::size_t count);

struct LloydResult
{
    LineCodebook codebook;
    /// Mean squared chordal distortion after seeding, then after every iteration.
    std::vector<double> distortion_trace;
};

/// Grassmannian Lloyd training with k-means++ seeding. Centroids are principal eigenvectors of
/// the cell correlation matrices; empty cells are re-seeded from the worst-quantized samples.
LloydResult lloyd_train(const std::vector<CVec> &samples, std::size_t size, int iterations, std::uint64_t seed,
                        const std::string &label = "lloyd");

/// Blockwise product codebook: K = blocks * component.dim(); one component word per block and one
/// uniform combining phase (2^phase_bits levels) per block junction.
struct ProductCodebook
{
    LineCodebook component;
    int blocks = 1;
    int phase_bits = 0;

    ProductCodebook(LineCodebook component, int blocks, int phase_bits);

    Eigen::Index dim() const { return component.dim() * blocks; }
    int phase_levels() const { return 1 << phase_bits; }
    /// blocks * index_bits + (blocks - 1) * phase_bits.
    int bit_count() const;
    /// Unit-norm codeword for the given per-block indices and phases (phases[0] must be 0).
    CVec assemble(const std::vector<std::size_t> &indices, const std::vector<int> &phases) const;
};

/// Minimizes d^2(target, diag(weights) * c_hat) over the product codebook. Exact branch and bound
/// over the blocks; `node_budget` bounds the search and the result is flagged inexact if it runs
/// out. Never worse than independent per-block quantization with zero phases.
QuantizeResult pcb_quantize(const CVec &target, const RVec &weights, const ProductCodebook &pcb,
                            std::size_t node_budget = std::size_t{1} << 24);

// Codebook file, little-endian:
//   "CSIQCB01" | str label | str descriptor | u32 dim | u64 size | u8 storage
//   storage 0: size*dim*(f64 re, f64 im), word-major;  storage 1: parametric, rebuilt from descriptor
void write_codebook(std::ostream &os, const LineCodebook &cb, bool parametric_only = false);
LineCodebook read_codebook(std::istream &is);

/// Rebuilds a codebook from a parametric descriptor (dft, chirp, bloch, tensored, tsodft).
LineCodebook codebook_from_descriptor(const std::string &descriptor);

} // namespace csiq
