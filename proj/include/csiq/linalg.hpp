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

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace csiq
{

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Raised by orthonormalize() when a column is (numerically) in the span of its predecessors.
class DegenerateBasisError : public std::runtime_error
{
public:
    DegenerateBasisError(std::size_t column, double pivot);
    std::size_t column() const noexcept { return column_; }
    double pivot() const noexcept { return pivot_; }

private:
    std::size_t column_;
    double pivot_;
};

/// Iterative solver hit its iteration cap.
class NonConvergenceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Hermitian positive semi-definite matrix, validated on construction.
class HermitianPSD
{
public:
    static constexpr double hermitian_tol = 1e-12;
    static constexpr double psd_tol = 1e-10;

    /// Validates symmetry (relative to the largest entry) and the smallest eigenvalue.
    explicit HermitianPSD(CMat m);

    /// Skips the eigenvalue check; symmetry is still enforced by averaging with the adjoint.
    static HermitianPSD trusted(CMat m);

    const CMat &matrix() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }
    double trace() const { return m_.trace().real(); }

private:
    struct TrustedTag
    {
    };
    HermitianPSD(CMat m, TrustedTag);
    CMat m_;
};

/// Leading eigenpairs; columns orthonormal, values descending.
struct EigenBasis
{
    CMat vectors;
    RVec values;

    /// Singular values of the source matrix (sqrt of the clamped eigenvalues).
    RVec sigmas() const;
};

// Chordal distance between the lines spanned by x and y. Throws std::domain_error on a
// zero-norm argument and std::invalid_argument on a length mismatch.
double chordal_distance(const CVec &x, const CVec &y);

/// Squared chordal distance, without the final square root.
double chordal_distance2(const CVec &x, const CVec &y);

/// Squared chordal distance between diag(weights)*c and diag(weights)*c_hat.
double weighted_chordal(const CVec &c, const CVec &c_hat, const RVec &weights);

/// Gram-Schmidt in column order (two passes); equals the Q factor of a QR decomposition with
/// positive real diagonal. Pivots below pivot_tol raise DegenerateBasisError.
CMat orthonormalize(const CMat &v, double pivot_tol = 1e-10);

/// Orthogonal projector V (V^H V)^{-1} V^H onto the column span of v.
CMat projector(const CMat &v);

/// Moore-Penrose pseudo-inverse via the eigendecomposition of V^H V; eigenvalues below
/// rcond * max are treated as zero.
CMat pseudo_inverse(const CMat &v, double rcond = 1e-12);

/// Orthogonal projector onto the column span of v, tolerating rank deficiency.
CMat span_projector(const CMat &v, double rcond = 1e-12);

/// Max-abs deviation of W^H W from the identity.
double orthonormality_error(const CMat &w);

/// Rotates x so that its largest-magnitude entry (first one within a relative 1e-9 of the
/// maximum) is real and positive.
CVec phase_normalized(const CVec &x);
void phase_normalize_columns(CMat &m);

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
/// Eigenvalues descending (stable with respect to the original diagonal order on exact ties),
/// eigenvectors phase-normalized.
EigenBasis eigh_jacobi(const CMat &a, int max_sweeps = 100);

/// The K largest eigenpairs of R.
EigenBasis eigh_topk(const HermitianPSD &r, Eigen::Index k);

struct PrincipalEigen
{
    CVec vector;
    double value;
    int iterations;
};

/// Power iteration from a fixed, seeded perturbation of e_1. Converged when
/// ||R e - lambda e|| <= tol * trace(R). Throws NonConvergenceError at the iteration cap.
PrincipalEigen principal_eigenvector(const CMat &r, double tol = 1e-10, int max_iterations = 5000);

/// Unit vector in the direction of x; throws std::domain_error for a zero vector.
CVec normalized(const CVec &x);

} // namespace csiq
