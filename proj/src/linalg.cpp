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

#include "csiq/linalg.hpp"
#include "csiq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csiq
{

DegenerateBasisError::DegenerateBasisError(std::size_t column, double pivot)
    : std::runtime_error("orthonormalize: column " + std::to_string(column) +
                         " is linearly dependent on the preceding columns (pivot " + std::to_string(pivot) + ")"),
      column_(column), pivot_(pivot)
{
}

namespace
{

double max_abs(const CMat &m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace

HermitianPSD::HermitianPSD(CMat m)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument("HermitianPSD: matrix must be square");
    if (!m.allFinite())
        throw std::invalid_argument("HermitianPSD: non-finite entry");
    const double scale = std::max(1.0, max_abs(m));
    const double asym = max_abs(m - m.adjoint());
    if (asym > hermitian_tol * scale)
        throw std::invalid_argument("HermitianPSD: matrix is not Hermitian (asymmetry " + std::to_string(asym) + ")");
    m_ = (m + m.adjoint()) * 0.5;
    if (m_.rows() > 0)
    {
        const EigenBasis eb = eigh_jacobi(m_);
        const double lmin = eb.values(eb.values.size() - 1);
        if (lmin < -psd_tol)
            throw std::invalid_argument("HermitianPSD: negative eigenvalue " + std::to_string(lmin));
    }
}

HermitianPSD::HermitianPSD(CMat m, TrustedTag) : m_((m + m.adjoint()) * 0.5) {}

HermitianPSD HermitianPSD::trusted(CMat m)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument("HermitianPSD: matrix must be square");
    return HermitianPSD(std::move(m), TrustedTag{});
}

RVec EigenBasis::sigmas() const
{
    return values.cwiseMax(0.0).cwiseSqrt();
}

double chordal_distance2(const CVec &x, const CVec &y)
{
    if (x.size() != y.size())
        throw std::invalid_argument("chordal_distance: length mismatch");
    const double nx = x.squaredNorm();
    const double ny = y.squaredNorm();
    if (!(nx > 0.0) || !(ny > 0.0))
        throw std::domain_error("chordal_distance: zero-norm argument");
    const double ip = std::norm(x.dot(y));
    return std::clamp(1.0 - ip / (nx * ny), 0.0, 1.0);
}

double chordal_distance(const CVec &x, const CVec &y)
{
    // The residual of y after projection onto x keeps full precision for nearly parallel lines,
    // where sqrt(1 - cos^2) would lose half of the significant digits.
    if (x.size() != y.size())
        throw std::invalid_argument("chordal_distance: length mismatch");
    const double nx = x.norm();
    const double ny = y.norm();
    if (!(nx > 0.0) || !(ny > 0.0))
        throw std::domain_error("chordal_distance: zero-norm argument");
    const CVec xu = x / nx;
    const CVec yu = y / ny;
    return std::min(1.0, (yu - xu * xu.dot(yu)).norm());
}

double weighted_chordal(const CVec &c, const CVec &c_hat, const RVec &weights)
{
    if (c.size() != c_hat.size() || c.size() != weights.size())
        throw std::invalid_argument("weighted_chordal: length mismatch");
    if ((weights.array() < 0.0).any())
        throw std::invalid_argument("weighted_chordal: negative weight");
    const CVec wc = weights.cast<cplx>().cwiseProduct(c);
    const CVec wch = weights.cast<cplx>().cwiseProduct(c_hat);
    return chordal_distance2(wc, wch);
}

CVec normalized(const CVec &x)
{
    const double n = x.norm();
    if (!(n > 0.0))
        throw std::domain_error("normalized: zero vector");
    return x / n;
}

CMat orthonormalize(const CMat &v, double pivot_tol)
{
    CMat w = v;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
    {
        const double original = v.col(j).norm();
        // Two modified Gram-Schmidt passes ("twice is enough").
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < j; ++i)
                w.col(j) -= w.col(i) * w.col(i).dot(w.col(j));
        const double n = w.col(j).norm();
        const double pivot = original > 0.0 ? n / original : 0.0;
        if (!(pivot >= pivot_tol))
            throw DegenerateBasisError(static_cast<std::size_t>(j), pivot);
        w.col(j) /= n;
    }
    return w;
}

CMat projector(const CMat &v)
{
    const CMat g = v.adjoint() * v;
    Eigen::LLT<CMat> llt(g);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("projector: rank-deficient basis");
    const CMat l = llt.matrixL();
    const double gmax = g.diagonal().real().maxCoeff();
    const double lmin = l.diagonal().real().minCoeff();
    if (!(lmin * lmin > 1e-20 * gmax))
        throw std::invalid_argument("projector: rank-deficient basis");
    const CMat p = v * llt.solve(v.adjoint());
    return (p + p.adjoint()) * 0.5;
}

CMat pseudo_inverse(const CMat &v, double rcond)
{
    if (v.cols() == 0)
        return CMat(0, v.rows());
    const EigenBasis eb = eigh_jacobi(v.adjoint() * v);
    const double lmax = std::max(eb.values(0), 0.0);
    RVec inv = RVec::Zero(eb.values.size());
    for (Eigen::Index i = 0; i < inv.size(); ++i)
        if (eb.values(i) > rcond * lmax && eb.values(i) > 0.0)
            inv(i) = 1.0 / eb.values(i);
    return eb.vectors * inv.cast<cplx>().asDiagonal() * eb.vectors.adjoint() * v.adjoint();
}

CMat span_projector(const CMat &v, double rcond)
{
    const CMat p = v * pseudo_inverse(v, rcond);
    return (p + p.adjoint()) * 0.5;
}

double orthonormality_error(const CMat &w)
{
    const CMat g = w.adjoint() * w - CMat::Identity(w.cols(), w.cols());
    return max_abs(g);
}

CVec phase_normalized(const CVec &x)
{
    if (x.size() == 0)
        return x;
    const double mx = x.cwiseAbs().maxCoeff();
    if (!(mx > 0.0))
        return x;
    Eigen::Index pick = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x(i)) >= mx * (1.0 - 1e-9))
        {
            pick = i;
            break;
        }
    const cplx rot = std::conj(x(pick)) / std::abs(x(pick));
    CVec y = x * rot;
    y(pick) = std::abs(y(pick));
    return y;
}

void phase_normalize_columns(CMat &m)
{
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        m.col(j) = phase_normalized(m.col(j));
}

EigenBasis eigh_jacobi(const CMat &a_in, int max_sweeps)
{
    const Eigen::Index n = a_in.rows();
    if (a_in.cols() != n)
        throw std::invalid_argument("eigh_jacobi: matrix must be square");
    CMat a = (a_in + a_in.adjoint()) * 0.5;
    CMat v = CMat::Identity(n, n);
    const double frob = a.norm();

    auto off_norm2 = [&]() {
        double s = 0.0;
        for (Eigen::Index q = 1; q < n; ++q)
            for (Eigen::Index p = 0; p < q; ++p)
                s += std::norm(a(p, q));
        return s;
    };

    int sweep = 0;
    for (;; ++sweep)
    {
        const double off = off_norm2();
        if (off == 0.0 || std::sqrt(off) <= 1e-15 * frob)
            break;
        if (sweep >= max_sweeps)
            throw NonConvergenceError("eigh_jacobi: no convergence after " + std::to_string(max_sweeps) + " sweeps");

        for (Eigen::Index p = 0; p < n - 1; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
            {
                const cplx g = a(p, q);
                const double r = std::abs(g);
                if (r == 0.0)
                    continue;
                const cplx ph = g / r;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // U = diag(1, conj(ph)) * [[c, s], [-s, c]] acting on columns (p, q).
                const cplx upp = c;
                const cplx upq = s;
                const cplx uqp = -s * std::conj(ph);
                const cplx uqq = c * std::conj(ph);

                for (Eigen::Index k = 0; k < n; ++k)
                {
                    const cplx akp = a(k, p);
                    const cplx akq = a(k, q);
                    a(k, p) = akp * upp + akq * uqp;
                    a(k, q) = akp * upq + akq * uqq;
                }
                for (Eigen::Index k = 0; k < n; ++k)
                {
                    const cplx apk = a(p, k);
                    const cplx aqk = a(q, k);
                    a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
                    a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k)
                {
                    const cplx vkp = v(k, p);
                    const cplx vkq = v(k, q);
                    v(k, p) = vkp * upp + vkq * uqp;
                    v(k, q) = vkp * upq + vkq * uqq;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = app - t * r;
                a(q, q) = aqq + t * r;
            }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() > a(j, j).real(); });

    EigenBasis out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
    {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = a(src, src).real();
        out.vectors.col(k) = phase_normalized(v.col(src).normalized());
    }
    return out;
}

EigenBasis eigh_topk(const HermitianPSD &r, Eigen::Index k)
{
    const Eigen::Index n = r.dim();
    if (k < 1 || k > n)
        throw std::invalid_argument("eigh_topk: K must satisfy 1 <= K <= n");
    EigenBasis full = eigh_jacobi(r.matrix());
    EigenBasis out;
    out.vectors = full.vectors.leftCols(k);
    out.values = full.values.head(k);
    return out;
}

PrincipalEigen principal_eigenvector(const CMat &r, double tol, int max_iterations)
{
    const Eigen::Index n = r.rows();
    if (n == 0 || r.cols() != n)
        throw std::invalid_argument("principal_eigenvector: matrix must be square and non-empty");
    const double tr = r.trace().real();
    if (!(tr > 0.0))
        throw std::domain_error("principal_eigenvector: zero matrix");

    Rng rng(0x5EEDC0DEULL);
    CVec x = CVec::Zero(n);
    x(0) = 1.0;
    x += 1e-2 * rng.cnormal_vector(n);
    x.normalize();

    for (int it = 0; it <= max_iterations; ++it)
    {
        const CVec y = r * x;
        const double lambda = x.dot(y).real();
        if ((y - lambda * x).norm() <= tol * tr)
            return {phase_normalized(x), lambda, it};
        const double ny = y.norm();
        if (!(ny > 0.0))
            break;
        x = y / ny;
    }
    throw NonConvergenceError("principal_eigenvector: no convergence after " + std::to_string(max_iterations) +
                              " iterations (near-degenerate top eigenvalue?)");
}

} // namespace csiq
