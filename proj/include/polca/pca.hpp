#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "polca/matrix.hpp"

namespace polca {

struct PcaModel {
    DenseMatrix mean;                 // 1 x D
    DenseMatrix components;           // k x D, rows orthonormal
    std::vector<double> explained_variances;  // k, descending, biased (divide by N)
};

namespace detail {

/// Hestenes one-sided Jacobi: orthogonalizes the columns of A in place,
/// accumulating the right rotations into V. On exit column norms of A are
/// the singular values and V's columns the right singular vectors.
inline void one_sided_jacobi(DenseMatrix& a, DenseMatrix& v) {
    const std::size_t n = a.rows(), d = a.cols();
    v = DenseMatrix::identity(d);
    const double tol = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    app += a(i, p) * a(i, p);
                    aqq += a(i, q) * a(i, q);
                    apq += a(i, p) * a(i, q);
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xp = a(i, p), xq = a(i, q);
                    a(i, p) = c * xp - s * xq;
                    a(i, q) = s * xp + c * xq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        if (!rotated) break;
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues end
/// up on the diagonal, eigenvectors in the columns of v.
inline void symmetric_jacobi(DenseMatrix& c, DenseMatrix& v) {
    const std::size_t d = c.rows();
    v = DenseMatrix::identity(d);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += c(p, q) * c(p, q);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p + 1 < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) {
                const double cpq = c(p, q);
                if (cpq == 0.0) continue;
                const double tau = (c(q, q) - c(p, p)) / (2.0 * cpq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < d; ++i) {
                    const double cip = c(i, p), ciq = c(i, q);
                    c(i, p) = cs * cip - sn * ciq;
                    c(i, q) = sn * cip + cs * ciq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double cpi = c(p, i), cqi = c(q, i);
                    c(p, i) = cs * cpi - sn * cqi;
                    c(q, i) = sn * cpi + cs * cqi;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = cs * vip - sn * viq;
                    v(i, q) = sn * vip + cs * viq;
                }
            }
    }
}

}  // namespace detail

/// Centers X and extracts the top-k principal directions. Narrow data goes
/// through one-sided Jacobi SVD of the centered matrix; wide data through a
/// symmetric Jacobi eigendecomposition of the covariance. Deterministic sign
/// convention: each component's entry of largest magnitude is positive; ties
/// in variance keep original axis order (stable sort).
inline PcaModel pca_fit(const DenseMatrix& x, std::size_t k) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n < 2) throw ShapeError("pca_fit: need at least 2 samples");
    if (k < 1 || k > std::min(n - 1, d))
        throw ShapeError("pca_fit: k=" + std::to_string(k) + " out of range for " + x.shape_str());

    PcaModel m;
    m.mean = col_mean(x);
    DenseMatrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = x(i, j) - m.mean(0, j);

    std::vector<double> variances(d);
    DenseMatrix v;  // d x d, columns are directions
    if (d <= 128) {
        detail::one_sided_jacobi(centered, v);
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += centered(i, j) * centered(i, j);
            variances[j] = s / static_cast<double>(n);
        }
    } else {
        DenseMatrix cov = matmul(transpose(centered), centered);
        for (double& c : cov.data()) c /= static_cast<double>(n);
        detail::symmetric_jacobi(cov, v);
        for (std::size_t j = 0; j < d; ++j) variances[j] = std::max(cov(j, j), 0.0);
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return variances[a] > variances[b]; });

    m.components = DenseMatrix(k, d);
    m.explained_variances.resize(k);
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t j = order[r];
        m.explained_variances[r] = variances[j];
        std::size_t arg = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::abs(v(i, j)) > std::abs(v(arg, j))) arg = i;
        const double sgn = v(arg, j) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) m.components(r, i) = sgn * v(i, j);
    }
    return m;
}

/// (X - mean) * components^T
inline DenseMatrix pca_transform(const PcaModel& m, const DenseMatrix& x) {
    if (x.cols() != m.mean.cols())
        throw ShapeError("pca_transform: width " + x.shape_str() + " != fitted D");
    DenseMatrix centered(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) centered(i, j) = x(i, j) - m.mean(0, j);
    return matmul(centered, transpose(m.components));
}

/// Y * components + mean
inline DenseMatrix pca_inverse(const PcaModel& m, const DenseMatrix& y) {
    if (y.cols() != m.components.rows())
        throw ShapeError("pca_inverse: width " + y.shape_str() + " != k");
    DenseMatrix rec = matmul(y, m.components);
    for (std::size_t i = 0; i < rec.rows(); ++i)
        for (std::size_t j = 0; j < rec.cols(); ++j) rec(i, j) += m.mean(0, j);
    return rec;
}

}  // namespace polca
