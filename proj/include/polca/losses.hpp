#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "polca/autodiff.hpp"
#include "polca/matrix.hpp"

namespace polca {

inline constexpr double kNormClamp = 1e-12;
inline constexpr double kComEpsilon = 0.25;

struct LossWeights {
    double alpha = 1e-2;  // L_ort
    double beta = 1e-2;   // L_com
    double gamma = 1e-7;  // L_var
    bool use_class = false;
};

struct LossReport {
    std::size_t step = 0;
    double l_rec = 0.0;
    double l_class = 0.0;
    double l_ort = 0.0;
    double l_com = 0.0;
    double l_var = 0.0;
    double l_total = 0.0;
    // Flattened per-loss parameter gradients, present only on logging steps.
    std::map<std::string, std::vector<double>> grads;
};

enum class OrtMode { dimension, sample };

// ---- plain (non-tape) losses, used for evaluation and as oracles ----------

inline double mse_loss(const DenseMatrix& x, const DenseMatrix& xhat) {
    require_same_shape(x, xhat, "mse_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - xhat[i];
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

inline double cross_entropy_loss(const DenseMatrix& logits, const std::vector<std::size_t>& labels) {
    const std::size_t n = logits.rows(), c = logits.cols();
    if (labels.size() != n) throw ShapeError("cross_entropy_loss: label count mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= c) throw DomainError("cross_entropy_loss: label out of range");
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(logits(i, j) - mx);
        loss -= logits(i, labels[i]) - mx - std::log(z);
    }
    return loss / static_cast<double>(n);
}

/// Mean squared cosine similarity over distinct pairs.
/// dimension mode: cosines between latent dimensions (columns of Z).
/// sample mode: cosines between samples (rows of Z).
inline double orthogonality_loss(const DenseMatrix& z, OrtMode mode = OrtMode::dimension) {
    const DenseMatrix m = (mode == OrtMode::dimension) ? z : transpose(z);
    const std::size_t n = m.cols();
    if (n < 2) throw ShapeError("orthogonality_loss: need at least 2 vectors");
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j) * m(i, j);
        norms[j] = std::max(std::sqrt(s), kNormClamp);
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < m.rows(); ++i) dot += m(i, a) * m(i, b);
            const double c = dot / (norms[a] * norms[b]);
            acc += c * c;
        }
    return acc * 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Sum of biased per-column variances. The per-column variances are
/// accumulated in sorted order so the result is bit-identical under any
/// column permutation of the input.
inline double variance_loss(const DenseMatrix& z) {
    if (z.rows() < 2) throw ShapeError("variance_loss: need at least 2 rows");
    std::vector<double> v = col_var(z).data();
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double e : v) s += e;
    return s;
}

/// Index-weighted, variance-normalized centroid. Dimension 0 carries weight 0.
/// Returns 0 when the latent batch has zero total variance.
inline double center_of_mass_loss(const DenseMatrix& z, double epsilon = kComEpsilon) {
    if (z.rows() < 2) throw ShapeError("center_of_mass_loss: need at least 2 rows");
    const DenseMatrix v = col_var(z);
    const double lvar = sum_all(v);
    if (lvar == 0.0) return 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < v.cols(); ++i)
        num += std::pow(static_cast<double>(i), 1.0 + epsilon) * v(0, i);
    return num / (static_cast<double>(v.cols()) * lvar);
}

/// Sorted-variance reference variant: (1/d) * sum_i i * sigma_(i)^2 with
/// variances sorted descending, 1-based positions. Test reference only;
/// the normalized form above is the one trained.
inline double center_of_mass_sorted_reference(const DenseMatrix& z) {
    DenseMatrix v = col_var(z);
    std::vector<double> s(v.data());
    std::sort(s.begin(), s.end(), std::greater<double>());
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += static_cast<double>(i + 1) * s[i];
    return acc / static_cast<double>(s.size());
}

struct LatentTransform {
    enum class Kind { none, permute, scale } kind = Kind::none;
    std::vector<std::size_t> perm;  // column permutation, perm[j] = source column
    double factor = 1.0;
};

inline DenseMatrix apply_latent_transform(const DenseMatrix& z, const LatentTransform& t) {
    switch (t.kind) {
        case LatentTransform::Kind::none:
            return z;
        case LatentTransform::Kind::permute: {
            if (t.perm.size() != z.cols()) throw ShapeError("apply_latent_transform: bad permutation size");
            std::vector<bool> seen(z.cols(), false);
            for (std::size_t p : t.perm) {
                if (p >= z.cols() || seen[p]) throw DomainError("apply_latent_transform: invalid permutation");
                seen[p] = true;
            }
            DenseMatrix out(z.rows(), z.cols());
            for (std::size_t i = 0; i < z.rows(); ++i)
                for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) = z(i, t.perm[j]);
            return out;
        }
        case LatentTransform::Kind::scale:
            if (t.factor == 0.0) throw DomainError("apply_latent_transform: scale factor must be nonzero");
            return scale(z, t.factor);
    }
    throw DomainError("apply_latent_transform: unknown kind");
}

// ---- tape-based losses, used by training ----------------------------------

inline ad::Var mse_loss_t(ad::Var x, ad::Var xhat) {
    return ad::mean(ad::square(ad::sub(x, xhat)));
}

inline ad::Var orthogonality_loss_t(ad::Var z, OrtMode mode = OrtMode::dimension) {
    ad::Tape& t = *z.tape;
    ad::Var m = (mode == OrtMode::dimension) ? z : ad::transpose(z);
    const std::size_t n = t.value(m).cols();
    if (n < 2) throw ShapeError("orthogonality_loss: need at least 2 vectors");
    ad::Var norms = ad::clamp_min(ad::sqrt(ad::col_sum(ad::square(m))), kNormClamp);
    ad::Var zn = ad::div_rowvec(m, norms);
    ad::Var s = ad::matmul(ad::transpose(zn), zn);
    DenseMatrix mask(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) mask(a, b) = 1.0;
    ad::Var masked = ad::mul(ad::square(s), t.constant(mask));
    return ad::scale(ad::sum(masked), 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

inline ad::Var variance_loss_t(ad::Var z) {
    return ad::sum(ad::col_var(z));
}

inline ad::Var center_of_mass_loss_t(ad::Var z, double epsilon = kComEpsilon) {
    ad::Tape& t = *z.tape;
    const std::size_t n = t.value(z).cols();
    ad::Var v = ad::col_var(z);
    ad::Var lvar = ad::sum(v);
    if (t.scalar(lvar) == 0.0) return t.constant(DenseMatrix(1, 1, 0.0));
    DenseMatrix w(1, n);
    for (std::size_t i = 0; i < n; ++i) w(0, i) = std::pow(static_cast<double>(i), 1.0 + epsilon);
    ad::Var num = ad::sum(ad::mul(v, t.constant(w)));
    return ad::div(num, ad::scale(lvar, static_cast<double>(n)));
}

inline std::string loss_csv_header() {
    return "step,l_rec,l_class,l_ort,l_com,l_var,l_total";
}

}  // namespace polca
