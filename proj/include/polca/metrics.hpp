#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "polca/losses.hpp"
#include "polca/matrix.hpp"

namespace polca {

/// Side-by-side evaluation numbers for one dataset split.
struct MethodMetrics {
    double nrmse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct ClassifierMetrics {
    std::string classifier;
    double accuracy = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    std::string dataset;
    std::string split;  // "train" or "test"
    std::size_t latent_size = 0;
    MethodMetrics pca;
    MethodMetrics polca;
    std::vector<ClassifierMetrics> pca_classifiers;
    std::vector<ClassifierMetrics> polca_classifiers;
};

/// RMSE divided by the range of the reference.
inline double nrmse(const DenseMatrix& x, const DenseMatrix& xhat) {
    require_same_shape(x, xhat, "nrmse");
    double lo = x[0], hi = x[0];
    for (double v : x.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 0.0) throw DomainError("nrmse: constant reference has zero range");
    return std::sqrt(mse_loss(x, xhat)) / (hi - lo);
}

/// 10*log10(peak^2 / MSE), +inf when the reconstruction is exact.
inline double psnr(const DenseMatrix& x, const DenseMatrix& xhat, double peak = 1.0) {
    const double mse = mse_loss(x, xhat);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

inline std::vector<double> gaussian_kernel_11() {
    std::vector<double> k(11);
    const double sigma = 1.5;
    double s = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = static_cast<double>(i - 5);
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        s += k[i];
    }
    for (double& v : k) v /= s;
    return k;
}

/// Separable valid-mode Gaussian filter of an H x W plane.
inline DenseMatrix gaussian_filter_valid(const DenseMatrix& img) {
    static const std::vector<double> k = gaussian_kernel_11();
    const std::size_t h = img.rows(), w = img.cols();
    DenseMatrix tmp(h, w - 10);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j + 10 < w; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < 11; ++t) s += k[t] * img(i, j + t);
            tmp(i, j) = s;
        }
    DenseMatrix out(h - 10, w - 10);
    for (std::size_t i = 0; i + 10 < h; ++i)
        for (std::size_t j = 0; j < tmp.cols(); ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < 11; ++t) s += k[t] * tmp(i + t, j);
            out(i, j) = s;
        }
    return out;
}

inline double ssim_plane(const DenseMatrix& a, const DenseMatrix& b) {
    const double c1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
    const double c2 = 0.03 * 0.03;
    DenseMatrix mu1 = gaussian_filter_valid(a);
    DenseMatrix mu2 = gaussian_filter_valid(b);
    DenseMatrix m11 = gaussian_filter_valid(mul(a, a));
    DenseMatrix m22 = gaussian_filter_valid(mul(b, b));
    DenseMatrix m12 = gaussian_filter_valid(mul(a, b));
    double acc = 0.0;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
        const double u1 = mu1[i], u2 = mu2[i];
        const double s1 = m11[i] - u1 * u1;
        const double s2 = m22[i] - u2 * u2;
        const double s12 = m12[i] - u1 * u2;
        acc += ((2.0 * u1 * u2 + c1) * (2.0 * s12 + c2)) /
               ((u1 * u1 + u2 * u2 + c1) * (s1 + s2 + c2));
    }
    return acc / static_cast<double>(mu1.size());
}

}  // namespace detail

/// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, dynamic range 1. Color images average over channels.
inline double ssim_image(const std::vector<double>& x, const std::vector<double>& xhat,
                         std::size_t h, std::size_t w, std::size_t c) {
    if (h < 11 || w < 11) throw ShapeError("ssim: image smaller than 11x11 window");
    if (x.size() != h * w * c || xhat.size() != x.size())
        throw ShapeError("ssim: pixel count mismatch");
    double acc = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        DenseMatrix a(h, w), b(h, w);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) {
                a(i, j) = x[(i * w + j) * c + ch];
                b(i, j) = xhat[(i * w + j) * c + ch];
            }
        acc += detail::ssim_plane(a, b);
    }
    return acc / static_cast<double>(c);
}

/// Dataset SSIM: mean over images (one per row of the flattened batch).
inline double ssim_batch(const DenseMatrix& x, const DenseMatrix& xhat, std::size_t h,
                         std::size_t w, std::size_t c) {
    require_same_shape(x, xhat, "ssim");
    if (x.cols() != h * w * c) throw ShapeError("ssim: row width != H*W*C");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::vector<double> a(x.data().begin() + i * x.cols(), x.data().begin() + (i + 1) * x.cols());
        std::vector<double> b(xhat.data().begin() + i * x.cols(),
                              xhat.data().begin() + (i + 1) * x.cols());
        acc += ssim_image(a, b, h, w, c);
    }
    return acc / static_cast<double>(x.rows());
}

inline double accuracy(const std::vector<std::size_t>& y, const std::vector<std::size_t>& yhat) {
    if (y.empty() || y.size() != yhat.size()) throw ShapeError("accuracy: bad input lengths");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == yhat[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

/// Unweighted mean of per-class F1; classes absent from both y and yhat
/// contribute 0 and still count in the average.
inline double f1_macro(const std::vector<std::size_t>& y, const std::vector<std::size_t>& yhat) {
    if (y.empty() || y.size() != yhat.size()) throw ShapeError("f1_macro: bad input lengths");
    std::size_t c = 0;
    for (std::size_t v : y) c = std::max(c, v + 1);
    for (std::size_t v : yhat) c = std::max(c, v + 1);
    double acc = 0.0;
    for (std::size_t cls = 0; cls < c; ++cls) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const bool t = y[i] == cls, p = yhat[i] == cls;
            if (t && p) ++tp;
            else if (!t && p) ++fp;
            else if (t && !p) ++fn;
        }
        if (tp > 0) acc += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    }
    return acc / static_cast<double>(c);
}

}  // namespace polca
