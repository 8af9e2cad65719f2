#pragma once

#include <functional>
#include <random>

#include "polca/matrix.hpp"

namespace testutil {

inline polca::DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                        double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    polca::DenseMatrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

/// Central finite differences of a scalar function w.r.t. one matrix input.
inline polca::DenseMatrix finite_diff(const std::function<double(const polca::DenseMatrix&)>& f,
                                      polca::DenseMatrix x, double h = 1e-6) {
    polca::DenseMatrix g(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Max relative error between two gradients, with an absolute floor so
/// near-zero entries compare absolutely.
inline double max_rel_error(const polca::DenseMatrix& a, const polca::DenseMatrix& b,
                            double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace testutil
