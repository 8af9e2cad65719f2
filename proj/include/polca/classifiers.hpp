#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "polca/matrix.hpp"

namespace polca {

enum class ClassifierKind { perceptron, ridge, logistic, linear_svm };

inline const char* classifier_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::perceptron: return "perceptron";
        case ClassifierKind::ridge: return "ridge";
        case ClassifierKind::logistic: return "logistic";
        case ClassifierKind::linear_svm: return "linear_svm";
    }
    return "?";
}

struct ClassifierHyper {
    std::size_t perceptron_epochs = 50;
    double perceptron_lr = 1.0;
    double ridge_lambda = 1.0;
    std::size_t logistic_iters = 500;
    double logistic_lr = 0.1;
    double svm_lambda = 1e-4;
    std::size_t svm_epochs = 50;
};

struct LinearClassifier {
    ClassifierKind kind = ClassifierKind::perceptron;
    DenseMatrix weights;  // C x k
    DenseMatrix bias;     // 1 x C
    ClassifierHyper hyper;
};

/// Per-feature z-scoring with statistics from the training split only.
struct Standardizer {
    DenseMatrix mean;  // 1 x k
    DenseMatrix std;   // 1 x k, zero-variance features clamped to 1

    static Standardizer fit(const DenseMatrix& x) {
        Standardizer s;
        s.mean = col_mean(x);
        DenseMatrix v = col_var(x);
        s.std = DenseMatrix(1, x.cols());
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double sd = std::sqrt(v(0, j));
            s.std(0, j) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    DenseMatrix transform(const DenseMatrix& x) const {
        if (x.cols() != mean.cols()) throw ShapeError("Standardizer: width mismatch");
        DenseMatrix out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
                out(i, j) = (x(i, j) - mean(0, j)) / std(0, j);
        return out;
    }
};

namespace detail {

/// Solves (A)w = rhs for symmetric positive definite A via Cholesky.
inline std::vector<double> cholesky_solve(DenseMatrix a, std::vector<double> rhs) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t kk = 0; kk < j; ++kk) a(j, j) -= a(j, kk) * a(j, kk);
        if (a(j, j) <= 0.0) throw DomainError("cholesky_solve: matrix not positive definite");
        a(j, j) = std::sqrt(a(j, j));
        for (std::size_t i = j + 1; i < n; ++i) {
            for (std::size_t kk = 0; kk < j; ++kk) a(i, j) -= a(i, kk) * a(j, kk);
            a(i, j) /= a(j, j);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t kk = 0; kk < i; ++kk) rhs[i] -= a(i, kk) * rhs[kk];
        rhs[i] /= a(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t kk = i + 1; kk < n; ++kk) rhs[i] -= a(kk, i) * rhs[kk];
        rhs[i] /= a(i, i);
    }
    return rhs;
}

inline std::size_t count_classes(const std::vector<std::size_t>& labels) {
    std::set<std::size_t> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw DomainError("fit_classifier: need at least 2 classes");
    return *distinct.rbegin() + 1;
}

}  // namespace detail

inline LinearClassifier fit_classifier(ClassifierKind kind, const DenseMatrix& x,
                                       const std::vector<std::size_t>& labels,
                                       const ClassifierHyper& hyper = {}) {
    const std::size_t n = x.rows(), k = x.cols();
    if (labels.size() != n) throw ShapeError("fit_classifier: label count mismatch");
    const std::size_t c = detail::count_classes(labels);

    LinearClassifier clf;
    clf.kind = kind;
    clf.hyper = hyper;
    clf.weights = DenseMatrix(c, k);
    clf.bias = DenseMatrix(1, c);

    switch (kind) {
        case ClassifierKind::perceptron: {
            for (std::size_t cls = 0; cls < c; ++cls) {
                std::vector<double> w(k, 0.0);
                double b = 0.0;
                for (std::size_t epoch = 0; epoch < hyper.perceptron_epochs; ++epoch)
                    for (std::size_t i = 0; i < n; ++i) {
                        const double y = labels[i] == cls ? 1.0 : -1.0;
                        double score = b;
                        for (std::size_t j = 0; j < k; ++j) score += w[j] * x(i, j);
                        if (y * score <= 0.0) {
                            for (std::size_t j = 0; j < k; ++j)
                                w[j] += hyper.perceptron_lr * y * x(i, j);
                            b += hyper.perceptron_lr * y;
                        }
                    }
                for (std::size_t j = 0; j < k; ++j) clf.weights(cls, j) = w[j];
                clf.bias(0, cls) = b;
            }
            break;
        }
        case ClassifierKind::ridge: {
            // augmented design [X 1], normal equations (X'X + lambda I) w = X'y
            DenseMatrix xa(n, k + 1);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < k; ++j) xa(i, j) = x(i, j);
                xa(i, k) = 1.0;
            }
            DenseMatrix gram = matmul(transpose(xa), xa);
            for (std::size_t j = 0; j <= k; ++j) gram(j, j) += hyper.ridge_lambda;
            for (std::size_t cls = 0; cls < c; ++cls) {
                std::vector<double> rhs(k + 1, 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double y = labels[i] == cls ? 1.0 : -1.0;
                    for (std::size_t j = 0; j <= k; ++j) rhs[j] += xa(i, j) * y;
                }
                std::vector<double> w = detail::cholesky_solve(gram, rhs);
                for (std::size_t j = 0; j < k; ++j) clf.weights(cls, j) = w[j];
                clf.bias(0, cls) = w[k];
            }
            break;
        }
        case ClassifierKind::logistic: {
            // multinomial, full-batch gradient descent
            for (std::size_t it = 0; it < hyper.logistic_iters; ++it) {
                DenseMatrix gw(c, k);
                DenseMatrix gb(1, c);
                for (std::size_t i = 0; i < n; ++i) {
                    std::vector<double> score(c);
                    double mx = -1e300;
                    for (std::size_t cls = 0; cls < c; ++cls) {
                        double s = clf.bias(0, cls);
                        for (std::size_t j = 0; j < k; ++j) s += clf.weights(cls, j) * x(i, j);
                        score[cls] = s;
                        mx = std::max(mx, s);
                    }
                    double z = 0.0;
                    for (std::size_t cls = 0; cls < c; ++cls) {
                        score[cls] = std::exp(score[cls] - mx);
                        z += score[cls];
                    }
                    for (std::size_t cls = 0; cls < c; ++cls) {
                        const double p = score[cls] / z - (labels[i] == cls ? 1.0 : 0.0);
                        for (std::size_t j = 0; j < k; ++j) gw(cls, j) += p * x(i, j);
                        gb(0, cls) += p;
                    }
                }
                const double step = hyper.logistic_lr / static_cast<double>(n);
                for (std::size_t i = 0; i < gw.size(); ++i) clf.weights[i] -= step * gw[i];
                for (std::size_t cls = 0; cls < c; ++cls) clf.bias(0, cls) -= step * gb(0, cls);
            }
            break;
        }
        case ClassifierKind::linear_svm: {
            // one-vs-rest hinge + L2, Pegasos-style 1/(lambda t) schedule.
            // The bias is regularized like an augmented feature; an undecayed
            // bias would keep the huge first-step update (eta_1 = 1/lambda)
            // forever and drown out the weights.
            const double lam = hyper.svm_lambda;
            for (std::size_t cls = 0; cls < c; ++cls) {
                std::vector<double> w(k, 0.0);
                double b = 0.0;
                std::size_t t = 0;
                for (std::size_t epoch = 0; epoch < hyper.svm_epochs; ++epoch)
                    for (std::size_t i = 0; i < n; ++i) {
                        ++t;
                        const double eta = 1.0 / (lam * static_cast<double>(t));
                        const double y = labels[i] == cls ? 1.0 : -1.0;
                        double score = b;
                        for (std::size_t j = 0; j < k; ++j) score += w[j] * x(i, j);
                        const double decay = 1.0 - eta * lam;
                        for (std::size_t j = 0; j < k; ++j) w[j] *= decay;
                        b *= decay;
                        if (y * score < 1.0) {
                            for (std::size_t j = 0; j < k; ++j) w[j] += eta * y * x(i, j);
                            b += eta * y;
                        }
                    }
                for (std::size_t j = 0; j < k; ++j) clf.weights(cls, j) = w[j];
                clf.bias(0, cls) = b;
            }
            break;
        }
    }
    return clf;
}

/// Argmax of affine scores; ties go to the lowest class index.
inline std::vector<std::size_t> predict(const LinearClassifier& clf, const DenseMatrix& x) {
    if (x.cols() != clf.weights.cols())
        throw ShapeError("predict: feature width " + x.shape_str() + " != fitted width");
    const std::size_t c = clf.weights.rows();
    std::vector<std::size_t> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::size_t best = 0;
        double best_score = -1e300;
        for (std::size_t cls = 0; cls < c; ++cls) {
            double s = clf.bias(0, cls);
            for (std::size_t j = 0; j < x.cols(); ++j) s += clf.weights(cls, j) * x(i, j);
            if (s > best_score) {
                best_score = s;
                best = cls;
            }
        }
        out[i] = best;
    }
    return out;
}

}  // namespace polca
