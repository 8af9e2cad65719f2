#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace polca {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Row-major dense matrix of doubles. The single numeric carrier for
/// batches, parameters and gradients.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                             " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

/// C = A * B, ikj loop order over contiguous rows.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double* cd = c.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = ad + i * k;
        double* crow = cd + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = bd + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "add");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

inline DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "sub");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
    return c;
}

inline DenseMatrix mul(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "mul");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
    return c;
}

inline DenseMatrix scale(const DenseMatrix& a, double s) {
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= s;
    return c;
}

/// Sum over all entries, fixed sequential order.
inline double sum_all(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

inline double mean_all(const DenseMatrix& a) {
    if (a.size() == 0) throw ShapeError("mean: empty matrix");
    return sum_all(a) / static_cast<double>(a.size());
}

inline DenseMatrix col_mean(const DenseMatrix& a) {
    if (a.rows() == 0) throw ShapeError("col_mean: empty matrix");
    DenseMatrix m(1, a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j);
        m(0, j) = s / static_cast<double>(a.rows());
    }
    return m;
}

/// Biased per-column variance (divide by N).
inline DenseMatrix col_var(const DenseMatrix& a) {
    if (a.rows() == 0) throw ShapeError("col_var: empty matrix");
    DenseMatrix mu = col_mean(a);
    DenseMatrix v(1, a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        bool constant = true;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            constant = constant && a(i, j) == a(0, j);
            const double d = a(i, j) - mu(0, j);
            s += d * d;
        }
        // A constant column has variance exactly 0; the two-pass formula can
        // leave a rounding residue when the mean itself rounds.
        v(0, j) = constant ? 0.0 : s / static_cast<double>(a.rows());
    }
    return v;
}

}  // namespace polca
