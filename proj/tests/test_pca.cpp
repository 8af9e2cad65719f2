#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "polca/losses.hpp"
#include "polca/pca.hpp"
#include "testutil.hpp"

using namespace polca;

namespace {

// Independent oracle: eigendecomposition of the biased covariance matrix by
// classical Jacobi rotations (always picks the largest off-diagonal element).
struct EigenOracle {
    std::vector<double> values;       // descending
    DenseMatrix vectors;              // columns, same order
};

EigenOracle covariance_eigen_oracle(const DenseMatrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    DenseMatrix mu = col_mean(x);
    DenseMatrix c(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += (x(i, a) - mu(0, a)) * (x(i, b) - mu(0, b));
            c(a, b) = s / static_cast<double>(n);
        }
    DenseMatrix v = DenseMatrix::identity(d);
    for (int iter = 0; iter < 20000; ++iter) {
        std::size_t p = 0, q = 1;
        double best = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a + 1; b < d; ++b)
                if (std::abs(c(a, b)) > best) {
                    best = std::abs(c(a, b));
                    p = a;
                    q = b;
                }
        if (best < 1e-15) break;
        const double tau = (c(q, q) - c(p, p)) / (2.0 * c(p, q));
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cs = 1.0 / std::sqrt(1.0 + t * t), sn = cs * t;
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
    EigenOracle out;
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return c(a, a) > c(b, b); });
    out.values.resize(d);
    out.vectors = DenseMatrix(d, d);
    for (std::size_t r = 0; r < d; ++r) {
        out.values[r] = c(order[r], order[r]);
        for (std::size_t i = 0; i < d; ++i) out.vectors(i, r) = v(i, order[r]);
    }
    return out;
}

// Largest principal angle between the row space of comps and the span of the
// first k oracle eigenvectors.
double max_principal_angle(const DenseMatrix& comps, const EigenOracle& o, std::size_t k) {
    // project each component onto the oracle subspace; angle from residual
    double worst = 0.0;
    const std::size_t d = comps.cols();
    for (std::size_t r = 0; r < k; ++r) {
        double proj_norm2 = 0.0;
        for (std::size_t e = 0; e < k; ++e) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += comps(r, i) * o.vectors(i, e);
            proj_norm2 += dot * dot;
        }
        const double cosang = std::min(1.0, std::sqrt(proj_norm2));
        worst = std::max(worst, std::acos(cosang));
    }
    return worst;
}

}  // namespace

TEST_CASE("rank-1 data on the line y = 2x") {
    DenseMatrix x(20, 2);
    for (std::size_t i = 0; i < 20; ++i) {
        const double t = static_cast<double>(i) * 0.3 - 3.0;
        x(i, 0) = t;
        x(i, 1) = 2.0 * t;
    }
    PcaModel m = pca_fit(x, 1);
    const double inv = 1.0 / std::sqrt(5.0);
    CHECK(std::abs(std::abs(m.components(0, 0)) - inv) < 1e-10);
    CHECK(std::abs(std::abs(m.components(0, 1)) - 2.0 * inv) < 1e-10);
    // sign convention: largest-magnitude entry positive
    CHECK(m.components(0, 1) > 0.0);
}

TEST_CASE("k = D reconstruction is exact") {
    std::mt19937_64 rng(30);
    DenseMatrix x = testutil::random_matrix(40, 6, rng);
    PcaModel m = pca_fit(x, 6);
    DenseMatrix rec = pca_inverse(m, pca_transform(m, x));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(rec[i] - x[i]) < 1e-10);
}

TEST_CASE("subspace matches classical Jacobi covariance oracle") {
    std::mt19937_64 rng(31);
    DenseMatrix x = testutil::random_matrix(50, 8, rng);
    PcaModel m = pca_fit(x, 3);
    EigenOracle o = covariance_eigen_oracle(x);
    CHECK(max_principal_angle(m.components, o, 3) < 1e-8);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(m.explained_variances[j] - o.values[j]) < 1e-10);
}

TEST_CASE("components are orthonormal, variances descending") {
    std::mt19937_64 rng(32);
    DenseMatrix x = testutil::random_matrix(60, 10, rng);
    PcaModel m = pca_fit(x, 5);
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = 0; b < 5; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < 10; ++i) dot += m.components(a, i) * m.components(b, i);
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
        }
    for (std::size_t j = 1; j < 5; ++j)
        CHECK(m.explained_variances[j - 1] >= m.explained_variances[j]);
}

TEST_CASE("transform centers the mean and reproduces explained variances") {
    std::mt19937_64 rng(33);
    DenseMatrix x = testutil::random_matrix(80, 6, rng);
    PcaModel m = pca_fit(x, 4);

    DenseMatrix y = pca_transform(m, m.mean);
    for (double v : y.data()) CHECK(std::abs(v) < 1e-10);

    DenseMatrix proj = pca_transform(m, x);
    DenseMatrix v = col_var(proj);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::abs(v(0, j) - m.explained_variances[j]) < 1e-10);
}

TEST_CASE("round trip exact on constructed rank-k data") {
    std::mt19937_64 rng(34);
    DenseMatrix basis = testutil::random_matrix(3, 9, rng);
    DenseMatrix codes = testutil::random_matrix(50, 3, rng);
    DenseMatrix x = matmul(codes, basis);
    PcaModel m = pca_fit(x, 3);
    DenseMatrix rec = pca_inverse(m, pca_transform(m, x));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(rec[i] - x[i]) < 1e-8);
}

TEST_CASE("reconstruction MSE equals discarded eigenvalue mass over D") {
    std::mt19937_64 rng(35);
    DenseMatrix x = testutil::random_matrix(70, 9, rng);
    PcaModel full = pca_fit(x, 9);
    PcaModel m = pca_fit(x, 4);
    DenseMatrix rec = pca_inverse(m, pca_transform(m, x));
    double discarded = 0.0;
    for (std::size_t j = 4; j < 9; ++j) discarded += full.explained_variances[j];
    CHECK(std::abs(mse_loss(x, rec) - discarded / 9.0) < 1e-10);
}

TEST_CASE("zero code decodes to the mean") {
    std::mt19937_64 rng(36);
    DenseMatrix x = testutil::random_matrix(30, 5, rng);
    PcaModel m = pca_fit(x, 2);
    DenseMatrix rec = pca_inverse(m, DenseMatrix(1, 2));
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(rec(0, j) - m.mean(0, j)) < 1e-12);
}

TEST_CASE("determinism and k range errors") {
    std::mt19937_64 rng(37);
    DenseMatrix x = testutil::random_matrix(25, 6, rng);
    PcaModel a = pca_fit(x, 3), b = pca_fit(x, 3);
    for (std::size_t i = 0; i < a.components.size(); ++i)
        CHECK(a.components[i] == b.components[i]);

    CHECK_THROWS_AS(pca_fit(x, 0), ShapeError);
    CHECK_THROWS_AS(pca_fit(x, 7), ShapeError);
    CHECK_THROWS_AS(pca_transform(a, DenseMatrix(3, 4)), ShapeError);
    CHECK_THROWS_AS(pca_inverse(a, DenseMatrix(3, 4)), ShapeError);
}

TEST_CASE("cyclic symmetric Jacobi agrees with the classical-pivot oracle") {
    std::mt19937_64 rng(38);
    DenseMatrix x = testutil::random_matrix(30, 7, rng);
    DenseMatrix mu = col_mean(x);
    DenseMatrix cov(7, 7);
    for (std::size_t a = 0; a < 7; ++a)
        for (std::size_t b = 0; b < 7; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < 30; ++i) s += (x(i, a) - mu(0, a)) * (x(i, b) - mu(0, b));
            cov(a, b) = s / 30.0;
        }
    DenseMatrix v;
    detail::symmetric_jacobi(cov, v);
    EigenOracle o = covariance_eigen_oracle(x);
    std::vector<double> eig(7);
    for (std::size_t j = 0; j < 7; ++j) eig[j] = cov(j, j);
    std::sort(eig.begin(), eig.end(), std::greater<double>());
    for (std::size_t j = 0; j < 7; ++j) CHECK(std::abs(eig[j] - o.values[j]) < 1e-10);
}

TEST_CASE("wide-data covariance path keeps the PCA invariants") {
    std::mt19937_64 rng(39);
    // 140 columns forces the covariance branch
    DenseMatrix x = testutil::random_matrix(60, 140, rng);
    PcaModel m = pca_fit(x, 5);
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = 0; b < 5; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < 140; ++i) dot += m.components(a, i) * m.components(b, i);
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
        }
    DenseMatrix proj = pca_transform(m, x);
    DenseMatrix v = col_var(proj);
    for (std::size_t j = 0; j < 5; ++j)
        CHECK(std::abs(v(0, j) - m.explained_variances[j]) < 1e-8);
}
