#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "polca/metrics.hpp"
#include "testutil.hpp"

using namespace polca;

TEST_CASE("nrmse: identity, checkerboard inversion, direct oracle") {
    std::mt19937_64 rng(60);
    DenseMatrix x = testutil::random_matrix(4, 6, rng, 0.0, 1.0);
    CHECK(nrmse(x, x) == 0.0);

    DenseMatrix cb(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) cb(i, j) = static_cast<double>((i + j) % 2);
    DenseMatrix inv = cb;
    for (double& v : inv.data()) v = 1.0 - v;
    CHECK(nrmse(cb, inv) == doctest::Approx(1.0).epsilon(1e-12));

    DenseMatrix y = testutil::random_matrix(4, 6, rng, 0.0, 1.0);
    double mse = 0.0, lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mse += (x[i] - y[i]) * (x[i] - y[i]);
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    mse /= static_cast<double>(x.size());
    CHECK(std::abs(nrmse(x, y) - std::sqrt(mse) / (hi - lo)) < 1e-12);

    CHECK_THROWS_AS(nrmse(DenseMatrix(2, 2, 0.5), DenseMatrix(2, 2, 0.1)), DomainError);
}

TEST_CASE("psnr: powers of ten, exact match, halved RMSE") {
    DenseMatrix x(10, 10);
    DenseMatrix y(10, 10, 0.1);  // MSE = 0.01
    CHECK(psnr(x, y) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(std::isinf(psnr(x, x)));

    DenseMatrix half(10, 10, 0.05);
    CHECK(psnr(x, half) - psnr(x, y) == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));
}

TEST_CASE("psnr / nrmse sort reconstructions identically") {
    std::mt19937_64 rng(61);
    DenseMatrix x = testutil::random_matrix(5, 8, rng, 0.0, 1.0);
    std::vector<DenseMatrix> recs;
    std::vector<double> ps, nr;
    for (int k = 0; k < 6; ++k) {
        DenseMatrix r = x;
        std::uniform_real_distribution<double> noise(-0.02 * (k + 1), 0.02 * (k + 1));
        for (double& v : r.data()) v += noise(rng);
        ps.push_back(psnr(x, r));
        nr.push_back(nrmse(x, r));
    }
    std::vector<std::size_t> by_psnr(6), by_nrmse(6);
    std::iota(by_psnr.begin(), by_psnr.end(), 0);
    by_nrmse = by_psnr;
    std::sort(by_psnr.begin(), by_psnr.end(), [&](auto a, auto b) { return ps[a] > ps[b]; });
    std::sort(by_nrmse.begin(), by_nrmse.end(), [&](auto a, auto b) { return nr[a] < nr[b]; });
    CHECK(by_psnr == by_nrmse);
}

TEST_CASE("ssim: perfect match, constants, anticorrelated checkerboard") {
    std::mt19937_64 rng(62);
    std::vector<double> img(28 * 28);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : img) v = u(rng);
    CHECK(ssim_image(img, img, 28, 28, 1) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> c1(14 * 14, 0.5);
    CHECK(ssim_image(c1, c1, 14, 14, 1) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> cb(28 * 28), cbi(28 * 28);
    for (std::size_t i = 0; i < 28; ++i)
        for (std::size_t j = 0; j < 28; ++j) {
            cb[i * 28 + j] = static_cast<double>((i + j) % 2);
            cbi[i * 28 + j] = 1.0 - cb[i * 28 + j];
        }
    CHECK(ssim_image(cb, cbi, 28, 28, 1) < 0.0);

    CHECK_THROWS_AS(ssim_image(std::vector<double>(100), std::vector<double>(100), 10, 10, 1),
                    ShapeError);
}

TEST_CASE("ssim symmetry and channel averaging") {
    std::mt19937_64 rng(63);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(16 * 16 * 3), b(16 * 16 * 3);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    CHECK(std::abs(ssim_image(a, b, 16, 16, 3) - ssim_image(b, a, 16, 16, 3)) < 1e-12);

    // batch mean over rows
    DenseMatrix xa(2, 16 * 16), xb(2, 16 * 16);
    for (std::size_t j = 0; j < 256; ++j) {
        xa(0, j) = a[j];
        xa(1, j) = b[j];
        xb(0, j) = b[j];
        xb(1, j) = a[j];
    }
    const double s01 = ssim_image(std::vector<double>(a.begin(), a.begin() + 256),
                                  std::vector<double>(b.begin(), b.begin() + 256), 16, 16, 1);
    CHECK(ssim_batch(xa, xb, 16, 16, 1) == doctest::Approx(s01).epsilon(1e-12));
}

TEST_CASE("accuracy and macro-F1: exact match, constant predictor, oracle") {
    std::vector<std::size_t> y{0, 1, 2, 1, 0, 2};
    CHECK(accuracy(y, y) == 1.0);
    CHECK(f1_macro(y, y) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<std::size_t> yt{0, 0, 1, 1}, yp{0, 0, 0, 0};
    CHECK(accuracy(yt, yp) == 0.5);
    CHECK(f1_macro(yt, yp) == doctest::Approx((2.0 / 3.0) / 2.0).epsilon(1e-12));

    // confusion-matrix oracle on random labels
    std::mt19937_64 rng(64);
    std::uniform_int_distribution<std::size_t> cls(0, 3);
    std::vector<std::size_t> a(200), b(200);
    for (std::size_t i = 0; i < 200; ++i) {
        a[i] = cls(rng);
        b[i] = cls(rng);
    }
    std::size_t conf[4][4] = {};
    for (std::size_t i = 0; i < 200; ++i) conf[a[i]][b[i]]++;
    double acc_oracle = 0.0;
    for (int c = 0; c < 4; ++c) acc_oracle += conf[c][c];
    acc_oracle /= 200.0;
    double f1_oracle = 0.0;
    for (int c = 0; c < 4; ++c) {
        double tp = conf[c][c], fp = 0, fn = 0;
        for (int o = 0; o < 4; ++o)
            if (o != c) {
                fp += conf[o][c];
                fn += conf[c][o];
            }
        if (tp > 0) f1_oracle += 2 * tp / (2 * tp + fp + fn);
    }
    f1_oracle /= 4.0;
    CHECK(std::abs(accuracy(a, b) - acc_oracle) < 1e-12);
    CHECK(std::abs(f1_macro(a, b) - f1_oracle) < 1e-12);

    // constant predictor never beats the max class share
    std::vector<std::size_t> constant(200, 0);
    double share0 = 0.0;
    for (std::size_t v : a) share0 += v == 0 ? 1.0 : 0.0;
    CHECK(accuracy(a, constant) <= share0 / 200.0 + 1e-12);
}

TEST_CASE("empty inputs are rejected") {
    CHECK_THROWS_AS(accuracy({}, {}), ShapeError);
    CHECK_THROWS_AS(f1_macro({}, {}), ShapeError);
}
