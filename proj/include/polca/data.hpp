#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polca/matrix.hpp"

namespace polca {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Dataset {
    std::string name;
    DenseMatrix images;  // N x (H*W*C), pixels in [0,1]
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::optional<std::vector<std::size_t>> labels;
    std::string split = "train";

    std::size_t size() const { return images.rows(); }
};

// ---- IDX (big-endian MNIST-style binary) -----------------------------------

namespace detail {

inline std::uint32_t read_be32(std::istream& is, std::size_t offset, const char* what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is)
        throw DataError(std::string("idx: truncated while reading ") + what + " at offset " +
                        std::to_string(offset));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

inline void write_be32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

/// Loads an IDX image file (magic 0x00000803) and optional label file
/// (magic 0x00000801); pixels are scaled to [0,1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path = "") {
    std::ifstream is(images_path, std::ios::binary);
    if (!is) throw DataError("idx: cannot open " + images_path);
    const std::uint32_t magic = detail::read_be32(is, 0, "magic");
    if (magic != 0x00000803)
        throw DataError("idx: bad image magic at offset 0 in " + images_path);
    const std::uint32_t n = detail::read_be32(is, 4, "count");
    const std::uint32_t h = detail::read_be32(is, 8, "rows");
    const std::uint32_t w = detail::read_be32(is, 12, "cols");
    std::vector<unsigned char> raw(static_cast<std::size_t>(n) * h * w);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(is.gcount()) != raw.size())
        throw DataError("idx: truncated payload at offset " +
                        std::to_string(16 + is.gcount()) + " in " + images_path);

    Dataset ds;
    ds.height = h;
    ds.width = w;
    ds.channels = 1;
    ds.images = DenseMatrix(n, static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < raw.size(); ++i) ds.images[i] = raw[i] / 255.0;

    if (!labels_path.empty()) {
        std::ifstream ls(labels_path, std::ios::binary);
        if (!ls) throw DataError("idx: cannot open " + labels_path);
        const std::uint32_t lmagic = detail::read_be32(ls, 0, "label magic");
        if (lmagic != 0x00000801)
            throw DataError("idx: bad label magic at offset 0 in " + labels_path);
        const std::uint32_t ln = detail::read_be32(ls, 4, "label count");
        if (ln != n)
            throw DataError("idx: label count " + std::to_string(ln) + " != image count " +
                            std::to_string(n) + " (offset 4 in " + labels_path + ")");
        std::vector<unsigned char> lab(ln);
        ls.read(reinterpret_cast<char*>(lab.data()), ln);
        if (static_cast<std::size_t>(ls.gcount()) != lab.size())
            throw DataError("idx: truncated label payload at offset " +
                            std::to_string(8 + ls.gcount()) + " in " + labels_path);
        ds.labels = std::vector<std::size_t>(lab.begin(), lab.end());
    }
    return ds;
}

/// Writes [0,1] pixels back to IDX bytes (round(v*255)).
inline void write_idx(const Dataset& ds, const std::string& images_path,
                      const std::string& labels_path = "") {
    std::ofstream os(images_path, std::ios::binary);
    if (!os) throw DataError("idx: cannot open " + images_path + " for writing");
    detail::write_be32(os, 0x00000803);
    detail::write_be32(os, static_cast<std::uint32_t>(ds.size()));
    detail::write_be32(os, static_cast<std::uint32_t>(ds.height));
    detail::write_be32(os, static_cast<std::uint32_t>(ds.width));
    for (double v : ds.images.data()) {
        const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
        os.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!labels_path.empty()) {
        if (!ds.labels) throw DataError("idx: dataset has no labels to write");
        std::ofstream ls(labels_path, std::ios::binary);
        detail::write_be32(ls, 0x00000801);
        detail::write_be32(ls, static_cast<std::uint32_t>(ds.labels->size()));
        for (std::size_t l : *ds.labels) {
            const unsigned char b = static_cast<unsigned char>(l);
            ls.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
}

// ---- synthetic sinusoidal generators ---------------------------------------

struct SinusoidSpec {
    std::size_t image_size = 28;
    std::size_t components = 4;  // K
    double freq_min = 1.0;
    double freq_max = 4.0;
    double amp_min = 0.5;
    double amp_max = 1.5;
    std::uint64_t seed = 5;
    bool bent = false;  // quadratic coordinate warp + high-frequency band
    double warp = 0.5;
    // true: frequencies/orientations fixed per dataset, so the clean data
    // spans at most 2K+1 linear dimensions. false: frequencies are drawn per
    // image (orientations stay dataset-fixed); the frequency continuum gives
    // high linear rank while the intrinsic dimensionality stays bounded.
    bool shared_waves = true;
    // > 0: each pixel is tanh(squash * v) before rescaling. The pointwise
    // saturation leaves the intrinsic dimensionality at 2K (amplitudes and
    // phases) but spreads the variance across many linear dimensions, so a
    // rank-limited linear method degrades while a nonlinear one need not.
    double squash = 0.0;
};

inline SinusoidSpec bent_spec_defaults() {
    SinusoidSpec s;
    s.components = 16;
    s.freq_min = 4.0;
    s.freq_max = 12.0;
    s.bent = true;
    return s;
}

/// Each image is a sum of K oriented sinusoids. Frequencies and orientations
/// are fixed per dataset (drawn once from the seed); amplitudes and phases
/// are drawn per image, so the clean variant spans at most 2K+1 linear
/// dimensions. Images are min-max rescaled to [0,1] individually.
inline Dataset gen_sinusoidal(const SinusoidSpec& spec, std::size_t n_samples) {
    if (n_samples < 1) throw DataError("gen_sinusoidal: need at least 1 sample");
    if (spec.components < 1 || spec.freq_min <= 0.0)
        throw DataError("gen_sinusoidal: invalid spec");
    const std::size_t s = spec.image_size;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> ufreq(spec.freq_min, spec.freq_max);
    std::uniform_real_distribution<double> uang(0.0, 3.14159265358979323846);
    std::uniform_real_distribution<double> uamp(spec.amp_min, spec.amp_max);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * 3.14159265358979323846);

    std::vector<double> freq(spec.components), ct(spec.components), st(spec.components);
    for (std::size_t k = 0; k < spec.components; ++k) {
        if (spec.shared_waves) freq[k] = ufreq(rng);
        const double th = uang(rng);
        ct[k] = std::cos(th);
        st[k] = std::sin(th);
    }

    Dataset ds;
    ds.name = spec.bent ? "bent" : "sinusoidal";
    ds.height = s;
    ds.width = s;
    ds.images = DenseMatrix(n_samples, s * s);
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t img = 0; img < n_samples; ++img) {
        std::vector<double> amp(spec.components), phase(spec.components);
        for (std::size_t k = 0; k < spec.components; ++k) {
            amp[k] = uamp(rng);
            phase[k] = uphase(rng);
            if (!spec.shared_waves) freq[k] = ufreq(rng);
        }
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = 0; j < s; ++j) {
                double y = static_cast<double>(i) / static_cast<double>(s);
                double x = static_cast<double>(j) / static_cast<double>(s);
                if (spec.bent) x = x + spec.warp * y * y;
                double v = 0.0;
                for (std::size_t k = 0; k < spec.components; ++k)
                    v += amp[k] * std::sin(two_pi * freq[k] * (x * ct[k] + y * st[k]) + phase[k]);
                if (spec.squash > 0.0) v = std::tanh(spec.squash * v);
                ds.images(img, i * s + j) = v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        const double range = hi - lo;
        for (std::size_t p = 0; p < s * s; ++p)
            ds.images(img, p) = range > 0.0 ? (ds.images(img, p) - lo) / range : 0.0;
    }
    return ds;
}

/// Seeded disjoint split, label-stratified when labels exist.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double fraction,
                                                    std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw DataError("train_test_split: fraction must be in (0,1)");
    if (ds.size() < 2) throw DataError("train_test_split: dataset too small");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> train_idx, test_idx;

    if (ds.labels) {
        std::size_t c = 0;
        for (std::size_t l : *ds.labels) c = std::max(c, l + 1);
        for (std::size_t cls = 0; cls < c; ++cls) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < ds.size(); ++i)
                if ((*ds.labels)[i] == cls) idx.push_back(i);
            std::shuffle(idx.begin(), idx.end(), rng);
            const std::size_t take = static_cast<std::size_t>(
                std::floor(fraction * static_cast<double>(idx.size()) + 0.5));
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < take ? train_idx : test_idx).push_back(idx[i]);
        }
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(test_idx.begin(), test_idx.end());
    } else {
        std::vector<std::size_t> idx(ds.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t take =
            static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ds.size())));
        train_idx.assign(idx.begin(), idx.begin() + take);
        test_idx.assign(idx.begin() + take, idx.end());
    }
    if (train_idx.empty() || test_idx.empty())
        throw DataError("train_test_split: degenerate split sizes");

    auto build = [&ds](const std::vector<std::size_t>& idx, const std::string& split) {
        Dataset out;
        out.name = ds.name;
        out.height = ds.height;
        out.width = ds.width;
        out.channels = ds.channels;
        out.split = split;
        out.images = DenseMatrix(idx.size(), ds.images.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < ds.images.cols(); ++j)
                out.images(i, j) = ds.images(idx[i], j);
        if (ds.labels) {
            std::vector<std::size_t> labs(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) labs[i] = (*ds.labels)[idx[i]];
            out.labels = std::move(labs);
        }
        return out;
    };
    return {build(train_idx, "train"), build(test_idx, "test")};
}

}  // namespace polca
