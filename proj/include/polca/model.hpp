#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "polca/autodiff.hpp"
#include "polca/losses.hpp"
#include "polca/matrix.hpp"

namespace polca {

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2, sigmoid = 3 };

struct Layer {
    DenseMatrix w;  // in x out
    DenseMatrix b;  // 1 x out
    Activation act = Activation::identity;
};

/// MLP autoencoder with an optional linear classification head on the latent.
struct PolcaModel {
    std::vector<Layer> encoder;
    std::vector<Layer> decoder;
    bool has_classifier = false;
    Layer classifier;
    std::size_t latent_dim = 0;
    bool linear_decoder = false;

    std::size_t input_dim() const { return encoder.front().w.rows(); }
    std::size_t num_classes() const { return has_classifier ? classifier.w.cols() : 0; }

    /// Parameters in a fixed order; index in this list is the parameter id.
    std::vector<const DenseMatrix*> params() const {
        std::vector<const DenseMatrix*> p;
        for (const Layer& l : encoder) { p.push_back(&l.w); p.push_back(&l.b); }
        for (const Layer& l : decoder) { p.push_back(&l.w); p.push_back(&l.b); }
        if (has_classifier) { p.push_back(&classifier.w); p.push_back(&classifier.b); }
        return p;
    }
    std::vector<DenseMatrix*> params_mut() {
        std::vector<DenseMatrix*> p;
        for (Layer& l : encoder) { p.push_back(&l.w); p.push_back(&l.b); }
        for (Layer& l : decoder) { p.push_back(&l.w); p.push_back(&l.b); }
        if (has_classifier) { p.push_back(&classifier.w); p.push_back(&classifier.b); }
        return p;
    }
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const DenseMatrix* m : params()) n += m->size();
        return n;
    }
};

namespace detail {

inline DenseMatrix apply_activation(DenseMatrix m, Activation a) {
    switch (a) {
        case Activation::identity: return m;
        case Activation::relu:
            for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
            return m;
        case Activation::tanh:
            for (double& v : m.data()) v = std::tanh(v);
            return m;
        case Activation::sigmoid:
            for (double& v : m.data()) v = 1.0 / (1.0 + std::exp(-v));
            return m;
    }
    throw DomainError("unknown activation");
}

inline ad::Var apply_activation_t(ad::Var x, Activation a) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return ad::relu(x);
        case Activation::tanh: return ad::tanh(x);
        case Activation::sigmoid: return ad::sigmoid(x);
    }
    throw DomainError("unknown activation");
}

}  // namespace detail

/// Kaiming-uniform-style fan-in init: w ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)),
/// biases zero. Same seed gives bit-identical parameters.
inline PolcaModel init_model(const std::vector<std::size_t>& widths_enc,
                             const std::vector<std::size_t>& widths_dec,
                             std::size_t latent_dim, bool linear_decoder,
                             std::size_t num_classes, std::uint64_t seed) {
    if (widths_enc.size() < 2 || widths_dec.size() < 2)
        throw ShapeError("init_model: width chains need at least 2 entries");
    if (widths_enc.back() != latent_dim || widths_dec.front() != latent_dim)
        throw ShapeError("init_model: width chains inconsistent with latent_dim");
    if (latent_dim < 1) throw ShapeError("init_model: latent_dim must be >= 1");
    if (linear_decoder && widths_dec.size() != 2)
        throw ShapeError("init_model: linear decoder must be a single layer");

    std::mt19937_64 rng(seed);
    auto make_layer = [&rng](std::size_t in, std::size_t out, Activation act) {
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Layer l;
        l.w = DenseMatrix(in, out);
        for (double& v : l.w.data()) v = dist(rng);
        l.b = DenseMatrix(1, out);
        l.act = act;
        return l;
    };

    PolcaModel m;
    m.latent_dim = latent_dim;
    m.linear_decoder = linear_decoder;
    for (std::size_t i = 0; i + 1 < widths_enc.size(); ++i) {
        const bool last = (i + 2 == widths_enc.size());
        // latent layer keeps identity so variances are unbounded above
        m.encoder.push_back(make_layer(widths_enc[i], widths_enc[i + 1],
                                       last ? Activation::identity : Activation::tanh));
    }
    for (std::size_t i = 0; i + 1 < widths_dec.size(); ++i) {
        const bool last = (i + 2 == widths_dec.size());
        m.decoder.push_back(make_layer(widths_dec[i], widths_dec[i + 1],
                                       last ? Activation::identity : Activation::tanh));
    }
    if (num_classes > 0) {
        m.has_classifier = true;
        m.classifier = make_layer(latent_dim, num_classes, Activation::identity);
    }
    return m;
}

/// input -> 256 -> 128 -> latent, mirrored decoder unless linear_decoder.
inline PolcaModel default_model(std::size_t input_dim, std::size_t latent_dim,
                                bool linear_decoder, std::size_t num_classes,
                                std::uint64_t seed) {
    std::vector<std::size_t> enc{input_dim, 256, 128, latent_dim};
    std::vector<std::size_t> dec;
    if (linear_decoder)
        dec = {latent_dim, input_dim};
    else
        dec = {latent_dim, 128, 256, input_dim};
    return init_model(enc, dec, latent_dim, linear_decoder, num_classes, seed);
}

inline DenseMatrix encode(const PolcaModel& m, const DenseMatrix& batch) {
    if (batch.cols() != m.input_dim())
        throw ShapeError("encode: batch width " + batch.shape_str() + " != input dim");
    DenseMatrix h = batch;
    for (const Layer& l : m.encoder) {
        DenseMatrix z = matmul(h, l.w);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += l.b(0, j);
        h = detail::apply_activation(std::move(z), l.act);
    }
    return h;
}

inline DenseMatrix decode(const PolcaModel& m, const DenseMatrix& latent) {
    if (latent.cols() != m.latent_dim)
        throw ShapeError("decode: latent width " + latent.shape_str() + " != latent dim");
    DenseMatrix h = latent;
    for (const Layer& l : m.decoder) {
        DenseMatrix z = matmul(h, l.w);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += l.b(0, j);
        h = detail::apply_activation(std::move(z), l.act);
    }
    return h;
}

inline DenseMatrix classify_logits(const PolcaModel& m, const DenseMatrix& latent) {
    if (!m.has_classifier) throw DomainError("classify_logits: model has no classifier head");
    DenseMatrix z = matmul(latent, m.classifier.w);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += m.classifier.b(0, j);
    return z;
}

struct ForwardVars {
    ad::Var latent;
    ad::Var recon;
    ad::Var logits;  // valid only when has_logits
    bool has_logits = false;
};

/// Records the full forward pass on a tape; parameter ids match params().
inline ForwardVars forward_tape(const PolcaModel& m, ad::Tape& tape, const DenseMatrix& batch,
                                bool with_class) {
    std::vector<ad::Var> pvars;
    int pid = 0;
    for (const DenseMatrix* p : m.params()) pvars.push_back(tape.leaf(*p, pid++));

    ad::Var h = tape.constant(batch);
    std::size_t k = 0;
    for (const Layer& l : m.encoder) {
        h = detail::apply_activation_t(ad::add_rowvec(ad::matmul(h, pvars[k]), pvars[k + 1]), l.act);
        k += 2;
    }
    ForwardVars out;
    out.latent = h;
    for (const Layer& l : m.decoder) {
        h = detail::apply_activation_t(ad::add_rowvec(ad::matmul(h, pvars[k]), pvars[k + 1]), l.act);
        k += 2;
    }
    out.recon = h;
    if (with_class) {
        if (!m.has_classifier) throw DomainError("forward_tape: model has no classifier head");
        out.logits = ad::add_rowvec(ad::matmul(out.latent, pvars[k]), pvars[k + 1]);
        out.has_logits = true;
    }
    return out;
}

struct CompositeResult {
    LossReport report;
    std::map<int, DenseMatrix> total_grads;
};

/// One forward pass, all active sub-losses, gradient of the weighted total.
/// With per_loss_grads, each sub-loss is also backpropagated separately over
/// the same tape values and its flattened parameter gradient recorded.
inline CompositeResult composite_loss(const PolcaModel& m, const DenseMatrix& batch,
                                      const std::vector<std::size_t>* labels,
                                      const LossWeights& w, OrtMode ort_mode = OrtMode::dimension,
                                      bool per_loss_grads = false) {
    if (w.use_class && labels == nullptr)
        throw DomainError("composite_loss: use_class set but no labels given");
    ad::Tape tape;
    ForwardVars fv = forward_tape(m, tape, batch, w.use_class);

    ad::Var x = tape.constant(batch);
    ad::Var l_rec = mse_loss_t(x, fv.recon);
    ad::Var l_ort = orthogonality_loss_t(fv.latent, ort_mode);
    ad::Var l_com = center_of_mass_loss_t(fv.latent);
    ad::Var l_var = variance_loss_t(fv.latent);

    ad::Var total = ad::add(l_rec, ad::add(ad::scale(l_ort, w.alpha),
                                           ad::add(ad::scale(l_com, w.beta), ad::scale(l_var, w.gamma))));
    CompositeResult res;
    if (w.use_class) {
        ad::Var l_class = ad::softmax_cross_entropy(fv.logits, *labels);
        total = ad::add(total, l_class);
        res.report.l_class = tape.scalar(l_class);
        if (per_loss_grads) {
            auto g = tape.backward(l_class);
            std::vector<double> flat;
            for (auto& [id, gm] : g) flat.insert(flat.end(), gm.data().begin(), gm.data().end());
            res.report.grads["class"] = std::move(flat);
        }
    }

    res.report.l_rec = tape.scalar(l_rec);
    res.report.l_ort = tape.scalar(l_ort);
    res.report.l_com = tape.scalar(l_com);
    res.report.l_var = tape.scalar(l_var);
    res.report.l_total = tape.scalar(total);

    if (per_loss_grads) {
        auto flatten = [](std::map<int, DenseMatrix> g) {
            std::vector<double> flat;
            for (auto& [id, gm] : g) flat.insert(flat.end(), gm.data().begin(), gm.data().end());
            return flat;
        };
        res.report.grads["rec"] = flatten(tape.backward(l_rec));
        res.report.grads["ort"] = flatten(tape.backward(l_ort));
        res.report.grads["com"] = flatten(tape.backward(l_com));
        res.report.grads["var"] = flatten(tape.backward(l_var));
    }
    res.total_grads = tape.backward(total);
    return res;
}

// ---- checkpoint ------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u8(std::ostream& os, std::uint8_t v) {
    os.write(reinterpret_cast<const char*>(&v), 1);
}
inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline std::uint8_t read_u8(std::istream& is) {
    std::uint8_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 1);
    return v;
}
inline void write_layer_spec(std::ostream& os, const Layer& l) {
    write_u32(os, static_cast<std::uint32_t>(l.w.rows()));
    write_u32(os, static_cast<std::uint32_t>(l.w.cols()));
    write_u8(os, static_cast<std::uint8_t>(l.act));
}

}  // namespace detail

inline void save_model(const PolcaModel& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_model: cannot open " + path);
    os.write("POLCA1", 6);
    detail::write_u32(os, static_cast<std::uint32_t>(m.latent_dim));
    detail::write_u8(os, m.linear_decoder ? 1 : 0);
    detail::write_u32(os, static_cast<std::uint32_t>(m.num_classes()));
    detail::write_u32(os, static_cast<std::uint32_t>(m.encoder.size()));
    for (const Layer& l : m.encoder) detail::write_layer_spec(os, l);
    detail::write_u32(os, static_cast<std::uint32_t>(m.decoder.size()));
    for (const Layer& l : m.decoder) detail::write_layer_spec(os, l);
    for (const DenseMatrix* p : m.params())
        os.write(reinterpret_cast<const char*>(p->data().data()),
                 static_cast<std::streamsize>(p->size() * sizeof(double)));
    if (!os) throw std::runtime_error("save_model: write failed for " + path);
}

inline PolcaModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_model: cannot open " + path);
    char magic[6];
    is.read(magic, 6);
    if (!is || std::memcmp(magic, "POLCA1", 6) != 0)
        throw std::runtime_error("load_model: bad magic in " + path);
    PolcaModel m;
    m.latent_dim = detail::read_u32(is);
    m.linear_decoder = detail::read_u8(is) != 0;
    const std::uint32_t num_classes = detail::read_u32(is);
    auto read_layers = [&is](std::vector<Layer>& layers) {
        const std::uint32_t n = detail::read_u32(is);
        for (std::uint32_t i = 0; i < n; ++i) {
            Layer l;
            const std::uint32_t r = detail::read_u32(is);
            const std::uint32_t c = detail::read_u32(is);
            l.act = static_cast<Activation>(detail::read_u8(is));
            l.w = DenseMatrix(r, c);
            l.b = DenseMatrix(1, c);
            layers.push_back(std::move(l));
        }
    };
    read_layers(m.encoder);
    read_layers(m.decoder);
    if (num_classes > 0) {
        m.has_classifier = true;
        m.classifier.w = DenseMatrix(m.latent_dim, num_classes);
        m.classifier.b = DenseMatrix(1, num_classes);
        m.classifier.act = Activation::identity;
    }
    for (DenseMatrix* p : m.params_mut())
        is.read(reinterpret_cast<char*>(p->data().data()),
                static_cast<std::streamsize>(p->size() * sizeof(double)));
    if (!is) throw std::runtime_error("load_model: truncated checkpoint " + path);
    return m;
}

}  // namespace polca
