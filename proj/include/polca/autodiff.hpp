#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "polca/matrix.hpp"

namespace polca::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    Tape* tape = nullptr;
    std::size_t idx = 0;
};

/// Define-by-run reverse-mode tape. Nodes are appended in topological
/// order; backward() walks them in reverse. One tape per forward pass.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t node_idx)>;

    Var leaf(DenseMatrix value, int param_id = -1) {
        nodes_.push_back(Node{std::move(value), {}, param_id});
        if (param_id >= 0) param_nodes_.emplace_back(param_id, nodes_.size() - 1);
        return Var{this, nodes_.size() - 1};
    }

    Var constant(DenseMatrix value) { return leaf(std::move(value), -1); }

    Var push(DenseMatrix value, BackwardFn fn) {
        nodes_.push_back(Node{std::move(value), std::move(fn), -1});
        return Var{this, nodes_.size() - 1};
    }

    const DenseMatrix& value(Var v) const { return nodes_[v.idx].value; }
    const DenseMatrix& value(std::size_t i) const { return nodes_[i].value; }
    double scalar(Var v) const { return nodes_[v.idx].value(0, 0); }

    const DenseMatrix& grad(std::size_t i) const { return grads_[i]; }

    void accumulate(std::size_t node_idx, const DenseMatrix& g) {
        DenseMatrix& dst = grads_[node_idx];
        if (dst.size() == 0) dst = DenseMatrix(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }

    /// Gradients of a scalar root w.r.t. every registered parameter leaf.
    /// May be called repeatedly on the same tape (grads are reset each call).
    std::map<int, DenseMatrix> backward(Var root) {
        const DenseMatrix& rv = nodes_[root.idx].value;
        if (rv.rows() != 1 || rv.cols() != 1)
            throw ShapeError("backward: root must be 1x1, got " + rv.shape_str());
        grads_.assign(nodes_.size(), DenseMatrix());
        grads_[root.idx] = DenseMatrix(1, 1, 1.0);
        for (std::size_t i = root.idx + 1; i-- > 0;) {
            if (grads_[i].size() == 0) continue;
            if (nodes_[i].backward) nodes_[i].backward(*this, i);
        }
        std::map<int, DenseMatrix> out;
        for (auto [pid, nidx] : param_nodes_) {
            if (grads_[nidx].size() != 0)
                out[pid] = grads_[nidx];
            else
                out[pid] = DenseMatrix(nodes_[nidx].value.rows(), nodes_[nidx].value.cols());
        }
        return out;
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        DenseMatrix value;
        BackwardFn backward;
        int param_id;
    };
    std::vector<Node> nodes_;
    std::vector<std::pair<int, std::size_t>> param_nodes_;
    std::vector<DenseMatrix> grads_;
};

// ---- ops -------------------------------------------------------------------

inline Var matmul(Var a, Var b) {
    Tape& t = *a.tape;
    DenseMatrix c = polca::matmul(t.value(a), t.value(b));
    std::size_t ai = a.idx, bi = b.idx;
    return t.push(std::move(c), [ai, bi](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        tp.accumulate(ai, polca::matmul(g, transpose(tp.value(bi))));
        tp.accumulate(bi, polca::matmul(transpose(tp.value(ai)), g));
    });
}

inline Var add(Var a, Var b) {
    Tape& t = *a.tape;
    std::size_t ai = a.idx, bi = b.idx;
    return t.push(polca::add(t.value(a), t.value(b)), [ai, bi](Tape& tp, std::size_t self) {
        tp.accumulate(ai, tp.grad(self));
        tp.accumulate(bi, tp.grad(self));
    });
}

inline Var sub(Var a, Var b) {
    Tape& t = *a.tape;
    std::size_t ai = a.idx, bi = b.idx;
    return t.push(polca::sub(t.value(a), t.value(b)), [ai, bi](Tape& tp, std::size_t self) {
        tp.accumulate(ai, tp.grad(self));
        tp.accumulate(bi, polca::scale(tp.grad(self), -1.0));
    });
}

inline Var mul(Var a, Var b) {
    Tape& t = *a.tape;
    std::size_t ai = a.idx, bi = b.idx;
    return t.push(polca::mul(t.value(a), t.value(b)), [ai, bi](Tape& tp, std::size_t self) {
        tp.accumulate(ai, polca::mul(tp.grad(self), tp.value(bi)));
        tp.accumulate(bi, polca::mul(tp.grad(self), tp.value(ai)));
    });
}

/// Elementwise division a / b.
inline Var div(Var a, Var b) {
    Tape& t = *a.tape;
    require_same_shape(t.value(a), t.value(b), "div");
    DenseMatrix c = t.value(a);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] /= t.value(b)[i];
    std::size_t ai = a.idx, bi = b.idx;
    return t.push(std::move(c), [ai, bi](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        const DenseMatrix& bv = tp.value(bi);
        const DenseMatrix& cv = tp.value(self);
        DenseMatrix da = g, db = g;
        for (std::size_t i = 0; i < g.size(); ++i) {
            da[i] = g[i] / bv[i];
            db[i] = -g[i] * cv[i] / bv[i];
        }
        tp.accumulate(ai, da);
        tp.accumulate(bi, db);
    });
}

inline Var scale(Var a, double s) {
    Tape& t = *a.tape;
    std::size_t ai = a.idx;
    return t.push(polca::scale(t.value(a), s), [ai, s](Tape& tp, std::size_t self) {
        tp.accumulate(ai, polca::scale(tp.grad(self), s));
    });
}

namespace detail {

template <typename Fwd, typename Dfn>
Var unary(Var a, Fwd fwd, Dfn dfn) {
    Tape& t = *a.tape;
    const DenseMatrix& av = t.value(a);
    DenseMatrix c = av;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = fwd(av[i]);
    std::size_t ai = a.idx;
    return t.push(std::move(c), [ai, dfn](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        const DenseMatrix& x = tp.value(ai);
        const DenseMatrix& y = tp.value(self);
        DenseMatrix da = g;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * dfn(x[i], y[i]);
        tp.accumulate(ai, da);
    });
}

}  // namespace detail

// ReLU gradient at exactly 0 is 0.
inline Var relu(Var a) {
    return detail::unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var tanh(Var a) {
    return detail::unary(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

inline Var sigmoid(Var a) {
    return detail::unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Var square(Var a) {
    return detail::unary(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

inline Var sqrt(Var a) {
    for (double v : a.tape->value(a).data())
        if (v < 0.0) throw DomainError("sqrt: negative entry");
    return detail::unary(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

inline Var log(Var a) {
    for (double v : a.tape->value(a).data())
        if (v <= 0.0) throw DomainError("log: non-positive entry");
    return detail::unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

inline Var exp(Var a) {
    return detail::unary(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

/// max(x, lo); gradient is 0 on the clamped side.
inline Var clamp_min(Var a, double lo) {
    return detail::unary(
        a, [lo](double x) { return x < lo ? lo : x; },
        [lo](double x, double) { return x < lo ? 0.0 : 1.0; });
}

/// X (N x m) + row vector b (1 x m), broadcast over rows.
inline Var add_rowvec(Var x, Var b) {
    Tape& t = *x.tape;
    const DenseMatrix& xv = t.value(x);
    const DenseMatrix& bv = t.value(b);
    if (bv.rows() != 1 || bv.cols() != xv.cols())
        throw ShapeError("add_rowvec: " + xv.shape_str() + " + " + bv.shape_str());
    DenseMatrix c = xv;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) += bv(0, j);
    std::size_t xi = x.idx, bi = b.idx;
    return t.push(std::move(c), [xi, bi](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        tp.accumulate(xi, g);
        DenseMatrix db(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) db(0, j) += g(i, j);
        tp.accumulate(bi, db);
    });
}

/// X (N x m) / row vector r (1 x m), broadcast over rows.
inline Var div_rowvec(Var x, Var r) {
    Tape& t = *x.tape;
    const DenseMatrix& xv = t.value(x);
    const DenseMatrix& rv = t.value(r);
    if (rv.rows() != 1 || rv.cols() != xv.cols())
        throw ShapeError("div_rowvec: " + xv.shape_str() + " / " + rv.shape_str());
    DenseMatrix c = xv;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) /= rv(0, j);
    std::size_t xi = x.idx, ri = r.idx;
    return t.push(std::move(c), [xi, ri](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        const DenseMatrix& rvv = tp.value(ri);
        const DenseMatrix& cv = tp.value(self);
        DenseMatrix dx = g;
        DenseMatrix dr(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                dx(i, j) = g(i, j) / rvv(0, j);
                dr(0, j) -= g(i, j) * cv(i, j) / rvv(0, j);
            }
        tp.accumulate(xi, dx);
        tp.accumulate(ri, dr);
    });
}

inline Var transpose(Var a) {
    Tape& t = *a.tape;
    std::size_t ai = a.idx;
    return t.push(polca::transpose(t.value(a)), [ai](Tape& tp, std::size_t self) {
        tp.accumulate(ai, polca::transpose(tp.grad(self)));
    });
}

inline Var sum(Var a) {
    Tape& t = *a.tape;
    const DenseMatrix& av = t.value(a);
    if (av.size() == 0) throw ShapeError("sum: empty matrix");
    std::size_t ai = a.idx;
    return t.push(DenseMatrix(1, 1, sum_all(av)), [ai](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)(0, 0);
        const DenseMatrix& x = tp.value(ai);
        tp.accumulate(ai, DenseMatrix(x.rows(), x.cols(), g));
    });
}

inline Var mean(Var a) {
    Tape& t = *a.tape;
    const DenseMatrix& av = t.value(a);
    if (av.size() == 0) throw ShapeError("mean: empty matrix");
    std::size_t ai = a.idx;
    return t.push(DenseMatrix(1, 1, mean_all(av)), [ai](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)(0, 0);
        const DenseMatrix& x = tp.value(ai);
        tp.accumulate(ai, DenseMatrix(x.rows(), x.cols(), g / static_cast<double>(x.size())));
    });
}

inline Var col_sum(Var a) {
    Tape& t = *a.tape;
    const DenseMatrix& av = t.value(a);
    if (av.rows() == 0) throw ShapeError("col_sum: empty matrix");
    DenseMatrix s(1, av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) s(0, j) += av(i, j);
    std::size_t ai = a.idx;
    return t.push(std::move(s), [ai](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        const DenseMatrix& x = tp.value(ai);
        DenseMatrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) dx(i, j) = g(0, j);
        tp.accumulate(ai, dx);
    });
}

inline Var col_mean(Var a) {
    Tape& t = *a.tape;
    const DenseMatrix& av = t.value(a);
    if (av.rows() == 0) throw ShapeError("col_mean: empty matrix");
    std::size_t ai = a.idx;
    return t.push(polca::col_mean(av), [ai](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        const DenseMatrix& x = tp.value(ai);
        const double inv_n = 1.0 / static_cast<double>(x.rows());
        DenseMatrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) dx(i, j) = g(0, j) * inv_n;
        tp.accumulate(ai, dx);
    });
}

/// Biased per-column variance (divide by N), 1 x cols.
inline Var col_var(Var a) {
    Tape& t = *a.tape;
    const DenseMatrix& av = t.value(a);
    if (av.rows() < 1) throw ShapeError("col_var: empty matrix");
    std::size_t ai = a.idx;
    return t.push(polca::col_var(av), [ai](Tape& tp, std::size_t self) {
        const DenseMatrix& g = tp.grad(self);
        const DenseMatrix& x = tp.value(ai);
        DenseMatrix mu = polca::col_mean(x);
        const double inv_n = 1.0 / static_cast<double>(x.rows());
        DenseMatrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
                dx(i, j) = g(0, j) * 2.0 * (x(i, j) - mu(0, j)) * inv_n;
        tp.accumulate(ai, dx);
    });
}

/// Mean negative log-softmax of the true class, max-shift stabilized.
/// Fused forward/backward; labels are class indices in [0, C).
inline Var softmax_cross_entropy(Var logits, const std::vector<std::size_t>& labels) {
    Tape& t = *logits.tape;
    const DenseMatrix& lv = t.value(logits);
    const std::size_t n = lv.rows(), c = lv.cols();
    if (labels.size() != n) throw ShapeError("softmax_cross_entropy: label count mismatch");
    for (std::size_t y : labels)
        if (y >= c) throw DomainError("softmax_cross_entropy: label out of range");
    DenseMatrix probs(n, c);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = lv(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, lv(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            probs(i, j) = std::exp(lv(i, j) - mx);
            z += probs(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) probs(i, j) /= z;
        loss -= std::log(probs(i, labels[i]));
    }
    loss /= static_cast<double>(n);
    std::size_t li = logits.idx;
    return t.push(DenseMatrix(1, 1, loss),
                  [li, probs, labels](Tape& tp, std::size_t self) {
                      const double g = tp.grad(self)(0, 0);
                      const std::size_t n = probs.rows();
                      DenseMatrix dl = probs;
                      for (std::size_t i = 0; i < n; ++i) dl(i, labels[i]) -= 1.0;
                      tp.accumulate(li, polca::scale(dl, g / static_cast<double>(n)));
                  });
}

}  // namespace polca::ad
