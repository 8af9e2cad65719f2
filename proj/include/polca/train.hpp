#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "polca/gradsim.hpp"
#include "polca/losses.hpp"
#include "polca/model.hpp"

namespace polca {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    std::size_t gradient_updates = 20000;
    std::size_t batch_size = 64;
    std::uint64_t seed = 5;
    LossWeights weights;  // alpha 1e-2, beta 1e-2, gamma 1e-7
    OrtMode ort_mode = OrtMode::dimension;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t conflict_log_every = 100;

    void validate() const {
        if (weights.alpha < 0 || weights.beta < 0 || weights.gamma < 0)
            throw TrainError("TrainConfig: loss weights must be >= 0");
        if (batch_size < 2) throw TrainError("TrainConfig: batch_size must be >= 2");
    }
};

/// Adam moment state, keyed by parameter id.
class AdamState {
public:
    /// Standard Adam with bias correction; step_index is 1-based.
    void step(PolcaModel& m, const std::map<int, DenseMatrix>& grads, std::size_t step_index,
              const TrainConfig& cfg) {
        std::vector<DenseMatrix*> params = m.params_mut();
        if (grads.size() != params.size())
            throw TrainError("adam_step: gradient map does not cover every parameter");
        if (m_.empty()) {
            for (const DenseMatrix* p : params) {
                m_.emplace_back(p->rows(), p->cols());
                v_.emplace_back(p->rows(), p->cols());
            }
        }
        const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
        const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step_index));
        const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step_index));
        for (std::size_t pid = 0; pid < params.size(); ++pid) {
            auto it = grads.find(static_cast<int>(pid));
            if (it == grads.end())
                throw TrainError("adam_step: missing gradient for parameter " + std::to_string(pid));
            const DenseMatrix& g = it->second;
            DenseMatrix& p = *params[pid];
            DenseMatrix& mm = m_[pid];
            DenseMatrix& vv = v_[pid];
            for (std::size_t i = 0; i < p.size(); ++i) {
                mm[i] = b1 * mm[i] + (1.0 - b1) * g[i];
                vv[i] = b2 * vv[i] + (1.0 - b2) * g[i] * g[i];
                const double mhat = mm[i] / corr1;
                const double vhat = vv[i] / corr2;
                p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
            }
        }
    }

private:
    std::vector<DenseMatrix> m_;
    std::vector<DenseMatrix> v_;
};

struct TrainResult {
    std::vector<LossReport> history;        // one entry per gradient update
    std::vector<GradientSnapshot> snapshots;  // every conflict_log_every steps
};

namespace detail {

inline DenseMatrix take_rows(const DenseMatrix& x, const std::vector<std::size_t>& idx,
                             std::size_t begin, std::size_t count) {
    DenseMatrix out(count, x.cols());
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(idx[begin + i], j);
    return out;
}

}  // namespace detail

/// Runs exactly cfg.gradient_updates Adam steps over shuffled minibatches
/// (shuffle each epoch, without replacement). Labels may be null when the
/// classification loss is disabled.
inline TrainResult train(PolcaModel& model, const DenseMatrix& data,
                         const std::vector<std::size_t>* labels, const TrainConfig& cfg) {
    cfg.validate();
    if (data.rows() == 0) throw TrainError("train: empty dataset");
    if (cfg.weights.use_class) {
        if (labels == nullptr || labels->size() != data.rows())
            throw TrainError("train: classification enabled but labels missing or mismatched");
        if (!model.has_classifier) throw TrainError("train: model has no classifier head");
    }

    TrainResult result;
    AdamState adam;
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();  // forces an initial shuffle

    for (std::size_t step = 1; step <= cfg.gradient_updates; ++step) {
        if (cursor + 2 > order.size()) {  // fewer than 2 rows left: new epoch
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        const std::size_t take = std::min(cfg.batch_size, order.size() - cursor);
        DenseMatrix batch = detail::take_rows(data, order, cursor, take);
        std::vector<std::size_t> batch_labels;
        if (cfg.weights.use_class) {
            batch_labels.reserve(take);
            for (std::size_t i = 0; i < take; ++i) batch_labels.push_back((*labels)[order[cursor + i]]);
        }
        cursor += take;

        const bool log_grads =
            cfg.conflict_log_every > 0 && ((step - 1) % cfg.conflict_log_every == 0);
        CompositeResult cr =
            composite_loss(model, batch, cfg.weights.use_class ? &batch_labels : nullptr,
                           cfg.weights, cfg.ort_mode, log_grads);
        cr.report.step = step;

        auto check = [&](double v, const char* name) {
            if (!std::isfinite(v))
                throw TrainError(std::string("train: non-finite ") + name + " at step " +
                                 std::to_string(step));
        };
        check(cr.report.l_rec, "l_rec");
        check(cr.report.l_class, "l_class");
        check(cr.report.l_ort, "l_ort");
        check(cr.report.l_com, "l_com");
        check(cr.report.l_var, "l_var");
        check(cr.report.l_total, "l_total");

        if (log_grads) {
            GradientSnapshot snap;
            snap.step = step;
            snap.grads = cr.report.grads;
            result.snapshots.push_back(std::move(snap));
        }
        adam.step(model, cr.total_grads, step, cfg);
        result.history.push_back(std::move(cr.report));
    }
    return result;
}

}  // namespace polca
