#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "polca/matrix.hpp"

namespace polca {

/// Per-loss flattened parameter gradients captured at one training step.
struct GradientSnapshot {
    std::size_t step = 0;
    std::map<std::string, std::vector<double>> grads;
};

inline const std::vector<std::string>& canonical_loss_order() {
    static const std::vector<std::string> order{"rec", "class", "ort", "com", "var"};
    return order;
}

/// Cosine similarity of two gradient vectors; zero-norm vectors give 0
/// (neither conflict nor collaboration).
inline double gradient_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("gradient_cosine: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct SimilarityMatrix {
    std::vector<std::string> losses;  // canonical order, only losses present
    DenseMatrix s;                    // symmetric, s(i,i) = 1 for nonzero gradients
};

inline SimilarityMatrix pairwise_similarity(const GradientSnapshot& snap) {
    SimilarityMatrix out;
    for (const std::string& name : canonical_loss_order())
        if (snap.grads.count(name)) out.losses.push_back(name);
    const std::size_t n = out.losses.size();
    if (n < 2) throw ShapeError("pairwise_similarity: need at least 2 losses");
    out.s = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v =
                gradient_cosine(snap.grads.at(out.losses[i]), snap.grads.at(out.losses[j]));
            out.s(i, j) = v;
            out.s(j, i) = v;
        }
    return out;
}

struct PairStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double conflict_fraction = 0.0;  // fraction of steps with s < threshold (strict)
    std::size_t steps = 0;
};

struct ConflictSummary {
    double threshold = -0.01;
    std::map<std::string, PairStats> pairs;  // key "rec|ort" etc., canonical order
};

inline ConflictSummary summarize_conflicts(const std::vector<GradientSnapshot>& snaps,
                                           double threshold = -0.01) {
    if (snaps.empty()) throw ShapeError("summarize_conflicts: empty snapshot list");
    ConflictSummary out;
    out.threshold = threshold;
    for (const GradientSnapshot& snap : snaps) {
        SimilarityMatrix sm = pairwise_similarity(snap);
        for (std::size_t i = 0; i < sm.losses.size(); ++i)
            for (std::size_t j = i + 1; j < sm.losses.size(); ++j) {
                const std::string key = sm.losses[i] + "|" + sm.losses[j];
                const double s = sm.s(i, j);
                PairStats& ps = out.pairs[key];
                if (ps.steps == 0) {
                    ps.mean = 0.0;
                    ps.min = s;
                    ps.max = s;
                }
                ps.mean += s;
                ps.min = std::min(ps.min, s);
                ps.max = std::max(ps.max, s);
                if (s < threshold) ps.conflict_fraction += 1.0;
                ps.steps += 1;
            }
    }
    for (auto& [key, ps] : out.pairs) {
        ps.mean /= static_cast<double>(ps.steps);
        ps.conflict_fraction /= static_cast<double>(ps.steps);
    }
    return out;
}

}  // namespace polca
