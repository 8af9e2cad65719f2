#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polca/classifiers.hpp"
#include "polca/data.hpp"
#include "polca/gradsim.hpp"
#include "polca/losses.hpp"
#include "polca/matrix.hpp"
#include "polca/metrics.hpp"
#include "polca/model.hpp"
#include "polca/pca.hpp"

namespace polca {

/// Shortest round-trip decimal representation; locale-independent, so the
/// same run always serializes to the same bytes.
inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

// ---- CSV emitters ----------------------------------------------------------

inline std::string loss_history_csv(const std::vector<LossReport>& history) {
    std::string out = loss_csv_header() + "\n";
    for (const LossReport& r : history) {
        out += std::to_string(r.step);
        for (double v : {r.l_rec, r.l_class, r.l_ort, r.l_com, r.l_var, r.l_total})
            out += "," + fmt_double(v);
        out += "\n";
    }
    return out;
}

/// Per-snapshot pairwise gradient cosine similarities, one row per loss pair.
inline std::string grads_csv(const std::vector<GradientSnapshot>& snapshots) {
    std::string out = "pair,step,s\n";
    for (const GradientSnapshot& snap : snapshots) {
        SimilarityMatrix sm = pairwise_similarity(snap);
        for (std::size_t i = 0; i < sm.losses.size(); ++i)
            for (std::size_t j = i + 1; j < sm.losses.size(); ++j)
                out += sm.losses[i] + "|" + sm.losses[j] + "," + std::to_string(snap.step) + "," +
                       fmt_double(sm.s(i, j)) + "\n";
    }
    return out;
}

// ---- side-by-side evaluation ----------------------------------------------

inline const std::vector<ClassifierKind>& all_classifier_kinds() {
    static const std::vector<ClassifierKind> kinds{ClassifierKind::perceptron, ClassifierKind::ridge,
                                                   ClassifierKind::logistic,
                                                   ClassifierKind::linear_svm};
    return kinds;
}

namespace detail {

inline MethodMetrics reconstruction_metrics(const Dataset& ds, const DenseMatrix& recon) {
    MethodMetrics m;
    m.nrmse = nrmse(ds.images, recon);
    m.psnr = psnr(ds.images, recon);
    m.ssim = ssim_batch(ds.images, recon, ds.height, ds.width, ds.channels);
    return m;
}

}  // namespace detail

/// Reconstruction metrics for both methods on both splits; when labels are
/// present, each classifier is trained on the train-split latent features
/// (z-scored with train statistics) and scored on both splits.
inline std::vector<EvalReport> evaluate_methods(const PolcaModel& model, const PcaModel& pca,
                                                const Dataset& train, const Dataset& test) {
    const bool labeled = train.labels.has_value() && test.labels.has_value();

    struct MethodData {
        std::string name;
        DenseMatrix z_train, z_test;    // latent features
        DenseMatrix r_train, r_test;    // reconstructions
        std::vector<LinearClassifier> clfs;
        Standardizer std_;
    };
    std::vector<MethodData> methods(2);
    methods[0].name = "pca";
    methods[0].z_train = pca_transform(pca, train.images);
    methods[0].z_test = pca_transform(pca, test.images);
    methods[0].r_train = pca_inverse(pca, methods[0].z_train);
    methods[0].r_test = pca_inverse(pca, methods[0].z_test);
    methods[1].name = "polca";
    methods[1].z_train = encode(model, train.images);
    methods[1].z_test = encode(model, test.images);
    methods[1].r_train = decode(model, methods[1].z_train);
    methods[1].r_test = decode(model, methods[1].z_test);

    if (labeled)
        for (MethodData& m : methods) {
            m.std_ = Standardizer::fit(m.z_train);
            DenseMatrix zs = m.std_.transform(m.z_train);
            for (ClassifierKind kind : all_classifier_kinds())
                m.clfs.push_back(fit_classifier(kind, zs, *train.labels));
        }

    std::vector<EvalReport> out;
    for (const Dataset* ds : {&train, &test}) {
        EvalReport rep;
        rep.dataset = ds->name;
        rep.split = ds->split;
        rep.latent_size = model.latent_dim;
        const bool is_train = ds == &train;
        rep.pca = detail::reconstruction_metrics(*ds, is_train ? methods[0].r_train
                                                               : methods[0].r_test);
        rep.polca = detail::reconstruction_metrics(*ds, is_train ? methods[1].r_train
                                                                 : methods[1].r_test);
        if (labeled)
            for (std::size_t mi = 0; mi < 2; ++mi) {
                const MethodData& m = methods[mi];
                DenseMatrix zs = m.std_.transform(is_train ? m.z_train : m.z_test);
                for (const LinearClassifier& clf : m.clfs) {
                    std::vector<std::size_t> pred = predict(clf, zs);
                    ClassifierMetrics cm;
                    cm.classifier = classifier_name(clf.kind);
                    cm.accuracy = accuracy(*ds->labels, pred);
                    cm.f1 = f1_macro(*ds->labels, pred);
                    (mi == 0 ? rep.pca_classifiers : rep.polca_classifiers).push_back(cm);
                }
            }
        out.push_back(std::move(rep));
    }
    return out;
}

inline std::string eval_csv(const std::vector<EvalReport>& reports) {
    std::string out = "dataset,split,latent,method,nrmse,psnr,ssim";
    for (ClassifierKind k : all_classifier_kinds()) {
        out += std::string(",") + classifier_name(k) + "_accuracy";
        out += std::string(",") + classifier_name(k) + "_f1";
    }
    out += "\n";
    for (const EvalReport& rep : reports)
        for (int mi = 0; mi < 2; ++mi) {
            const MethodMetrics& mm = mi == 0 ? rep.pca : rep.polca;
            const std::vector<ClassifierMetrics>& cms =
                mi == 0 ? rep.pca_classifiers : rep.polca_classifiers;
            out += rep.dataset + "," + rep.split + "," + std::to_string(rep.latent_size) + "," +
                   (mi == 0 ? "pca" : "polca") + "," + fmt_double(mm.nrmse) + "," +
                   fmt_double(mm.psnr) + "," + fmt_double(mm.ssim);
            for (std::size_t c = 0; c < all_classifier_kinds().size(); ++c) {
                if (c < cms.size())
                    out += "," + fmt_double(cms[c].accuracy) + "," + fmt_double(cms[c].f1);
                else
                    out += ",,";  // unlabeled dataset: classification cells stay blank
            }
            out += "\n";
        }
    return out;
}

// ---- JSON emitters (hand-rolled here to keep key order deterministic) ------

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

inline std::string json_number(double v) {
    // JSON has no inf/nan literals; use strings for the sentinels.
    if (std::isfinite(v)) return fmt_double(v);
    return "\"" + fmt_double(v) + "\"";
}

}  // namespace detail

inline std::string eval_json(const std::vector<EvalReport>& reports) {
    std::string out = "[\n";
    for (std::size_t ri = 0; ri < reports.size(); ++ri) {
        const EvalReport& rep = reports[ri];
        out += "  {\"dataset\": \"" + detail::json_escape(rep.dataset) + "\", \"split\": \"" +
               rep.split + "\", \"latent\": " + std::to_string(rep.latent_size) + ",\n";
        for (int mi = 0; mi < 2; ++mi) {
            const MethodMetrics& mm = mi == 0 ? rep.pca : rep.polca;
            const std::vector<ClassifierMetrics>& cms =
                mi == 0 ? rep.pca_classifiers : rep.polca_classifiers;
            out += std::string("   \"") + (mi == 0 ? "pca" : "polca") + "\": {\"nrmse\": " +
                   detail::json_number(mm.nrmse) + ", \"psnr\": " + detail::json_number(mm.psnr) +
                   ", \"ssim\": " + detail::json_number(mm.ssim) + ", \"classifiers\": {";
            for (std::size_t c = 0; c < cms.size(); ++c) {
                if (c) out += ", ";
                out += "\"" + cms[c].classifier + "\": {\"accuracy\": " +
                       detail::json_number(cms[c].accuracy) + ", \"f1\": " +
                       detail::json_number(cms[c].f1) + "}";
            }
            out += std::string("}}") + (mi == 0 ? ",\n" : "}");
        }
        out += ri + 1 < reports.size() ? ",\n" : "\n";
    }
    out += "]\n";
    return out;
}

inline std::string conflicts_json(const ConflictSummary& cs) {
    std::string out = "{\n  \"threshold\": " + fmt_double(cs.threshold) + ",\n  \"pairs\": {\n";
    std::size_t i = 0;
    for (const auto& [key, ps] : cs.pairs) {
        out += "    \"" + key + "\": {\"mean\": " + detail::json_number(ps.mean) +
               ", \"min\": " + detail::json_number(ps.min) + ", \"max\": " +
               detail::json_number(ps.max) + ", \"conflict_fraction\": " +
               detail::json_number(ps.conflict_fraction) + ", \"steps\": " +
               std::to_string(ps.steps) + "}";
        out += ++i < cs.pairs.size() ? ",\n" : "\n";
    }
    out += "  }\n}\n";
    return out;
}

// ---- SVG emitters (static, no timestamps) ----------------------------------

namespace detail {

inline std::string svg_polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                                const char* color) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i)
        pts += fmt_double(xs[i]) + "," + fmt_double(ys[i]) + " ";
    return std::string("<polyline fill=\"none\" stroke=\"") + color +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

}  // namespace detail

/// Log-scale total-loss curve over training steps.
inline std::string loss_curve_svg(const std::vector<LossReport>& history) {
    const double w = 640, h = 400, pad = 40;
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
    out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    if (!history.empty()) {
        double lo = 1e300, hi = -1e300;
        for (const LossReport& r : history) {
            const double v = std::log10(std::max(r.l_total, 1e-300));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi <= lo) hi = lo + 1.0;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < history.size(); ++i) {
            xs.push_back(pad + (w - 2 * pad) * static_cast<double>(i) /
                                   std::max<std::size_t>(history.size() - 1, 1));
            const double v = std::log10(std::max(history[i].l_total, 1e-300));
            ys.push_back(h - pad - (h - 2 * pad) * (v - lo) / (hi - lo));
        }
        out += detail::svg_polyline(xs, ys, "#1f6fb2");
        out += "<text x=\"320\" y=\"390\" text-anchor=\"middle\" font-size=\"12\">step</text>\n";
        out += "<text x=\"15\" y=\"200\" font-size=\"12\" transform=\"rotate(-90 15 200)\" "
               "text-anchor=\"middle\">log10 total loss</text>\n";
    }
    out += "</svg>\n";
    return out;
}

/// Paired PCA/POLCA bars for NRMSE, PSNR and SSIM per split.
inline std::string metric_bars_svg(const std::vector<EvalReport>& reports) {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
    out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    const char* metric_names[3] = {"nrmse", "psnr", "ssim"};
    double x = 50;
    for (const EvalReport& rep : reports) {
        for (int mi = 0; mi < 3; ++mi) {
            const double va = mi == 0 ? rep.pca.nrmse : mi == 1 ? rep.pca.psnr : rep.pca.ssim;
            const double vb = mi == 0 ? rep.polca.nrmse : mi == 1 ? rep.polca.psnr : rep.polca.ssim;
            const double cap = mi == 1 ? 60.0 : 1.0;  // PSNR plotted against a 60 dB scale
            auto bar = [&](double v, double bx, const char* color) {
                const double hh = 300.0 * std::clamp(std::isfinite(v) ? v / cap : 1.0, 0.0, 1.0);
                out += "<rect x=\"" + fmt_double(bx) + "\" y=\"" + fmt_double(350.0 - hh) +
                       "\" width=\"14\" height=\"" + fmt_double(hh) + "\" fill=\"" + color +
                       "\"/>\n";
            };
            bar(va, x, "#888888");
            bar(vb, x + 16, "#1f6fb2");
            out += "<text x=\"" + fmt_double(x + 15) + "\" y=\"365\" font-size=\"9\" "
                   "text-anchor=\"middle\">" + rep.split + " " + metric_names[mi] + "</text>\n";
            x += 90;
        }
    }
    out += "<text x=\"320\" y=\"390\" font-size=\"11\" text-anchor=\"middle\">"
           "gray: pca, blue: polca</text>\n";
    out += "</svg>\n";
    return out;
}

/// One cell per loss pair: similarity trace over logged steps plus the
/// conflict fraction.
inline std::string conflict_grid_svg(const std::vector<GradientSnapshot>& snapshots,
                                     const ConflictSummary& cs) {
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"";
    const std::size_t n_pairs = cs.pairs.size();
    const double cell_w = 280, cell_h = 130, pad = 10;
    const std::size_t cols = 3, rows = (n_pairs + cols - 1) / cols;
    out += fmt_double(static_cast<double>(rows) * (cell_h + pad) + pad) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::size_t idx = 0;
    for (const auto& [key, ps] : cs.pairs) {
        const double ox = pad + static_cast<double>(idx % cols) * (cell_w + pad);
        const double oy = pad + static_cast<double>(idx / cols) * (cell_h + pad);
        out += "<rect x=\"" + fmt_double(ox) + "\" y=\"" + fmt_double(oy) + "\" width=\"" +
               fmt_double(cell_w) + "\" height=\"" + fmt_double(cell_h) +
               "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
        // s = 0 midline
        out += "<line x1=\"" + fmt_double(ox) + "\" y1=\"" + fmt_double(oy + cell_h / 2) +
               "\" x2=\"" + fmt_double(ox + cell_w) + "\" y2=\"" + fmt_double(oy + cell_h / 2) +
               "\" stroke=\"#eeeeee\"/>\n";
        std::vector<double> xs, ys;
        for (std::size_t si = 0; si < snapshots.size(); ++si) {
            SimilarityMatrix sm = pairwise_similarity(snapshots[si]);
            for (std::size_t i = 0; i < sm.losses.size(); ++i)
                for (std::size_t j = i + 1; j < sm.losses.size(); ++j)
                    if (sm.losses[i] + "|" + sm.losses[j] == key) {
                        xs.push_back(ox + cell_w * static_cast<double>(si) /
                                              std::max<std::size_t>(snapshots.size() - 1, 1));
                        ys.push_back(oy + cell_h / 2 - sm.s(i, j) * (cell_h / 2 - 4));
                    }
        }
        out += detail::svg_polyline(xs, ys, "#1f6fb2");
        out += "<text x=\"" + fmt_double(ox + 6) + "\" y=\"" + fmt_double(oy + 14) +
               "\" font-size=\"11\">" + key + "  conflict " + fmt_double(ps.conflict_fraction) +
               "</text>\n";
        ++idx;
    }
    out += "</svg>\n";
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace polca
