// polca: train the orthogonality-regularized autoencoder, compare it against
// PCA, and analyze gradient conflicts between the loss terms.
//
// Subcommands:
//   gen-data   write a synthetic sinusoidal dataset as an IDX file
//   train      train a model; writes model.bin, loss.csv, grads.csv
//   compare    evaluate model vs PCA on train/test splits; writes eval.csv/json
//   gradients  summarize loss-pair gradient conflicts from grads.csv
//
// Every run writes manifest.json next to its outputs. Identical config and
// seed reproduce all CSV outputs byte-identically.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polca/data.hpp"
#include "polca/report.hpp"
#include "polca/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunOpts {
    // dataset source (exactly one)
    std::string data_idx;
    std::string labels_path;
    std::string synthetic;  // "sinusoidal" | "bent"
    std::size_t samples = 1200;
    double train_fraction = 0.8;
    bool per_image_waves = false;
    double squash = 0.0;
    // model / training
    std::size_t latent = 0;  // 0 = auto (11 for mnist-named idx data, else 8)
    std::size_t updates = 20000;
    std::size_t batch = 64;
    std::uint64_t seed = 5;
    double alpha = 1e-2;
    double beta = 1e-2;
    double gamma = 1e-7;
    bool linear_decoder = false;
    bool with_class = false;
    // io
    std::string out = ".";
    std::string checkpoint;  // compare: reuse a trained model
    std::string grads_file;  // gradients: input CSV
    bool plot = false;
};

void add_dataset_flags(CLI::App* cmd, RunOpts& o) {
    auto* idx = cmd->add_option("--data-idx", o.data_idx, "IDX image file");
    cmd->add_option("--labels", o.labels_path, "IDX label file")->needs(idx);
    cmd->add_option("--synthetic", o.synthetic, "synthetic dataset: sinusoidal | bent")
        ->check(CLI::IsMember({"sinusoidal", "bent"}))
        ->excludes(idx);
    cmd->add_option("--samples", o.samples, "synthetic sample count");
    cmd->add_option("--train-fraction", o.train_fraction, "train split fraction");
    cmd->add_flag("--per-image-waves", o.per_image_waves,
                  "draw every synthetic wave parameter per image (high linear rank)");
    cmd->add_option("--squash", o.squash,
                    "saturate synthetic pixels with tanh(squash * v) before rescaling");
}

void add_train_flags(CLI::App* cmd, RunOpts& o) {
    cmd->add_option("--latent", o.latent, "latent dimensionality (default: 11 for mnist data, 8 otherwise)");
    cmd->add_option("--updates", o.updates, "gradient updates");
    cmd->add_option("--batch", o.batch, "minibatch size");
    cmd->add_option("--seed", o.seed, "RNG seed (env POLCA_SEED overrides)");
    cmd->add_option("--alpha", o.alpha, "orthogonality loss weight");
    cmd->add_option("--beta", o.beta, "center-of-mass loss weight");
    cmd->add_option("--gamma", o.gamma, "variance loss weight");
    cmd->add_flag("--linear-decoder", o.linear_decoder, "single linear decoder layer");
    cmd->add_flag("--with-class", o.with_class, "enable the classification loss (needs --labels)");
}

void add_io_flags(CLI::App* cmd, RunOpts& o) {
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_flag("--plot", o.plot, "also emit SVG plots");
}

/// Flat JSON config; keys match the long flag names without dashes
/// (e.g. {"latent": 8, "synthetic": "sinusoidal"}). Flags override it.
std::vector<std::string> config_as_args(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw polca::DataError("cannot open config " + path);
    json j = json::parse(is);
    std::vector<std::string> args;
    for (auto& [key, val] : j.items()) {
        if (val.is_boolean()) {
            if (val.get<bool>()) args.push_back("--" + key);
        } else {
            args.push_back("--" + key);
            args.push_back(val.is_string() ? val.get<std::string>() : val.dump());
        }
    }
    return args;
}

void resolve_defaults(RunOpts& o) {
    if (const char* env = std::getenv("POLCA_SEED")) o.seed = std::stoull(env);
    if (o.latent == 0)
        o.latent = o.data_idx.find("mnist") != std::string::npos ? 11 : 8;
    if (o.data_idx.empty() && o.synthetic.empty()) o.synthetic = "sinusoidal";
}

std::pair<polca::Dataset, polca::Dataset> load_splits(const RunOpts& o) {
    polca::Dataset full;
    if (!o.data_idx.empty()) {
        full = polca::load_idx(o.data_idx, o.labels_path);
        full.name = fs::path(o.data_idx).stem().string();
    } else {
        polca::SinusoidSpec spec =
            o.synthetic == "bent" ? polca::bent_spec_defaults() : polca::SinusoidSpec{};
        spec.seed = o.seed;
        spec.shared_waves = !o.per_image_waves;
        spec.squash = o.squash;
        full = polca::gen_sinusoidal(spec, o.samples);
    }
    return polca::train_test_split(full, o.train_fraction, o.seed);
}

polca::TrainConfig train_config(const RunOpts& o) {
    polca::TrainConfig cfg;
    cfg.gradient_updates = o.updates;
    cfg.batch_size = o.batch;
    cfg.seed = o.seed;
    cfg.weights.alpha = o.alpha;
    cfg.weights.beta = o.beta;
    cfg.weights.gamma = o.gamma;
    cfg.weights.use_class = o.with_class;
    return cfg;
}

json opts_json(const RunOpts& o) {
    json j;
    j["data_idx"] = o.data_idx;
    j["labels"] = o.labels_path;
    j["synthetic"] = o.synthetic;
    j["samples"] = o.samples;
    j["train_fraction"] = o.train_fraction;
    j["latent"] = o.latent;
    j["updates"] = o.updates;
    j["batch"] = o.batch;
    j["seed"] = o.seed;
    j["alpha"] = o.alpha;
    j["beta"] = o.beta;
    j["gamma"] = o.gamma;
    j["linear_decoder"] = o.linear_decoder;
    j["with_class"] = o.with_class;
    j["out"] = o.out;
    return j;
}

void write_manifest(const RunOpts& o, const std::string& subcommand, double wall_seconds) {
    json j;
    j["subcommand"] = subcommand;
    j["config"] = opts_json(o);
    j["seed"] = o.seed;
    j["versions"] = {{"polca", "1.0.0"}, {"format", "POLCA1"}};
    j["wall_time_seconds"] = wall_seconds;
    polca::write_text_file((fs::path(o.out) / "manifest.json").string(), j.dump(2) + "\n");
}

std::size_t label_classes(const polca::Dataset& ds) {
    std::size_t c = 0;
    for (std::size_t l : *ds.labels) c = std::max(c, l + 1);
    return c;
}

int cmd_gen_data(const RunOpts& opts_in) {
    RunOpts o = opts_in;
    resolve_defaults(o);
    fs::create_directories(o.out);
    polca::SinusoidSpec spec =
        o.synthetic == "bent" ? polca::bent_spec_defaults() : polca::SinusoidSpec{};
    spec.seed = o.seed;
    spec.shared_waves = !o.per_image_waves;
    spec.squash = o.squash;
    polca::Dataset ds = polca::gen_sinusoidal(spec, o.samples);
    const std::string path = (fs::path(o.out) / (ds.name + "-images.idx")).string();
    polca::write_idx(ds, path);
    std::cout << "wrote " << ds.size() << " images to " << path << "\n";
    return 0;
}

int cmd_train(const RunOpts& opts_in) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOpts o = opts_in;
    resolve_defaults(o);
    fs::create_directories(o.out);
    auto [train_ds, test_ds] = load_splits(o);
    if (o.with_class && !train_ds.labels)
        throw polca::DataError("--with-class requires labeled data");

    polca::PolcaModel model =
        polca::default_model(train_ds.images.cols(), o.latent, o.linear_decoder,
                             o.with_class ? label_classes(train_ds) : 0, o.seed);
    polca::TrainResult result = polca::train(
        model, train_ds.images, train_ds.labels ? &*train_ds.labels : nullptr, train_config(o));

    polca::save_model(model, (fs::path(o.out) / "model.bin").string());
    polca::write_text_file((fs::path(o.out) / "loss.csv").string(),
                           polca::loss_history_csv(result.history));
    polca::write_text_file((fs::path(o.out) / "grads.csv").string(),
                           polca::grads_csv(result.snapshots));
    if (o.plot)
        polca::write_text_file((fs::path(o.out) / "loss.svg").string(),
                               polca::loss_curve_svg(result.history));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(o, "train", wall);
    std::cout << "trained " << o.updates << " updates; outputs in " << o.out << "\n";
    return 0;
}

int cmd_compare(const RunOpts& opts_in) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOpts o = opts_in;
    resolve_defaults(o);
    fs::create_directories(o.out);
    auto [train_ds, test_ds] = load_splits(o);
    if (o.with_class && !train_ds.labels)
        throw polca::DataError("--with-class requires labeled data");

    polca::PolcaModel model;
    if (!o.checkpoint.empty()) {
        model = polca::load_model(o.checkpoint);
        if (model.latent_dim != o.latent)
            throw std::runtime_error("checkpoint latent size " +
                                     std::to_string(model.latent_dim) +
                                     " != configured latent size " + std::to_string(o.latent));
    } else {
        model = polca::default_model(train_ds.images.cols(), o.latent, o.linear_decoder,
                                     o.with_class ? label_classes(train_ds) : 0, o.seed);
        polca::train(model, train_ds.images, train_ds.labels ? &*train_ds.labels : nullptr,
                     train_config(o));
    }

    polca::PcaModel pca = polca::pca_fit(train_ds.images, o.latent);
    std::vector<polca::EvalReport> reports =
        polca::evaluate_methods(model, pca, train_ds, test_ds);
    polca::write_text_file((fs::path(o.out) / "eval.csv").string(), polca::eval_csv(reports));
    polca::write_text_file((fs::path(o.out) / "eval.json").string(), polca::eval_json(reports));
    if (o.plot)
        polca::write_text_file((fs::path(o.out) / "metrics.svg").string(),
                               polca::metric_bars_svg(reports));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(o, "compare", wall);
    std::cout << polca::eval_csv(reports);
    return 0;
}

int cmd_gradients(const RunOpts& opts_in) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOpts o = opts_in;
    resolve_defaults(o);
    fs::create_directories(o.out);
    const std::string path =
        o.grads_file.empty() ? (fs::path(o.out) / "grads.csv").string() : o.grads_file;
    std::ifstream is(path);
    if (!is) throw polca::DataError("gradient snapshots not found at " + path);

    // pair -> ordered (step, s) series
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> series;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string pair, step_s, s_s;
        std::getline(ss, pair, ',');
        std::getline(ss, step_s, ',');
        std::getline(ss, s_s, ',');
        series[pair].emplace_back(std::stoull(step_s), std::stod(s_s));
    }
    if (series.empty()) throw polca::DataError("no gradient snapshots in " + path);

    polca::ConflictSummary cs;
    for (const auto& [pair, pts] : series) {
        polca::PairStats ps;
        ps.min = pts.front().second;
        ps.max = pts.front().second;
        for (const auto& [step, s] : pts) {
            ps.mean += s;
            ps.min = std::min(ps.min, s);
            ps.max = std::max(ps.max, s);
            if (s < cs.threshold) ps.conflict_fraction += 1.0;
            ps.steps += 1;
        }
        ps.mean /= static_cast<double>(ps.steps);
        ps.conflict_fraction /= static_cast<double>(ps.steps);
        cs.pairs[pair] = ps;
    }
    polca::write_text_file((fs::path(o.out) / "conflicts.json").string(),
                           polca::conflicts_json(cs));

    // pairwise grid: one cell per loss pair with the similarity trace
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"";
    const double cell_w = 280, cell_h = 130, pad = 10;
    const std::size_t cols = 3, rows = (series.size() + cols - 1) / cols;
    svg += polca::fmt_double(static_cast<double>(rows) * (cell_h + pad) + pad) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::size_t idx = 0;
    for (const auto& [pair, pts] : series) {
        const double ox = pad + static_cast<double>(idx % cols) * (cell_w + pad);
        const double oy = pad + static_cast<double>(idx / cols) * (cell_h + pad);
        svg += "<rect x=\"" + polca::fmt_double(ox) + "\" y=\"" + polca::fmt_double(oy) +
               "\" width=\"" + polca::fmt_double(cell_w) + "\" height=\"" +
               polca::fmt_double(cell_h) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            xs.push_back(ox + cell_w * static_cast<double>(i) /
                                  std::max<std::size_t>(pts.size() - 1, 1));
            ys.push_back(oy + cell_h / 2 - pts[i].second * (cell_h / 2 - 4));
        }
        svg += polca::detail::svg_polyline(xs, ys, "#1f6fb2");
        svg += "<text x=\"" + polca::fmt_double(ox + 6) + "\" y=\"" + polca::fmt_double(oy + 14) +
               "\" font-size=\"11\">" + pair + "  conflict " +
               polca::fmt_double(cs.pairs[pair].conflict_fraction) + "</text>\n";
        ++idx;
    }
    svg += "</svg>\n";
    polca::write_text_file((fs::path(o.out) / "conflicts.svg").string(), svg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(o, "gradients", wall);
    std::cout << polca::conflicts_json(cs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"orthogonality-regularized autoencoder vs PCA toolkit"};
    app.require_subcommand(1);
    RunOpts o;
    std::string config_path;
    app.add_option("--config", config_path, "flat JSON config; flags override it");

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset as IDX");
    gen->add_option("--synthetic", o.synthetic, "sinusoidal | bent")
        ->check(CLI::IsMember({"sinusoidal", "bent"}));
    gen->add_option("--samples", o.samples, "sample count");
    gen->add_option("--seed", o.seed, "RNG seed");
    gen->add_flag("--per-image-waves", o.per_image_waves,
                  "draw every synthetic wave parameter per image");
    gen->add_option("--squash", o.squash,
                    "saturate synthetic pixels with tanh(squash * v) before rescaling");
    add_io_flags(gen, o);

    CLI::App* tr = app.add_subcommand("train", "train a model");
    add_dataset_flags(tr, o);
    add_train_flags(tr, o);
    add_io_flags(tr, o);

    CLI::App* cp = app.add_subcommand("compare", "evaluate model vs PCA");
    add_dataset_flags(cp, o);
    add_train_flags(cp, o);
    add_io_flags(cp, o);
    cp->add_option("--checkpoint", o.checkpoint, "trained model.bin (otherwise trains inline)");

    CLI::App* gr = app.add_subcommand("gradients", "conflict report from grads.csv");
    gr->add_option("--grads", o.grads_file, "grads.csv path (default <out>/grads.csv)");
    add_io_flags(gr, o);

    // a config file acts as extra leading arguments so real flags win
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        for (std::size_t i = 0; i + 1 < args.size(); ++i)
            if (args[i] == "--config") {
                std::vector<std::string> extra = config_as_args(args[i + 1]);
                args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                           args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
                args.insert(args.begin() + 1, extra.begin(), extra.end());
                break;
            }
        std::vector<const char*> cargs{argv[0]};
        for (const std::string& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const polca::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(o);
        if (tr->parsed()) return cmd_train(o);
        if (cp->parsed()) return cmd_compare(o);
        if (gr->parsed()) return cmd_gradients(o);
    } catch (const polca::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const polca::TrainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        const bool nan_abort = std::string(e.what()).find("non-finite") != std::string::npos;
        return nan_abort ? 3 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
