#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "stm/stm.hpp"

namespace stm::cli {

namespace fs = std::filesystem;

namespace {

struct DataOptions {
    std::string path;
    std::string format = "auto";
    std::string labels;
    std::string label_column;
    bool labels_from_names = false;
};

struct RunConfig {
    DataOptions data;
    std::string algo;
    std::string mode = "batch";
    std::string grid;
    std::size_t k = 0;
    std::string anchors;
    std::uint64_t seed = 0;
    std::optional<double> eta, sigma_r, sigma_t, tau, epsilon;
    std::optional<std::size_t> epochs, max_iters;
    unsigned threads = 1;
    std::string out = "model.stm";
    std::string history;
    bool no_history = false;
};

struct GenerateConfig {
    std::string model;
    std::vector<std::string> at;
    std::size_t random = 0;
    std::uint64_t seed = 0;
    double sigma = 1.0;
    bool raw = false;
    std::string out;
    std::string pgm;
    std::string tile;
    unsigned threads = 1;
};

struct ExportConfig {
    std::string model;
    std::string tile;
    std::string out = "grid.pgm";
};

struct EvalConfig {
    std::string model;
    DataOptions data;
    std::string out;
    unsigned threads = 1;
};

// "10x10" -> {10, 10}; "50" -> {50}.
std::vector<std::size_t> parse_dims(const std::string& text, const char* flag) {
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, 'x');) {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != part.size() || v == 0) {
            throw ConfigError(std::string(flag) + ": expected positive extents like 10x10, got '" + text + "'");
        }
        dims.push_back(v);
    }
    if (dims.empty() || dims.size() > 2) {
        throw ConfigError(std::string(flag) + ": expected one or two extents, got '" + text + "'");
    }
    return dims;
}

std::pair<std::size_t, std::size_t> parse_tile(const std::string& text) {
    const auto d = parse_dims(text, "--tile");
    if (d.size() != 2) throw ConfigError("--tile: expected ROWSxCOLS, got '" + text + "'");
    return {d[0], d[1]};
}

Coord parse_point(const std::string& text) {
    Coord c;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) {
        try {
            std::size_t used = 0;
            c.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("--at: bad coordinate list '" + text + "'");
        }
    }
    return c;
}

Dataset load_dataset(const DataOptions& opt) {
    std::string format = opt.format;
    if (format == "auto") {
        if (fs::is_directory(opt.path)) {
            format = "pgm-dir";
        } else if (fs::path(opt.path).extension() == ".csv") {
            format = "csv";
        } else {
            format = "idx";
        }
    }
    if (format == "csv") {
        if (!opt.labels.empty()) throw ConfigError("--labels applies to IDX data; use --label-column for CSV");
        return load_csv(opt.path, opt.label_column.empty() ? std::nullopt
                                                           : std::optional<std::string>(opt.label_column));
    }
    if (format == "pgm-dir") return load_pgm_directory(opt.path, opt.labels_from_names);
    if (format == "idx") {
        if (!opt.label_column.empty()) throw ConfigError("--label-column applies to CSV data only");
        return load_idx(opt.path, opt.labels.empty() ? std::nullopt
                                                     : std::optional<fs::path>(opt.labels));
    }
    throw ConfigError("--format: unknown format '" + opt.format + "'");
}

void add_data_options(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--data", d.path, "Dataset: IDX image file, CSV file or directory of PGM images")
        ->required();
    cmd->add_option("--format", d.format, "Dataset format")
        ->check(CLI::IsMember({"auto", "idx", "csv", "pgm-dir"}))
        ->capture_default_str();
    cmd->add_option("--labels", d.labels, "IDX label file matching --data");
    cmd->add_option("--label-column", d.label_column, "CSV column holding labels");
    cmd->add_flag("--labels-from-names", d.labels_from_names,
                  "PGM directories: label = file name up to the first '_'");
}

void print_metric(std::ostream& out, const std::string& name, double value) {
    out << name << ": " << std::setprecision(10) << value << "\n";
}

// --- train ----------------------------------------------------------------

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    const auto algo = parse_algorithm(cfg.algo);
    if (cfg.mode != "batch" && cfg.mode != "online") throw ConfigError("--mode must be batch or online");
    const bool online = cfg.mode == "online";
    if (algo == Algorithm::Lvq && !online) throw ConfigError("lvq trains online only; pass --mode online");

    std::vector<std::size_t> dims;
    if (!cfg.grid.empty()) {
        dims = parse_dims(cfg.grid, "--grid");
        if (cfg.k != 0) throw ConfigError("pass either --grid or --k, not both");
    } else if (cfg.k != 0) {
        if (algo != Algorithm::KMeans) throw ConfigError("--k is for kmeans; other algorithms need --grid");
        dims = {cfg.k};
    } else {
        throw ConfigError(algo == Algorithm::KMeans ? "missing --k (or --grid)" : "missing --grid");
    }
    const GridTopology topo(dims);

    if ((algo == Algorithm::Stm || algo == Algorithm::Lvq) && cfg.anchors.empty()) {
        throw ConfigError(std::string(to_string(algo)) + " requires --anchors");
    }
    LabelAnchors anchors;
    if (!cfg.anchors.empty()) anchors = load_anchors(cfg.anchors, topo);

    const auto data = load_dataset(cfg.data);
    if (algo == Algorithm::Stm || algo == Algorithm::Lvq) {
        if (!data.labeled()) throw ConfigError(std::string(to_string(algo)) + " requires labeled data");
        anchors.require_coverage(data);
    }

    auto sched = TrainingSchedule::defaults_for(topo, cfg.epochs.value_or(100));
    if (cfg.eta) sched.eta_init = *cfg.eta;
    if (cfg.sigma_r) sched.sigma_r_init = *cfg.sigma_r;
    if (cfg.sigma_t) sched.sigma_t_init = *cfg.sigma_t;
    if (cfg.tau) sched.tau = *cfg.tau;
    if (cfg.epsilon) sched.epsilon = *cfg.epsilon;
    if (cfg.max_iters) sched.max_batch_iters = *cfg.max_iters;
    sched.seed = cfg.seed;
    sched.validate();

    const ExecOptions exec{std::max(1u, cfg.threads)};
    const auto result = online ? train_online(data, topo, algo, anchors, sched, exec)
                               : train_batch(data, topo, algo, anchors, sched, exec);

    const auto last = anneal(static_cast<double>(result.history.records.empty()
                                                     ? 0
                                                     : result.history.records.back().iteration),
                             sched);
    const WtaKind final_kind{algo, last.sigma_r, last.sigma_t};
    save_model({result.codebook, final_kind, sched.seed, anchors}, cfg.out);

    if (!cfg.no_history) {
        const std::string hist = cfg.history.empty() ? cfg.out + ".history.csv" : cfg.history;
        write_history_csv(result.history, hist);
        out << "history: " << hist << "\n";
    }

    out << "model: " << cfg.out << "\n";
    out << "iterations: " << result.history.records.size() << "\n";
    if (online) {
        out << "mode: online (" << sched.epochs << " epochs)\n";
    } else {
        out << "converged: " << (result.history.converged ? "yes" : "no (max iterations reached)") << "\n";
    }
    print_metric(out, "quantization_error", quantization_error(data, result.codebook, exec));
    if (data.labeled() && !anchors.empty()) {
        print_metric(out, "anchor_consistency", anchor_consistency(data, result.codebook, anchors, exec));
    }
    return kExitOk;
}

// --- generate -------------------------------------------------------------

int cmd_generate(const GenerateConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto model = load_model(cfg.model);
    const auto& topo = model.codebook.topology();

    if (cfg.at.empty() == (cfg.random == 0)) throw ConfigError("pass either --at (repeatable) or --random N");
    if (!(cfg.sigma > 0.0)) throw ConfigError("--sigma must be positive");

    std::vector<LatentQuery> queries;
    for (const auto& text : cfg.at) {
        auto p = parse_point(text);
        if (p.size() != topo.rank()) {
            throw ConfigError("--at " + text + ": expected " + std::to_string(topo.rank()) +
                              " coordinate(s) for this model");
        }
        queries.push_back({std::move(p), cfg.sigma, !cfg.raw});
    }
    if (cfg.random > 0) {
        std::mt19937_64 rng(cfg.seed);
        for (std::size_t q = 0; q < cfg.random; ++q) {
            Coord p(topo.rank());
            for (std::size_t a = 0; a < topo.rank(); ++a) {
                std::uniform_real_distribution<double> axis(0.0, static_cast<double>(topo.dims()[a] - 1));
                p[a] = axis(rng);
            }
            queries.push_back({std::move(p), cfg.sigma, !cfg.raw});
        }
    }
    for (const auto& q : queries) {
        if (!topo.contains(q.point)) {
            err << "warning: query (";
            for (std::size_t a = 0; a < q.point.size(); ++a) err << (a ? "," : "") << q.point[a];
            err << ") lies outside the grid; extrapolating\n";
        }
    }

    std::optional<std::pair<std::size_t, std::size_t>> tile;
    if (!cfg.pgm.empty()) {
        if (cfg.tile.empty()) throw ConfigError("--pgm needs --tile ROWSxCOLS");
        tile = parse_tile(cfg.tile);
        if (tile->first * tile->second != model.codebook.input_dim()) {
            throw ConfigError("--tile " + cfg.tile + " does not match input dimension " +
                              std::to_string(model.codebook.input_dim()));
        }
    }

    const auto patterns = generate_batch(queries, model.codebook, {std::max(1u, cfg.threads)});
    if (cfg.out.empty()) {
        write_matrix_csv(patterns, out);
    } else {
        std::ofstream f(cfg.out);
        if (!f) throw FormatError("cannot write '" + cfg.out + "'");
        write_matrix_csv(patterns, f);
    }
    if (tile) {
        const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(patterns.rows()))));
        const auto rows = cols == 0 ? 0 : (patterns.rows() + cols - 1) / cols;
        write_pgm(tile_patterns(patterns, tile->first, tile->second, rows, cols), cfg.pgm);
    }
    return kExitOk;
}

// --- export-grid ----------------------------------------------------------

int cmd_export(const ExportConfig& cfg, std::ostream& out) {
    const auto model = load_model(cfg.model);
    const auto [rows, cols] = parse_tile(cfg.tile);
    if (rows * cols != model.codebook.input_dim()) {
        throw ConfigError("--tile " + cfg.tile + " does not match input dimension " +
                          std::to_string(model.codebook.input_dim()));
    }
    export_prototype_grid(model.codebook, rows, cols, cfg.out);
    out << "wrote " << cfg.out << "\n";
    return kExitOk;
}

// --- eval -----------------------------------------------------------------

int cmd_eval(const EvalConfig& cfg, std::ostream& out) {
    const auto model = load_model(cfg.model);
    const auto data = load_dataset(cfg.data);
    if (data.input_dim() != model.codebook.input_dim()) {
        throw FormatError("data has " + std::to_string(data.input_dim()) + " columns but the model expects " +
                          std::to_string(model.codebook.input_dim()));
    }
    const ExecOptions exec{std::max(1u, cfg.threads)};

    const double qe = quantization_error(data, model.codebook, exec);
    std::optional<double> consistency;
    if (data.labeled() && !model.anchors.empty()) {
        consistency = anchor_consistency(data, model.codebook, model.anchors, exec);
    }

    // label -> unit -> count, in label order of first appearance
    std::vector<std::pair<Label, std::map<std::size_t, std::size_t>>> hist;
    if (data.labeled()) {
        const auto winners = assign_winners(data, model.codebook, exec);
        const auto& labels = *data.labels();
        for (std::size_t i = 0; i < data.size(); ++i) {
            auto it = std::find_if(hist.begin(), hist.end(), [&](const auto& h) { return h.first == labels[i]; });
            if (it == hist.end()) {
                hist.push_back({labels[i], {}});
                it = std::prev(hist.end());
            }
            ++it->second[winners[i]];
        }
    }

    print_metric(out, "quantization_error", qe);
    if (consistency) {
        print_metric(out, "anchor_consistency", *consistency);
    } else if (data.labeled()) {
        out << "anchor_consistency: n/a (model has no anchors)\n";
    }
    for (const auto& [label, units] : hist) {
        out << "winners[" << label << "]:";
        for (const auto& [unit, count] : units) out << " " << unit << "=" << count;
        out << "\n";
    }

    if (!cfg.out.empty()) {
        std::ofstream csv(cfg.out);
        if (!csv) throw FormatError("cannot write '" + cfg.out + "'");
        csv << std::setprecision(17) << "record,key,unit,value\n";
        csv << "metric,quantization_error,," << qe << "\n";
        if (consistency) csv << "metric,anchor_consistency,," << *consistency << "\n";
        for (const auto& [label, units] : hist) {
            for (const auto& [unit, count] : units) csv << "winners," << label << "," << unit << "," << count << "\n";
        }
    }
    return kExitOk;
}

// --- inspect --------------------------------------------------------------

int cmd_inspect(const std::string& path, std::ostream& out) {
    const auto model = load_model(path);
    const auto& topo = model.codebook.topology();
    out << "format_version: " << kModelFormatVersion << "\n";
    out << "grid:";
    for (auto d : topo.dims()) out << " " << d;
    out << "\n";
    out << "units: " << topo.unit_count() << "\n";
    out << "input_dim: " << model.codebook.input_dim() << "\n";
    out << "algorithm: " << to_string(model.kind.algorithm) << "\n";
    out << std::setprecision(10);
    out << "sigma_r: " << model.kind.sigma_r << "\n";
    out << "sigma_t: " << model.kind.sigma_t << "\n";
    out << "seed: " << model.seed << "\n";
    out << "anchors: " << model.anchors.size() << "\n";
    for (const auto& [label, coord] : model.anchors.entries()) {
        out << "  " << label;
        for (double c : coord) out << " " << c;
        out << "\n";
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Winner-takes-all maps: k-means, SOM, supervised topological maps and LVQ", "stm"};
    app.require_subcommand(1);

    RunConfig train;
    auto* t = app.add_subcommand("train", "Train a codebook and write a model file");
    t->add_option("--algo", train.algo, "Algorithm")
        ->required()
        ->check(CLI::IsMember({"kmeans", "som", "stm", "lvq"}));
    t->add_option("--mode", train.mode, "Training mode (lvq: online only)")
        ->check(CLI::IsMember({"batch", "online"}))
        ->capture_default_str();
    t->add_option("--grid", train.grid, "Lattice extents, e.g. 10x10 or 50");
    t->add_option("--k", train.k, "Number of clusters (kmeans; same as --grid K)");
    add_data_options(t, train.data);
    t->add_option("--anchors", train.anchors, "Anchor file (required for stm and lvq)");
    t->add_option("--seed", train.seed, "RNG seed for initialisation and shuffling")->capture_default_str();
    t->add_option("--eta", train.eta, "Initial learning rate, online only [default: 0.1]");
    t->add_option("--sigma-r", train.sigma_r,
                  "Initial neighbourhood radius in lattice units [default: half the largest grid extent]");
    t->add_option("--sigma-t", train.sigma_t, "Label radius in lattice units, constant [default: 2.0]");
    t->add_option("--tau", train.tau, "Decay window of eta and sigma-r [default: epochs / 4]");
    t->add_option("--epochs", train.epochs, "Online epochs; also sets the default tau [default: 100]");
    t->add_option("--epsilon", train.epsilon, "Batch convergence tolerance on total movement [default: 1e-4]");
    t->add_option("--max-iters", train.max_iters, "Batch iteration cap [default: 500]");
    t->add_option("--threads", train.threads, "Worker threads (results do not depend on it)")
        ->capture_default_str();
    t->add_option("--out", train.out, "Model file")->capture_default_str();
    t->add_option("--history", train.history, "History CSV [default: <out>.history.csv]");
    t->add_flag("--no-history", train.no_history, "Do not write the history CSV");

    GenerateConfig gen;
    auto* g = app.add_subcommand("generate", "Generate patterns from latent points by radial-basis interpolation");
    g->add_option("--model", gen.model, "Model file")->required();
    g->add_option("--at", gen.at, "Latent point, e.g. 4.5,2 (repeatable)");
    g->add_option("--random", gen.random, "Number of uniformly random latent points");
    g->add_option("--seed", gen.seed, "Seed for --random")->capture_default_str();
    g->add_option("--sigma", gen.sigma, "Interpolation smoothness in lattice units")->capture_default_str();
    g->add_flag("--raw", gen.raw, "Keep the unnormalised Gaussian activations");
    g->add_option("--out", gen.out, "CSV output [default: stdout]");
    g->add_option("--pgm", gen.pgm, "Also write a tiled PGM sheet of the generated patterns");
    g->add_option("--tile", gen.tile, "Tile size ROWSxCOLS for --pgm");
    g->add_option("--threads", gen.threads, "Worker threads")->capture_default_str();

    ExportConfig exp;
    auto* e = app.add_subcommand("export-grid", "Write the prototypes as a PGM sheet laid out on the grid");
    e->add_option("--model", exp.model, "Model file")->required();
    e->add_option("--tile", exp.tile, "Tile size ROWSxCOLS; must multiply to the input dimension")->required();
    e->add_option("--out", exp.out, "PGM output")->capture_default_str();

    EvalConfig ev;
    auto* v = app.add_subcommand("eval", "Quantization error, anchor consistency and winner histograms");
    v->add_option("--model", ev.model, "Model file")->required();
    add_data_options(v, ev.data);
    v->add_option("--out", ev.out, "CSV report");
    v->add_option("--threads", ev.threads, "Worker threads")->capture_default_str();

    std::string inspect_path;
    auto* in = app.add_subcommand("inspect", "Print a model header");
    in->add_option("--model", inspect_path, "Model file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        for (const auto* sub : {t, g, e, v, in}) {
            if (sub->parsed()) {
                out << sub->help();
                return kExitOk;
            }
        }
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& pe) {
        if (pe.get_exit_code() == 0) {
            out << pe.what() << "\n";
            return kExitOk;
        }
        err << "error: " << pe.what() << "\n";
        return kExitConfig;
    }

    try {
        if (t->parsed()) return cmd_train(train, out);
        if (g->parsed()) return cmd_generate(gen, out, err);
        if (e->parsed()) return cmd_export(exp, out);
        if (v->parsed()) return cmd_eval(ev, out);
        if (in->parsed()) return cmd_inspect(inspect_path, out);
    } catch (const ConfigError& ex) {
        err << "configuration error: " << ex.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& ex) {
        err << "configuration error: " << ex.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& ex) {
        err << "data error: " << ex.what() << "\n";
        return kExitData;
    } catch (const std::exception& ex) {
        err << "data error: " << ex.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}

}  // namespace stm::cli
