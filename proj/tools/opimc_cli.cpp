// Command-line experiment runner: single runs, alpha sweeps, chunk-size
// studies and synthetic data generation. Results are CSV.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opimc/data.hpp"
#include "opimc/experiment.hpp"
#include "opimc/solver.hpp"

namespace fs = std::filesystem;

namespace {

struct DataFlags {
    std::vector<std::string> views;
    std::string mask;
    std::string labels;
    std::size_t clusters = 0;
    double missing_rate = 0.0;
    bool shuffle = false;
    bool stream = false;
};

struct OutputFlags {
    std::string out = "-";
    bool every_chunk = false;
    bool timing = true;
};

// Seeds for the data protocol are derived from --seed so one flag fixes a run.
std::uint64_t mask_seed(std::uint64_t seed) { return seed + 1; }
std::uint64_t shuffle_seed(std::uint64_t seed) { return seed + 2; }

void add_data_flags(CLI::App& cmd, DataFlags& d) {
    cmd.add_option("--views", d.views, "View files (CSV or MVC1 binary), feature rows x instance columns")
        ->required()
        ->delimiter(',');
    cmd.add_option("--mask", d.mask, "Presence mask CSV (n_views rows of 0/1)");
    cmd.add_option("--labels", d.labels, "Ground-truth labels, one per line");
    cmd.add_option("--clusters,-k", d.clusters, "Number of clusters K")->required()->check(CLI::PositiveNumber);
    cmd.add_option("--missing-rate", d.missing_rate, "Per-view fraction of instances to remove when no mask is given")
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_flag("--shuffle", d.shuffle, "Shuffle instance order before streaming");
    cmd.add_flag("--stream", d.stream, "Read MVC1 view files chunk by chunk instead of loading them");
}

void add_solver_flags(CLI::App& cmd, opimc::SolverConfig& cfg, bool with_alpha, bool with_chunk) {
    if (with_alpha) {
        cmd.add_option("--alpha", cfg.alpha, "Ridge weight on the centers")->check(CLI::NonNegativeNumber);
    }
    if (with_chunk) {
        cmd.add_option("--chunk-size,-s", cfg.chunk_size, "Instances per chunk")->check(CLI::PositiveNumber);
    }
    cmd.add_option("--passes", cfg.n_passes, "Passes over the data")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", cfg.rng_seed, "Random seed");
    cmd.add_option("--max-inner-iters", cfg.max_inner_iters, "Inner iteration cap per chunk")
        ->check(CLI::PositiveNumber);
    cmd.add_option_function<std::string>(
           "--fill-degenerate", [&cfg](const std::string& v) { cfg.fill_degenerate = v == "on"; },
           "Repair degenerate centers (on|off)")
        ->check(CLI::IsMember({"on", "off"}))
        ->default_str("on");
}

void add_output_flags(CLI::App& cmd, OutputFlags& o) {
    cmd.add_option("--out,-o", o.out, "Output CSV path, '-' for stdout");
    cmd.add_flag("--eval-every-chunk", o.every_chunk, "Score after every chunk instead of every pass");
    cmd.add_option_function<std::string>(
           "--timing", [&o](const std::string& v) { o.timing = v == "on"; }, "Record wall time (on|off)")
        ->check(CLI::IsMember({"on", "off"}))
        ->default_str("on");
}

opimc::PresenceMask make_mask(const DataFlags& d, std::size_t n_views, std::size_t n, std::uint64_t seed) {
    if (!d.mask.empty()) {
        return opimc::read_mask(d.mask);
    }
    if (d.missing_rate > 0.0) {
        return opimc::simulate_missing(n_views, n, d.missing_rate, mask_seed(seed));
    }
    return opimc::PresenceMask(n_views, n);
}

opimc::Dataset load(const DataFlags& d, std::uint64_t seed) {
    std::vector<opimc::Matrix> raw;
    for (const auto& path : d.views) {
        raw.push_back(opimc::read_matrix(path));
    }
    const auto n = static_cast<std::size_t>(raw.front().cols());
    opimc::PresenceMask mask = make_mask(d, raw.size(), n, seed);
    std::optional<opimc::Assignments> labels;
    if (!d.labels.empty()) {
        labels = opimc::read_labels(d.labels);
    }
    opimc::Dataset data = opimc::make_dataset(std::move(raw), std::move(mask), d.clusters, std::move(labels));
    if (d.shuffle) {
        opimc::shuffle_instances(data, shuffle_seed(seed));
    }
    return data;
}

std::optional<opimc::Assignments> warn_missing_labels(const std::optional<opimc::Assignments>& labels) {
    if (!labels) {
        std::cerr << "warning: no --labels given; nmi and ac columns left empty\n";
    }
    return labels;
}

opimc::EvalOptions eval_options(const OutputFlags& o, const DataFlags& d) {
    opimc::EvalOptions eval;
    eval.every_chunk = o.every_chunk;
    eval.timing = o.timing;
    eval.missing_rate = d.missing_rate;
    return eval;
}

template <typename Writer>
void emit(const std::string& out, Writer&& write) {
    if (out == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream file(out);
    if (!file) {
        throw opimc::IoError("cannot write " + out);
    }
    write(file);
    if (!file) {
        throw opimc::IoError("failed writing " + out);
    }
}

int cmd_run(const DataFlags& d, const opimc::SolverConfig& cfg, const OutputFlags& o) {
    const auto eval = eval_options(o, d);
    opimc::ExperimentOutcome outcome;
    if (d.stream) {
        if (d.shuffle) {
            throw std::invalid_argument("--shuffle needs the data in memory; drop --stream");
        }
        const auto [rows, n] = opimc::matrix_shape(d.views.front());
        (void)rows;
        std::vector<fs::path> paths(d.views.begin(), d.views.end());
        opimc::BinaryFileSource source(paths, make_mask(d, d.views.size(), n, cfg.rng_seed), d.clusters);
        std::optional<opimc::Assignments> labels;
        if (!d.labels.empty()) {
            labels = opimc::read_labels(d.labels);
        }
        outcome = opimc::run_experiment(source, cfg, warn_missing_labels(labels), eval);
    } else {
        const opimc::Dataset data = load(d, cfg.rng_seed);
        opimc::InMemorySource source(data);
        outcome = opimc::run_experiment(source, cfg, warn_missing_labels(data.labels), eval);
    }
    emit(o.out, [&](std::ostream& os) { opimc::write_run_csv(os, outcome.records); });
    return 0;
}

int cmd_sweep_alpha(const DataFlags& d, const opimc::SolverConfig& cfg, const OutputFlags& o,
                    const std::vector<double>& alphas) {
    const auto grid = opimc::dedupe_grid(alphas.empty() ? opimc::default_alpha_grid() : alphas);
    const opimc::Dataset data = load(d, cfg.rng_seed);
    warn_missing_labels(data.labels);
    const auto blocks = opimc::sweep_alpha(data, cfg, grid, eval_options(o, d), opimc::sweep_threads());
    std::vector<std::string> keys;
    for (double a : grid) {
        keys.push_back(opimc::format_number(a));
    }
    emit(o.out, [&](std::ostream& os) { opimc::write_keyed_csv(os, "alpha", keys, blocks); });
    return 0;
}

int cmd_block_study(const DataFlags& d, const opimc::SolverConfig& cfg, const OutputFlags& o,
                    const std::vector<std::size_t>& sizes) {
    const auto list = sizes.empty() ? opimc::default_block_sizes() : sizes;
    const opimc::Dataset data = load(d, cfg.rng_seed);
    warn_missing_labels(data.labels);
    const auto blocks = opimc::block_study(data, cfg, list, eval_options(o, d), opimc::sweep_threads());
    std::vector<std::string> keys;
    for (auto s : list) {
        keys.push_back(std::to_string(s));
    }
    emit(o.out, [&](std::ostream& os) { opimc::write_keyed_csv(os, "chunk_size", keys, blocks); });
    return 0;
}

int cmd_generate(const opimc::SyntheticSpec& spec, const std::string& dir, const std::string& format) {
    const auto data = opimc::make_synthetic(spec);
    fs::create_directories(dir);
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        if (format == "binary") {
            opimc::write_matrix_binary(fs::path(dir) / ("view" + std::to_string(v) + ".bin"), data.views[v]);
        } else {
            opimc::write_matrix_csv(fs::path(dir) / ("view" + std::to_string(v) + ".csv"), data.views[v]);
        }
    }
    opimc::write_labels(fs::path(dir) / "labels.txt", data.labels);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming incomplete multi-view clustering experiments"};
    app.set_config("--config", "", "Read flags from a TOML/INI file");
    app.require_subcommand(1);

    DataFlags data_flags;
    OutputFlags out_flags;
    opimc::SolverConfig cfg;
    std::vector<double> alphas;
    std::vector<std::size_t> sizes;

    auto* run = app.add_subcommand("run", "Cluster a dataset and report per-pass metrics");
    add_data_flags(*run, data_flags);
    add_solver_flags(*run, cfg, true, true);
    add_output_flags(*run, out_flags);

    auto* sweep = app.add_subcommand("sweep-alpha", "One run per alpha value");
    add_data_flags(*sweep, data_flags);
    add_solver_flags(*sweep, cfg, false, true);
    add_output_flags(*sweep, out_flags);
    sweep->add_option("--alphas", alphas, "Alpha grid (default 1e-4..1e3 by decades)")->delimiter(',');

    opimc::SolverConfig block_cfg;
    block_cfg.n_passes = 10;
    auto* block = app.add_subcommand("block-study", "One run per chunk size");
    add_data_flags(*block, data_flags);
    add_solver_flags(*block, block_cfg, true, false);
    add_output_flags(*block, out_flags);
    block->add_option("--sizes", sizes, "Chunk sizes (default 2,5,10,50,100,250)")->delimiter(',');

    opimc::SyntheticSpec spec;
    std::string gen_dir;
    std::string gen_format = "csv";
    auto* gen = app.add_subcommand("generate", "Write a synthetic Gaussian multi-view dataset");
    gen->add_option("--clusters,-k", spec.n_clusters, "Number of classes")->check(CLI::PositiveNumber);
    gen->add_option("--dims", spec.dims, "Dimension of each view")->delimiter(',');
    gen->add_option("--instances,-n", spec.n_instances, "Number of instances")->check(CLI::PositiveNumber);
    gen->add_option("--separation", spec.separation, "Radius of the class-center sphere");
    gen->add_option("--noise", spec.noise, "Per-coordinate noise standard deviation");
    gen->add_option("--seed", spec.seed, "Random seed");
    gen->add_option("--format", gen_format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));
    gen->add_option("--out-dir", gen_dir, "Directory for view files and labels.txt")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run) {
            return cmd_run(data_flags, cfg, out_flags);
        }
        if (*sweep) {
            return cmd_sweep_alpha(data_flags, cfg, out_flags, alphas);
        }
        if (*block) {
            return cmd_block_study(data_flags, block_cfg, out_flags, sizes);
        }
        if (*gen) {
            spec.n_views = spec.dims.size();
            return cmd_generate(spec, gen_dir, gen_format);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
