#include "opimc/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <ostream>
#include <thread>

#include "opimc/metrics.hpp"

namespace opimc {

std::string format_number(double value) {
    std::array<char, 32> buf;
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

ExperimentOutcome run_experiment(ChunkSource& source, const SolverConfig& cfg, const std::optional<Assignments>& truth,
                                 const EvalOptions& eval) {
    if (truth && truth->size() != source.meta().n_instances) {
        throw std::invalid_argument("ground truth must have one label per instance");
    }
    ExperimentOutcome outcome;
    const auto start = std::chrono::steady_clock::now();

    auto record = [&](int pass, std::size_t chunks_done, const LossReport& loss, const GlobalStats& stats) {
        RunRecord rec;
        rec.pass = pass + 1;
        rec.chunk = chunks_done;
        rec.average_loss = loss.average_loss;
        rec.wall_ms = eval.timing
                          ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()
                          : 0.0;
        if (truth) {
            const Assignments labels = stats.labels();
            const std::span<const Label> seen(truth->data(), labels.size());
            rec.nmi = nmi(labels, seen);
            rec.ac = accuracy(labels, seen);
        }
        rec.alpha = cfg.alpha;
        rec.chunk_size = cfg.chunk_size;
        rec.seed = cfg.rng_seed;
        rec.missing_rate = eval.missing_rate;
        outcome.records.push_back(rec);
    };

    RunCallbacks callbacks;
    if (eval.every_chunk) {
        callbacks.on_chunk = [&](const ChunkEvent& e) { record(e.pass, e.chunk_index + 1, e.loss, e.stats); };
    } else {
        const std::size_t chunks_per_pass = (source.meta().n_instances + cfg.chunk_size - 1) / cfg.chunk_size;
        callbacks.on_pass = [&, chunks_per_pass](const PassEvent& e) { record(e.pass, chunks_per_pass, e.loss, e.stats); };
    }

    RunResult result = run(source, cfg, callbacks);
    outcome.labels = std::move(result.labels);
    outcome.factors = std::move(result.factors);
    return outcome;
}

std::vector<double> dedupe_grid(const std::vector<double>& grid) {
    std::vector<double> out;
    for (double value : grid) {
        if (std::find(out.begin(), out.end(), value) != out.end()) {
            std::cerr << "warning: duplicate grid value " << format_number(value) << " ignored\n";
            continue;
        }
        out.push_back(value);
    }
    return out;
}

std::vector<double> default_alpha_grid() { return {1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3}; }

std::vector<std::size_t> default_block_sizes() { return {2, 5, 10, 50, 100, 250}; }

std::size_t sweep_threads() {
    if (const char* env = std::getenv("OPIMC_THREADS")) {
        const long value = std::strtol(env, nullptr, 10);
        if (value > 0) {
            return static_cast<std::size_t>(value);
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {

std::vector<ExperimentOutcome> run_all(const Dataset& data, const std::vector<SolverConfig>& configs,
                                       const EvalOptions& eval, std::size_t threads) {
    std::vector<ExperimentOutcome> results(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            try {
                InMemorySource source(data);
                results[i] = run_experiment(source, configs[i], data.labels, eval);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t n_workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, configs.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

}  // namespace

std::vector<ExperimentOutcome> sweep_alpha(const Dataset& data, const SolverConfig& base,
                                           const std::vector<double>& grid, const EvalOptions& eval,
                                           std::size_t threads) {
    if (grid.empty()) {
        throw std::invalid_argument("alpha grid is empty");
    }
    std::vector<SolverConfig> configs;
    for (double alpha : grid) {
        SolverConfig cfg = base;
        cfg.alpha = alpha;
        cfg.validate();
        configs.push_back(cfg);
    }
    return run_all(data, configs, eval, threads);
}

std::vector<ExperimentOutcome> block_study(const Dataset& data, const SolverConfig& base,
                                           const std::vector<std::size_t>& sizes, const EvalOptions& eval,
                                           std::size_t threads) {
    if (sizes.empty()) {
        throw std::invalid_argument("chunk size list is empty");
    }
    std::vector<SolverConfig> configs;
    for (auto s : sizes) {
        if (s < 1) {
            throw std::invalid_argument("chunk size must be at least 1");
        }
        SolverConfig cfg = base;
        cfg.chunk_size = s;
        configs.push_back(cfg);
    }
    return run_all(data, configs, eval, threads);
}

namespace {

void write_record(std::ostream& out, const RunRecord& r) {
    out << r.pass << ',' << r.chunk << ',';
    if (r.nmi) {
        out << format_number(*r.nmi);
    }
    out << ',';
    if (r.ac) {
        out << format_number(*r.ac);
    }
    out << ',' << format_number(r.average_loss) << ',' << format_number(r.wall_ms) << '\n';
}

}  // namespace

void write_run_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kRunHeader << '\n';
    for (const auto& r : records) {
        write_record(out, r);
    }
}

void write_keyed_csv(std::ostream& out, const std::string& key_name, const std::vector<std::string>& key_values,
                     const std::vector<ExperimentOutcome>& blocks) {
    if (key_values.size() != blocks.size()) {
        throw std::invalid_argument("one key per result block is required");
    }
    out << key_name << ',' << kRunHeader << '\n';
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (const auto& r : blocks[b].records) {
            out << key_values[b] << ',';
            write_record(out, r);
        }
    }
}

}  // namespace opimc
