#ifndef OPIMC_EXPERIMENT_HPP
#define OPIMC_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "opimc/data.hpp"
#include "opimc/model.hpp"
#include "opimc/solver.hpp"

namespace opimc {

/// One evaluation point of a run.
struct RunRecord {
    /// 1-based.
    int pass = 0;
    /// Chunks completed in this pass at the evaluation point.
    std::size_t chunk = 0;
    std::optional<double> nmi;
    std::optional<double> ac;
    double average_loss = 0.0;
    double wall_ms = 0.0;

    double alpha = 0.0;
    std::size_t chunk_size = 0;
    std::uint64_t seed = 0;
    double missing_rate = 0.0;
};

struct EvalOptions {
    /// Score after every chunk instead of once per pass.
    bool every_chunk = false;
    /// Record elapsed time; when off, wall_ms is written as 0.
    bool timing = true;
    /// Echoed into the records.
    double missing_rate = 0.0;
};

struct ExperimentOutcome {
    std::vector<RunRecord> records;
    Assignments labels;
    FactorSet factors;
};

/**
 * Runs the solver over `source` and scores it against `truth` (when given)
 * at each evaluation point. Scoring uses the labels of every instance seen
 * so far.
 */
ExperimentOutcome run_experiment(ChunkSource& source, const SolverConfig& cfg, const std::optional<Assignments>& truth,
                                 const EvalOptions& eval);

/// Removes repeated values, keeping first occurrences, and warns on stderr.
std::vector<double> dedupe_grid(const std::vector<double>& grid);

/// Alpha values searched by default: 1e-4 ... 1e3 by decades.
std::vector<double> default_alpha_grid();

/// Chunk sizes studied by default.
std::vector<std::size_t> default_block_sizes();

/// Worker cap for sweeps: OPIMC_THREADS if set and positive, else hardware concurrency.
std::size_t sweep_threads();

/**
 * One run per alpha on the same resident dataset. Runs execute concurrently
 * on up to `threads` workers; results come back in grid order.
 */
std::vector<ExperimentOutcome> sweep_alpha(const Dataset& data, const SolverConfig& base,
                                           const std::vector<double>& grid, const EvalOptions& eval,
                                           std::size_t threads);

/// One run per chunk size; same concurrency contract as `sweep_alpha`.
std::vector<ExperimentOutcome> block_study(const Dataset& data, const SolverConfig& base,
                                           const std::vector<std::size_t>& sizes, const EvalOptions& eval,
                                           std::size_t threads);

inline constexpr const char* kRunHeader = "pass,chunk,nmi,ac,avg_loss,wall_ms";

/// Writes `records` under `kRunHeader`. Missing metrics are left empty.
void write_run_csv(std::ostream& out, const std::vector<RunRecord>& records);

/// Same columns prefixed by `key_name`, which holds `key_values[i]` for every record of block i.
void write_keyed_csv(std::ostream& out, const std::string& key_name, const std::vector<std::string>& key_values,
                     const std::vector<ExperimentOutcome>& blocks);

/// Shortest round-trip text for a double.
std::string format_number(double value);

}  // namespace opimc

#endif  // OPIMC_EXPERIMENT_HPP
