#ifndef OPIMC_SOLVER_HPP
#define OPIMC_SOLVER_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "opimc/model.hpp"
#include "opimc/source.hpp"

/**
 * @file solver.hpp
 *
 * @brief Streaming incomplete multi-view clustering.
 *
 * Each view v is factorized as X^(v) ~ U^(v) V^T with a shared 1-of-K
 * indicator V and a ridge penalty alpha * |U^(v)|^2. Absent instances are
 * removed from the residual by a binary weight. Data arrive in chunks; the
 * sums R^(v) = sum X V and T^(v) = sum V^T W V summarize everything already
 * seen, so each chunk is solved by alternating a closed-form center update
 * with a nearest-center assignment.
 */
namespace opimc {

/// Denominators below this are treated as zero.
inline constexpr double kDegenerateDenominator = 1e-12;

/// s x K matrix of squared distances summed over the views an instance is present in.
using DistanceMatrix = Matrix;

struct FactorUpdate {
    FactorSet factors;
    /// Columns whose denominator fell below `kDegenerateDenominator`.
    ClusterFlags degenerate;
    /// Present chunk instances per (view, cluster) under the labels used.
    ClusterCounts chunk_counts;
};

struct LossReport {
    /// Full objective over scanned data, including the constant data term.
    double objective = 0.0;
    double average_loss = 0.0;
    std::size_t scanned = 0;
    /// tr(U^T R) per view.
    std::vector<double> per_view_P;
    /// tr(U^T U T) per view.
    std::vector<double> per_view_Q;
};

/**
 * Random centers in [0, 1) and uniformly random labels for the very first
 * chunk. Deterministic in `cfg.rng_seed`.
 */
std::pair<FactorSet, Assignments> init_first_chunk(const MultiViewChunk& chunk, std::size_t n_clusters,
                                                   const SolverConfig& cfg);

/**
 * Closed-form center update with the chunk folded into `prior`:
 * U^(v)(:,k) = (R^(v)(:,k) + X_t V_t(:,k)) / (T^(v)[k] + count + alpha).
 * `prior` is not modified.
 */
FactorUpdate update_factors(const GlobalStats& prior, const MultiViewChunk& chunk, const Assignments& labels,
                            double alpha);

DistanceMatrix compute_distances(const MultiViewChunk& chunk, const FactorSet& factors);

/**
 * Row-wise argmin. A tie keeps `prev[i]` when it attains the minimum,
 * otherwise the lowest index wins. Pass an empty span when there is no
 * previous labeling.
 */
Assignments assign_chunk(const DistanceMatrix& distances, std::span<const Label> prev = {});

/// Nearest-center labels for a fresh chunk.
Assignments nearest_center_labels(const MultiViewChunk& chunk, const FactorSet& factors,
                                  std::span<const Label> prev = {});

/**
 * Adds the first-chunk rule to `flags`: a cluster with no present instance
 * of view v in the chunk is degenerate in view v.
 */
void flag_empty_clusters(ClusterFlags& flags, const ClusterCounts& chunk_counts);

/**
 * Overwrites flagged center columns. On the first chunk a flagged column
 * becomes the mean of the chunk's present columns in that view; afterwards it
 * is restored from `previous`. Returns the number of columns replaced.
 */
std::size_t repair_degenerate_centers(FactorSet& factors, const ClusterFlags& flags, const MultiViewChunk& chunk,
                                      const FactorSet& previous, bool first_chunk);

/// One inner iteration as seen by an observer.
struct InnerStep {
    int iteration = 0;
    /// Centers before this iteration's update.
    const FactorSet& factors_before;
    /// Centers after update and repair.
    const FactorSet& factors;
    const Assignments& labels_before;
    const Assignments& labels_after;
    std::size_t repaired_columns = 0;
};

using InnerObserver = std::function<void(const InnerStep&)>;

struct ChunkResult {
    FactorSet factors;
    Assignments labels;
    int inner_iters = 0;
    bool converged = false;
};

/**
 * Alternates center update, degenerate repair, distances and assignment
 * until the labels stop changing or `cfg.max_inner_iters` is reached.
 * `prior` must not contain this chunk; apply it afterwards.
 */
ChunkResult process_chunk(const GlobalStats& prior, const FactorSet& factors, const MultiViewChunk& chunk,
                          const SolverConfig& cfg, Assignments initial_labels, bool first_chunk,
                          const InnerObserver& observer = {});

/**
 * Objective and average loss from the statistics alone. The constant data
 * term counts one per present pair, which is exact for unit-norm columns.
 * Throws std::invalid_argument when `scanned` is zero.
 */
LossReport objective(const GlobalStats& stats, const FactorSet& factors, double alpha, std::size_t scanned);

/**
 * Objective with `prior` held fixed and the chunk evaluated under `labels`:
 * statistics part for the prior, direct residual for the chunk, one
 * regularizer per view.
 */
double chunk_objective(const GlobalStats& prior, const MultiViewChunk& chunk, const FactorSet& factors,
                       const Assignments& labels, double alpha);

struct ChunkEvent {
    int pass = 0;
    std::size_t chunk_index = 0;
    int inner_iters = 0;
    const LossReport& loss;
    const GlobalStats& stats;
    const FactorSet& factors;
};

struct PassEvent {
    int pass = 0;
    const LossReport& loss;
    const GlobalStats& stats;
    const FactorSet& factors;
};

struct RunCallbacks {
    std::function<void(const ChunkEvent&)> on_chunk;
    std::function<void(const PassEvent&)> on_pass;
};

struct RunResult {
    FactorSet factors;
    Assignments labels;
    /// One entry per processed chunk, all passes.
    std::vector<LossReport> chunk_losses;
    /// One entry per pass, taken after its last chunk.
    std::vector<LossReport> pass_losses;
    std::vector<int> inner_iters;
    /// Largest solver working set seen, chunk labels and traces excluded.
    std::size_t peak_working_bytes = 0;
};

/**
 * Runs `cfg.n_passes` passes over `source`. On later passes each chunk's
 * old contribution is swapped out of the statistics before it is solved
 * again. Throws IoError when the source ends before the declared size.
 */
RunResult run(ChunkSource& source, const SolverConfig& cfg, const RunCallbacks& callbacks = {});

}  // namespace opimc

#endif  // OPIMC_SOLVER_HPP
