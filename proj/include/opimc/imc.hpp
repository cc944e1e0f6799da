#ifndef OPIMC_IMC_HPP
#define OPIMC_IMC_HPP

#include <optional>
#include <vector>

#include "opimc/model.hpp"

namespace opimc {

struct ImcResult {
    FactorSet factors;
    Assignments labels;
    /// Objective after each iteration.
    std::vector<double> objective_trace;
    /// Iterations whose center update was overridden by degenerate repair (1-based).
    std::vector<int> repaired_iterations;
    int iterations = 0;
    bool converged = false;
};

/**
 * Offline fit on fully resident data: the whole dataset is treated as a
 * single first chunk with empty prior statistics. `cfg.chunk_size` and
 * `cfg.n_passes` are ignored. Absent columns are zeroed on a copy; columns
 * are expected to be unit-norm already.
 *
 * When `initial_labels` is given it replaces the random label draw; the
 * random centers are still drawn so the seed is consumed identically.
 */
ImcResult imc_fit(const std::vector<Matrix>& views, const PresenceMask& mask, std::size_t n_clusters,
                  const SolverConfig& cfg, const std::optional<Assignments>& initial_labels = std::nullopt);

}  // namespace opimc

#endif  // OPIMC_IMC_HPP
