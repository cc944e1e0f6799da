#include "opimc/imc.hpp"

#include <stdexcept>
#include <string>

#include "opimc/solver.hpp"

namespace opimc {

ImcResult imc_fit(const std::vector<Matrix>& views, const PresenceMask& mask, std::size_t n_clusters,
                  const SolverConfig& cfg, const std::optional<Assignments>& initial_labels) {
    if (views.empty() || views.size() != mask.n_views()) {
        throw std::invalid_argument("views and mask disagree on the number of views");
    }
    const std::size_t n = mask.n_instances();
    if (n_clusters == 0 || n_clusters > n) {
        throw std::invalid_argument("need 1 <= K <= N, got K=" + std::to_string(n_clusters) +
                                    " N=" + std::to_string(n));
    }
    if (!(cfg.alpha >= 0.0) || cfg.max_inner_iters < 1) {
        throw std::invalid_argument("invalid solver configuration");
    }
    mask.validate();

    MultiViewChunk chunk;
    chunk.mask = mask;
    std::vector<std::size_t> dims;
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (static_cast<std::size_t>(views[v].cols()) != n) {
            throw std::invalid_argument("view " + std::to_string(v) + " does not have N columns");
        }
        Matrix x = views[v];
        for (std::size_t j = 0; j < n; ++j) {
            if (!mask.present(v, j)) {
                x.col(static_cast<Eigen::Index>(j)).setZero();
            }
        }
        dims.push_back(static_cast<std::size_t>(x.rows()));
        chunk.views.push_back(std::move(x));
    }

    const GlobalStats empty(n_clusters, dims);
    auto [factors, labels] = init_first_chunk(chunk, n_clusters, cfg);
    if (initial_labels) {
        if (initial_labels->size() != n) {
            throw std::invalid_argument("initial labels must have one entry per instance");
        }
        labels = *initial_labels;
    }

    ImcResult result;
    const InnerObserver observer = [&](const InnerStep& step) {
        result.objective_trace.push_back(
            chunk_objective(empty, chunk, step.factors, step.labels_after, cfg.alpha));
        if (step.repaired_columns > 0) {
            result.repaired_iterations.push_back(step.iteration);
        }
    };
    ChunkResult solved = process_chunk(empty, factors, chunk, cfg, std::move(labels), true, observer);

    result.factors = std::move(solved.factors);
    result.labels = std::move(solved.labels);
    result.iterations = solved.inner_iters;
    result.converged = solved.converged;
    return result;
}

}  // namespace opimc
