#include "opimc/solver.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace opimc {

std::pair<FactorSet, Assignments> init_first_chunk(const MultiViewChunk& chunk, std::size_t n_clusters,
                                                   const SolverConfig& cfg) {
    if (n_clusters == 0) {
        throw std::invalid_argument("number of clusters must be positive");
    }
    if (chunk.size() == 0 || chunk.mask.present_pairs() == 0) {
        throw std::invalid_argument("first chunk has no present instance in any view");
    }

    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    FactorSet factors;
    const auto k = static_cast<Eigen::Index>(n_clusters);
    for (const auto& x : chunk.views) {
        Matrix u(x.rows(), k);
        // Column-major fill keeps the draw order independent of Eigen internals.
        for (Eigen::Index c = 0; c < k; ++c) {
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                u(r, c) = unit(rng);
            }
        }
        factors.centers.push_back(std::move(u));
    }

    std::uniform_int_distribution<Label> pick(0, static_cast<Label>(n_clusters - 1));
    Assignments labels(chunk.size());
    for (auto& l : labels) {
        l = pick(rng);
    }
    return {std::move(factors), std::move(labels)};
}

FactorUpdate update_factors(const GlobalStats& prior, const MultiViewChunk& chunk, const Assignments& labels,
                            double alpha) {
    if (labels.size() != chunk.size()) {
        throw std::invalid_argument("one label per chunk column is required");
    }
    if (chunk.n_views() != prior.n_views()) {
        throw std::invalid_argument("chunk and statistics disagree on the number of views");
    }
    const std::size_t n_clusters = prior.n_clusters();
    for (auto l : labels) {
        if (l >= n_clusters) {
            throw std::out_of_range("cluster label " + std::to_string(l) + " out of range");
        }
    }

    FactorUpdate out;
    out.chunk_counts = chunk_cluster_counts(chunk, labels, n_clusters);
    out.degenerate.assign(chunk.n_views(), std::vector<bool>(n_clusters, false));

    for (std::size_t v = 0; v < chunk.n_views(); ++v) {
        const auto& x = chunk.views[v];
        Matrix sums = prior.sums(v);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (chunk.present(v, i)) {
                sums.col(static_cast<Eigen::Index>(labels[i])) += x.col(static_cast<Eigen::Index>(i));
            }
        }
        for (std::size_t k = 0; k < n_clusters; ++k) {
            const double denom =
                static_cast<double>(prior.counts(v)[k] + out.chunk_counts[v][k]) + alpha;
            if (denom < kDegenerateDenominator) {
                out.degenerate[v][k] = true;
            }
            sums.col(static_cast<Eigen::Index>(k)) /= std::max(denom, kDegenerateDenominator);
        }
        out.factors.centers.push_back(std::move(sums));
    }
    return out;
}

DistanceMatrix compute_distances(const MultiViewChunk& chunk, const FactorSet& factors) {
    if (factors.n_views() != chunk.n_views()) {
        throw std::invalid_argument("chunk and centers disagree on the number of views");
    }
    const auto s = static_cast<Eigen::Index>(chunk.size());
    const auto n_clusters = static_cast<Eigen::Index>(factors.n_clusters());
    DistanceMatrix d = DistanceMatrix::Zero(s, n_clusters);

    for (std::size_t v = 0; v < chunk.n_views(); ++v) {
        const auto& x = chunk.views[v];
        const auto& u = factors.centers[v];
        if (u.rows() != x.rows()) {
            throw std::invalid_argument("center dimension does not match view " + std::to_string(v));
        }
        for (Eigen::Index k = 0; k < n_clusters; ++k) {
            const Vector dist = (x.colwise() - u.col(k)).colwise().squaredNorm().transpose();
            for (Eigen::Index i = 0; i < s; ++i) {
                if (chunk.present(v, static_cast<std::size_t>(i))) {
                    d(i, k) += dist(i);
                }
            }
        }
    }
    return d;
}

Assignments assign_chunk(const DistanceMatrix& distances, std::span<const Label> prev) {
    const auto s = distances.rows();
    if (!prev.empty() && static_cast<Eigen::Index>(prev.size()) != s) {
        throw std::invalid_argument("previous labels do not match the distance matrix");
    }
    Assignments labels(static_cast<std::size_t>(s));
    for (Eigen::Index i = 0; i < s; ++i) {
        Eigen::Index best = 0;
        const double best_value = distances.row(i).minCoeff(&best);
        if (!prev.empty()) {
            const auto keep = static_cast<Eigen::Index>(prev[static_cast<std::size_t>(i)]);
            if (keep < distances.cols() && distances(i, keep) == best_value) {
                best = keep;
            }
        }
        labels[static_cast<std::size_t>(i)] = static_cast<Label>(best);
    }
    return labels;
}

Assignments nearest_center_labels(const MultiViewChunk& chunk, const FactorSet& factors,
                                  std::span<const Label> prev) {
    return assign_chunk(compute_distances(chunk, factors), prev);
}

void flag_empty_clusters(ClusterFlags& flags, const ClusterCounts& chunk_counts) {
    for (std::size_t v = 0; v < flags.size(); ++v) {
        for (std::size_t k = 0; k < flags[v].size(); ++k) {
            if (chunk_counts[v][k] == 0) {
                flags[v][k] = true;
            }
        }
    }
}

std::size_t repair_degenerate_centers(FactorSet& factors, const ClusterFlags& flags, const MultiViewChunk& chunk,
                                      const FactorSet& previous, bool first_chunk) {
    std::size_t replaced = 0;
    for (std::size_t v = 0; v < factors.n_views(); ++v) {
        auto& u = factors.centers[v];
        const bool any = std::any_of(flags[v].begin(), flags[v].end(), [](bool f) { return f; });
        if (!any) {
            continue;
        }

        Vector fill;
        if (first_chunk) {
            const auto& x = chunk.views[v];
            fill = Vector::Zero(x.rows());
            std::size_t present = 0;
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                if (chunk.present(v, i)) {
                    fill += x.col(static_cast<Eigen::Index>(i));
                    ++present;
                }
            }
            if (present == 0) {
                std::cerr << "warning: view " << v
                          << " has no present instance in the first chunk; degenerate centers left as initialized\n";
                continue;
            }
            fill /= static_cast<double>(present);
        }

        for (std::size_t k = 0; k < flags[v].size(); ++k) {
            if (!flags[v][k]) {
                continue;
            }
            const auto col = static_cast<Eigen::Index>(k);
            if (first_chunk) {
                u.col(col) = fill;
            } else {
                u.col(col) = previous.centers[v].col(col);
            }
            ++replaced;
        }
    }
    return replaced;
}

ChunkResult process_chunk(const GlobalStats& prior, const FactorSet& factors, const MultiViewChunk& chunk,
                          const SolverConfig& cfg, Assignments initial_labels, bool first_chunk,
                          const InnerObserver& observer) {
    ChunkResult result;
    result.factors = factors;
    result.labels = std::move(initial_labels);

    for (int iter = 1; iter <= cfg.max_inner_iters; ++iter) {
        FactorUpdate update = update_factors(prior, chunk, result.labels, cfg.alpha);
        std::size_t repaired = 0;
        if (cfg.fill_degenerate) {
            if (first_chunk) {
                flag_empty_clusters(update.degenerate, update.chunk_counts);
            }
            repaired = repair_degenerate_centers(update.factors, update.degenerate, chunk, result.factors,
                                                 first_chunk);
        }

        Assignments next = nearest_center_labels(chunk, update.factors, result.labels);
        if (observer) {
            observer(InnerStep{iter, result.factors, update.factors, result.labels, next, repaired});
        }

        result.factors = std::move(update.factors);
        result.inner_iters = iter;
        const bool stable = next == result.labels;
        result.labels = std::move(next);
        if (stable) {
            result.converged = true;
            break;
        }
    }
    return result;
}

LossReport objective(const GlobalStats& stats, const FactorSet& factors, double alpha, std::size_t scanned) {
    if (scanned == 0) {
        throw std::invalid_argument("objective is undefined before any instance is scanned");
    }
    if (factors.n_views() != stats.n_views()) {
        throw std::invalid_argument("statistics and centers disagree on the number of views");
    }
    LossReport report;
    report.scanned = scanned;
    double variable = 0.0;
    for (std::size_t v = 0; v < stats.n_views(); ++v) {
        const auto& u = factors.centers[v];
        const double p = (u.array() * stats.sums(v).array()).sum();
        double q = 0.0;
        const auto& t = stats.counts(v);
        for (std::size_t k = 0; k < t.size(); ++k) {
            q += static_cast<double>(t[k]) * u.col(static_cast<Eigen::Index>(k)).squaredNorm();
        }
        report.per_view_P.push_back(p);
        report.per_view_Q.push_back(q);
        variable += -2.0 * p + q + alpha * u.squaredNorm();
    }
    report.objective = static_cast<double>(stats.present_pairs()) + variable;
    report.average_loss = variable / static_cast<double>(scanned);
    return report;
}

double chunk_objective(const GlobalStats& prior, const MultiViewChunk& chunk, const FactorSet& factors,
                       const Assignments& labels, double alpha) {
    double total = static_cast<double>(prior.present_pairs());
    for (std::size_t v = 0; v < prior.n_views(); ++v) {
        const auto& u = factors.centers[v];
        const auto& t = prior.counts(v);
        total -= 2.0 * (u.array() * prior.sums(v).array()).sum();
        for (std::size_t k = 0; k < t.size(); ++k) {
            total += static_cast<double>(t[k]) * u.col(static_cast<Eigen::Index>(k)).squaredNorm();
        }
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (chunk.present(v, i)) {
                total += (chunk.views[v].col(static_cast<Eigen::Index>(i)) -
                          u.col(static_cast<Eigen::Index>(labels[i])))
                             .squaredNorm();
            }
        }
        total += alpha * u.squaredNorm();
    }
    return total;
}

namespace {

std::size_t working_bytes(const MultiViewChunk& chunk, const GlobalStats& stats, const FactorSet& factors) {
    const std::size_t s = chunk.size();
    const std::size_t k = stats.n_clusters();
    // chunk, statistics, current and candidate centers, distances, three label vectors
    return chunk.bytes() + stats.bytes() + 2 * factors.bytes() + s * k * sizeof(double) +
           3 * s * sizeof(Label);
}

}  // namespace

RunResult run(ChunkSource& source, const SolverConfig& cfg, const RunCallbacks& callbacks) {
    cfg.validate();
    const DatasetMeta& meta = source.meta();
    meta.validate();

    RunResult result;
    GlobalStats stats(meta);
    bool have_factors = false;
    const std::size_t total = meta.n_instances;

    for (int pass = 0; pass < cfg.n_passes; ++pass) {
        source.rewind();
        std::size_t seen = 0;
        std::size_t index = 0;
        while (seen < total) {
            const std::size_t want = std::min(cfg.chunk_size, total - seen);
            auto chunk = source.read(want);
            if (!chunk || chunk->size() == 0) {
                throw IoError("stream ended after " + std::to_string(seen) + " of " + std::to_string(total) +
                              " instances");
            }
            if (chunk->size() != want || chunk->n_views() != meta.n_views) {
                throw IoError("stream returned a malformed chunk at instance " + std::to_string(seen));
            }
            chunk->chunk_index = index;

            Assignments previous;
            if (stats.has_contribution(index)) {
                previous = stats.contribution(index);
                stats.remove_chunk(*chunk);
            }

            const bool first_chunk = !have_factors;
            Assignments initial;
            if (first_chunk) {
                std::tie(result.factors, initial) = init_first_chunk(*chunk, meta.n_clusters, cfg);
                have_factors = true;
            } else {
                initial = nearest_center_labels(*chunk, result.factors, previous);
            }

            ChunkResult solved = process_chunk(stats, result.factors, *chunk, cfg, std::move(initial), first_chunk);
            result.factors = std::move(solved.factors);
            stats.apply_chunk(*chunk, solved.labels);

            result.peak_working_bytes =
                std::max(result.peak_working_bytes, working_bytes(*chunk, stats, result.factors));

            const std::size_t scanned = pass == 0 ? stats.scanned() : total;
            result.chunk_losses.push_back(objective(stats, result.factors, cfg.alpha, scanned));
            result.inner_iters.push_back(solved.inner_iters);
            if (callbacks.on_chunk) {
                callbacks.on_chunk(ChunkEvent{pass, index, solved.inner_iters, result.chunk_losses.back(), stats,
                                              result.factors});
            }

            seen += chunk->size();
            ++index;
        }

        result.pass_losses.push_back(result.chunk_losses.back());
        if (callbacks.on_pass) {
            callbacks.on_pass(PassEvent{pass, result.pass_losses.back(), stats, result.factors});
        }
    }

    result.labels = stats.labels();
    return result;
}

}  // namespace opimc
