#ifndef OPIMC_METRICS_HPP
#define OPIMC_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "opimc/model.hpp"

namespace opimc {

/**
 * @brief Cross-tabulation of predicted clusters against true classes.
 *
 * Labels are compacted first, so `counts` is (distinct predicted) x
 * (distinct true) with no empty rows or columns.
 */
struct Contingency {
    std::vector<std::vector<std::int64_t>> counts;
    std::int64_t n = 0;

    std::size_t rows() const { return counts.size(); }
    std::size_t cols() const { return counts.empty() ? 0 : counts.front().size(); }
};

/// Throws std::invalid_argument on length mismatch or empty input.
Contingency contingency(std::span<const Label> pred, std::span<const Label> truth);

/**
 * Mutual information over sqrt(H(pred) H(truth)), natural log.
 * Both labelings constant gives 1; exactly one constant gives 0.
 */
double nmi(std::span<const Label> pred, std::span<const Label> truth);

/// Fraction of instances matched under the best one-to-one cluster/class map.
double accuracy(std::span<const Label> pred, std::span<const Label> truth);

/**
 * Minimum-cost perfect assignment on a square cost matrix (Hungarian method
 * with potentials, O(n^3)). Returns `col_of_row`.
 */
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace opimc

#endif  // OPIMC_METRICS_HPP
