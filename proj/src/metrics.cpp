#include "opimc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace opimc {

namespace {

std::vector<std::size_t> compact(std::span<const Label> labels, std::size_t& n_distinct) {
    std::map<Label, std::size_t> ids;
    for (auto l : labels) {
        ids.emplace(l, 0);
    }
    std::size_t next = 0;
    for (auto& [label, id] : ids) {
        id = next++;
    }
    n_distinct = next;
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (auto l : labels) {
        out.push_back(ids.at(l));
    }
    return out;
}

double entropy(const std::vector<std::int64_t>& marginal, double n) {
    double h = 0.0;
    for (auto c : marginal) {
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace

Contingency contingency(std::span<const Label> pred, std::span<const Label> truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("prediction and ground truth have different lengths");
    }
    if (pred.empty()) {
        throw std::invalid_argument("cannot score an empty labeling");
    }
    std::size_t rows = 0;
    std::size_t cols = 0;
    const auto p = compact(pred, rows);
    const auto t = compact(truth, cols);

    Contingency table;
    table.counts.assign(rows, std::vector<std::int64_t>(cols, 0));
    for (std::size_t i = 0; i < p.size(); ++i) {
        ++table.counts[p[i]][t[i]];
    }
    table.n = static_cast<std::int64_t>(pred.size());
    return table;
}

double nmi(std::span<const Label> pred, std::span<const Label> truth) {
    const Contingency table = contingency(pred, truth);
    const double n = static_cast<double>(table.n);

    std::vector<std::int64_t> row_sums(table.rows(), 0);
    std::vector<std::int64_t> col_sums(table.cols(), 0);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            row_sums[r] += table.counts[r][c];
            col_sums[c] += table.counts[r][c];
        }
    }

    const double h_pred = entropy(row_sums, n);
    const double h_truth = entropy(col_sums, n);
    if (table.rows() == 1 && table.cols() == 1) {
        return 1.0;
    }
    if (table.rows() == 1 || table.cols() == 1) {
        return 0.0;
    }

    double mi = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const auto joint = table.counts[r][c];
            if (joint == 0) {
                continue;
            }
            const double pj = static_cast<double>(joint) / n;
            mi += pj * std::log(static_cast<double>(joint) * n /
                                (static_cast<double>(row_sums[r]) * static_cast<double>(col_sums[c])));
        }
    }
    const double value = mi / std::sqrt(h_pred * h_truth);
    return std::clamp(value, 0.0, 1.0);
}

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    for (const auto& row : cost) {
        if (row.size() != n) {
            throw std::invalid_argument("assignment cost matrix must be square");
        }
    }
    if (n == 0) {
        return {};
    }

    // 1-based potentials formulation; row 0 / column 0 are sentinels.
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = row_of_col[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> col_of_row(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    return col_of_row;
}

double accuracy(std::span<const Label> pred, std::span<const Label> truth) {
    const Contingency table = contingency(pred, truth);
    const std::size_t size = std::max(table.rows(), table.cols());

    // Maximize matches by minimizing their negation; padding rows/columns cost 0.
    std::vector<std::vector<double>> cost(size, std::vector<double>(size, 0.0));
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            cost[r][c] = -static_cast<double>(table.counts[r][c]);
        }
    }
    const auto match = solve_assignment(cost);

    std::int64_t hits = 0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (match[r] < table.cols()) {
            hits += table.counts[r][match[r]];
        }
    }
    return static_cast<double>(hits) / static_cast<double>(table.n);
}

}  // namespace opimc
