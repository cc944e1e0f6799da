#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "opimc/metrics.hpp"
#include "oracles.hpp"

using namespace opimc;

TEST_CASE("perfect and relabeled predictions score one") {
    const Assignments truth{0, 0, 1, 1, 2, 2};
    CHECK(nmi(truth, truth) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(accuracy(truth, truth) == 1.0);
    const Assignments swapped{2, 2, 0, 0, 1, 1};
    CHECK(nmi(swapped, truth) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(accuracy(swapped, truth) == 1.0);
}

TEST_CASE("small worked example") {
    const Assignments pred{0, 0, 1, 1};
    const Assignments truth{0, 1, 1, 1};
    // MI = 1.5 ln 2 - 0.75 ln 3, H(pred) = ln 2, H(truth) = 2 ln 2 - 0.75 ln 3.
    const double ln2 = std::log(2.0), ln3 = std::log(3.0);
    const double expected = (1.5 * ln2 - 0.75 * ln3) / std::sqrt(ln2 * (2.0 * ln2 - 0.75 * ln3));
    CHECK(nmi(pred, truth) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(nmi(pred, truth) == doctest::Approx(0.3455).epsilon(1e-3));
    CHECK(accuracy(pred, truth) == 0.75);
}

TEST_CASE("accuracy examples") {
    CHECK(accuracy(Assignments{1, 1, 0, 0}, Assignments{0, 0, 1, 1}) == 1.0);
    CHECK(accuracy(Assignments{0, 0, 0, 0}, Assignments{0, 0, 1, 1}) == 0.5);
    CHECK(accuracy(Assignments{0, 1, 2, 3}, Assignments{0, 0, 1, 1}) == 0.5);
}

TEST_CASE("constant labelings") {
    CHECK(nmi(Assignments{3, 3, 3}, Assignments{1, 1, 1}) == 1.0);
    CHECK(nmi(Assignments{0, 0, 0, 0}, Assignments{0, 0, 1, 1}) == 0.0);
    CHECK(nmi(Assignments{0, 1, 0, 1}, Assignments{2, 2, 2, 2}) == 0.0);
}

TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(nmi(Assignments{0, 1}, Assignments{0}), std::invalid_argument);
    CHECK_THROWS_AS(accuracy(Assignments{0, 1}, Assignments{0, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(nmi(Assignments{}, Assignments{}), std::invalid_argument);
}

TEST_CASE("metrics are invariant to permuting cluster ids and bounded below for accuracy") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + trial % 6;
        const std::size_t n = 30 + trial;
        const auto truth = oracle::random_labels(rng, n, k);
        const auto pred = oracle::random_labels(rng, n, k);
        std::vector<Label> perm(k);
        std::iota(perm.begin(), perm.end(), Label{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Assignments relabeled(n);
        for (std::size_t i = 0; i < n; ++i) {
            relabeled[i] = perm[pred[i]];
        }
        CHECK(nmi(relabeled, truth) == doctest::Approx(nmi(pred, truth)).epsilon(1e-12));
        CHECK(accuracy(relabeled, truth) == accuracy(pred, truth));

        // The largest class alone can always be matched.
        std::vector<std::size_t> sizes(k, 0);
        for (auto t : truth) {
            ++sizes[t];
        }
        const double floor = static_cast<double>(*std::max_element(sizes.begin(), sizes.end())) / n;
        CHECK(accuracy(Assignments(n, 0), truth) == doctest::Approx(floor));
        CHECK(accuracy(pred, truth) >= 1.0 / static_cast<double>(k) - 1e-12);
        const double score = nmi(pred, truth);
        CHECK(score >= 0.0);
        CHECK(score <= 1.0 + 1e-12);
    }
}

TEST_CASE("metrics agree with brute force") {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t kp = 1 + trial % 6;
        const std::size_t kt = 1 + (trial / 6) % 6;
        const std::size_t n = 5 + static_cast<std::size_t>(trial) % 40;
        const auto pred = oracle::random_labels(rng, n, kp);
        const auto truth = oracle::random_labels(rng, n, kt);
        CHECK(std::abs(nmi(pred, truth) - oracle::brute_nmi(pred, truth)) <= 1e-12);
        CHECK(std::abs(accuracy(pred, truth) - oracle::brute_accuracy(pred, truth)) <= 1e-12);
    }
}

TEST_CASE("assignment solver finds the optimum") {
    std::vector<std::vector<double>> cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
    const auto match = solve_assignment(cost);
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        total += cost[i][match[i]];
    }
    CHECK(total == 5.0);

    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (std::size_t n = 1; n <= 6; ++n) {
        std::vector<std::vector<double>> c(n, std::vector<double>(n));
        for (auto& row : c) {
            for (auto& x : row) {
                x = u(rng);
            }
        }
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        double best = 1e300;
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += c[i][p[i]];
            }
            best = std::min(best, s);
        } while (std::next_permutation(p.begin(), p.end()));
        const auto m = solve_assignment(c);
        double got = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            got += c[i][m[i]];
        }
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
        auto sorted = m;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
}

TEST_CASE("contingency table compacts labels") {
    const auto table = contingency(Assignments{5, 5, 9}, Assignments{0, 2, 2});
    CHECK(table.rows() == 2);
    CHECK(table.cols() == 2);
    CHECK(table.n == 3);
    CHECK(table.counts[0] == std::vector<std::int64_t>{1, 1});
    CHECK(table.counts[1] == std::vector<std::int64_t>{0, 1});
}
