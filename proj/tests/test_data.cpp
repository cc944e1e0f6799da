#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <unistd.h>

#include "doctest.h"
#include "opimc/data.hpp"
#include "opimc/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace opimc;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory removed on scope exit.
struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("opimc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }
};

std::vector<unsigned char> bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("csv view with a masked column") {
    TempDir dir;
    const auto view = dir.file("v.csv", "1,0,0.6\n0,1,0.8\n");
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(1, 3);
    bits << 1, 0, 1;
    const PresenceMask mask(bits);
    const Matrix x = load_view(view, 2, mask, 0);
    Matrix expected(2, 3);
    expected << 1, 0, 0.6,
                0, 0, 0.8;
    CHECK(x == expected);
    CHECK(detect_format(view) == MatrixFormat::Csv);
    CHECK(matrix_shape(view) == std::pair<std::size_t, std::size_t>{2, 3});
}

TEST_CASE("csv errors") {
    TempDir dir;
    const PresenceMask all(1, 3);
    CHECK_THROWS_AS(load_view(dir.file("a.csv", "1,0,0.6\n0,1,0.8\n"), 3, all, 0), IoError);
    CHECK_THROWS_AS(read_matrix(dir.file("b.csv", "1,x,2\n")), IoError);
    CHECK_THROWS_AS(read_matrix(dir.file("c.csv", "1,2,3\n4,5\n")), IoError);
    CHECK_THROWS_AS(read_matrix(dir.file("d.csv", "")), IoError);
    CHECK_THROWS_AS(read_matrix(dir.path / "missing.csv"), IoError);
    CHECK_THROWS_AS(load_view(dir.file("e.csv", "1,nan,2\n"), 1, all, 0), IoError);

    // A non-finite value in an absent column is ignored.
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(1, 3);
    bits << 1, 0, 1;
    const Matrix x = load_view(dir.file("f.csv", "1,inf,2\n"), 1, PresenceMask(bits), 0);
    CHECK(x(0, 1) == 0.0);
}

TEST_CASE("binary round trip and header layout") {
    TempDir dir;
    Matrix m(2, 3);
    m << 1.5, -2.0, 0.1,
         3e-300, 7.0, -0.0;
    const auto path = dir.path / "m.bin";
    write_matrix_binary(path, m);
    const auto raw = bytes_of(path);
    REQUIRE(raw.size() == 20 + 6 * 8);
    CHECK(std::string(raw.begin(), raw.begin() + 4) == "MVC1");
    CHECK(raw[4] == 2);
    CHECK(std::all_of(raw.begin() + 5, raw.begin() + 12, [](unsigned char c) { return c == 0; }));
    CHECK(raw[12] == 3);
    CHECK(detect_format(path) == MatrixFormat::Binary);
    CHECK(matrix_shape(path) == std::pair<std::size_t, std::size_t>{2, 3});
    CHECK(read_matrix(path) == m);

    // Row-major: the second value is m(0, 1).
    double second = 0.0;
    std::memcpy(&second, raw.data() + 28, 8);
    CHECK(second == -2.0);

    fs::resize_file(path, 30);
    CHECK_THROWS_AS(read_matrix(path), IoError);
}

TEST_CASE("csv round trip is exact") {
    TempDir dir;
    std::mt19937_64 rng(61);
    std::normal_distribution<double> g;
    Matrix m(4, 7);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m(i) = g(rng);
    }
    const auto path = dir.path / "m.csv";
    write_matrix_csv(path, m);
    CHECK(read_matrix(path) == m);
}

TEST_CASE("mask and label files") {
    TempDir dir;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(2, 3);
    bits << 1, 0, 1,
            0, 1, 1;
    write_mask(dir.path / "mask.csv", PresenceMask(bits));
    CHECK(read_mask(dir.path / "mask.csv") == PresenceMask(bits));
    CHECK_THROWS_AS(read_mask(dir.file("bad.csv", "1,2\n")), IoError);

    const Assignments labels{0, 4, 2};
    write_labels(dir.path / "l.txt", labels);
    CHECK(read_labels(dir.path / "l.txt") == labels);
    CHECK_THROWS_AS(read_labels(dir.file("bad.txt", "1\n-1\n")), IoError);
}

TEST_CASE("normalization") {
    Matrix x(2, 2);
    x << 3, 0,
         4, 0;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(1, 2);
    bits << 1, 0;
    normalize_instances(x, PresenceMask(bits), 0);
    CHECK(x(0, 0) == doctest::Approx(0.6));
    CHECK(x(1, 0) == doctest::Approx(0.8));
    CHECK(x.col(1).isZero(0.0));

    Matrix y(1, 1);
    y << -7.0;
    normalize_instances(y, PresenceMask(1, 1), 0);
    CHECK(y(0, 0) == -1.0);

    Matrix z = Matrix::Zero(2, 1);
    CHECK_THROWS_AS(normalize_instances(z, PresenceMask(1, 1), 0), std::invalid_argument);
}

TEST_CASE("simulated missingness") {
    SUBCASE("rate zero keeps everything") {
        const auto mask = simulate_missing(3, 50, 0.0, 1);
        CHECK(mask.present_pairs() == 150);
    }
    SUBCASE("exact per-view removal") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto mask = simulate_missing(2, 100, 0.4, seed);
            CHECK(mask.present_in_view(0) == 60);
            CHECK(mask.present_in_view(1) == 60);
            CHECK_NOTHROW(mask.validate());
        }
    }
    SUBCASE("tight feasibility") {
        // 2 views, half removed from each: every instance ends up in exactly one view.
        const auto mask = simulate_missing(2, 40, 0.5, 3);
        CHECK(mask.present_in_view(0) == 20);
        CHECK(mask.present_in_view(1) == 20);
        CHECK_NOTHROW(mask.validate());
    }
    SUBCASE("deterministic per seed") {
        CHECK(simulate_missing(3, 200, 0.3, 9) == simulate_missing(3, 200, 0.3, 9));
        CHECK_FALSE(simulate_missing(3, 200, 0.3, 9) == simulate_missing(3, 200, 0.3, 10));
    }
    SUBCASE("infeasible or invalid rates") {
        CHECK_THROWS_AS(simulate_missing(2, 100, 0.6, 0), std::invalid_argument);
        CHECK_THROWS_AS(simulate_missing(1, 100, 0.1, 0), std::invalid_argument);
        CHECK_THROWS_AS(simulate_missing(2, 100, 1.0, 0), std::invalid_argument);
        CHECK_THROWS_AS(simulate_missing(2, 100, -0.1, 0), std::invalid_argument);
    }
}

TEST_CASE("shuffling") {
    std::mt19937_64 rng(62);
    auto data = oracle::random_dataset(rng, 2, 50, 4, 3, 0.3);
    data.labels = oracle::random_labels(rng, 50, 3);
    const auto original = data;
    const auto order = shuffle_instances(data, 7);
    CHECK(order.size() == 50);
    CHECK_FALSE(data.labels == original.labels);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK((*data.labels)[i] == (*original.labels)[order[i]]);
        CHECK(data.views[1].col(static_cast<Eigen::Index>(i)) ==
              original.views[1].col(static_cast<Eigen::Index>(order[i])));
        CHECK(data.mask.present(0, i) == original.mask.present(0, order[i]));
    }

    // Scoring the shuffled labels against the shuffled truth is unchanged.
    const auto pred = oracle::random_labels(rng, 50, 3);
    Assignments pred_shuffled(50);
    for (std::size_t i = 0; i < 50; ++i) {
        pred_shuffled[i] = pred[order[i]];
    }
    CHECK(nmi(pred_shuffled, *data.labels) == doctest::Approx(nmi(pred, *original.labels)).epsilon(1e-12));

    const auto inverse = inverse_permutation(order);
    permute_instances(data, inverse);
    CHECK(data.labels == original.labels);
    CHECK(data.mask == original.mask);
    for (std::size_t v = 0; v < 2; ++v) {
        CHECK(data.views[v] == original.views[v]);
    }

    auto single = oracle::random_dataset(rng, 1, 1, 3, 1, 0.0);
    CHECK(shuffle_instances(single, 1) == std::vector<std::size_t>{0});
}

TEST_CASE("prepared datasets") {
    std::vector<Matrix> views{Matrix::Constant(2, 3, 2.0), Matrix::Constant(3, 3, -1.0)};
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits(2, 3);
    bits << 1, 1, 0,
            0, 1, 1;
    const auto data = make_dataset(views, PresenceMask(bits), 2, Assignments{0, 1, 1});
    CHECK(data.meta.n_views == 2);
    CHECK(data.meta.n_instances == 3);
    CHECK(data.meta.dims == std::vector<std::size_t>{2, 3});
    CHECK(data.meta.missing_ratio == doctest::Approx(2.0 / 6.0));
    CHECK(data.views[0].col(2).isZero(0.0));
    CHECK(data.views[1].col(1).norm() == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_dataset(views, PresenceMask(bits), 2, Assignments{0}), std::invalid_argument);
    CHECK_THROWS_AS(make_dataset(views, PresenceMask(2, 4), 2), std::invalid_argument);
}

TEST_CASE("manifest loading") {
    TempDir dir;
    write_matrix_csv(dir.path / "a.csv", Matrix::Constant(2, 4, 1.0));
    write_matrix_binary(dir.path / "b.bin", Matrix::Constant(3, 4, 2.0));
    write_labels(dir.path / "l.txt", Assignments{0, 0, 1, 1});
    DatasetManifest manifest;
    manifest.view_paths = {dir.path / "a.csv", dir.path / "b.bin"};
    manifest.labels_path = dir.path / "l.txt";
    manifest.n_clusters = 2;
    const auto data = load_dataset(manifest);
    CHECK(data.meta.dims == std::vector<std::size_t>{2, 3});
    CHECK(data.mask.present_pairs() == 8);
    CHECK(data.labels == Assignments{0, 0, 1, 1});

    manifest.dims = {2, 4};
    CHECK_THROWS_AS(load_dataset(manifest), IoError);
}

TEST_CASE("synthetic data") {
    SyntheticSpec spec;
    spec.noise = 0.0;
    spec.n_instances = 90;
    spec.seed = 3;
    const auto clean = make_synthetic(spec);
    CHECK(clean.labels.size() == 90);
    CHECK(clean.labels.front() == 0);
    CHECK(clean.labels[30] == 1);
    CHECK(clean.labels.back() == 2);
    // Without noise, instances of one class coincide.
    CHECK(testing::max_abs_diff(clean.views[0].col(0), clean.views[0].col(29)) <= 1e-15);
    CHECK(std::abs(clean.views[1].col(40).norm() - 1.0) <= 1e-12);

    spec.n_clusters = 1;
    const auto one = make_synthetic(spec);
    CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](Label l) { return l == 0; }));

    const auto again = make_synthetic(SyntheticSpec{});
    CHECK(again.views[0] == make_synthetic(SyntheticSpec{}).views[0]);
}

TEST_CASE("well separated synthetic data is recovered by Lloyd") {
    SyntheticSpec spec;
    spec.n_views = 1;
    spec.dims = {10};
    spec.separation = 20.0;
    spec.noise = 1.0;
    spec.n_instances = 300;
    spec.seed = 8;
    const auto syn = make_synthetic(spec);
    // Start from one true member per class so the comparison isolates the data.
    std::mt19937_64 rng(1);
    Assignments init = oracle::random_labels(rng, 300, 3);
    init[0] = 0;
    init[100] = 1;
    init[200] = 2;
    Matrix seeds(10, 3);
    seeds << syn.views[0].col(0), syn.views[0].col(100), syn.views[0].col(200);
    for (std::size_t i = 0; i < 300; ++i) {
        Eigen::Index best = 0;
        (seeds.colwise() - syn.views[0].col(static_cast<Eigen::Index>(i))).colwise().squaredNorm().minCoeff(&best);
        init[i] = static_cast<Label>(best);
    }
    const auto steps = oracle::lloyd(syn.views[0], init, 3, 50);
    CHECK(nmi(steps.back().labels, syn.labels) >= 0.99);
}

TEST_CASE("in-memory chunks reassemble the dataset") {
    std::mt19937_64 rng(63);
    const auto data = oracle::random_dataset(rng, 3, 47, 5, 2, 0.4);
    InMemorySource source(data);
    std::size_t seen = 0;
    while (auto chunk = source.read(10)) {
        CHECK(chunk->offset == seen);
        CHECK_NOTHROW(chunk->validate());
        for (std::size_t v = 0; v < 3; ++v) {
            CHECK(chunk->views[v] ==
                  data.views[v].middleCols(static_cast<Eigen::Index>(seen), static_cast<Eigen::Index>(chunk->size())));
        }
        CHECK(chunk->mask.bits() == data.mask.slice(seen, chunk->size()).bits());
        seen += chunk->size();
    }
    CHECK(seen == 47);
    source.rewind();
    CHECK(source.read(100)->size() == 47);
}

TEST_CASE("binary file source streams the same chunks") {
    TempDir dir;
    std::mt19937_64 rng(64);
    std::normal_distribution<double> g;
    std::vector<Matrix> raw;
    std::vector<fs::path> paths;
    for (std::size_t v = 0; v < 2; ++v) {
        Matrix x(3 + static_cast<Eigen::Index>(v), 33);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x(i) = g(rng);
        }
        paths.push_back(dir.path / ("v" + std::to_string(v) + ".bin"));
        write_matrix_binary(paths.back(), x);
        raw.push_back(x);
    }
    const auto mask = simulate_missing(2, 33, 0.3, 5);
    const auto data = make_dataset(raw, mask, 3);
    BinaryFileSource file_source(paths, mask, 3);
    InMemorySource memory_source(data);
    CHECK(file_source.meta().dims == data.meta.dims);
    for (int round = 0; round < 2; ++round) {
        while (auto a = file_source.read(8)) {
            const auto b = memory_source.read(8);
            REQUIRE(b);
            CHECK(a->offset == b->offset);
            for (std::size_t v = 0; v < 2; ++v) {
                CHECK(testing::max_abs_diff(a->views[v], b->views[v]) <= 1e-15);
            }
            CHECK(a->mask == b->mask);
        }
        CHECK_FALSE(memory_source.read(8));
        file_source.rewind();
        memory_source.rewind();
    }

    write_matrix_csv(dir.path / "c.csv", raw[0]);
    CHECK_THROWS_AS(BinaryFileSource({dir.path / "c.csv", paths[1]}, mask, 3), IoError);
}

TEST_CASE("synthetic stream replays exactly") {
    SyntheticSpec spec;
    spec.n_instances = 500;
    spec.seed = 12;
    SyntheticStreamSource source(spec, 0.3);
    CHECK(source.meta().n_instances == 500);
    CHECK(source.meta().missing_ratio > 0.2);
    CHECK(source.meta().missing_ratio < 0.4);
    std::vector<MultiViewChunk> first;
    while (auto c = source.read(64)) {
        CHECK_NOTHROW(c->validate());
        CHECK_NOTHROW(c->mask.validate());
        first.push_back(std::move(*c));
    }
    source.rewind();
    std::size_t i = 0;
    std::size_t present = 0;
    while (auto c = source.read(64)) {
        REQUIRE(i < first.size());
        CHECK(c->views[0] == first[i].views[0]);
        CHECK(c->mask == first[i].mask);
        present += static_cast<std::size_t>(c->mask.present_pairs());
        ++i;
    }
    CHECK(i == first.size());
    CHECK(1.0 - static_cast<double>(present) / 1000.0 == doctest::Approx(source.meta().missing_ratio));
    CHECK(source.labels().size() == 500);
}
