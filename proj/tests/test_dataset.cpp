#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "eignn/dataset.hpp"
#include "test_util.hpp"

using namespace eignn;

namespace {

DatasetConfig small_config() {
    DatasetConfig cfg;
    cfg.n = 4;
    cfg.train_size = 40;
    cfg.test_size = 20;
    cfg.validation_size = 10;
    cfg.seed = 123;
    return cfg;
}

bool records_equal(const SampleRecord& a, const SampleRecord& b) {
    return a.spec.n == b.spec.n && a.spec.b_x == b.spec.b_x && a.spec.b_z == b.spec.b_z &&
           a.features == b.features && a.y == b.y && a.b == b.b;
}

bool bundles_equal(const DatasetBundle& a, const DatasetBundle& b) {
    if (a.train.size() != b.train.size() || a.validation.size() != b.validation.size() ||
        a.test.size() != b.test.size())
        return false;
    for (std::size_t i = 0; i < a.train.size(); ++i)
        if (!records_equal(a.train[i], b.train[i])) return false;
    for (std::size_t i = 0; i < a.validation.size(); ++i)
        if (!records_equal(a.validation[i], b.validation[i])) return false;
    for (std::size_t i = 0; i < a.test.size(); ++i)
        if (!records_equal(a.test[i], b.test[i])) return false;
    return true;
}

std::multiset<double> bx_values(const std::vector<SampleRecord>& split) {
    std::multiset<double> out;
    for (const auto& rec : split) out.insert(rec.spec.b_x);
    return out;
}

}  // namespace

TEST_CASE("generate_dataset: shapes and split sizes", "[dataset]") {
    const DatasetBundle bundle = generate_dataset(small_config());
    REQUIRE(bundle.train.size() == 30);
    REQUIRE(bundle.validation.size() == 10);
    REQUIRE(bundle.test.size() == 20);
    REQUIRE(&bundle.unlabeled_pool() == &bundle.test);

    const std::size_t d = 16;
    for (const auto* split : {&bundle.train, &bundle.validation, &bundle.test})
        for (const auto& rec : *split) {
            REQUIRE(rec.features.size() == d * d);
            REQUIRE(rec.y.size() == d);
            REQUIRE(rec.spec.n == 4);
            REQUIRE(rec.spec.b_z == 0.01);
        }
}

TEST_CASE("generate_dataset: field strengths honor the per-split ranges", "[dataset]") {
    const DatasetBundle bundle = generate_dataset(small_config());
    for (const auto* split : {&bundle.train, &bundle.validation})
        for (const auto& rec : *split) {
            REQUIRE(rec.spec.b_x >= 0.0);
            REQUIRE(rec.spec.b_x < 0.5);
        }
    for (const auto& rec : bundle.test) {
        REQUIRE(rec.spec.b_x >= 0.0);
        REQUIRE(rec.spec.b_x < 2.0);
    }
}

TEST_CASE("generate_dataset: labels solve the eigenproblem of the stored features", "[dataset]") {
    const DatasetBundle bundle = generate_dataset(small_config());
    auto check = [](const SampleRecord& rec) {
        const std::size_t d = rec.y.size();
        DenseMatrix h(d, d);
        h.data = rec.features;
        REQUIRE(std::abs(norm2(rec.y) - 1.0) < 1e-12);
        const DenseVector hy = matvec(h, rec.y);
        for (std::size_t i = 0; i < d; ++i) REQUIRE(std::abs(hy[i] - rec.b * rec.y[i]) < 1e-8);
        // Smallest eigenvalue: no Rayleigh quotient of a basis vector may undercut it.
        for (std::size_t i = 0; i < d; ++i) REQUIRE(rec.b <= h(i, i) + 1e-8);
    };
    for (std::size_t i = 0; i < 5; ++i) {
        check(bundle.train[i]);
        check(bundle.validation[i]);
        check(bundle.test[i]);
    }
}

TEST_CASE("generate_dataset: deterministic in the seed", "[dataset]") {
    const DatasetBundle a = generate_dataset(small_config());
    const DatasetBundle b = generate_dataset(small_config());
    REQUIRE(bundles_equal(a, b));

    DatasetConfig other = small_config();
    other.seed = 124;
    const DatasetBundle c = generate_dataset(other);
    REQUIRE_FALSE(bundles_equal(a, c));
}

TEST_CASE("generate_dataset: validation is carved out of the train pool", "[dataset]") {
    DatasetConfig cfg = small_config();
    const DatasetBundle bundle = generate_dataset(cfg);

    DatasetConfig no_val = cfg;
    no_val.validation_size = 0;
    const DatasetBundle pool = generate_dataset(no_val);
    REQUIRE(pool.train.size() == cfg.train_size);
    REQUIRE(pool.validation.empty());

    // train + validation of the split bundle is a permutation of the full pool.
    std::multiset<double> split_bx = bx_values(bundle.train);
    const std::multiset<double> val_bx = bx_values(bundle.validation);
    split_bx.insert(val_bx.begin(), val_bx.end());
    REQUIRE(split_bx == bx_values(pool.train));

    // Continuous draws make collisions measure-zero, so disjointness is testable.
    for (double v : val_bx) REQUIRE(bx_values(bundle.train).count(v) == 0);
}

TEST_CASE("generate_dataset: rejects inverted ranges and oversized validation", "[dataset]") {
    DatasetConfig bad = small_config();
    bad.train_bx_range = {0.5, 0.0};
    REQUIRE_THROWS_AS(generate_dataset(bad), std::invalid_argument);

    DatasetConfig bad2 = small_config();
    bad2.validation_size = bad2.train_size + 1;
    REQUIRE_THROWS_AS(generate_dataset(bad2), std::invalid_argument);
}

TEST_CASE("subsample_train: deterministic draw without replacement", "[dataset]") {
    const DatasetBundle bundle = generate_dataset(small_config());

    const DatasetBundle s1 = subsample_train(bundle, 12, 7);
    const DatasetBundle s2 = subsample_train(bundle, 12, 7);
    REQUIRE(bundles_equal(s1, s2));
    REQUIRE(s1.train.size() == 12);
    REQUIRE(bundles_equal(DatasetBundle{s1.config, s1.train, bundle.validation, bundle.test},
                          s1));

    const DatasetBundle s3 = subsample_train(bundle, 12, 8);
    REQUIRE_FALSE(bundles_equal(s1, s3));

    // Every kept record exists in the source train split, with no duplicates.
    const std::multiset<double> src = bx_values(bundle.train);
    const std::multiset<double> kept = bx_values(s1.train);
    for (double v : kept) {
        REQUIRE(src.count(v) == 1);
        REQUIRE(kept.count(v) == 1);
    }
}

TEST_CASE("subsample_train: full-size request is a permutation; oversize throws", "[dataset]") {
    const DatasetBundle bundle = generate_dataset(small_config());
    const DatasetBundle full = subsample_train(bundle, bundle.train.size(), 3);
    REQUIRE(bx_values(full.train) == bx_values(bundle.train));

    const DatasetBundle one = subsample_train(bundle, 1, 3);
    REQUIRE(one.train.size() == 1);

    REQUIRE_THROWS_AS(subsample_train(bundle, bundle.train.size() + 1, 3), std::invalid_argument);
}

TEST_CASE("save/load: bit-exact round trip", "[dataset]") {
    const DatasetBundle bundle = generate_dataset(small_config());
    const std::string path = scratch_file("dataset_roundtrip.bin");
    save_dataset(bundle, path);
    const DatasetBundle loaded = load_dataset(path);
    REQUIRE(bundles_equal(bundle, loaded));
    REQUIRE(loaded.config.n == bundle.config.n);
    REQUIRE(loaded.config.seed == bundle.config.seed);
    REQUIRE(loaded.config.b_z == bundle.config.b_z);
    REQUIRE(loaded.config.train_bx_range == bundle.config.train_bx_range);
    REQUIRE(loaded.config.test_bx_range == bundle.config.test_bx_range);
    REQUIRE(loaded.config.train_size == bundle.config.train_size);
    REQUIRE(loaded.config.validation_size == bundle.config.validation_size);
    REQUIRE(loaded.config.test_size == bundle.config.test_size);
}

TEST_CASE("save/load: subsampled bundle keeps pool config but actual counts", "[dataset]") {
    const DatasetBundle bundle = generate_dataset(small_config());
    const DatasetBundle sub = subsample_train(bundle, 5, 7);
    const std::string path = scratch_file("dataset_sub.bin");
    save_dataset(sub, path);
    const DatasetBundle loaded = load_dataset(path);
    REQUIRE(bundles_equal(sub, loaded));
    REQUIRE(loaded.train.size() == 5);
    REQUIRE(loaded.config.train_size == 40);
}

TEST_CASE("load_dataset: explicit errors for bad files", "[dataset]") {
    REQUIRE_THROWS_WITH(load_dataset(scratch_file("missing.bin")),
                        Catch::Matchers::ContainsSubstring("cannot open"));

    const std::string junk = scratch_file("junk.bin");
    std::ofstream(junk) << "not-a-dataset v1\nend-header\n";
    REQUIRE_THROWS_WITH(load_dataset(junk), Catch::Matchers::ContainsSubstring("not a dataset"));

    const std::string wrong = scratch_file("wrong_version.bin");
    std::ofstream(wrong) << "eignn-dataset v2\nend-header\n";
    REQUIRE_THROWS_WITH(load_dataset(wrong),
                        Catch::Matchers::ContainsSubstring("unsupported format version"));

    DatasetConfig cfg = small_config();
    cfg.train_size = 4;
    cfg.validation_size = 1;
    cfg.test_size = 2;
    const std::string path = scratch_file("truncated.bin");
    save_dataset(generate_dataset(cfg), path);
    const auto full_size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full_size - 64);
    REQUIRE_THROWS_WITH(load_dataset(path),
                        Catch::Matchers::ContainsSubstring("truncated payload"));
}
