#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eignn/io.hpp"
#include "eignn/linalg.hpp"
#include "eignn/rng.hpp"

namespace eignn {

struct SpinChainSpec {
    std::size_t n = 4;
    double b_x = 0.0;
    double b_z = 0.01;
};

struct SampleRecord {
    SpinChainSpec spec;
    DenseVector features;  // flattened row-major Hamiltonian, length d*d
    DenseVector y;         // extreme eigenvector, length d
    double b = 0.0;        // extreme eigenvalue
};

struct DatasetConfig {
    std::size_t n = 4;
    std::size_t train_size = 20000;
    std::size_t test_size = 2000;
    std::size_t validation_size = 1000;
    std::pair<double, double> train_bx_range{0.0, 0.5};
    std::pair<double, double> test_bx_range{0.0, 2.0};
    double b_z = 0.01;
    std::uint64_t seed = 0;
};

// Train/validation/test splits are disjoint; validation is carved out of the
// generated train pool. The test split doubles as the unlabeled pool: training
// code may touch its features but never its labels.
struct DatasetBundle {
    DatasetConfig config;
    std::vector<SampleRecord> train;
    std::vector<SampleRecord> validation;
    std::vector<SampleRecord> test;

    const std::vector<SampleRecord>& unlabeled_pool() const { return test; }
};

namespace detail {

inline SampleRecord make_sample(std::size_t n, double b_x, double b_z) {
    SampleRecord rec;
    rec.spec = {n, b_x, b_z};
    const DenseMatrix h = ising_hamiltonian(n, b_x, b_z);
    rec.features = h.data;
    auto [value, vec] = ground_state(h, SpectrumDirection::smallest);
    rec.b = value;
    rec.y = std::move(vec);
    return rec;
}

}  // namespace detail

inline DatasetBundle generate_dataset(const DatasetConfig& cfg) {
    if (cfg.train_bx_range.first > cfg.train_bx_range.second ||
        cfg.test_bx_range.first > cfg.test_bx_range.second)
        throw std::invalid_argument("generate_dataset: empty B_x range");
    if (cfg.validation_size > cfg.train_size)
        throw std::invalid_argument("generate_dataset: validation_size exceeds train pool");

    DatasetBundle bundle;
    bundle.config = cfg;

    std::vector<SampleRecord> pool;
    pool.reserve(cfg.train_size);
    for (std::size_t i = 0; i < cfg.train_size; ++i) {
        Rng rng = Rng::substream(cfg.seed, stream::train_sample, i);
        const double b_x = rng.uniform(cfg.train_bx_range.first, cfg.train_bx_range.second);
        pool.push_back(detail::make_sample(cfg.n, b_x, cfg.b_z));
    }
    bundle.test.reserve(cfg.test_size);
    for (std::size_t i = 0; i < cfg.test_size; ++i) {
        Rng rng = Rng::substream(cfg.seed, stream::test_sample, i);
        const double b_x = rng.uniform(cfg.test_bx_range.first, cfg.test_bx_range.second);
        bundle.test.push_back(detail::make_sample(cfg.n, b_x, cfg.b_z));
    }

    // Validation = the first validation_size entries of a seeded permutation
    // of pool indices; train keeps the rest in original order.
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng pick = Rng::substream(cfg.seed, stream::validation_pick);
    pick.shuffle(order);
    std::vector<bool> held(pool.size(), false);
    for (std::size_t i = 0; i < cfg.validation_size; ++i) held[order[i]] = true;
    bundle.validation.reserve(cfg.validation_size);
    bundle.train.reserve(pool.size() - cfg.validation_size);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (held[i])
            bundle.validation.push_back(std::move(pool[i]));
        else
            bundle.train.push_back(std::move(pool[i]));
    }
    return bundle;
}

inline DatasetBundle subsample_train(const DatasetBundle& bundle, std::size_t n_keep,
                                     std::uint64_t seed) {
    if (n_keep > bundle.train.size())
        throw std::invalid_argument("subsample_train: requested " + std::to_string(n_keep) +
                                    " of " + std::to_string(bundle.train.size()));
    std::vector<std::size_t> order(bundle.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::substream(seed, stream::subsample);
    rng.shuffle(order);
    DatasetBundle out;
    out.config = bundle.config;
    out.validation = bundle.validation;
    out.test = bundle.test;
    out.train.reserve(n_keep);
    for (std::size_t i = 0; i < n_keep; ++i) out.train.push_back(bundle.train[order[i]]);
    return out;
}

namespace detail {

constexpr const char* kDatasetMagic = "eignn-dataset";
constexpr int kDatasetVersion = 1;

inline void write_split(std::ostream& os, const std::vector<SampleRecord>& split) {
    for (const SampleRecord& rec : split) {
        write_f64(os, rec.spec.b_x);
        write_f64(os, rec.spec.b_z);
        write_f64_span(os, rec.features.data(), rec.features.size());
        write_f64_span(os, rec.y.data(), rec.y.size());
        write_f64(os, rec.b);
    }
}

inline void read_split(std::istream& is, std::vector<SampleRecord>& split, std::size_t count,
                       std::size_t n) {
    const std::size_t d = std::size_t{1} << n;
    split.resize(count);
    for (SampleRecord& rec : split) {
        rec.spec.n = n;
        rec.spec.b_x = read_f64(is);
        rec.spec.b_z = read_f64(is);
        rec.features.resize(d * d);
        read_f64_span(is, rec.features.data(), rec.features.size());
        rec.y.resize(d);
        read_f64_span(is, rec.y.data(), rec.y.size());
        rec.b = read_f64(is);
    }
}

}  // namespace detail

inline void save_dataset(const DatasetBundle& bundle, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
    const DatasetConfig& c = bundle.config;
    os << detail::kDatasetMagic << " v" << detail::kDatasetVersion << "\n";
    os << "n " << c.n << "\n";
    os << "seed " << c.seed << "\n";
    os << "b_z " << fmt_double(c.b_z) << "\n";
    os << "train_bx " << fmt_double(c.train_bx_range.first) << " "
       << fmt_double(c.train_bx_range.second) << "\n";
    os << "test_bx " << fmt_double(c.test_bx_range.first) << " "
       << fmt_double(c.test_bx_range.second) << "\n";
    os << "pool " << c.train_size << " " << c.validation_size << " " << c.test_size << "\n";
    os << "counts " << bundle.train.size() << " " << bundle.validation.size() << " "
       << bundle.test.size() << "\n";
    os << "end-header\n";
    detail::write_split(os, bundle.train);
    detail::write_split(os, bundle.validation);
    detail::write_split(os, bundle.test);
    if (!os) throw std::runtime_error("save_dataset: write failure on " + path);
}

inline DatasetBundle load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
    std::istringstream magic(read_header_line(is));
    std::string name, version;
    magic >> name >> version;
    if (name != detail::kDatasetMagic)
        throw std::runtime_error("load_dataset: not a dataset file: " + path);
    if (version != "v" + std::to_string(detail::kDatasetVersion))
        throw std::runtime_error("load_dataset: unsupported format version '" + version + "'");

    DatasetBundle bundle;
    DatasetConfig& c = bundle.config;
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    {
        std::istringstream line(read_header_line(is));
        expect_token(line, "n");
        line >> c.n;
    }
    {
        std::istringstream line(read_header_line(is));
        expect_token(line, "seed");
        line >> c.seed;
    }
    {
        std::istringstream line(read_header_line(is));
        expect_token(line, "b_z");
        line >> c.b_z;
    }
    {
        std::istringstream line(read_header_line(is));
        expect_token(line, "train_bx");
        line >> c.train_bx_range.first >> c.train_bx_range.second;
    }
    {
        std::istringstream line(read_header_line(is));
        expect_token(line, "test_bx");
        line >> c.test_bx_range.first >> c.test_bx_range.second;
    }
    {
        std::istringstream line(read_header_line(is));
        expect_token(line, "pool");
        line >> c.train_size >> c.validation_size >> c.test_size;
    }
    {
        std::istringstream line(read_header_line(is));
        expect_token(line, "counts");
        line >> n_train >> n_val >> n_test;
    }
    if (read_header_line(is) != "end-header")
        throw std::runtime_error("load_dataset: malformed header in " + path);
    try {
        detail::read_split(is, bundle.train, n_train, c.n);
        detail::read_split(is, bundle.validation, n_val, c.n);
        detail::read_split(is, bundle.test, n_test, c.n);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("load_dataset: truncated payload in " + path);
    }
    return bundle;
}

}  // namespace eignn
