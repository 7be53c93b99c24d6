#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eignn/config.hpp"
#include "eignn/dataset.hpp"
#include "eignn/diagnostics.hpp"
#include "eignn/linalg.hpp"
#include "eignn/losses.hpp"
#include "eignn/mlp.hpp"
#include "eignn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

json format_versions() {
    return json{{"dataset", 1}, {"checkpoint", 1}, {"snapshots", 1}};
}

void write_manifest(const fs::path& dir, const std::string& command, const json& args,
                    const json* seed) {
    json m;
    m["tool"] = "eignn";
    m["version"] = kToolVersion;
    m["formats"] = format_versions();
    m["command"] = command;
    m["args"] = args;
    m["config_hash"] = eignn::fnv1a_hex(args.dump());
    if (seed) m["seed"] = *seed;
    std::ofstream os(dir / "manifest.json", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
    os << m.dump(2) << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::string data_path;
    std::string checkpoint_path;
    std::string out_dir;
    std::string run_dir;
    std::string theta_star_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string mode;
    double bin_width = 0.1;
    bool oracle_labels = false;
    std::size_t jobs = 1;
    std::size_t reps = 5;
    std::size_t bench_count = 100;
    std::size_t grid_size = 21;
    double grid_range = 1.0;
};

eignn::ExperimentConfig load_config(const CommonArgs& args) {
    eignn::ExperimentConfig cfg = eignn::load_experiment_config(args.config_path);
    if (args.seed_set) cfg.training.seed = args.seed;
    if (!args.mode.empty()) cfg.training.mode = eignn::mode_from(args.mode);
    return cfg;
}

void cmd_gen_data(const CommonArgs& args) {
    eignn::ExperimentConfig cfg = load_config(args);
    eignn::DatasetBundle bundle = eignn::generate_dataset(cfg.dataset);
    fs::create_directories(args.out_dir);
    eignn::save_dataset(bundle, (fs::path(args.out_dir) / "dataset.bin").string());
    json manifest_args = eignn::resolved_config_json(cfg);
    json seed = cfg.dataset.seed;
    write_manifest(args.out_dir, "gen-data", manifest_args, &seed);
}

void cmd_train(const CommonArgs& args) {
    eignn::ExperimentConfig cfg = load_config(args);
    eignn::DatasetBundle bundle = eignn::load_dataset(args.data_path);
    if (cfg.train_subsample > 0)
        bundle = eignn::subsample_train(bundle, cfg.train_subsample, cfg.training.seed);
    eignn::TrainResult result = eignn::train(cfg.training, bundle);

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    json manifest_args = eignn::resolved_config_json(cfg);
    manifest_args["data"] = args.data_path;
    json seed = cfg.training.seed;
    write_manifest(out, "train", manifest_args, &seed);
    eignn::save_checkpoint(result.model, (out / "checkpoint-final.bin").string());
    eignn::save_checkpoint(
        eignn::unflatten(result.model.dims(), result.log.best_params),
        (out / "checkpoint-best.bin").string());
    eignn::write_runlog_csv(result.log, (out / "runlog.csv").string());
    if (!result.log.snapshots.empty())
        eignn::save_snapshots(result.log.snapshots, result.model.dims(),
                              (out / "snapshots.bin").string());
    json timings;
    timings["train_seconds"] = result.log.train_seconds;
    timings["best_epoch"] = result.log.best_epoch;
    timings["best_val_mse"] = result.log.best_val_mse;
    timings["label_reads"] = result.log.label_reads;
    timings["mtl_picks"] = {{"train", result.log.mtl_train_picks},
                            {"c", result.log.mtl_c_picks},
                            {"s", result.log.mtl_s_picks}};
    std::ofstream os(out / "timings.json", std::ios::binary);
    os << timings.dump(2) << "\n";
}

void cmd_eval(const CommonArgs& args) {
    eignn::DatasetBundle bundle = eignn::load_dataset(args.data_path);
    if (bundle.test.empty()) throw std::runtime_error("eval: dataset has no test split");
    eignn::EvalReport report;
    if (args.oracle_labels) {
        std::vector<eignn::Prediction> preds;
        preds.reserve(bundle.test.size());
        for (const eignn::SampleRecord& rec : bundle.test)
            preds.push_back({rec.y, rec.b});
        report = eignn::evaluate_predictions(preds, bundle.test, args.bin_width);
    } else {
        eignn::MlpModel model = eignn::load_checkpoint(args.checkpoint_path);
        report = eignn::evaluate(model, bundle.test, args.bin_width);
    }
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    json manifest_args{{"checkpoint", args.checkpoint_path},
                       {"data", args.data_path},
                       {"bin_width", args.bin_width},
                       {"oracle_labels", args.oracle_labels}};
    write_manifest(out, "eval", manifest_args, nullptr);
    eignn::write_eval_csv(report, (out / "eval_summary.csv").string(),
                          (out / "eval_bins.csv").string());
}

void cmd_sweep(const CommonArgs& args) {
    eignn::ExperimentConfig cfg = load_config(args);
    eignn::DatasetBundle bundle = eignn::load_dataset(args.data_path);
    eignn::MultiRunResult result =
        eignn::multi_run(cfg.training, bundle, cfg.sweep_modes, cfg.sweep_seeds, cfg.sweep_sizes,
                         cfg.bin_width, args.jobs);
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    json manifest_args = eignn::resolved_config_json(cfg);
    manifest_args["data"] = args.data_path;
    write_manifest(out, "sweep", manifest_args, nullptr);
    eignn::write_sweep_csv(result, (out / "sweep.csv").string());
    if (!result.failures.empty()) {
        std::ofstream os(out / "failures.txt", std::ios::binary);
        for (const std::string& f : result.failures) os << f << "\n";
    }
}

void cmd_bench(const CommonArgs& args) {
    eignn::MlpModel model = eignn::load_checkpoint(args.checkpoint_path);
    eignn::DatasetBundle bundle = eignn::load_dataset(args.data_path);
    if (bundle.test.empty()) throw std::runtime_error("bench: dataset has no test split");
    const std::size_t count = std::min(args.bench_count, bundle.test.size());
    std::vector<eignn::DenseMatrix> matrices;
    matrices.reserve(count);
    const std::size_t d = std::size_t{1} << bundle.config.n;
    for (std::size_t i = 0; i < count; ++i) {
        eignn::DenseMatrix m(d, d);
        m.data = bundle.test[i].features;
        matrices.push_back(std::move(m));
    }
    auto rows = eignn::bench_solver(model, matrices, args.reps);
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    json manifest_args{{"checkpoint", args.checkpoint_path},
                       {"data", args.data_path},
                       {"repetitions", args.reps},
                       {"count", count}};
    write_manifest(out, "bench", manifest_args, nullptr);
    eignn::write_bench_csv(rows, (out / "bench.csv").string());
}

void cmd_diag(const CommonArgs& args) {
    eignn::ExperimentConfig cfg = load_config(args);
    eignn::DatasetBundle bundle = eignn::load_dataset(args.data_path);
    const fs::path run(args.run_dir);
    auto loaded = eignn::load_snapshots((run / "snapshots.bin").string());
    const std::vector<std::size_t> dims = std::move(loaded.first);
    const auto snapshots = std::move(loaded.second);
    if (snapshots.empty()) throw std::runtime_error("diag: run has no snapshots");
    const std::string star_path = args.theta_star_path.empty()
                                      ? (run / "checkpoint-final.bin").string()
                                      : args.theta_star_path;
    const eignn::DenseVector theta_star = eignn::load_checkpoint(star_path).params();
    if (theta_star.size() != eignn::MlpModel::param_count_for(dims))
        throw std::runtime_error("diag: checkpoint does not match snapshot architecture");

    const auto& train_cfg = cfg.training;
    const auto [lambda_c, lambda_s] = eignn::resolved_schedules(train_cfg);
    const std::vector<eignn::SampleRecord>& pool = train_cfg.mode == eignn::TrainMode::only_dtr
                                                       ? bundle.train
                                                       : bundle.unlabeled_pool();
    const std::size_t batch = std::min(
        train_cfg.batch_size == 0 ? bundle.train.size() : train_cfg.batch_size,
        std::min(bundle.train.size(), pool.size()));
    if (batch == 0) throw std::runtime_error("diag: dataset splits too small");

    auto forward_batches = [&](eignn::Tape& tape, const eignn::MlpModel& model,
                               eignn::TapeBatch& lab, eignn::TapeBatch& unlab) {
        eignn::MlpTapeBinding binding(tape, model);
        for (std::size_t i = 0; i < batch; ++i) {
            const eignn::SampleRecord& rec = bundle.train[i];
            lab.push_back({&rec, binding.forward(rec.features.data(), rec.features.size())});
        }
        for (std::size_t i = 0; i < batch; ++i) {
            const eignn::SampleRecord& rec = pool[i];
            unlab.push_back({&rec, binding.forward(rec.features.data(), rec.features.size())});
        }
        return binding;
    };

    enum class Term { train, c, s };
    auto gradient_of = [&](Term term) {
        return [&, term](const eignn::DenseVector& theta) {
            eignn::MlpModel model = eignn::unflatten(dims, theta);
            eignn::Tape tape;
            eignn::TapeBatch lab, unlab;
            eignn::MlpTapeBinding binding = forward_batches(tape, model, lab, unlab);
            eignn::TapeBatch pg = lab;
            pg.insert(pg.end(), unlab.begin(), unlab.end());
            eignn::Tape::Var loss{};
            switch (term) {
                case Term::train: loss = eignn::train_mse(tape, lab); break;
                case Term::c: loss = eignn::c_loss(tape, pg); break;
                case Term::s: loss = eignn::s_loss(tape, pg, train_cfg.direction); break;
            }
            tape.backward(loss);
            eignn::DenseVector g;
            binding.gradient(g);
            return g;
        };
    };
    std::vector<eignn::LossTerm> terms;
    if (eignn::mode_uses_train_loss(train_cfg.mode))
        terms.push_back({"train_mse", gradient_of(Term::train)});
    if (eignn::mode_uses_c_loss(train_cfg.mode))
        terms.push_back({"c_loss", gradient_of(Term::c)});
    if (eignn::mode_uses_s_loss(train_cfg.mode))
        terms.push_back({"s_loss", gradient_of(Term::s)});

    auto trace = eignn::gradient_projection(snapshots, theta_star, terms);

    const double t_final = static_cast<double>(train_cfg.epochs - 1);
    auto loss_fn = [&](const eignn::DenseVector& theta) {
        eignn::MlpModel model = eignn::unflatten(dims, theta);
        eignn::Tape tape;
        eignn::TapeBatch lab, unlab;
        forward_batches(tape, model, lab, unlab);
        eignn::Tape::Var obj =
            eignn::combined_objective(tape, t_final, lab, unlab, lambda_c, lambda_s,
                                      train_cfg.direction, train_cfg.mode, train_cfg.train_loss);
        return tape.value(obj);
    };
    eignn::LandscapeGrid grid = eignn::landscape_slice(theta_star, loss_fn, args.grid_range,
                                                       args.grid_size, train_cfg.seed, dims);

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    json manifest_args = eignn::resolved_config_json(cfg);
    manifest_args["run_dir"] = args.run_dir;
    manifest_args["data"] = args.data_path;
    manifest_args["grid_size"] = args.grid_size;
    manifest_args["grid_range"] = args.grid_range;
    json seed = train_cfg.seed;
    write_manifest(out, "diag", manifest_args, &seed);
    eignn::write_projection_csv(trace, (out / "projections.csv").string());
    eignn::write_landscape_csv(grid, (out / "landscape.csv").string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"train and analyze eigenpair prediction networks"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    CommonArgs args;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a labeled spin-chain dataset");
    gen->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    gen->add_option("--out", args.out_dir, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "train one model on a dataset");
    train->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    train->add_option("--data", args.data_path, "dataset file")->required();
    train->add_option("--out", args.out_dir, "output directory")->required();
    train->add_option("--seed", args.seed, "override training seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    train->add_option("--mode", args.mode, "override training mode");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    eval->add_option("--checkpoint", args.checkpoint_path, "model checkpoint");
    eval->add_option("--data", args.data_path, "dataset file")->required();
    eval->add_option("--out", args.out_dir, "output directory")->required();
    eval->add_option("--bin-width", args.bin_width, "field-strength bin width");
    eval->add_flag("--oracle-labels", args.oracle_labels,
                   "score the stored labels against themselves (fixture)");

    CLI::App* sweep = app.add_subcommand("sweep", "multi-seed / multi-size training sweep");
    sweep->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    sweep->add_option("--data", args.data_path, "dataset file")->required();
    sweep->add_option("--out", args.out_dir, "output directory")->required();
    sweep->add_option("--jobs", args.jobs, "parallel training jobs")->check(CLI::PositiveNumber);

    CLI::App* bench = app.add_subcommand("bench", "time the solver against the network");
    bench->add_option("--checkpoint", args.checkpoint_path, "model checkpoint")->required();
    bench->add_option("--data", args.data_path, "dataset file")->required();
    bench->add_option("--out", args.out_dir, "output directory")->required();
    bench->add_option("--reps", args.reps, "timing repetitions")->check(CLI::PositiveNumber);
    bench->add_option("--count", args.bench_count, "matrices to benchmark")
        ->check(CLI::PositiveNumber);

    CLI::App* diag = app.add_subcommand("diag", "gradient projections and a landscape slice");
    diag->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    diag->add_option("--run-dir", args.run_dir, "training run directory with snapshots")
        ->required();
    diag->add_option("--data", args.data_path, "dataset file")->required();
    diag->add_option("--out", args.out_dir, "output directory (default: run dir)");
    diag->add_option("--theta-star", args.theta_star_path,
                     "external converged checkpoint (default: the run's final)");
    diag->add_option("--grid-size", args.grid_size, "odd landscape grid size")
        ->check(CLI::PositiveNumber);
    diag->add_option("--grid-range", args.grid_range, "landscape half-range");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) {
            cmd_gen_data(args);
        } else if (train->parsed()) {
            cmd_train(args);
        } else if (eval->parsed()) {
            if (!args.oracle_labels && args.checkpoint_path.empty())
                throw eignn::ConfigError("eval: --checkpoint required unless --oracle-labels");
            cmd_eval(args);
        } else if (sweep->parsed()) {
            cmd_sweep(args);
        } else if (bench->parsed()) {
            cmd_bench(args);
        } else if (diag->parsed()) {
            if (args.out_dir.empty()) args.out_dir = args.run_dir;
            cmd_diag(args);
        }
    } catch (const eignn::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
