#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "eignn/adamax.hpp"
#include "eignn/dataset.hpp"
#include "eignn/io.hpp"
#include "eignn/linalg.hpp"
#include "eignn/losses.hpp"
#include "eignn/mlp.hpp"
#include "eignn/rng.hpp"
#include "eignn/schedules.hpp"
#include "eignn/tape.hpp"

namespace eignn {

inline const char* mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::cophy: return "cophy";
        case TrainMode::black_box: return "black_box";
        case TrainMode::pgnn_analogue: return "pgnn_analogue";
        case TrainMode::pinn_analogue: return "pinn_analogue";
        case TrainMode::mtl_pgnn: return "mtl_pgnn";
        case TrainMode::only_dtr: return "only_dtr";
        case TrainMode::wo_sloss: return "wo_sloss";
        case TrainMode::label_free: return "label_free";
    }
    return "unknown";
}

inline TrainMode mode_from(const std::string& name) {
    if (name == "cophy") return TrainMode::cophy;
    if (name == "black_box") return TrainMode::black_box;
    if (name == "pgnn_analogue") return TrainMode::pgnn_analogue;
    if (name == "pinn_analogue") return TrainMode::pinn_analogue;
    if (name == "mtl_pgnn") return TrainMode::mtl_pgnn;
    if (name == "only_dtr") return TrainMode::only_dtr;
    if (name == "wo_sloss") return TrainMode::wo_sloss;
    if (name == "label_free") return TrainMode::label_free;
    throw std::invalid_argument("unknown training mode '" + name + "'");
}

inline const char* direction_name(SpectrumDirection d) {
    return d == SpectrumDirection::smallest ? "smallest" : "largest";
}

inline SpectrumDirection direction_from(const std::string& name) {
    if (name == "smallest") return SpectrumDirection::smallest;
    if (name == "largest") return SpectrumDirection::largest;
    throw std::invalid_argument("unknown spectrum direction '" + name + "'");
}

struct TrainingConfig {
    std::vector<std::size_t> dims;  // empty: d*d -> 100 x4 -> d+1, from the dataset
    std::size_t epochs = 500;
    std::size_t batch_size = 8;  // 0 = full batch
    AdamaxConfig optimizer;
    ScheduleSpec lambda_c = schedule_preset("cold-start-c");
    ScheduleSpec lambda_s = schedule_preset("annealing-s");
    SpectrumDirection direction = SpectrumDirection::smallest;
    TrainMode mode = TrainMode::cophy;
    TrainLossKind train_loss = TrainLossKind::mse;
    std::uint64_t seed = 0;
    std::size_t snapshot_stride = 0;  // 0 = no snapshots; k = every k-th epoch plus the last
};

struct EpochRow {
    std::size_t epoch = 0;
    double objective = 0, train_mse = 0, val_mse = 0, test_mse = 0;
    double c_loss = 0, s_loss = 0, lambda_c = 0, lambda_s = 0;
    std::uint64_t exp_clamps = 0;  // clamp events in this epoch's optimization steps
};

struct RunLog {
    std::vector<EpochRow> rows;
    std::vector<std::pair<std::size_t, DenseVector>> snapshots;
    std::uint64_t label_reads = 0;  // label accesses on the optimization path only
    std::uint64_t mtl_train_picks = 0, mtl_c_picks = 0, mtl_s_picks = 0;
    std::size_t best_epoch = 0;
    double best_val_mse = std::numeric_limits<double>::infinity();
    DenseVector best_params;
    double train_seconds = 0.0;
};

struct TrainResult {
    MlpModel model;  // final epoch; best-validation params live in log.best_params
    RunLog log;
};

// The effective weight schedules for a mode: constant-weight baselines replace
// whatever ramps were configured, the supervised baseline zeroes both.
inline std::pair<ScheduleSpec, ScheduleSpec> resolved_schedules(const TrainingConfig& cfg) {
    switch (cfg.mode) {
        case TrainMode::black_box:
            return {schedule_preset("zero"), schedule_preset("zero")};
        case TrainMode::pgnn_analogue:
        case TrainMode::pinn_analogue:
        case TrainMode::mtl_pgnn: {
            ScheduleSpec c = cfg.lambda_c.kind == ScheduleKind::constant
                                 ? cfg.lambda_c
                                 : schedule_preset("constant-c");
            ScheduleSpec s = cfg.lambda_s.kind == ScheduleKind::constant
                                 ? cfg.lambda_s
                                 : schedule_preset("constant-s");
            return {c, s};
        }
        case TrainMode::wo_sloss:
            return {cfg.lambda_c, schedule_preset("zero")};
        default:
            return {cfg.lambda_c, cfg.lambda_s};
    }
}

inline std::vector<std::size_t> default_dims(std::size_t feature_len, std::size_t d) {
    return {feature_len, 100, 100, 100, 100, d + 1};
}

// Mean over a split of ||y_hat - y||^2 + (b_hat - b)^2; NaN on an empty split.
inline double mse_metric(const MlpModel& model, const std::vector<SampleRecord>& split) {
    if (split.empty()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    for (const SampleRecord& rec : split) {
        const Prediction p = model.predict(rec.features);
        double e = 0.0;
        for (std::size_t j = 0; j < rec.y.size(); ++j) {
            const double dj = p.y_hat[j] - rec.y[j];
            e += dj * dj;
        }
        const double db = p.b_hat - rec.b;
        acc += e + db * db;
    }
    return acc / static_cast<double>(split.size());
}

namespace detail {

struct PgSums {
    double c_sum = 0.0, s_sum = 0.0;
    std::size_t count = 0;
};

// Tape-free physics-loss sums over a split; only features are touched.
inline PgSums pg_sums(const MlpModel& model, const std::vector<SampleRecord>& split,
                      SpectrumDirection direction) {
    PgSums out;
    DenseVector r;
    for (const SampleRecord& rec : split) {
        const Prediction p = model.predict(rec.features);
        const std::size_t d = p.y_hat.size();
        r.assign(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            const double* row = rec.features.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * p.y_hat[j];
            r[i] = acc - p.b_hat * p.y_hat[i];
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            num += r[i] * r[i];
            den += p.y_hat[i] * p.y_hat[i];
        }
        out.c_sum += den < 1e-12 ? std::numeric_limits<double>::infinity() : num / den;
        const double arg = direction == SpectrumDirection::smallest ? p.b_hat : -p.b_hat;
        out.s_sum += std::exp(std::min(arg, Tape::kExpClamp));
        ++out.count;
    }
    return out;
}

}  // namespace detail

inline TrainResult train(const TrainingConfig& cfg_in, const DatasetBundle& bundle) {
    TrainingConfig cfg = cfg_in;
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (bundle.train.empty()) throw std::invalid_argument("train: empty train split");

    const std::size_t d = bundle.train.front().y.size();
    const std::size_t feature_len = bundle.train.front().features.size();
    if (cfg.dims.empty()) cfg.dims = default_dims(feature_len, d);
    if (cfg.dims.front() != feature_len || cfg.dims.back() != d + 1)
        throw std::invalid_argument("train: architecture does not match the dataset");

    const auto [lambda_c, lambda_s] = resolved_schedules(cfg);
    validate(lambda_c);
    validate(lambda_s);
    const bool with_train = mode_uses_train_loss(cfg.mode);
    const bool with_c = mode_uses_c_loss(cfg.mode);
    const bool with_s = mode_uses_s_loss(cfg.mode);
    const std::vector<SampleRecord>& pg_pool =
        cfg.mode == TrainMode::only_dtr ? bundle.train : bundle.unlabeled_pool();
    if ((with_c || with_s) && pg_pool.empty())
        throw std::invalid_argument("train: physics pool is empty");

    MlpModel model = MlpModel::glorot_init(cfg.dims, cfg.seed);
    Adamax opt(model.param_count(), cfg.optimizer);
    TrainResult result;
    RunLog& log = result.log;

    Tape tape;
    DenseVector grad;
    std::vector<std::size_t> order(bundle.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto t_start = std::chrono::steady_clock::now();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double t = static_cast<double>(epoch);
        const double wc = weight_at(lambda_c, t);
        const double ws = weight_at(lambda_s, t);

        Rng shuffle_rng = Rng::substream(cfg.seed, stream::shuffle, epoch);
        shuffle_rng.shuffle(order);
        Rng unlab_rng = Rng::substream(cfg.seed, stream::unlabeled_draw, epoch);
        Rng mtl_rng = Rng::substream(cfg.seed, stream::mtl_pick, epoch);

        const std::size_t bs = cfg.batch_size == 0 ? order.size() : cfg.batch_size;
        std::uint64_t epoch_clamps = 0;
        for (std::size_t start = 0, step = 0; start < order.size(); start += bs, ++step) {
            const std::size_t stop = std::min(start + bs, order.size());
            tape.reset();
            MlpTapeBinding binding(tape, model);

            TapeBatch labeled;
            labeled.reserve(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const SampleRecord& rec = bundle.train[order[k]];
                labeled.push_back(
                    {&rec, binding.forward(rec.features.data(), rec.features.size())});
            }
            TapeBatch unlabeled;
            if (with_c || with_s) {
                unlabeled.reserve(labeled.size());
                for (std::size_t k = 0; k < labeled.size(); ++k) {
                    const SampleRecord& rec = pg_pool[unlab_rng.index(pg_pool.size())];
                    unlabeled.push_back(
                        {&rec, binding.forward(rec.features.data(), rec.features.size())});
                }
            }

            Tape::Var objective{};
            if (cfg.mode == TrainMode::mtl_pgnn) {
                TapeBatch pool = labeled;
                pool.insert(pool.end(), unlabeled.begin(), unlabeled.end());
                switch (mtl_rng.index(3)) {
                    case 0:
                        ++log.mtl_train_picks;
                        objective = cfg.train_loss == TrainLossKind::mse
                                        ? train_mse(tape, labeled, &log.label_reads)
                                        : l1_train_loss(tape, labeled, &log.label_reads);
                        break;
                    case 1:
                        ++log.mtl_c_picks;
                        objective = tape.scale(c_loss(tape, pool), wc);
                        break;
                    default:
                        ++log.mtl_s_picks;
                        objective = tape.scale(s_loss(tape, pool, cfg.direction), ws);
                        break;
                }
            } else {
                objective = combined_objective(tape, t, labeled, unlabeled, lambda_c, lambda_s,
                                               cfg.direction, cfg.mode, cfg.train_loss,
                                               &log.label_reads);
            }

            const double value = tape.value(objective);
            if (!std::isfinite(value))
                throw std::runtime_error("train: non-finite objective at epoch " +
                                         std::to_string(epoch) + ", step " +
                                         std::to_string(step));
            tape.backward(objective);
            binding.gradient(grad);
            opt.step(model.params(), grad);
            epoch_clamps += tape.exp_clamp_count();
        }

        EpochRow row;
        row.epoch = epoch;
        row.train_mse = mse_metric(model, bundle.train);
        row.val_mse = mse_metric(model, bundle.validation);
        row.test_mse = mse_metric(model, bundle.test);
        const detail::PgSums lab = detail::pg_sums(model, bundle.train, cfg.direction);
        const detail::PgSums unlab = detail::pg_sums(model, pg_pool, cfg.direction);
        const double n_pg = static_cast<double>(lab.count + unlab.count);
        row.c_loss = (lab.c_sum + unlab.c_sum) / n_pg;
        row.s_loss = (lab.s_sum + unlab.s_sum) / n_pg;
        row.lambda_c = wc;
        row.lambda_s = ws;
        row.exp_clamps = epoch_clamps;
        if (with_train) row.objective = row.train_mse;
        if (with_c) row.objective += wc * row.c_loss;
        if (with_s) row.objective += ws * row.s_loss;
        log.rows.push_back(row);

        if (cfg.snapshot_stride > 0 &&
            (epoch % cfg.snapshot_stride == 0 || epoch + 1 == cfg.epochs))
            log.snapshots.emplace_back(epoch, model.params());
        if (row.val_mse < log.best_val_mse) {
            log.best_val_mse = row.val_mse;
            log.best_epoch = epoch;
            log.best_params = model.params();
        }
    }
    log.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (log.best_params.empty()) {
        log.best_params = model.params();
        log.best_epoch = cfg.epochs - 1;
        log.best_val_mse = std::numeric_limits<double>::quiet_NaN();
    }
    result.model = std::move(model);
    return result;
}

struct BinStat {
    double lo = 0, hi = 0;
    std::size_t count = 0;
    double mean_cos = 0;
};

struct EvalReport {
    double mse = 0;
    double mean_cosine = 0;
    double bin_width = 0.1;
    std::vector<BinStat> bins;
};

// Metrics from externally supplied predictions; the seam lets fixtures feed
// oracle labels straight through.
inline EvalReport evaluate_predictions(const std::vector<Prediction>& preds,
                                       const std::vector<SampleRecord>& split, double bin_width) {
    if (split.empty()) throw std::invalid_argument("evaluate: empty split");
    if (preds.size() != split.size())
        throw std::invalid_argument("evaluate: prediction/split size mismatch");
    if (!(bin_width > 0)) throw std::invalid_argument("evaluate: bin width must be positive");

    EvalReport report;
    report.bin_width = bin_width;
    double min_bx = split.front().spec.b_x, max_bx = min_bx;
    for (const SampleRecord& rec : split) {
        min_bx = std::min(min_bx, rec.spec.b_x);
        max_bx = std::max(max_bx, rec.spec.b_x);
    }
    const double lo0 = std::floor(min_bx / bin_width) * bin_width;
    const std::size_t n_bins =
        static_cast<std::size_t>(std::floor((max_bx - lo0) / bin_width)) + 1;
    report.bins.resize(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        report.bins[i].lo = lo0 + static_cast<double>(i) * bin_width;
        report.bins[i].hi = lo0 + static_cast<double>(i + 1) * bin_width;
    }

    double mse_acc = 0.0, cos_acc = 0.0;
    for (std::size_t k = 0; k < split.size(); ++k) {
        const SampleRecord& rec = split[k];
        const Prediction& p = preds[k];
        double e = 0.0;
        for (std::size_t j = 0; j < rec.y.size(); ++j) {
            const double dj = p.y_hat[j] - rec.y[j];
            e += dj * dj;
        }
        const double db = p.b_hat - rec.b;
        mse_acc += e + db * db;
        const double cs = cosine_similarity(p.y_hat, rec.y);
        cos_acc += cs;
        std::size_t idx = static_cast<std::size_t>(
            std::max(0.0, std::floor((rec.spec.b_x - lo0) / bin_width)));
        idx = std::min(idx, n_bins - 1);
        ++report.bins[idx].count;
        report.bins[idx].mean_cos += cs;
    }
    report.mse = mse_acc / static_cast<double>(split.size());
    report.mean_cosine = cos_acc / static_cast<double>(split.size());
    for (BinStat& bin : report.bins)
        if (bin.count > 0) bin.mean_cos /= static_cast<double>(bin.count);
    return report;
}

inline EvalReport evaluate(const MlpModel& model, const std::vector<SampleRecord>& split,
                           double bin_width = 0.1) {
    if (split.empty()) throw std::invalid_argument("evaluate: empty split");
    std::vector<Prediction> preds;
    preds.reserve(split.size());
    for (const SampleRecord& rec : split) preds.push_back(model.predict(rec.features));
    return evaluate_predictions(preds, split, bin_width);
}

struct SweepRow {
    TrainMode mode = TrainMode::cophy;
    std::size_t train_size = 0;
    std::size_t runs_ok = 0, runs_failed = 0;
    double cos_mean = 0, cos_std = 0;
    double mse_mean = 0, mse_std = 0;
};

struct MultiRunResult {
    std::vector<SweepRow> rows;
    std::vector<std::string> failures;
};

namespace detail {
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var)};
}
}  // namespace detail

// Seeds x train sizes x modes grid of full training runs, aggregated as
// mean / sample std of the final-epoch test metrics. Failed runs are counted
// and reported, never silently dropped. Runs are independent, so jobs > 1
// may execute them on worker threads; results land in fixed slots and the
// aggregate is identical for any job count.
inline MultiRunResult multi_run(const TrainingConfig& base, const DatasetBundle& bundle,
                                std::vector<TrainMode> modes,
                                const std::vector<std::uint64_t>& seeds,
                                const std::vector<std::size_t>& train_sizes,
                                double bin_width = 0.1, std::size_t jobs = 1) {
    if (seeds.empty()) throw std::invalid_argument("multi_run: no seeds");
    if (train_sizes.empty()) throw std::invalid_argument("multi_run: no train sizes");
    if (modes.empty()) modes = {base.mode};

    struct RunSlot {
        TrainMode mode;
        std::size_t train_size;
        std::uint64_t seed;
        bool ok = false;
        double cosine = 0, mse = 0;
        std::string error;
    };
    std::vector<RunSlot> slots;
    for (TrainMode mode : modes)
        for (std::size_t n : train_sizes)
            for (std::uint64_t seed : seeds) slots.push_back({mode, n, seed});

    auto execute = [&](RunSlot& slot) {
        try {
            DatasetBundle sub = subsample_train(bundle, slot.train_size, slot.seed);
            TrainingConfig cfg = base;
            cfg.mode = slot.mode;
            cfg.seed = slot.seed;
            TrainResult run = train(cfg, sub);
            EvalReport report = evaluate(run.model, sub.test, bin_width);
            slot.cosine = report.mean_cosine;
            slot.mse = report.mse;
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    };
    if (jobs <= 1) {
        for (RunSlot& slot : slots) execute(slot);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next.fetch_add(1); i < slots.size(); i = next.fetch_add(1))
                execute(slots[i]);
        };
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < std::min(jobs, slots.size()); ++j)
            pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    MultiRunResult result;
    std::size_t idx = 0;
    for (TrainMode mode : modes) {
        for (std::size_t n : train_sizes) {
            SweepRow row;
            row.mode = mode;
            row.train_size = n;
            std::vector<double> cosines, mses;
            for (std::size_t s = 0; s < seeds.size(); ++s, ++idx) {
                const RunSlot& slot = slots[idx];
                if (slot.ok) {
                    ++row.runs_ok;
                    cosines.push_back(slot.cosine);
                    mses.push_back(slot.mse);
                } else {
                    ++row.runs_failed;
                    result.failures.push_back(std::string(mode_name(mode)) + " N=" +
                                              std::to_string(n) + " seed=" +
                                              std::to_string(slot.seed) + ": " + slot.error);
                }
            }
            std::tie(row.cos_mean, row.cos_std) = detail::mean_std(cosines);
            std::tie(row.mse_mean, row.mse_std) = detail::mean_std(mses);
            result.rows.push_back(row);
        }
    }
    return result;
}

struct BenchRow {
    std::string method;
    double mean_seconds = 0;
    double mean_residual = 0;
    std::vector<double> residuals;  // per matrix, order preserved
};

// Wall-clock and eigen-residual comparison between the numeric solver and the
// network forward pass over the same matrices. Residual ||A y - b y||_2 is
// computed once per matrix, outside the timed region, by the same formula for
// both methods.
inline std::vector<BenchRow> bench_solver(const MlpModel& model,
                                          const std::vector<DenseMatrix>& matrices,
                                          std::size_t repetitions,
                                          SpectrumDirection direction = SpectrumDirection::smallest) {
    if (repetitions == 0) throw std::invalid_argument("bench_solver: repetitions must be >= 1");
    if (matrices.empty()) throw std::invalid_argument("bench_solver: no matrices");
    for (const DenseMatrix& m : matrices) {
        if (m.rows != m.cols || m.rows * m.cols != model.input_dim() ||
            m.rows + 1 != model.output_dim())
            throw std::invalid_argument("bench_solver: matrix/model dimension mismatch");
    }

    auto residual = [](const DenseMatrix& m, const DenseVector& y, double b) {
        double num = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m.cols; ++j) acc += m(i, j) * y[j];
            acc -= b * y[i];
            num += acc * acc;
        }
        return std::sqrt(num);
    };

    BenchRow solver_row{"solver", 0, 0, {}};
    BenchRow net_row{"network", 0, 0, {}};
    using clock = std::chrono::steady_clock;

    auto t0 = clock::now();
    for (std::size_t rep = 0; rep < repetitions; ++rep)
        for (const DenseMatrix& m : matrices) {
            auto [b, y] = ground_state(m, direction);
            (void)b;
            (void)y;
        }
    solver_row.mean_seconds = std::chrono::duration<double>(clock::now() - t0).count() /
                              static_cast<double>(repetitions * matrices.size());

    t0 = clock::now();
    for (std::size_t rep = 0; rep < repetitions; ++rep)
        for (const DenseMatrix& m : matrices) (void)model.predict(m.data);
    net_row.mean_seconds = std::chrono::duration<double>(clock::now() - t0).count() /
                           static_cast<double>(repetitions * matrices.size());

    for (const DenseMatrix& m : matrices) {
        auto [b, y] = ground_state(m, direction);
        solver_row.residuals.push_back(residual(m, y, b));
        const Prediction p = model.predict(m.data);
        net_row.residuals.push_back(residual(m, p.y_hat, p.b_hat));
    }
    for (double r : solver_row.residuals) solver_row.mean_residual += r;
    solver_row.mean_residual /= static_cast<double>(matrices.size());
    for (double r : net_row.residuals) net_row.mean_residual += r;
    net_row.mean_residual /= static_cast<double>(matrices.size());
    return {solver_row, net_row};
}

// CSV emission. Column orders are fixed and documented here; doubles use the
// shortest round-trip form so identical runs produce identical bytes.

inline void write_runlog_csv(const RunLog& log, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_runlog_csv: cannot open " + path);
    os << "epoch,objective,train_mse,val_mse,test_mse,c_loss,s_loss,lambda_c,lambda_s,"
          "exp_clamps\n";
    for (const EpochRow& r : log.rows) {
        os << r.epoch << "," << fmt_double(r.objective) << "," << fmt_double(r.train_mse) << ","
           << fmt_double(r.val_mse) << "," << fmt_double(r.test_mse) << ","
           << fmt_double(r.c_loss) << "," << fmt_double(r.s_loss) << ","
           << fmt_double(r.lambda_c) << "," << fmt_double(r.lambda_s) << "," << r.exp_clamps
           << "\n";
    }
    if (!os) throw std::runtime_error("write_runlog_csv: write failure on " + path);
}

inline void write_eval_csv(const EvalReport& report, const std::string& summary_path,
                           const std::string& bins_path) {
    {
        std::ofstream os(summary_path, std::ios::binary);
        if (!os) throw std::runtime_error("write_eval_csv: cannot open " + summary_path);
        os << "mse,mean_cosine,bin_width\n";
        os << fmt_double(report.mse) << "," << fmt_double(report.mean_cosine) << ","
           << fmt_double(report.bin_width) << "\n";
    }
    std::ofstream os(bins_path, std::ios::binary);
    if (!os) throw std::runtime_error("write_eval_csv: cannot open " + bins_path);
    os << "bin_lo,bin_hi,count,mean_cosine\n";
    for (const BinStat& b : report.bins)
        os << fmt_double(b.lo) << "," << fmt_double(b.hi) << "," << b.count << ","
           << fmt_double(b.mean_cos) << "\n";
}

inline void write_sweep_csv(const MultiRunResult& result, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_sweep_csv: cannot open " + path);
    os << "mode,train_size,runs_ok,runs_failed,cosine_mean,cosine_std,mse_mean,mse_std\n";
    for (const SweepRow& r : result.rows)
        os << mode_name(r.mode) << "," << r.train_size << "," << r.runs_ok << ","
           << r.runs_failed << "," << fmt_double(r.cos_mean) << "," << fmt_double(r.cos_std)
           << "," << fmt_double(r.mse_mean) << "," << fmt_double(r.mse_std) << "\n";
}

inline void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_bench_csv: cannot open " + path);
    os << "method,mean_seconds,mean_residual\n";
    for (const BenchRow& r : rows)
        os << r.method << "," << fmt_double(r.mean_seconds) << ","
           << fmt_double(r.mean_residual) << "\n";
}

namespace detail {
constexpr const char* kSnapshotsMagic = "eignn-snapshots";
constexpr int kSnapshotsVersion = 1;
}  // namespace detail

inline void save_snapshots(const std::vector<std::pair<std::size_t, DenseVector>>& snapshots,
                           const std::vector<std::size_t>& dims, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_snapshots: cannot open " + path);
    os << detail::kSnapshotsMagic << " v" << detail::kSnapshotsVersion << "\n";
    os << "dims";
    for (std::size_t d : dims) os << " " << d;
    os << "\n";
    os << "count " << snapshots.size() << "\n";
    os << "end-header\n";
    for (const auto& [epoch, params] : snapshots) {
        write_u64(os, epoch);
        write_f64_span(os, params.data(), params.size());
    }
    if (!os) throw std::runtime_error("save_snapshots: write failure on " + path);
}

inline std::pair<std::vector<std::size_t>, std::vector<std::pair<std::size_t, DenseVector>>>
load_snapshots(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_snapshots: cannot open " + path);
    std::istringstream magic(read_header_line(is));
    std::string name, version;
    magic >> name >> version;
    if (name != detail::kSnapshotsMagic)
        throw std::runtime_error("load_snapshots: not a snapshots file: " + path);
    if (version != "v" + std::to_string(detail::kSnapshotsVersion))
        throw std::runtime_error("load_snapshots: unsupported format version '" + version + "'");
    std::istringstream dims_line(read_header_line(is));
    expect_token(dims_line, "dims");
    std::vector<std::size_t> dims;
    std::size_t d;
    while (dims_line >> d) dims.push_back(d);
    std::istringstream count_line(read_header_line(is));
    expect_token(count_line, "count");
    std::size_t count = 0;
    count_line >> count;
    if (read_header_line(is) != "end-header")
        throw std::runtime_error("load_snapshots: malformed header in " + path);
    const std::size_t n_params = MlpModel::param_count_for(dims);
    std::vector<std::pair<std::size_t, DenseVector>> snapshots(count);
    for (auto& [epoch, params] : snapshots) {
        epoch = static_cast<std::size_t>(read_u64(is));
        params.resize(n_params);
        read_f64_span(is, params.data(), params.size());
    }
    return {dims, snapshots};
}

}  // namespace eignn
