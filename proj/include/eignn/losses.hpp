#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eignn/dataset.hpp"
#include "eignn/mlp.hpp"
#include "eignn/schedules.hpp"
#include "eignn/tape.hpp"

namespace eignn {

// Baselines and ablations share one training loop; the mode only decides
// which loss terms are active and how the physics-guided pool is chosen.
enum class TrainMode {
    cophy,          // adaptive schedules, all terms
    black_box,      // plain supervised MSE
    pgnn_analogue,  // constant weights, all terms
    pinn_analogue,  // constant weights, physics terms only
    mtl_pgnn,       // one randomly chosen term per minibatch, constant weights
    only_dtr,       // physics pool drawn from train features instead of the unlabeled pool
    wo_sloss,       // adaptive, spectrum term dropped
    label_free,     // adaptive, physics terms only
};

inline bool mode_uses_train_loss(TrainMode m) {
    return m != TrainMode::pinn_analogue && m != TrainMode::label_free;
}
inline bool mode_uses_c_loss(TrainMode m) { return m != TrainMode::black_box; }
inline bool mode_uses_s_loss(TrainMode m) {
    return m != TrainMode::black_box && m != TrainMode::wo_sloss;
}

enum class TrainLossKind { mse, l1 };

// One sample inside a tape-recorded minibatch: the source record plus the
// network outputs already on the tape. Losses that need labels pull them from
// rec and bump *label_reads so label-free modes can prove they never looked.
struct BatchItem {
    const SampleRecord* rec;
    TapePrediction pred;
};
using TapeBatch = std::vector<BatchItem>;

namespace detail {
inline void require_nonempty(const TapeBatch& batch, const char* who) {
    if (batch.empty()) throw std::invalid_argument(std::string(who) + ": empty batch");
}
}  // namespace detail

// Mean over the batch of ||y_hat - y||^2 + (b_hat - b)^2.
inline Tape::Var train_mse(Tape& tape, const TapeBatch& batch,
                           std::uint64_t* label_reads = nullptr) {
    detail::require_nonempty(batch, "train_mse");
    Tape::Var total{};
    bool first = true;
    for (const BatchItem& item : batch) {
        const SampleRecord& rec = *item.rec;
        if (label_reads) *label_reads += 2;
        Tape::Var y = tape.leaf(rec.y.data(), rec.y.size(), false);
        Tape::Var vec_err = tape.sumsq(tape.sub(item.pred.y_hat, y));
        Tape::Var val_err = tape.sumsq(tape.sub(item.pred.b_hat, tape.leaf_scalar(rec.b)));
        Tape::Var term = tape.add(vec_err, val_err);
        total = first ? term : tape.add(total, term);
        first = false;
    }
    return tape.scale(total, 1.0 / static_cast<double>(batch.size()));
}

// Mean over the batch of ||A y_hat - b_hat y_hat||^2 / (y_hat . y_hat).
// Label-free: only the sample's feature matrix is touched.
inline Tape::Var c_loss(Tape& tape, const TapeBatch& batch) {
    detail::require_nonempty(batch, "c_loss");
    Tape::Var total{};
    bool first = true;
    for (const BatchItem& item : batch) {
        const std::size_t d = tape.size(item.pred.y_hat);
        const DenseVector& features = item.rec->features;
        if (features.size() != d * d)
            throw std::invalid_argument("c_loss: features are not a d x d matrix");
        Tape::Var ay = tape.matvec(features.data(), d, d, item.pred.y_hat);
        Tape::Var by = tape.vscale(item.pred.y_hat, item.pred.b_hat);
        Tape::Var num = tape.sumsq(tape.sub(ay, by));
        Tape::Var den = tape.sumsq(item.pred.y_hat);
        if (tape.value(den) < 1e-12)
            throw std::runtime_error("c_loss: degenerate prediction, ||y_hat||^2 < 1e-12");
        Tape::Var term = tape.div(num, den);
        total = first ? term : tape.add(total, term);
        first = false;
    }
    return tape.scale(total, 1.0 / static_cast<double>(batch.size()));
}

// Mean of exp(b_hat) (smallest) or exp(-b_hat) (largest); pushes the predicted
// eigenvalue toward the wanted end of the spectrum, no labels involved.
inline Tape::Var s_loss(Tape& tape, const TapeBatch& batch, SpectrumDirection direction) {
    detail::require_nonempty(batch, "s_loss");
    Tape::Var total{};
    bool first = true;
    for (const BatchItem& item : batch) {
        Tape::Var arg = direction == SpectrumDirection::smallest ? item.pred.b_hat
                                                                 : tape.neg(item.pred.b_hat);
        Tape::Var term = tape.exp_clamped(arg);
        total = first ? term : tape.add(total, term);
        first = false;
    }
    return tape.scale(total, 1.0 / static_cast<double>(batch.size()));
}

// Sum (not mean) over the batch of
//   sum_j |y_hat_j - y_j|  +  d * |b_hat - b|  +  (||y_hat|| - ||y||).
inline Tape::Var l1_train_loss(Tape& tape, const TapeBatch& batch,
                               std::uint64_t* label_reads = nullptr) {
    detail::require_nonempty(batch, "l1_train_loss");
    Tape::Var total{};
    bool first = true;
    for (const BatchItem& item : batch) {
        const SampleRecord& rec = *item.rec;
        if (label_reads) *label_reads += 2;
        const std::size_t d = tape.size(item.pred.y_hat);
        Tape::Var y = tape.leaf(rec.y.data(), rec.y.size(), false);
        Tape::Var vec_err = tape.l1norm(tape.sub(item.pred.y_hat, y));
        Tape::Var val_err =
            tape.scale(tape.l1norm(tape.sub(item.pred.b_hat, tape.leaf_scalar(rec.b))),
                       static_cast<double>(d));
        Tape::Var norm_gap = tape.sub(tape.norm2(item.pred.y_hat), tape.norm2(y));
        Tape::Var term = tape.add(tape.add(vec_err, val_err), norm_gap);
        total = first ? term : tape.add(total, term);
        first = false;
    }
    return total;
}

// E(t) = Train-Loss(labeled) + lambda_C(t) * C(labeled + unlabeled)
//                            + lambda_S(t) * S(labeled + unlabeled),
// with the mode masking terms. black_box returns the train term untouched so
// its logged objective is bitwise the train MSE.
inline Tape::Var combined_objective(Tape& tape, double t, const TapeBatch& labeled,
                                    const TapeBatch& unlabeled, const ScheduleSpec& lambda_c,
                                    const ScheduleSpec& lambda_s, SpectrumDirection direction,
                                    TrainMode mode, TrainLossKind train_kind = TrainLossKind::mse,
                                    std::uint64_t* label_reads = nullptr) {
    const bool with_train = mode_uses_train_loss(mode);
    const bool with_c = mode_uses_c_loss(mode);
    const bool with_s = mode_uses_s_loss(mode);

    Tape::Var train_term{};
    if (with_train)
        train_term = train_kind == TrainLossKind::mse ? train_mse(tape, labeled, label_reads)
                                                      : l1_train_loss(tape, labeled, label_reads);
    if (!with_c && !with_s) return train_term;

    TapeBatch pool = labeled;
    pool.insert(pool.end(), unlabeled.begin(), unlabeled.end());

    Tape::Var total{};
    bool first = true;
    if (with_train) {
        total = train_term;
        first = false;
    }
    if (with_c) {
        Tape::Var weighted = tape.scale(c_loss(tape, pool), weight_at(lambda_c, t));
        total = first ? weighted : tape.add(total, weighted);
        first = false;
    }
    if (with_s) {
        Tape::Var weighted = tape.scale(s_loss(tape, pool, direction), weight_at(lambda_s, t));
        total = first ? weighted : tape.add(total, weighted);
        first = false;
    }
    return total;
}

}  // namespace eignn
