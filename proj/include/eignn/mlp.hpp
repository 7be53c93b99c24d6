#pragma once

#include <cmath>
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
#include "eignn/tape.hpp"

namespace eignn {

struct Prediction {
    DenseVector y_hat;
    double b_hat = 0.0;
};

// Fully connected net: tanh on every hidden layer, linear output. Parameters
// are stored flat in layer order (W0 row-major, b0, W1, b1, ...), which is
// also the flatten_params / checkpoint / snapshot layout.
class MlpModel {
public:
    MlpModel() = default;

    explicit MlpModel(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.size() < 2) throw std::invalid_argument("MlpModel: need at least two dims");
        params_.assign(param_count_for(dims_), 0.0);
    }

    static std::size_t param_count_for(const std::vector<std::size_t>& dims) {
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l)
            total += dims[l] * dims[l + 1] + dims[l + 1];
        return total;
    }

    static MlpModel glorot_init(std::vector<std::size_t> dims, std::uint64_t seed) {
        MlpModel m(std::move(dims));
        for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l) {
            const std::size_t fan_in = m.dims_[l], fan_out = m.dims_[l + 1];
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            Rng rng = Rng::substream(seed, stream::param_init, l);
            double* w = m.params_.data() + m.weight_offset(l);
            for (std::size_t i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-limit, limit);
        }
        return m;
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t layer_count() const { return dims_.size() - 1; }
    std::size_t input_dim() const { return dims_.front(); }
    std::size_t output_dim() const { return dims_.back(); }
    std::size_t param_count() const { return params_.size(); }

    DenseVector& params() { return params_; }
    const DenseVector& params() const { return params_; }

    std::size_t weight_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) off += dims_[l] * dims_[l + 1] + dims_[l + 1];
        return off;
    }
    std::size_t bias_offset(std::size_t layer) const {
        return weight_offset(layer) + dims_[layer] * dims_[layer + 1];
    }

    // Tape-free forward pass for metrics and benchmarks.
    DenseVector predict_raw(const DenseVector& x) const {
        if (x.size() != input_dim()) throw std::invalid_argument("MlpModel: input dim mismatch");
        DenseVector a = x, z;
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            const std::size_t rows = dims_[l + 1], cols = dims_[l];
            const double* w = params_.data() + weight_offset(l);
            const double* b = params_.data() + bias_offset(l);
            z.assign(rows, 0.0);
            for (std::size_t i = 0; i < rows; ++i) {
                double acc = b[i];
                const double* row = w + i * cols;
                for (std::size_t j = 0; j < cols; ++j) acc += row[j] * a[j];
                z[i] = acc;
            }
            const bool last = l + 2 == dims_.size();
            if (!last)
                for (double& v : z) v = std::tanh(v);
            a.swap(z);
        }
        return a;
    }

    // Head layout: outputs 0..d-1 are the eigenvector estimate, output d the
    // eigenvalue estimate.
    Prediction predict(const DenseVector& x) const {
        DenseVector out = predict_raw(x);
        if (out.size() < 2) throw std::logic_error("MlpModel: output head needs >= 2 outputs");
        Prediction p;
        p.b_hat = out.back();
        out.pop_back();
        p.y_hat = std::move(out);
        return p;
    }

private:
    std::vector<std::size_t> dims_;
    DenseVector params_;
};

inline DenseVector flatten_params(const MlpModel& model) { return model.params(); }

inline MlpModel unflatten(const std::vector<std::size_t>& dims, const DenseVector& flat) {
    MlpModel m(dims);
    if (flat.size() != m.param_count())
        throw std::invalid_argument("unflatten: expected " + std::to_string(m.param_count()) +
                                    " parameters, got " + std::to_string(flat.size()));
    m.params() = flat;
    return m;
}

struct TapePrediction {
    Tape::Var y_hat;
    Tape::Var b_hat;
};

// Registers the model's parameters as gradient leaves once per tape; forward()
// then shares them across every sample of the minibatch, so a single
// backward() accumulates the whole batch gradient.
class MlpTapeBinding {
public:
    MlpTapeBinding(Tape& tape, const MlpModel& model) : tape_(tape), model_(model) {
        for (std::size_t l = 0; l < model.layer_count(); ++l) {
            weights_.push_back(tape.leaf(model.params().data() + model.weight_offset(l),
                                         model.dims()[l] * model.dims()[l + 1], true));
            biases_.push_back(
                tape.leaf(model.params().data() + model.bias_offset(l), model.dims()[l + 1], true));
        }
    }

    TapePrediction forward(const double* features, std::size_t len) {
        if (len != model_.input_dim())
            throw std::invalid_argument("MlpTapeBinding: input dim mismatch");
        Tape::Var a = tape_.leaf(features, len, false);
        for (std::size_t l = 0; l < model_.layer_count(); ++l) {
            a = tape_.affine(weights_[l], model_.dims()[l + 1], model_.dims()[l], biases_[l], a);
            if (l + 1 < model_.layer_count()) a = tape_.tanh(a);
        }
        const std::size_t out = model_.output_dim();
        return TapePrediction{tape_.slice(a, 0, out - 1), tape_.slice(a, out - 1, 1)};
    }

    // Adjoints gathered into flatten_params order; call after tape.backward().
    void gradient(DenseVector& grad) const {
        grad.assign(model_.param_count(), 0.0);
        for (std::size_t l = 0; l < model_.layer_count(); ++l) {
            const double* dw = tape_.adjoint(weights_[l]);
            const double* db = tape_.adjoint(biases_[l]);
            const std::size_t wn = model_.dims()[l] * model_.dims()[l + 1];
            const std::size_t bn = model_.dims()[l + 1];
            double* gw = grad.data() + model_.weight_offset(l);
            double* gb = grad.data() + model_.bias_offset(l);
            for (std::size_t i = 0; i < wn; ++i) gw[i] = dw[i];
            for (std::size_t i = 0; i < bn; ++i) gb[i] = db[i];
        }
    }

private:
    Tape& tape_;
    const MlpModel& model_;
    std::vector<Tape::Var> weights_;
    std::vector<Tape::Var> biases_;
};

namespace detail {
constexpr const char* kCheckpointMagic = "eignn-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace detail

inline void save_checkpoint(const MlpModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os << detail::kCheckpointMagic << " v" << detail::kCheckpointVersion << "\n";
    os << "dims";
    for (std::size_t d : model.dims()) os << " " << d;
    os << "\n";
    os << "end-header\n";
    write_f64_span(os, model.params().data(), model.param_count());
    if (!os) throw std::runtime_error("save_checkpoint: write failure on " + path);
}

inline MlpModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::istringstream magic(read_header_line(is));
    std::string name, version;
    magic >> name >> version;
    if (name != detail::kCheckpointMagic)
        throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
    if (version != "v" + std::to_string(detail::kCheckpointVersion))
        throw std::runtime_error("load_checkpoint: unsupported format version '" + version + "'");
    std::istringstream dims_line(read_header_line(is));
    expect_token(dims_line, "dims");
    std::vector<std::size_t> dims;
    std::size_t d;
    while (dims_line >> d) dims.push_back(d);
    if (read_header_line(is) != "end-header")
        throw std::runtime_error("load_checkpoint: malformed header in " + path);
    MlpModel m(dims);
    try {
        read_f64_span(is, m.params().data(), m.param_count());
    } catch (const std::runtime_error&) {
        throw std::runtime_error("load_checkpoint: truncated payload in " + path);
    }
    return m;
}

}  // namespace eignn
