#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace eignn {

// Reverse-mode tape over vector-valued nodes. Values live in one arena,
// adjoints in a parallel arena, so reset() keeps capacity across steps.
// Leaves copy their payload into the arena; matvec keeps only a pointer to
// the constant matrix, which must outlive backward().
class Tape {
public:
    static constexpr std::uint32_t kNone = 0xffffffffu;

    struct Var {
        std::uint32_t i = kNone;
    };

    void reset() {
        nodes_.clear();
        vals_.clear();
        adj_.clear();
        exp_clamps_ = 0;
    }

    std::size_t size(Var v) const { return at(v).len; }
    bool requires_grad(Var v) const { return at(v).requires_grad; }

    const double* data(Var v) const { return vals_.data() + at(v).off; }

    double value(Var v) const {
        const Node& n = at(v);
        if (n.len != 1) throw std::invalid_argument("Tape::value: node is not scalar");
        return vals_[n.off];
    }

    // Adjoint of v after backward(); zero-filled for nodes the loss does not reach.
    const double* adjoint(Var v) const {
        if (adj_.empty()) throw std::logic_error("Tape::adjoint: backward has not run");
        return adj_.data() + at(v).off;
    }

    std::uint64_t exp_clamp_count() const { return exp_clamps_; }

    Var leaf(const double* values, std::size_t n, bool requires_grad) {
        Var v = make(Op::leaf, n, requires_grad);
        double* out = val(v);
        for (std::size_t i = 0; i < n; ++i) out[i] = values[i];
        return v;
    }

    Var leaf_scalar(double value, bool requires_grad = false) {
        return leaf(&value, 1, requires_grad);
    }

    // z = W x + b with W row-major (rows x cols) living on the tape as a leaf.
    Var affine(Var w, std::size_t rows, std::size_t cols, Var b, Var x) {
        if (at(w).len != rows * cols) throw std::invalid_argument("Tape::affine: weight size");
        if (at(b).len != rows) throw std::invalid_argument("Tape::affine: bias size");
        if (at(x).len != cols) throw std::invalid_argument("Tape::affine: input size");
        Var v = make(Op::affine, rows, any_grad(w, b, x), w, b, x);
        Node& n = at(v);
        n.p0 = rows;
        n.p1 = cols;
        const double* wm = data(w);
        const double* bv = data(b);
        const double* xv = data(x);
        double* out = val(v);
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = bv[i];
            const double* row = wm + i * cols;
            for (std::size_t j = 0; j < cols; ++j) acc += row[j] * xv[j];
            out[i] = acc;
        }
        return v;
    }

    Var tanh(Var x) {
        Var v = make(Op::tanh_, at(x).len, at(x).requires_grad, x);
        const double* xin = data(x);
        double* out = val(v);
        for (std::size_t i = 0; i < at(v).len; ++i) out[i] = std::tanh(xin[i]);
        return v;
    }

    // y = A x for a constant row-major matrix not owned by the tape.
    Var matvec(const double* a, std::size_t rows, std::size_t cols, Var x) {
        if (at(x).len != cols) throw std::invalid_argument("Tape::matvec: input size");
        Var v = make(Op::matvec, rows, at(x).requires_grad, x);
        Node& n = at(v);
        n.mat = a;
        n.p0 = rows;
        n.p1 = cols;
        const double* xv = data(x);
        double* out = val(v);
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = 0.0;
            const double* row = a + i * cols;
            for (std::size_t j = 0; j < cols; ++j) acc += row[j] * xv[j];
            out[i] = acc;
        }
        return v;
    }

    Var add(Var a, Var b) { return binary_elementwise(Op::add, a, b); }
    Var sub(Var a, Var b) { return binary_elementwise(Op::sub, a, b); }

    Var neg(Var x) {
        Var v = make(Op::neg, at(x).len, at(x).requires_grad, x);
        const double* xin = data(x);
        double* out = val(v);
        for (std::size_t i = 0; i < at(v).len; ++i) out[i] = -xin[i];
        return v;
    }

    Var scale(Var x, double c) {
        Var v = make(Op::scale, at(x).len, at(x).requires_grad, x);
        at(v).c = c;
        const double* xin = data(x);
        double* out = val(v);
        for (std::size_t i = 0; i < at(v).len; ++i) out[i] = c * xin[i];
        return v;
    }

    // Elementwise x * s for a scalar node s; also scalar*scalar products.
    Var vscale(Var x, Var s) {
        if (at(s).len != 1) throw std::invalid_argument("Tape::vscale: scale is not scalar");
        Var v = make(Op::vscale, at(x).len, any_grad(x, s), x, s);
        const double* xin = data(x);
        const double sv = vals_[at(s).off];
        double* out = val(v);
        for (std::size_t i = 0; i < at(v).len; ++i) out[i] = xin[i] * sv;
        return v;
    }

    Var slice(Var x, std::size_t offset, std::size_t len) {
        if (offset + len > at(x).len) throw std::invalid_argument("Tape::slice: out of range");
        Var v = make(Op::slice, len, at(x).requires_grad, x);
        at(v).p0 = offset;
        const double* xin = data(x) + offset;
        double* out = val(v);
        for (std::size_t i = 0; i < len; ++i) out[i] = xin[i];
        return v;
    }

    Var sum(Var x) {
        Var v = make(Op::sum, 1, at(x).requires_grad, x);
        const double* xin = data(x);
        double acc = 0.0;
        for (std::size_t i = 0; i < at(x).len; ++i) acc += xin[i];
        *val(v) = acc;
        return v;
    }

    Var sumsq(Var x) {
        Var v = make(Op::sumsq, 1, at(x).requires_grad, x);
        const double* xin = data(x);
        double acc = 0.0;
        for (std::size_t i = 0; i < at(x).len; ++i) acc += xin[i] * xin[i];
        *val(v) = acc;
        return v;
    }

    Var dot(Var a, Var b) {
        if (at(a).len != at(b).len) throw std::invalid_argument("Tape::dot: size mismatch");
        Var v = make(Op::dot, 1, any_grad(a, b), a, b);
        const double* av = data(a);
        const double* bv = data(b);
        double acc = 0.0;
        for (std::size_t i = 0; i < at(a).len; ++i) acc += av[i] * bv[i];
        *val(v) = acc;
        return v;
    }

    Var l1norm(Var x) {
        Var v = make(Op::l1norm, 1, at(x).requires_grad, x);
        const double* xin = data(x);
        double acc = 0.0;
        for (std::size_t i = 0; i < at(x).len; ++i) acc += std::abs(xin[i]);
        *val(v) = acc;
        return v;
    }

    Var norm2(Var x) {
        Var v = make(Op::norm2, 1, at(x).requires_grad, x);
        const double* xin = data(x);
        double acc = 0.0;
        for (std::size_t i = 0; i < at(x).len; ++i) acc += xin[i] * xin[i];
        *val(v) = std::sqrt(acc);
        return v;
    }

    // exp with the argument clamped at 700 to stay inside double range; the
    // clamped branch has zero derivative and bumps a per-tape counter.
    Var exp_clamped(Var x) {
        if (at(x).len != 1) throw std::invalid_argument("Tape::exp_clamped: not scalar");
        Var v = make(Op::expc, 1, at(x).requires_grad, x);
        const double arg = vals_[at(x).off];
        if (arg > kExpClamp) {
            ++exp_clamps_;
            *val(v) = std::exp(kExpClamp);
        } else {
            *val(v) = std::exp(arg);
        }
        return v;
    }

    Var div(Var a, Var b) {
        if (at(a).len != 1 || at(b).len != 1)
            throw std::invalid_argument("Tape::div: scalars required");
        Var v = make(Op::div, 1, any_grad(a, b), a, b);
        *val(v) = vals_[at(a).off] / vals_[at(b).off];
        return v;
    }

    void backward(Var loss) {
        const Node& l = at(loss);
        if (l.len != 1) throw std::invalid_argument("Tape::backward: loss is not scalar");
        adj_.assign(vals_.size(), 0.0);
        adj_[l.off] = 1.0;
        for (std::uint32_t idx = loss.i + 1; idx-- > 0;) {
            const Node& n = nodes_[idx];
            if (!n.requires_grad) continue;
            backward_node(n);
        }
    }

    static constexpr double kExpClamp = 700.0;

private:
    enum class Op : std::uint8_t {
        leaf,
        affine,
        tanh_,
        matvec,
        add,
        sub,
        neg,
        scale,
        vscale,
        slice,
        sum,
        sumsq,
        dot,
        l1norm,
        norm2,
        expc,
        div,
    };

    struct Node {
        Op op;
        bool requires_grad;
        std::uint32_t in0 = kNone, in1 = kNone, in2 = kNone;
        std::size_t off = 0;
        std::size_t len = 0;
        const double* mat = nullptr;
        std::size_t p0 = 0, p1 = 0;
        double c = 0.0;
    };

    Node& at(Var v) {
        if (v.i >= nodes_.size()) throw std::invalid_argument("Tape: stale or empty Var");
        return nodes_[v.i];
    }
    const Node& at(Var v) const {
        if (v.i >= nodes_.size()) throw std::invalid_argument("Tape: stale or empty Var");
        return nodes_[v.i];
    }

    double* val(Var v) { return vals_.data() + at(v).off; }

    bool any_grad(Var a, Var b) const { return at(a).requires_grad || at(b).requires_grad; }
    bool any_grad(Var a, Var b, Var c) const { return any_grad(a, b) || at(c).requires_grad; }

    Var make(Op op, std::size_t len, bool requires_grad, Var in0 = Var{kNone},
             Var in1 = Var{kNone}, Var in2 = Var{kNone}) {
        Node n;
        n.op = op;
        n.requires_grad = requires_grad;
        n.in0 = in0.i;
        n.in1 = in1.i;
        n.in2 = in2.i;
        n.off = vals_.size();
        n.len = len;
        nodes_.push_back(n);
        vals_.resize(vals_.size() + len);
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    Var binary_elementwise(Op op, Var a, Var b) {
        if (at(a).len != at(b).len)
            throw std::invalid_argument("Tape: elementwise size mismatch");
        Var v = make(op, at(a).len, any_grad(a, b), a, b);
        const double* av = data(a);
        const double* bv = data(b);
        double* out = val(v);
        if (op == Op::add)
            for (std::size_t i = 0; i < at(v).len; ++i) out[i] = av[i] + bv[i];
        else
            for (std::size_t i = 0; i < at(v).len; ++i) out[i] = av[i] - bv[i];
        return v;
    }

    bool grad_into(std::uint32_t idx) const { return idx != kNone && nodes_[idx].requires_grad; }

    void backward_node(const Node& n) {
        const double* g = adj_.data() + n.off;
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::affine: {
                const Node& w = nodes_[n.in0];
                const Node& b = nodes_[n.in1];
                const Node& x = nodes_[n.in2];
                const std::size_t rows = n.p0, cols = n.p1;
                const double* xv = vals_.data() + x.off;
                const double* wm = vals_.data() + w.off;
                if (w.requires_grad) {
                    double* dw = adj_.data() + w.off;
                    for (std::size_t i = 0; i < rows; ++i) {
                        const double gi = g[i];
                        double* drow = dw + i * cols;
                        for (std::size_t j = 0; j < cols; ++j) drow[j] += gi * xv[j];
                    }
                }
                if (b.requires_grad) {
                    double* db = adj_.data() + b.off;
                    for (std::size_t i = 0; i < rows; ++i) db[i] += g[i];
                }
                if (x.requires_grad) {
                    double* dx = adj_.data() + x.off;
                    for (std::size_t i = 0; i < rows; ++i) {
                        const double gi = g[i];
                        const double* row = wm + i * cols;
                        for (std::size_t j = 0; j < cols; ++j) dx[j] += gi * row[j];
                    }
                }
                break;
            }
            case Op::tanh_: {
                if (!grad_into(n.in0)) break;
                double* dx = adj_.data() + nodes_[n.in0].off;
                const double* y = vals_.data() + n.off;
                for (std::size_t i = 0; i < n.len; ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
            }
            case Op::matvec: {
                if (!grad_into(n.in0)) break;
                double* dx = adj_.data() + nodes_[n.in0].off;
                const std::size_t rows = n.p0, cols = n.p1;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double gi = g[i];
                    const double* row = n.mat + i * cols;
                    for (std::size_t j = 0; j < cols; ++j) dx[j] += gi * row[j];
                }
                break;
            }
            case Op::add: {
                if (grad_into(n.in0)) {
                    double* da = adj_.data() + nodes_[n.in0].off;
                    for (std::size_t i = 0; i < n.len; ++i) da[i] += g[i];
                }
                if (grad_into(n.in1)) {
                    double* db = adj_.data() + nodes_[n.in1].off;
                    for (std::size_t i = 0; i < n.len; ++i) db[i] += g[i];
                }
                break;
            }
            case Op::sub: {
                if (grad_into(n.in0)) {
                    double* da = adj_.data() + nodes_[n.in0].off;
                    for (std::size_t i = 0; i < n.len; ++i) da[i] += g[i];
                }
                if (grad_into(n.in1)) {
                    double* db = adj_.data() + nodes_[n.in1].off;
                    for (std::size_t i = 0; i < n.len; ++i) db[i] -= g[i];
                }
                break;
            }
            case Op::neg: {
                if (!grad_into(n.in0)) break;
                double* dx = adj_.data() + nodes_[n.in0].off;
                for (std::size_t i = 0; i < n.len; ++i) dx[i] -= g[i];
                break;
            }
            case Op::scale: {
                if (!grad_into(n.in0)) break;
                double* dx = adj_.data() + nodes_[n.in0].off;
                for (std::size_t i = 0; i < n.len; ++i) dx[i] += n.c * g[i];
                break;
            }
            case Op::vscale: {
                const Node& x = nodes_[n.in0];
                const Node& s = nodes_[n.in1];
                const double sv = vals_[s.off];
                const double* xv = vals_.data() + x.off;
                if (x.requires_grad) {
                    double* dx = adj_.data() + x.off;
                    for (std::size_t i = 0; i < n.len; ++i) dx[i] += g[i] * sv;
                }
                if (s.requires_grad) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < n.len; ++i) acc += g[i] * xv[i];
                    adj_[s.off] += acc;
                }
                break;
            }
            case Op::slice: {
                if (!grad_into(n.in0)) break;
                double* dx = adj_.data() + nodes_[n.in0].off + n.p0;
                for (std::size_t i = 0; i < n.len; ++i) dx[i] += g[i];
                break;
            }
            case Op::sum: {
                if (!grad_into(n.in0)) break;
                const Node& x = nodes_[n.in0];
                double* dx = adj_.data() + x.off;
                for (std::size_t i = 0; i < x.len; ++i) dx[i] += g[0];
                break;
            }
            case Op::sumsq: {
                if (!grad_into(n.in0)) break;
                const Node& x = nodes_[n.in0];
                double* dx = adj_.data() + x.off;
                const double* xv = vals_.data() + x.off;
                for (std::size_t i = 0; i < x.len; ++i) dx[i] += 2.0 * xv[i] * g[0];
                break;
            }
            case Op::dot: {
                const Node& a = nodes_[n.in0];
                const Node& b = nodes_[n.in1];
                const double* av = vals_.data() + a.off;
                const double* bv = vals_.data() + b.off;
                if (a.requires_grad) {
                    double* da = adj_.data() + a.off;
                    for (std::size_t i = 0; i < a.len; ++i) da[i] += g[0] * bv[i];
                }
                if (b.requires_grad) {
                    double* db = adj_.data() + b.off;
                    for (std::size_t i = 0; i < b.len; ++i) db[i] += g[0] * av[i];
                }
                break;
            }
            case Op::l1norm: {
                if (!grad_into(n.in0)) break;
                const Node& x = nodes_[n.in0];
                double* dx = adj_.data() + x.off;
                const double* xv = vals_.data() + x.off;
                for (std::size_t i = 0; i < x.len; ++i) {
                    if (xv[i] > 0.0)
                        dx[i] += g[0];
                    else if (xv[i] < 0.0)
                        dx[i] -= g[0];
                }
                break;
            }
            case Op::norm2: {
                if (!grad_into(n.in0)) break;
                const double r = vals_[n.off];
                if (r == 0.0) break;
                const Node& x = nodes_[n.in0];
                double* dx = adj_.data() + x.off;
                const double* xv = vals_.data() + x.off;
                for (std::size_t i = 0; i < x.len; ++i) dx[i] += g[0] * xv[i] / r;
                break;
            }
            case Op::expc: {
                if (!grad_into(n.in0)) break;
                const double arg = vals_[nodes_[n.in0].off];
                if (arg > kExpClamp) break;
                adj_[nodes_[n.in0].off] += g[0] * vals_[n.off];
                break;
            }
            case Op::div: {
                const double a = vals_[nodes_[n.in0].off];
                const double b = vals_[nodes_[n.in1].off];
                if (grad_into(n.in0)) adj_[nodes_[n.in0].off] += g[0] / b;
                if (grad_into(n.in1)) adj_[nodes_[n.in1].off] -= g[0] * a / (b * b);
                break;
            }
        }
    }

    std::vector<Node> nodes_;
    std::vector<double> vals_;
    std::vector<double> adj_;
    std::uint64_t exp_clamps_ = 0;
};

}  // namespace eignn
