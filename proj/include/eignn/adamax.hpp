#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eignn/linalg.hpp"

namespace eignn {

struct AdamaxConfig {
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Infinity-norm Adam variant: u tracks max(beta2*u, |g|), the step divides the
// bias-corrected first moment by u + eps.
class Adamax {
public:
    explicit Adamax(std::size_t n, AdamaxConfig cfg = {})
        : cfg_(cfg), m_(n, 0.0), u_(n, 0.0) {}

    void step(DenseVector& params, const DenseVector& grad) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw std::invalid_argument("Adamax::step: size mismatch");
        for (double g : grad)
            if (!std::isfinite(g)) throw std::runtime_error("Adamax::step: non-finite gradient");
        ++t_;
        beta1_pow_ *= cfg_.beta1;
        const double rate = cfg_.lr / (1.0 - beta1_pow_);
        for (std::size_t i = 0; i < m_.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            const double ag = std::abs(grad[i]);
            u_[i] = std::max(cfg_.beta2 * u_[i], ag);
            params[i] -= rate * m_[i] / (u_[i] + cfg_.eps);
        }
    }

    std::int64_t t() const { return t_; }
    const DenseVector& m() const { return m_; }
    const DenseVector& u() const { return u_; }
    const AdamaxConfig& config() const { return cfg_; }

private:
    AdamaxConfig cfg_;
    DenseVector m_, u_;
    std::int64_t t_ = 0;
    double beta1_pow_ = 1.0;
};

}  // namespace eignn
